/* Copyright 2026 The ovsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// The eight communication primitives over simulated layouts: store_async,
// store_add_async, reduce, all_reduce, signal, signal_all, wait, barrier.
// Each one has a functional effect on the layouts and a timed footprint in
// the engine.

#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ovsim/engine.hpp"
#include "ovsim/memsim.hpp"

namespace ovsim::prim {

enum class ReduceOp : std::uint8_t { Sum, Max, Min };

std::string_view to_string(ReduceOp op);
double fold(ReduceOp op, double acc, double v);

using DeviceSet = std::uint64_t;
inline DeviceSet only(int d) { return DeviceSet{1} << d; }
inline DeviceSet all_devices(int n) { return n >= 64 ? ~DeviceSet{0} : (DeviceSet{1} << n) - 1; }
int count(DeviceSet s);
std::vector<int> members(DeviceSet s);

/// Who issues a primitive: a device, one of its SMs and the thread-group width.
struct Issuer {
  int device = 0;
  int sm = 0;
  int group_width = 1;
};

inline constexpr int kWarpWidth = 32;

using Values = std::shared_ptr<const std::vector<double>>;

// -- region-level forms, used by the kernel executor ------------------------

/// Pushes values (row-major, region shape) to dst_reg on every target.
/// Several targets form one multicast (store) or one unicast reduction per
/// target (add). msg_bytes is the per-message size on the bandwidth curve.
des::Token store_region_async(des::Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::Region& dst_reg,
                              Values values, DeviceSet targets, bool add, double msg_bytes = 0);

/// Pulls a region from a peer's buffer; the snapshot is taken at issue.
std::pair<des::Token, Values> load_remote_async(des::Engine& eng, const Issuer& who, const mem::Pgl& src,
                                                int src_dev, const mem::Region& reg, double msg_bytes = 0);

des::Co reduce_region(des::Engine& eng, Issuer who, mem::Pgl& dst, mem::Region dst_reg, mem::Pgl& src,
                      mem::Region src_reg, ReduceOp op, double msg_bytes = 0);
des::Co all_reduce_region(des::Engine& eng, Issuer who, mem::Pgl& pgl, mem::Region reg, ReduceOp op,
                          double msg_bytes = 0);

// -- the eight primitives ----------------------------------------------------

des::Token store_async(des::Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::SharedTile& src,
                       mem::TileCoord coord, DeviceSet targets);
des::Token store_add_async(des::Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::SharedTile& src,
                           mem::TileCoord coord, DeviceSet targets);
des::Co reduce(des::Engine& eng, Issuer who, mem::Pgl& dst, mem::TileCoord dst_coord, mem::Pgl& src,
               mem::TileCoord src_coord, ReduceOp op, int rows, int cols);
des::Co all_reduce(des::Engine& eng, Issuer who, mem::Pgl& pgl, mem::TileCoord coord, ReduceOp op, int rows,
                   int cols);
void signal(des::Engine& eng, const Issuer& who, mem::BarrierField& bar, mem::TileCoord coord, int dst_dev,
            std::int64_t val);
void signal_all(des::Engine& eng, const Issuer& who, mem::BarrierField& bar, mem::TileCoord coord,
                std::int64_t val);
des::Co wait(des::Engine& eng, Issuer who, mem::BarrierField& bar, mem::TileCoord coord, int dev,
             std::int64_t expected);
des::Co barrier(des::Engine& eng, Issuer who, mem::BarrierField& bar, mem::TileCoord coord, int dev);

/// One element-wise (register-level) load from a peer; used to time
/// fine-grained access latency.
des::Token element_load_async(des::Engine& eng, const Issuer& who, int peer, double bytes = 128);

}  // namespace ovsim::prim
