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

// Simulated device memories: parallel global layouts, shared tiles, barrier
// fields and the memory-setup state machines (IPC, VMM, multicast).

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovsim/error.hpp"

namespace ovsim::mem {

/// Extents in (b, d, r, c) order; b is outermost.
struct Shape4 {
  std::int64_t b = 1, d = 1, r = 1, c = 1;

  std::int64_t elements() const { return b * d * r * c; }
  bool operator==(const Shape4&) const = default;
};

/// Tile index; r and c count tiles, b and d count planes.
struct TileCoord {
  std::int64_t b = 0, d = 0, r = 0, c = 0;
  bool operator==(const TileCoord&) const = default;
};

/// Element-granular rectangle inside one (b, d) plane.
struct Region {
  std::int64_t b = 0, d = 0, r0 = 0, c0 = 0, rows = 1, cols = 1;

  std::int64_t elements() const { return rows * cols; }
  bool operator==(const Region&) const = default;
};

inline Region tile_region(TileCoord t, std::int64_t rows, std::int64_t cols) {
  return {t.b, t.d, t.r * rows, t.c * cols, rows, cols};
}

template <typename T>
class BasicPgl {
 public:
  BasicPgl() = default;
  /// Storage-free layouts keep extents for bookkeeping only (timing runs).
  BasicPgl(std::string name, Shape4 shape, int element_bytes, int num_devices, bool with_storage = true);

  const std::string& name() const { return name_; }
  const Shape4& shape() const { return shape_; }
  int element_bytes() const { return element_bytes_; }
  int num_devices() const { return num_devices_; }
  bool has_storage() const { return storage_; }
  std::int64_t buffer_bytes() const { return shape_.elements() * element_bytes_; }

  bool has_multicast() const { return multicast_; }
  void attach_multicast() { multicast_ = true; }

  void check_device(int dev) const;
  void check_region(const Region& reg) const;

  T& at(int dev, std::int64_t b, std::int64_t d, std::int64_t r, std::int64_t c);
  const T& at(int dev, std::int64_t b, std::int64_t d, std::int64_t r, std::int64_t c) const;
  std::span<T> buffer(int dev);
  std::span<const T> buffer(int dev) const;

  /// Row-major copy of the region.
  std::vector<T> read(int dev, const Region& reg) const;
  void write(int dev, const Region& reg, std::span<const T> values);
  void add(int dev, const Region& reg, std::span<const T> values);
  void fill(int dev, T value);

 private:
  std::int64_t offset(std::int64_t b, std::int64_t d, std::int64_t r, std::int64_t c) const {
    return ((b * shape_.d + d) * shape_.r + r) * shape_.c + c;
  }
  void check_storage() const;

  std::string name_;
  Shape4 shape_;
  int element_bytes_ = 0;
  int num_devices_ = 0;
  bool storage_ = false;
  bool multicast_ = false;
  std::vector<std::vector<T>> buffers_;
};

/// Values are carried as 64-bit floats whatever element_bytes says;
/// element_bytes only drives timing.
using Pgl = BasicPgl<double>;
/// Integer counters changed only by signal primitives.
using BarrierField = BasicPgl<std::int64_t>;

extern template class BasicPgl<double>;
extern template class BasicPgl<std::int64_t>;

/// Write-only view through the multicast address of a layout.
template <typename T>
class MulticastView {
 public:
  explicit MulticastView(BasicPgl<T>& pgl);
  void write(const Region& reg, std::span<const T> values);
  void add(const Region& reg, std::span<const T> values);
  /// Always throws: loading through the multicast address is undefined.
  std::vector<T> read(const Region& reg) const;

 private:
  BasicPgl<T>* pgl_;
};

struct SharedTile {
  int rows = 0;
  int cols = 0;
  int element_bytes = 2;
  std::vector<double> data;
  int owner_sm = -1;

  std::int64_t bytes() const { return static_cast<std::int64_t>(rows) * cols * element_bytes; }
};

/// rows and cols multiples of 16; footprint at most smem_bytes.
void validate_tile_shape(int rows, int cols, int element_bytes, std::int64_t smem_bytes = 227 * 1024);
SharedTile make_tile(int rows, int cols, int element_bytes, double fill = 0.0,
                     std::int64_t smem_bytes = 227 * 1024);

Pgl allocate_pgl(Shape4 shape, int element_bytes, int num_devices, bool with_storage = true,
                 std::string name = "pgl");
BarrierField allocate_barrier(Shape4 counters, int num_devices, std::string name = "barrier");

SharedTile read_tile(const Pgl& pgl, int dev, TileCoord coord, int rows, int cols);
void write_tile(Pgl& pgl, int dev, TileCoord coord, const SharedTile& tile);

// ---------------------------------------------------------------------------
// Memory-setup protocols

enum class SetupMode : std::uint8_t { Ipc, Vmm, Multicast };

enum class StepKind : std::uint8_t {
  // Ipc
  GetMemHandle,
  ShareStub,
  OpenMemHandle,
  // Vmm
  CreatePhysical,
  ExportHandle,
  TransferHandleOverSocket,
  ImportHandle,
  // Multicast
  CreateMulticastStub,
  RegisterDevice,
  BindDeviceMemory,
  ExportStub,
  TransferStub,
  ImportStub,
  // Vmm and Multicast
  MapVirtual,
};

std::string_view to_string(SetupMode m);
std::string_view to_string(StepKind k);

/// device is the actor; peer is the other side of a pairwise step
/// (Transfer*: receiver, Import/Open/Map under Vmm/Ipc: exporter).
struct SetupStep {
  StepKind kind = StepKind::GetMemHandle;
  int device = 0;
  int peer = -1;
  std::int64_t bytes = 0;  // CreatePhysical only

  bool operator==(const SetupStep&) const = default;
};

std::string describe(const SetupStep& s);

class SetupSession {
 public:
  SetupSession(SetupMode mode, int num_devices, std::int64_t alloc_bytes = 2 * 1024 * 1024,
               std::int64_t granularity = 2 * 1024 * 1024, int root = 0);

  SetupMode mode() const { return mode_; }
  int num_devices() const { return num_devices_; }
  int root() const { return root_; }

  /// Throws ProtocolViolation naming the missing prerequisite.
  void advance(const SetupStep& step);
  bool complete() const;
  bool done(const SetupStep& step) const;
  const std::vector<SetupStep>& transcript() const { return transcript_; }

  /// Every step of this mode in one legal order.
  std::vector<SetupStep> canonical_steps() const;

  nlohmann::json transcript_json() const;

 private:
  int index(StepKind k, int device, int peer) const;
  bool is_done(StepKind k, int device, int peer = -1) const { return done_[index(k, device, peer)] != 0; }
  void require(const SetupStep& step, StepKind k, int device, int peer = -1) const;

  SetupMode mode_;
  int num_devices_;
  std::int64_t alloc_bytes_;
  std::int64_t granularity_;
  int root_;
  std::vector<char> done_;
  std::size_t done_count_ = 0;
  std::size_t total_steps_ = 0;
  std::vector<SetupStep> transcript_;
};

/// Functional form: returns the advanced copy.
SetupSession advance_setup(SetupSession session, const SetupStep& step);

/// Binds a completed multicast session to a layout, creating its alias.
template <typename T>
void attach_multicast(const SetupSession& session, BasicPgl<T>& pgl) {
  if (session.mode() != SetupMode::Multicast) {
    throw ProtocolViolation("only a multicast session yields a multicast alias");
  }
  if (!session.complete()) throw ProtocolViolation("multicast setup is not complete");
  if (session.num_devices() != pgl.num_devices()) {
    throw InvalidArgument("multicast session and layout disagree on device count");
  }
  pgl.attach_multicast();
}

/// Runs the canonical multicast sequence and attaches the alias.
template <typename T>
void enable_multicast(BasicPgl<T>& pgl) {
  SetupSession s(SetupMode::Multicast, pgl.num_devices());
  for (const auto& step : s.canonical_steps()) s.advance(step);
  attach_multicast(s, pgl);
}

}  // namespace ovsim::mem
