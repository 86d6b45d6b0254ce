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

// Loader/consumer/storer/communicator kernel executor.
//
// A kernel is a list of compute tasks (one output tile each) and a list of
// communicator programs. Compute tasks of a device are dealt round-robin to
// its compute SMs; every compute SM runs a loader, a consumer and a storer
// linked by bounded queues. Communicator programs are dealt round-robin to
// the dedicated communication SMs.

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ovsim/engine.hpp"
#include "ovsim/primitives.hpp"

namespace ovsim::lcsc {

enum class ScheduleMode : std::uint8_t { IntraSm, InterSm, Hybrid };

std::string_view to_string(ScheduleMode m);
ScheduleMode schedule_mode_from_string(std::string_view s);

enum class OpKind : std::uint8_t {
  LoadLocal,
  LoadRemote,
  StoreLocal,
  StoreLocalAdd,
  StoreAsync,
  StoreAddAsync,
  Signal,
  SignalAll,
  Wait,
  Barrier,
  Reduce,
  AllReduce,
};

std::string_view to_string(OpKind k);

/// One tile-level operation. pgl/src_pgl and barrier index the kernel's
/// resource tables; src_pgl = -1 inside a storer means the SM's output tile.
struct Op {
  OpKind kind = OpKind::LoadLocal;
  int pgl = -1;
  mem::Region region;
  int src_pgl = -1;
  mem::Region src_region;
  /// Remote device (LoadRemote), destination device (Signal, Wait; -1 = own).
  int device = -1;
  prim::DeviceSet targets = 0;
  int barrier = -1;
  mem::TileCoord coord;
  std::int64_t value = 1;
  prim::ReduceOp reduce_op = prim::ReduceOp::Sum;
  /// The region moves as this many equal messages.
  int count = 1;
  /// Local HBM bytes charged for LoadLocal/StoreLocal*; negative means the
  /// region size.
  double bytes = -1.0;
};

Op load_local(int pgl, mem::Region reg);
Op load_remote(int pgl, int device, mem::Region reg, int count = 1);
Op store_local(int pgl, mem::Region reg, int src_pgl = -1, mem::Region src = {});
Op store_local_add(int pgl, mem::Region reg, int src_pgl = -1, mem::Region src = {});
Op store_async(int pgl, mem::Region reg, prim::DeviceSet targets, int src_pgl = -1, mem::Region src = {},
               int count = 1);
Op store_add_async(int pgl, mem::Region reg, prim::DeviceSet targets, int src_pgl = -1, mem::Region src = {},
                   int count = 1);
Op signal_op(int barrier, mem::TileCoord coord, int device, std::int64_t value = 1);
Op signal_all_op(int barrier, mem::TileCoord coord, std::int64_t value = 1);
Op wait_op(int barrier, mem::TileCoord coord, std::int64_t expected, int device = -1);
Op barrier_op(int barrier, mem::TileCoord coord);
Op reduce_op(int dst, mem::Region dst_reg, int src, mem::Region src_reg, prim::ReduceOp op = prim::ReduceOp::Sum);
Op all_reduce_op(int pgl, mem::Region reg, prim::ReduceOp op = prim::ReduceOp::Sum, int count = 1);

/// One output tile: loads, compute, then stores of the result.
struct ComputeTask {
  int device = 0;
  int out_rows = 16;
  int out_cols = 16;
  /// Loader program (loads and waits) for this tile.
  std::vector<Op> loads;
  /// Local HBM bytes the loader streams for this tile beyond explicit loads.
  double load_bytes = 0.0;
  double flops = 0.0;
  /// Output = scale * (sum of loaded regions folded onto the tile + synth)
  /// + bias. synth stands in for the tile's own arithmetic.
  double scale = 1.0;
  double bias = 0.0;
  prim::Values synth;
  std::vector<Op> stores;
};

struct CommTask {
  int device = 0;
  std::vector<Op> ops;
};

struct KernelSpec {
  std::string name;
  ScheduleMode mode = ScheduleMode::IntraSm;
  int num_comm_sms = 0;
  int pipeline_stages = 4;
  int output_buffers = 1;
  int tile_m = 256;
  int tile_n = 256;
  int tile_k = 64;
  std::vector<ComputeTask> compute;
  std::vector<CommTask> comm;
  std::vector<std::shared_ptr<mem::Pgl>> pgls;
  std::vector<std::shared_ptr<mem::BarrierField>> barriers;

  void validate(const hw::HardwareProfile& profile) const;
  int compute_sms(const hw::HardwareProfile& profile) const;
};

/// Same compute work, no communication, every SM computing.
KernelSpec strip_communication(const KernelSpec& spec);

struct CostReport {
  double t_launch = 0.0;
  double t_comp = 0.0;
  double t_mem = 0.0;
  double t_comm = 0.0;
  double t_sync = 0.0;
  double t_non_overlap = 0.0;
  double t_total = 0.0;
  /// Compute-only reference time; negative when not measured.
  double t_baseline = -1.0;
  double comm_ratio = 0.0;
  double achieved_flops = 0.0;
  double total_flops = 0.0;
};

struct ExecOptions {
  std::uint64_t seed = 0;
  des::OverheadConfig overheads;
  bool record_log = true;
  /// Apply values to the layouts; off for timing-only runs.
  bool functional = true;
  /// Also run the compute-only baseline to derive comm_ratio.
  bool with_baseline = false;
};

struct ExecResult {
  CostReport report;
  des::EventLog log;
  des::EngineStats stats;
  /// Consumer flops per device and SM.
  std::vector<std::vector<double>> sm_flops;
};

ExecResult execute_kernel(const KernelSpec& spec, const hw::HardwareProfile& profile, const ExecOptions& opts = {});

// -- partition autotuning ------------------------------------------------------

struct SweepRow {
  int num_comm_sms = 0;
  double t_total_ns = 0.0;
  double achieved_flops = 0.0;
};

struct AutotuneResult {
  int best_comm_sms = 0;
  CostReport best;
  std::vector<SweepRow> rows;
};

using KernelBuilder = std::function<KernelSpec(int num_comm_sms)>;

/// Exhaustive sweep over num_comm_sms = 1, 1+stride, ... < sms_per_device;
/// ties go to the smaller count.
AutotuneResult autotune_partition(const KernelBuilder& build, const hw::HardwareProfile& profile,
                                  const ExecOptions& opts = {}, int stride = 1, int max_comm_sms = 0);

std::string sweep_csv(const AutotuneResult& r);

// -- staging of remote data reused by several consumers -------------------------

enum class ReusePolicy : std::uint8_t { NoTransfer, DirectRemoteRead, StageToLocalHbm };

std::string_view to_string(ReusePolicy p);

/// Time to serve k consumers of `bytes` of remote data under the policy.
double reuse_cost(ReusePolicy p, int k, double bytes, const hw::HardwareProfile& profile);
ReusePolicy remote_reuse_policy(int k, double bytes, const hw::HardwareProfile& profile);

}  // namespace ovsim::lcsc
