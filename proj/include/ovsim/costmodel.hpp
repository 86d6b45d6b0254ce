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

// Closed-form kernel time model and the analytic predictor.

#pragma once

#include "ovsim/lcsc.hpp"
#include "ovsim/workloads.hpp"

namespace ovsim::cost {

/// Sum of launch, the dominant of compute/memory/communication, exposed
/// communication and synchronization. Throws on negative input.
double kernel_time(double t_launch, double t_comp, double t_mem, double t_comm, double t_non_overlap, double t_sync);

/// Per-tile extents (m, n, k), full reduction extent K, element bytes s,
/// compute rate R in FLOP/s and link rate B in bytes/s.
struct TileCostInputs {
  double m = 0, n = 0, k = 0, K = 0, s = 0, R = 0, B = 0;
};

struct TileTimes {
  double t_comp_tile = 0.0;  // ns
  double t_comm_tile = 0.0;  // ns
};

TileTimes tile_times(const TileCostInputs& in);
/// Iterations over K in steps of k, rounded up.
std::int64_t k_iterations(std::int64_t K, std::int64_t k);

/// Smallest K at which a tile's compute covers its transfer: s*R/(2*B).
double hiding_threshold(double s, double R, double B);
double hiding_threshold(const hw::HardwareProfile& p, double s = 2.0);

enum class AllReduceStrategy : std::uint8_t { IntraSmAtomicWrites, InterSmInFabric };

/// Link time per output tile in units of one tile transfer.
double allreduce_comm_factor(AllReduceStrategy strategy, int num_devices);

/// Per-device quantities the predictor derives from a kernel spec, in ns
/// unless noted; each is the maximum over devices.
struct StaticProfile {
  int compute_sms = 0;
  double compute_ns = 0.0;      // busiest compute SM, loads/compute/stores pipelined
  double first_ready_ns = 0.0;  // first task done on every compute SM
  double tail_ns = 0.0;         // compute gated on the last-arriving data
  double hbm_bytes = 0.0;
  double port_ns = 0.0;         // busiest port, payload over effective rate
  double gap_ns = 0.0;          // arrival latencies that leave the ports idle
  double issue_ns = 0.0;        // busiest communication SM, tasks back to back
  double ramp_ns = 0.0;         // communication task time before its last flow
  double chunk_ns = 0.0;        // longest communication task
  double sync_ns = 0.0;
  double total_flops = 0.0;
};

StaticProfile analyze_kernel(const lcsc::KernelSpec& spec, const hw::HardwareProfile& profile);

/// Analytic CostReport for a workload; comm_ratio is measured against the
/// same model with communication removed.
lcsc::CostReport predict(const wl::WorkloadSpec& spec, const hw::HardwareProfile& profile);

}  // namespace ovsim::cost
