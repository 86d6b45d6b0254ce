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

#pragma once

#include <string>
#include <vector>

#include "ovsim/workloads.hpp"

namespace ovsim::wl::detail {

std::uint64_t mix(std::uint64_t seed, std::int64_t a, std::int64_t b = 0, std::int64_t c = 0, std::int64_t d = 0);
/// Integer in [-8, 8] drawn from a hash.
double small_int(std::uint64_t h);

/// Shared state of one build.
struct Builder {
  Builder(const WorkloadSpec& w, const hw::HardwareProfile& p);

  const WorkloadSpec& w;
  const hw::HardwareProfile& profile;
  Instance inst;
  int n;
  int T;
  int s;
  lcsc::ScheduleMode mode;

  int add_pgl(const std::string& name, mem::Shape4 shape, bool multicast = false);
  int add_barrier(const std::string& name, mem::Shape4 shape, bool multicast = false);
  mem::Pgl& pgl(int i) { return *inst.kernel.pgls[i]; }
  bool functional() const { return w.functional; }

  /// Fills a device buffer (or one region of it) with hashed small integers.
  void seed_region(int pgl, int dev, const mem::Region& reg, std::int64_t tag);
  void seed_buffer(int pgl, int dev, std::int64_t tag);
  /// Synthetic tile values; null in timing runs.
  prim::Values synth(std::int64_t a, std::int64_t b, std::int64_t c, int rows, int cols) const;

  /// Number of messages of at most one tile each covering `elements`.
  int messages(std::int64_t elements) const;

  /// Chooses the communication SM count (default or the spec's) and sets
  /// the kernel mode.
  void finish_partition(int fallback_comm_sms);
  /// Records the per-device buffers of a layout as the expected state.
  void expect(int pgl, std::vector<std::vector<double>> buffers);

  /// Folds a row-major block onto a rows x cols accumulator by summing
  /// congruent positions.
  static void fold_into(std::vector<double>& acc, int rows, int cols, const std::vector<double>& block,
                        std::int64_t brows, std::int64_t bcols);
};

/// Fewest communication SMs whose issue rate covers the link demand of the
/// compute schedule, chosen to minimise max(compute, communication) time.
int balanced_comm_sms(double flops_per_device, double link_bytes_per_device, double msg_bytes,
                      hw::MechanismKind mech, const hw::HardwareProfile& profile);

void check_divides(std::int64_t whole, std::int64_t part, const char* what);
/// Rejects intra-SM mode for workloads that only run on communication SMs.
void require_comm_sms(const Builder& B, const char* what);

Instance build_gemm_rs(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_gemm_ar(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_ag_gemm(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_moe(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_ring_attention(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_all_to_all(const WorkloadSpec& w, const hw::HardwareProfile& p, bool with_attention);
Instance build_all_gather(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_reduce_scatter(const WorkloadSpec& w, const hw::HardwareProfile& p);
Instance build_all_reduce(const WorkloadSpec& w, const hw::HardwareProfile& p);

}  // namespace ovsim::wl::detail
