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

#include "ovsim/costmodel.hpp"

#include <algorithm>

#include "ovsim/error.hpp"

namespace ovsim::cost {

double kernel_time(double t_launch, double t_comp, double t_mem, double t_comm, double t_non_overlap, double t_sync) {
  for (double x : {t_launch, t_comp, t_mem, t_comm, t_non_overlap, t_sync}) {
    if (!(x >= 0)) throw InvalidArgument("kernel time components must be nonnegative");
  }
  return t_launch + std::max({t_comp, t_mem, t_comm}) + t_non_overlap + t_sync;
}

TileTimes tile_times(const TileCostInputs& in) {
  if (!(in.R > 0) || !(in.B > 0)) throw InvalidArgument("tile times need positive R and B");
  if (in.m < 0 || in.n < 0 || in.k < 0 || in.K < 0 || in.s < 0) {
    throw InvalidArgument("tile extents must be nonnegative");
  }
  return {2.0 * in.m * in.n * in.K / in.R * 1e9, in.s * in.m * in.n / in.B * 1e9};
}

std::int64_t k_iterations(std::int64_t K, std::int64_t k) {
  if (k <= 0 || K < 0) throw InvalidArgument("k must be positive and K nonnegative");
  return (K + k - 1) / k;
}

double hiding_threshold(double s, double R, double B) {
  if (!(B > 0)) throw InvalidArgument("hiding threshold needs a positive link rate");
  if (!(s > 0) || !(R > 0)) throw InvalidArgument("hiding threshold needs positive s and R");
  return s * R / (2.0 * B);
}

double hiding_threshold(const hw::HardwareProfile& p, double s) {
  return hiding_threshold(s, p.tensor_throughput, p.link_bandwidth);
}

double allreduce_comm_factor(AllReduceStrategy strategy, int num_devices) {
  if (num_devices < 2) throw InvalidArgument("all-reduce needs at least two devices");
  return strategy == AllReduceStrategy::IntraSmAtomicWrites ? static_cast<double>(num_devices) : 1.0;
}

}  // namespace ovsim::cost
