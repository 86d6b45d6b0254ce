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

#include <cstdio>

#include "ovsim/lcsc.hpp"

namespace ovsim::lcsc {

AutotuneResult autotune_partition(const KernelBuilder& build, const hw::HardwareProfile& profile,
                                  const ExecOptions& opts, int stride, int max_comm_sms) {
  if (stride < 1) throw InvalidArgument("sweep stride must be positive");
  const int hi = max_comm_sms > 0 ? std::min(max_comm_sms, profile.sms_per_device - 1) : profile.sms_per_device - 1;
  ExecOptions run_opts = opts;
  run_opts.record_log = false;
  run_opts.with_baseline = false;
  AutotuneResult res;
  bool have = false;
  for (int c = 1; c <= hi; c += stride) {
    KernelSpec spec = build(c);
    if (spec.mode == ScheduleMode::IntraSm) throw InvalidArgument("partition sweep needs an inter-SM schedule");
    CostReport rep = execute_kernel(spec, profile, run_opts).report;
    res.rows.push_back({c, rep.t_total, rep.achieved_flops});
    if (!have || rep.t_total < res.best.t_total) {
      have = true;
      res.best = rep;
      res.best_comm_sms = c;
    }
  }
  if (!have) throw InvalidArgument("empty partition sweep");
  return res;
}

std::string sweep_csv(const AutotuneResult& r) {
  std::string out = "num_comm_sms,t_total_ns,achieved_flops\n";
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%d,%.3f,%.6e\n", row.num_comm_sms, row.t_total_ns, row.achieved_flops);
    out += buf;
  }
  return out;
}

}  // namespace ovsim::lcsc
