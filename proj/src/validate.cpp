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

#include "ovsim/validate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ovsim/costmodel.hpp"
#include "ovsim/workloads.hpp"

namespace ovsim::calib {

namespace {

Anchor band(std::string name, double measured, double lo, double hi) {
  return {std::move(name), measured, lo, hi, measured >= lo && measured <= hi};
}

Anchor near(std::string name, double measured, double want, double tol) {
  return band(std::move(name), measured, want - tol, want + tol);
}

double gemm_rs_ratio(std::int64_t k, const hw::HardwareProfile& profile) {
  wl::WorkloadSpec w;
  w.kind = wl::Kind::GemmRs;
  w.dims.m = w.dims.n = 32768;
  w.dims.k = k;
  w.mode = lcsc::ScheduleMode::IntraSm;
  return cost::predict(w, profile).comm_ratio;
}

double gemm_ar_bytes(lcsc::ScheduleMode mode, const hw::HardwareProfile& profile) {
  wl::WorkloadSpec w = wl::reduced_spec(wl::Kind::GemmAr, profile.num_devices, 0);
  w.mode = mode;
  const wl::Instance inst = wl::build(w, profile);
  lcsc::ExecOptions opts;
  opts.functional = false;
  const auto r = lcsc::execute_kernel(inst.kernel, profile, opts);
  return link_bytes_per_tile(inst.kernel, r.log);
}

}  // namespace

double link_bytes_per_tile(const lcsc::KernelSpec& spec, const des::EventLog& log) {
  double bytes = 0.0;
  for (const auto& r : log.records()) {
    if (r.kind == des::EventKind::XferStart) bytes += r.bytes;
  }
  std::int64_t tiles = 0;
  for (const auto& t : spec.compute) {
    for (const auto& op : t.stores) {
      if (op.kind == lcsc::OpKind::StoreAsync || op.kind == lcsc::OpKind::StoreAddAsync) {
        ++tiles;
        break;
      }
    }
  }
  for (const auto& ct : spec.comm) {
    for (const auto& op : ct.ops) tiles += op.kind == lcsc::OpKind::AllReduce;
  }
  return tiles > 0 ? bytes / static_cast<double>(tiles) : 0.0;
}

std::vector<Anchor> run_anchors(const hw::HardwareProfile& profile) {
  std::vector<Anchor> out;
  out.push_back(near("hiding_threshold_s2", cost::hiding_threshold(profile, 2.0), 2197.8, 0.1));
  out.push_back(near("peak_gbps_copy_engine", profile.copy_engine.peak_bandwidth * 1e-9, 368.82, 0.005));
  out.push_back(near("peak_gbps_tma", profile.tma.peak_bandwidth * 1e-9, 350.01, 0.005));
  out.push_back(near("peak_gbps_register_op", profile.register_op.peak_bandwidth * 1e-9, 342.68, 0.005));
  out.push_back(band("copy_engine_gbps_at_1gib",
                     hw::effective_bandwidth(profile.copy_engine, 1024.0 * 1024 * 1024, profile) * 1e-9,
                     0.99 * 368.82, 368.82));
  out.push_back(near("sms_to_saturate_tma", hw::sms_to_saturate(profile.tma), 15, 0));
  out.push_back(near("sms_to_saturate_register_op", hw::sms_to_saturate(profile.register_op), 76, 0));
  out.push_back(near("sync_ns_intra_sm", des::sync_cost(des::SyncKind::IntraSmBarrier, profile), 64, 1));
  out.push_back(near("sync_ns_inter_sm", des::sync_cost(des::SyncKind::InterSmHbm, profile), 832, 1));

  const double r512 = gemm_rs_ratio(512, profile), r1024 = gemm_rs_ratio(1024, profile);
  const double r2048 = gemm_rs_ratio(2048, profile), r4096 = gemm_rs_ratio(4096, profile);
  out.push_back(band("gemm_rs_comm_ratio_k512", r512, 0.50, 1.0));
  out.push_back(band("gemm_rs_comm_ratio_k1024", r1024, 0.40, 1.0));
  out.push_back(band("gemm_rs_comm_ratio_k2048", r2048, 0.10, 0.40));
  out.push_back(band("gemm_rs_comm_ratio_k4096", r4096, 0.0, 0.05));
  out.push_back(band("gemm_rs_comm_ratio_monotone", r512 >= r1024 && r1024 >= r2048 && r2048 >= r4096, 1, 1));

  const double n = profile.num_devices;
  out.push_back(near("allreduce_factor_atomic_writes",
                     cost::allreduce_comm_factor(cost::AllReduceStrategy::IntraSmAtomicWrites, profile.num_devices), n,
                     0));
  out.push_back(near("allreduce_factor_in_fabric",
                     cost::allreduce_comm_factor(cost::AllReduceStrategy::InterSmInFabric, profile.num_devices), 1, 0));
  const double intra = gemm_ar_bytes(lcsc::ScheduleMode::IntraSm, profile);
  const double inter = gemm_ar_bytes(lcsc::ScheduleMode::InterSm, profile);
  out.push_back(near("allreduce_logged_bytes_ratio", inter > 0 ? intra / inter : 0.0, n, 1e-9));
  return out;
}

bool all_pass(const std::vector<Anchor>& anchors) {
  for (const auto& a : anchors) {
    if (!a.pass) return false;
  }
  return true;
}

nlohmann::json to_json(const std::vector<Anchor>& anchors) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& a : anchors) {
    arr.push_back({{"name", a.name}, {"measured", a.measured}, {"lo", a.lo}, {"hi", a.hi}, {"pass", a.pass}});
  }
  return {{"pass", all_pass(anchors)}, {"anchors", arr}};
}

std::string to_text(const std::vector<Anchor>& anchors) {
  std::ostringstream os;
  char buf[256];
  for (const auto& a : anchors) {
    std::snprintf(buf, sizeof buf, "%s %-32s %.6g [%.6g, %.6g]\n", a.pass ? "PASS" : "FAIL", a.name.c_str(),
                  a.measured, a.lo, a.hi);
    os << buf;
  }
  return os.str();
}

}  // namespace ovsim::calib
