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

#include "ovsim/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ovsim/error.hpp"

namespace ovsim::hw {

using nlohmann::json;

std::string_view to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::CopyEngine: return "CopyEngine";
    case MechanismKind::Tma: return "Tma";
    case MechanismKind::RegisterOp: return "RegisterOp";
  }
  return "?";
}

std::string_view short_name(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::CopyEngine: return "CE";
    case MechanismKind::Tma: return "TMA";
    case MechanismKind::RegisterOp: return "REG";
  }
  return "?";
}

std::string_view to_string(Functionality f) {
  switch (f) {
    case Functionality::P2PTransfer: return "P2PTransfer";
    case Functionality::InFabricBroadcast: return "InFabricBroadcast";
    case Functionality::P2PReduction: return "P2PReduction";
    case Functionality::InFabricReduction: return "InFabricReduction";
    case Functionality::ElementwiseTransfer: return "ElementwiseTransfer";
  }
  return "?";
}

MechanismKind mechanism_from_string(std::string_view s) {
  for (auto k : kAllMechanisms) {
    if (s == to_string(k) || s == short_name(k)) return k;
  }
  throw InvalidArgument("unknown transfer mechanism '" + std::string(s) + "'");
}

CapabilitySet capabilities_of(MechanismKind kind) {
  using F = Functionality;
  switch (kind) {
    case MechanismKind::CopyEngine:
      return {F::P2PTransfer, F::InFabricBroadcast};
    case MechanismKind::Tma:
      return {F::P2PTransfer, F::InFabricBroadcast, F::P2PReduction};
    case MechanismKind::RegisterOp:
      return {F::P2PTransfer, F::InFabricBroadcast, F::P2PReduction, F::InFabricReduction,
              F::ElementwiseTransfer};
  }
  return {};
}

TransferMechanism calibrate_mechanism(MechanismKind kind, const MechanismCalibration& cal) {
  if (cal.peak_bandwidth <= 0 || cal.anchor_msg_bytes <= 0 || cal.anchor_bandwidth <= 0) {
    throw InvalidArgument("mechanism calibration needs positive peak and anchor");
  }
  if (cal.anchor_bandwidth > cal.peak_bandwidth) {
    throw InvalidArgument("mechanism anchor bandwidth exceeds its peak");
  }
  TransferMechanism m;
  m.kind = kind;
  m.peak_bandwidth = cal.peak_bandwidth;
  // b(a) = peak * a / (a + h) = anchor  =>  h = a * (peak / anchor - 1)
  m.half_saturation_msg_bytes = cal.anchor_msg_bytes * (cal.peak_bandwidth / cal.anchor_bandwidth - 1.0);
  m.host_initiated = kind == MechanismKind::CopyEngine;
  m.capabilities = capabilities_of(kind);
  if (kind != MechanismKind::CopyEngine) {
    if (cal.saturation_sms < 1) throw InvalidArgument("SM-driven mechanism needs saturation_sms >= 1");
    // Half an SM of slack keeps ceil(peak / rate) robust to rounding.
    m.per_sm_issue_rate = cal.peak_bandwidth / (cal.saturation_sms - 0.5);
  }
  return m;
}

const TransferMechanism& HardwareProfile::mechanism(MechanismKind kind) const {
  switch (kind) {
    case MechanismKind::CopyEngine: return copy_engine;
    case MechanismKind::Tma: return tma;
    case MechanismKind::RegisterOp: return register_op;
  }
  throw InvalidArgument("bad mechanism kind");
}

void HardwareProfile::rebuild_mechanisms() {
  copy_engine = calibrate_mechanism(MechanismKind::CopyEngine, copy_engine_cal);
  tma = calibrate_mechanism(MechanismKind::Tma, tma_cal);
  register_op = calibrate_mechanism(MechanismKind::RegisterOp, register_op_cal);
}

void HardwareProfile::validate() const {
  auto positive = [&](double v, const char* what) {
    if (!(v > 0)) throw InvalidArgument(std::string("profile '") + name + "': " + what + " must be positive");
  };
  positive(num_devices, "num_devices");
  positive(sms_per_device, "sms_per_device");
  positive(tensor_throughput, "tensor_throughput");
  positive(hbm_bandwidth, "hbm_bandwidth");
  positive(link_bandwidth, "link_bandwidth");
  positive(intra_sm_sync_ns, "intra_sm_sync_ns");
  positive(inter_sm_sync_ns, "inter_sm_sync_ns");
  positive(launch_overhead_ns, "launch_overhead_ns");
  positive(static_cast<double>(max_tma_message_bytes), "max_tma_message_bytes");
  positive(static_cast<double>(shared_memory_bytes), "shared_memory_bytes");
  positive(link_latency_ns, "link_latency_ns");
  positive(static_cast<double>(vmm_granularity_bytes), "vmm_granularity_bytes");
  if (intra_sm_sync_ns >= inter_sm_sync_ns) {
    throw InvalidArgument("profile '" + name + "': intra-SM sync must be cheaper than inter-SM sync");
  }
  for (auto k : kAllMechanisms) {
    const auto& m = mechanism(k);
    positive(m.peak_bandwidth, "mechanism peak_bandwidth");
    if (m.peak_bandwidth > link_bandwidth) {
      throw InvalidArgument("profile '" + name + "': " + std::string(to_string(k)) +
                            " peak exceeds link bandwidth");
    }
    if (m.sm_driven()) positive(m.per_sm_issue_rate, "per_sm_issue_rate");
  }
}

namespace {

HardwareProfile make_h100() {
  HardwareProfile p;
  p.name = "h100-sxm-8";
  p.num_devices = 8;
  p.sms_per_device = 132;
  p.tensor_throughput = 989e12;
  p.hbm_bandwidth = 3.0e12;
  p.link_bandwidth = 450e9;
  p.intra_sm_sync_ns = 64;
  p.inter_sm_sync_ns = 832;
  p.launch_overhead_ns = 5000;
  p.max_tma_message_bytes = 227 * 1024;
  p.shared_memory_bytes = 227 * 1024;
  // Copy engine reaches 80% of the link at 256 MB; device-side mechanisms
  // reach 80% of their own ceiling at 2 KB.
  p.copy_engine_cal = {368.82e9, 256e6, 0.80 * 450e9, 0};
  p.tma_cal = {350.01e9, 2000, 0.80 * 350.01e9, 15};
  p.register_op_cal = {342.68e9, 2000, 0.80 * 342.68e9, 76};
  p.rebuild_mechanisms();
  return p;
}

HardwareProfile make_b200() {
  HardwareProfile p;
  p.name = "b200-8";
  p.num_devices = 8;
  p.sms_per_device = 148;
  p.tensor_throughput = 2.25e15;
  p.hbm_bandwidth = 8.0e12;
  p.link_bandwidth = 900e9;
  p.intra_sm_sync_ns = 64;
  p.inter_sm_sync_ns = 832;
  p.launch_overhead_ns = 5000;
  p.max_tma_message_bytes = 227 * 1024;
  p.shared_memory_bytes = 227 * 1024;
  // Saturation SM counts are carried over from H100: per-SM issue rates then
  // scale with the peak-bandwidth ratio.
  p.copy_engine_cal = {726.13e9, 256e6, 0.80 * 900e9, 0};
  p.tma_cal = {669.12e9, 2000, 0.80 * 669.12e9, 15};
  p.register_op_cal = {628.35e9, 2000, 0.80 * 628.35e9, 76};
  p.rebuild_mechanisms();
  return p;
}

MechanismCalibration cal_from_json(const json& j, MechanismCalibration base) {
  if (j.contains("peak_bandwidth")) base.peak_bandwidth = j.at("peak_bandwidth").get<double>();
  if (j.contains("anchor_msg_bytes")) base.anchor_msg_bytes = j.at("anchor_msg_bytes").get<double>();
  if (j.contains("anchor_bandwidth")) base.anchor_bandwidth = j.at("anchor_bandwidth").get<double>();
  if (j.contains("saturation_sms")) base.saturation_sms = j.at("saturation_sms").get<int>();
  return base;
}

json cal_to_json(const MechanismCalibration& c) {
  return json{{"peak_bandwidth", c.peak_bandwidth},
              {"anchor_msg_bytes", c.anchor_msg_bytes},
              {"anchor_bandwidth", c.anchor_bandwidth},
              {"saturation_sms", c.saturation_sms}};
}

}  // namespace

std::vector<std::string> builtin_profile_names() { return {"h100-sxm-8", "b200-8"}; }

HardwareProfile builtin_profile(std::string_view name) {
  if (name == "h100-sxm-8" || name == "h100") return make_h100();
  if (name == "b200-8" || name == "b200") return make_b200();
  throw InvalidArgument("unknown hardware profile '" + std::string(name) + "'");
}

HardwareProfile profile_from_json(const json& j) {
  HardwareProfile p = builtin_profile(j.value("base", std::string("h100-sxm-8")));
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    get("name", p.name);
    get("num_devices", p.num_devices);
    get("sms_per_device", p.sms_per_device);
    get("tensor_throughput", p.tensor_throughput);
    get("hbm_bandwidth", p.hbm_bandwidth);
    get("link_bandwidth", p.link_bandwidth);
    get("intra_sm_sync_ns", p.intra_sm_sync_ns);
    get("inter_sm_sync_ns", p.inter_sm_sync_ns);
    get("launch_overhead_ns", p.launch_overhead_ns);
    get("max_tma_message_bytes", p.max_tma_message_bytes);
    get("shared_memory_bytes", p.shared_memory_bytes);
    get("link_latency_ns", p.link_latency_ns);
    get("vmm_granularity_bytes", p.vmm_granularity_bytes);
    if (j.contains("mechanisms")) {
      const auto& m = j.at("mechanisms");
      if (m.contains("copy_engine")) p.copy_engine_cal = cal_from_json(m.at("copy_engine"), p.copy_engine_cal);
      if (m.contains("tma")) p.tma_cal = cal_from_json(m.at("tma"), p.tma_cal);
      if (m.contains("register_op")) p.register_op_cal = cal_from_json(m.at("register_op"), p.register_op_cal);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed hardware profile: ") + e.what());
  }
  p.rebuild_mechanisms();
  p.validate();
  return p;
}

json profile_to_json(const HardwareProfile& p) {
  return json{{"name", p.name},
              {"num_devices", p.num_devices},
              {"sms_per_device", p.sms_per_device},
              {"tensor_throughput", p.tensor_throughput},
              {"hbm_bandwidth", p.hbm_bandwidth},
              {"link_bandwidth", p.link_bandwidth},
              {"intra_sm_sync_ns", p.intra_sm_sync_ns},
              {"inter_sm_sync_ns", p.inter_sm_sync_ns},
              {"launch_overhead_ns", p.launch_overhead_ns},
              {"max_tma_message_bytes", p.max_tma_message_bytes},
              {"shared_memory_bytes", p.shared_memory_bytes},
              {"link_latency_ns", p.link_latency_ns},
              {"vmm_granularity_bytes", p.vmm_granularity_bytes},
              {"mechanisms",
               {{"copy_engine", cal_to_json(p.copy_engine_cal)},
                {"tma", cal_to_json(p.tma_cal)},
                {"register_op", cal_to_json(p.register_op_cal)}}}};
}

HardwareProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open hardware profile '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("cannot parse hardware profile '" + path.string() + "': " + e.what());
  }
  return profile_from_json(j);
}

HardwareProfile resolve_profile(std::string_view name_or_path) {
  for (const auto& n : builtin_profile_names()) {
    if (name_or_path == n) return builtin_profile(n);
  }
  std::filesystem::path p{std::string(name_or_path)};
  if (std::filesystem::exists(p)) return load_profile(p);
  throw InvalidArgument("unknown hardware profile '" + std::string(name_or_path) + "'");
}

double effective_bandwidth(const TransferMechanism& mech, double msg_bytes, const HardwareProfile& profile) {
  if (msg_bytes < 0) throw InvalidArgument("negative message size");
  if (mech.kind == MechanismKind::Tma && msg_bytes > static_cast<double>(profile.max_tma_message_bytes)) {
    throw GranularityError("TMA message of " + std::to_string(static_cast<long long>(msg_bytes)) +
                           " bytes exceeds the " + std::to_string(profile.max_tma_message_bytes) +
                           "-byte limit");
  }
  if (msg_bytes == 0) return 0.0;
  return mech.peak_bandwidth * msg_bytes / (msg_bytes + mech.half_saturation_msg_bytes);
}

double aggregate_issue_bandwidth(const TransferMechanism& mech, int num_sms) {
  if (!mech.sm_driven()) throw CapabilityError("the copy engine is not driven by SMs");
  if (num_sms < 0) throw InvalidArgument("negative SM count");
  return std::min(mech.peak_bandwidth, num_sms * mech.per_sm_issue_rate);
}

int sms_to_saturate(const TransferMechanism& mech) {
  if (!mech.sm_driven()) throw CapabilityError("the copy engine is not driven by SMs");
  int k = static_cast<int>(std::ceil(mech.peak_bandwidth / mech.per_sm_issue_rate));
  // Guard the ceiling against a rate that lands one ulp short.
  while (k > 1 && aggregate_issue_bandwidth(mech, k - 1) >= mech.peak_bandwidth) --k;
  while (aggregate_issue_bandwidth(mech, k) < mech.peak_bandwidth) ++k;
  return k;
}

bool supports(const TransferMechanism& mech, Functionality f) { return mech.capabilities.contains(f); }

const TransferMechanism& select_mechanism(Functionality f, double msg_bytes, int sm_budget,
                                          const HardwareProfile& profile, bool host_drivable_contiguous) {
  if (sm_budget < 0) throw InvalidArgument("negative SM budget");
  if (msg_bytes < 0) throw InvalidArgument("negative message size");
  const TransferMechanism* best = nullptr;
  double best_bw = -1.0;
  // Iteration order doubles as the tie-break.
  for (auto kind : {MechanismKind::Tma, MechanismKind::RegisterOp, MechanismKind::CopyEngine}) {
    const auto& m = profile.mechanism(kind);
    if (!supports(m, f)) continue;
    if (kind == MechanismKind::CopyEngine && !host_drivable_contiguous) continue;
    double msg = msg_bytes;
    if (kind == MechanismKind::Tma) msg = std::min(msg, static_cast<double>(profile.max_tma_message_bytes));
    double bw = effective_bandwidth(m, msg, profile);
    if (m.sm_driven()) bw = std::min(bw, aggregate_issue_bandwidth(m, sm_budget));
    if (bw > best_bw) {
      best_bw = bw;
      best = &m;
    }
  }
  if (best == nullptr) {
    throw CapabilityError("no transfer mechanism provides " + std::string(to_string(f)) +
                          (host_drivable_contiguous ? "" : " from the device"));
  }
  return *best;
}

}  // namespace ovsim::hw
