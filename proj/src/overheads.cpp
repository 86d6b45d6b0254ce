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

#include <algorithm>
#include <sstream>

#include "ovsim/des.hpp"
#include "ovsim/error.hpp"

namespace ovsim::des {

using hw::MechanismKind;

double sync_cost(SyncKind kind, const hw::HardwareProfile& profile) {
  switch (kind) {
    case SyncKind::IntraSmBarrier: return profile.intra_sm_sync_ns;
    case SyncKind::InterSmHbm: return profile.inter_sm_sync_ns;
    case SyncKind::InterDevice: return profile.inter_sm_sync_ns + profile.link_latency_ns;
  }
  return 0.0;
}

OverheadConfig OverheadConfig::all() {
  OverheadConfig c;
  c.two_way_handshake = c.staging_buffers = c.peer_addr_indirection = true;
  return c;
}

OverheadConfig OverheadConfig::parse(const std::string& list) {
  OverheadConfig c;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item == "none") continue;
    if (item == "all") {
      c = all();
    } else if (item == "handshake" || item == "two_way_handshake") {
      c.two_way_handshake = true;
    } else if (item == "staging" || item == "staging_buffers") {
      c.staging_buffers = true;
    } else if (item == "indirection" || item == "peer_addr_indirection") {
      c.peer_addr_indirection = true;
    } else {
      throw InvalidArgument("unknown overhead flag '" + item + "'");
    }
  }
  return c;
}

std::string OverheadConfig::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  add(two_way_handshake, "handshake");
  add(staging_buffers, "staging");
  add(peer_addr_indirection, "indirection");
  return out.empty() ? "none" : out;
}

double flow_issue_cap(const TransferSpec& spec, const hw::HardwareProfile& profile) {
  const auto& m = profile.mechanism(spec.mech);
  if (!m.sm_driven()) return kInf;
  return hw::aggregate_issue_bandwidth(m, std::max(1, spec.issuing_sms)) * 1e-9;
}

double flow_wire_coefficient(const TransferSpec& spec, const hw::HardwareProfile& profile) {
  const auto& m = profile.mechanism(spec.mech);
  double eff = hw::effective_bandwidth(m, spec.message(), profile);
  if (eff <= 0) throw InvalidArgument("transfer with an empty message");
  return profile.link_bandwidth / eff;
}

double element_access_latency(const hw::HardwareProfile& profile) {
  const auto& reg = profile.register_op;
  double rate = std::min(hw::effective_bandwidth(reg, 128, profile), reg.per_sm_issue_rate);
  return profile.link_latency_ns + 128.0 / rate * 1e9;
}

double indirection_latency(const OverheadConfig& cfg, const hw::HardwareProfile& profile) {
  return (cfg.indirection_latency_ratio - 1.0) * element_access_latency(profile);
}

TransferPlan plan_transfer(const TransferSpec& spec, const OverheadConfig& cfg, const hw::HardwareProfile& profile) {
  if (spec.bytes <= 0) throw InvalidArgument("transfer of nonpositive size");
  TransferPlan plan;
  plan.msg_bytes = spec.message();
  if (spec.mech == MechanismKind::CopyEngine) plan.start_delay_ns += profile.launch_overhead_ns;
  if (cfg.peer_addr_indirection) plan.start_delay_ns += indirection_latency(cfg, profile);
  if (cfg.two_way_handshake) plan.per_chunk_delay_ns = sync_cost(SyncKind::InterDevice, profile);
  if (cfg.staging_buffers) {
    const double chunk = static_cast<double>(cfg.staging_buffer_bytes);
    plan.msg_bytes = std::min(plan.msg_bytes, chunk);
    double left = spec.bytes;
    while (left > 0) {
      double piece = std::min(left, chunk);
      plan.chunk_bytes.push_back(2.0 * piece);
      left -= piece;
    }
  } else {
    plan.chunk_bytes.push_back(spec.bytes);
  }
  return plan;
}

double apply_overheads(const TransferSpec& spec, const OverheadConfig& cfg, const hw::HardwareProfile& profile) {
  TransferPlan plan = plan_transfer(spec, cfg, profile);
  TransferSpec s = spec;
  s.msg_bytes = plan.msg_bytes;
  double rate = std::min(profile.link_bandwidth * 1e-9 / flow_wire_coefficient(s, profile), flow_issue_cap(s, profile));
  double t = plan.start_delay_ns;
  for (double b : plan.chunk_bytes) t += plan.per_chunk_delay_ns + b / rate;
  return t + profile.link_latency_ns;
}

}  // namespace ovsim::des
