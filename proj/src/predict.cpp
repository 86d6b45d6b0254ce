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

// Analytic prediction from a kernel spec: per-SM pipelined compute,
// per-port payload time at each mechanism's effective rate, and per-SM
// issue time, composed according to how the workload couples the two.

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "ovsim/costmodel.hpp"
#include "ovsim/des.hpp"
#include "ovsim/error.hpp"

namespace ovsim::cost {

using hw::Functionality;
using lcsc::Op;
using lcsc::OpKind;

namespace {

struct Ports {
  const hw::HardwareProfile& p;
  int n;
  std::vector<double> egress, ingress;
  /// Running sum of per-flow times at the issuing SM's rate.
  double flow_ns = 0.0;
  int active = 1;

  explicit Ports(const hw::HardwareProfile& profile)
      : p(profile), n(profile.num_devices), egress(n, 0.0), ingress(n, 0.0) {}

  double region_bytes(const lcsc::KernelSpec& k, const Op& op) const {
    return static_cast<double>(op.region.elements()) * k.pgls.at(op.pgl)->element_bytes();
  }

  /// Payload time in ns of `bytes` sent as messages of `msg` bytes; the
  /// per-flow time at min(SM issue rate, port share) goes to flow_ns.
  double ns(Functionality f, double bytes, double msg, bool issued = true) {
    const auto& m = hw::select_mechanism(f, msg, 1, p);
    const double eff = hw::effective_bandwidth(m, msg, p) * 1e-9;
    if (issued) {
      double rate = eff / active;
      if (m.sm_driven()) rate = std::min(rate, hw::aggregate_issue_bandwidth(m, 1) * 1e-9);
      flow_ns += bytes / rate;
    }
    return bytes / eff;
  }

  void account(const lcsc::KernelSpec& k, const Op& op, int dev, int active_sms) {
    active = std::max(1, active_sms);
    if (op.kind != OpKind::StoreAsync && op.kind != OpKind::StoreAddAsync && op.kind != OpKind::LoadRemote &&
        op.kind != OpKind::Reduce && op.kind != OpKind::AllReduce) {
      return;
    }
    const double bytes = region_bytes(k, op);
    const double msg = bytes / op.count;
    switch (op.kind) {
      case OpKind::StoreAsync: {
        const int fan = std::popcount(op.targets);
        const double t = ns(fan > 1 ? Functionality::InFabricBroadcast : Functionality::P2PTransfer, bytes, msg);
        egress[dev] += t;
        for (int d = 0; d < n; ++d) {
          if (op.targets >> d & 1U) ingress[d] += t;
        }
        break;
      }
      case OpKind::StoreAddAsync: {
        for (int d = 0; d < n; ++d) {
          if (!(op.targets >> d & 1U)) continue;
          const double t = ns(Functionality::P2PReduction, bytes, msg);
          egress[dev] += t;
          ingress[d] += t;
        }
        break;
      }
      case OpKind::LoadRemote: {
        const double t = ns(Functionality::P2PTransfer, bytes, msg);
        egress[op.device] += t;
        ingress[dev] += t;
        break;
      }
      case OpKind::Reduce: {
        ingress[dev] += ns(Functionality::InFabricReduction, bytes, msg);
        break;
      }
      case OpKind::AllReduce: {
        const double pull = ns(Functionality::InFabricReduction, bytes, msg);
        const double push = ns(Functionality::InFabricBroadcast, bytes, msg);
        ingress[dev] += pull;
        egress[dev] += push;
        for (int d = 0; d < n; ++d) ingress[d] += push;
        break;
      }
      default: break;
    }
  }
};

double local_bytes(const lcsc::KernelSpec& k, const Op& op) {
  if (op.bytes >= 0) return op.bytes;
  return static_cast<double>(op.region.elements()) * k.pgls.at(op.pgl)->element_bytes();
}

enum class Coupling : std::uint8_t { Producer, Consumer, Serial, CommOnly };

Coupling coupling_of(wl::Kind k, const lcsc::KernelSpec& spec) {
  if (spec.compute.empty()) return Coupling::CommOnly;
  switch (k) {
    case wl::Kind::GemmRs:
    case wl::Kind::GemmAr: return Coupling::Producer;
    case wl::Kind::UlyssesAllToAll: return Coupling::Serial;
    default: return Coupling::Consumer;
  }
}

}  // namespace

StaticProfile analyze_kernel(const lcsc::KernelSpec& spec, const hw::HardwareProfile& profile) {
  const int n = profile.num_devices;
  const int csms = spec.compute_sms(profile);
  const int comm_sms = std::max(1, spec.num_comm_sms);
  const double flop_rate = profile.tensor_throughput / profile.sms_per_device * 1e-9;
  const double hbm_rate = profile.hbm_bandwidth / profile.sms_per_device * 1e-9;
  const double handoff = des::sync_cost(des::SyncKind::IntraSmBarrier, profile);
  const double lat = profile.link_latency_ns;

  StaticProfile sp;
  sp.compute_sms = csms;
  Ports ports(profile);
  std::vector<double> hbm(n, 0.0);
  std::vector<int> seen(n, 0);

  struct Sm {
    double load = 0, comp = 0, store = 0, sync = 0;
    double first = -1, first_task = 0;
  };
  struct Group {
    std::int64_t count = 0;
    double task = 0.0;
  };
  std::vector<std::vector<Sm>> sms(n, std::vector<Sm>(std::max(csms, 1)));
  std::map<std::tuple<int, int, std::int64_t, std::int64_t, std::int64_t, std::int64_t, int>, Group> groups;
  double last_task = 0.0;
  for (const auto& t : spec.compute) {
    const int d = t.device;
    Sm& sm = sms[d][seen[d]++ % csms];
    double load = t.load_bytes, store = 0.0;
    double before = ports.flow_ns;
    const Op* gate = nullptr;
    for (const Op& op : t.loads) {
      if (op.kind == OpKind::LoadLocal) load += local_bytes(spec, op);
      if (op.kind == OpKind::Wait && !gate) gate = &op;
      ports.account(spec, op, d, csms);
    }
    double remote_load = ports.flow_ns - before;
    if (remote_load > 0) remote_load += lat;
    before = ports.flow_ns;
    for (const Op& op : t.stores) {
      if (op.kind == OpKind::StoreLocal || op.kind == OpKind::StoreLocalAdd) store += local_bytes(spec, op);
      ports.account(spec, op, d, csms);
    }
    double remote_store = ports.flow_ns - before;
    if (remote_store > 0) remote_store += lat;
    hbm[d] += load + store;
    const double l = load / hbm_rate + remote_load, c = t.flops / flop_rate;
    const double st = store / hbm_rate + handoff + remote_store;
    sm.load += l;
    sm.comp += c;
    sm.store += st;
    sm.sync += handoff;
    if (sm.first < 0) {
      sm.first = l + c + st - std::max({l, c, st});
      sm.first_task = l + c + st;
    }
    last_task = l + c + st;
    if (gate) {
      Group& g = groups[{d, gate->barrier, gate->coord.b, gate->coord.d, gate->coord.r, gate->coord.c,
                         gate->device < 0 ? d : gate->device}];
      ++g.count;
      g.task = std::max(g.task, l + c + st);
    }
    sp.total_flops += t.flops;
  }
  for (int d = 0; d < n; ++d) {
    for (const Sm& sm : sms[d]) {
      if (sm.first < 0) continue;
      sp.compute_ns = std::max(sp.compute_ns, std::max({sm.load, sm.comp, sm.store}) + sm.first);
      sp.first_ready_ns = std::max(sp.first_ready_ns, sm.first_task);
      sp.sync_ns = std::max(sp.sync_ns, sm.sync);
    }
  }
  sp.tail_ns = groups.empty() ? last_task : 0.0;
  for (const auto& [key, g] : groups) {
    sp.tail_ns = std::max(sp.tail_ns, static_cast<double>((g.count + csms - 1) / std::max(1, csms)) * g.task);
  }

  // Communication SMs run one task at a time: its flows back to back at the
  // SM's share of the port, then the arrival latency, plus local copies.
  std::vector<int> tasks(n, 0);
  for (const auto& ct : spec.comm) ++tasks[ct.device];
  std::vector<double> serial(static_cast<std::size_t>(n) * comm_sms, 0.0);
  std::vector<int> waits(n, 0);
  std::fill(seen.begin(), seen.end(), 0);
  for (const auto& ct : spec.comm) {
    const int d = ct.device;
    const int slot = seen[d]++ % comm_sms;
    const int active = std::max(1, std::min(spec.num_comm_sms, tasks[d]));
    double t = 0.0, ramp = 0.0;
    int blocking = 0;
    for (const Op& op : ct.ops) {
      if (op.kind == OpKind::LoadLocal || op.kind == OpKind::StoreLocal || op.kind == OpKind::StoreLocalAdd) {
        hbm[d] += local_bytes(spec, op);
        t += local_bytes(spec, op) / hbm_rate;
      }
      const double before = ports.flow_ns;
      ports.account(spec, op, d, active);
      const double flows = ports.flow_ns - before;
      if (op.kind == OpKind::AllReduce) {
        // The fabric reduction lands before the broadcast is issued.
        ramp = t + flows / 2 + lat;
        t += lat;
        ++blocking;
      }
      if (flows > 0 && blocking == 0) blocking = 1;
      t += flows;
    }
    t += blocking > 0 ? lat : 0.0;
    serial[static_cast<std::size_t>(d) * comm_sms + slot] += t;
    waits[d] = std::max(waits[d], blocking);
    sp.chunk_ns = std::max(sp.chunk_ns, t);
    sp.ramp_ns = std::max(sp.ramp_ns, ramp);
  }
  for (double x : serial) sp.issue_ns = std::max(sp.issue_ns, x);
  for (int d = 0; d < n; ++d) {
    sp.port_ns = std::max({sp.port_ns, ports.egress[d], ports.ingress[d]});
    sp.hbm_bytes = std::max(sp.hbm_bytes, hbm[d]);
    const double rounds = std::ceil(static_cast<double>(tasks[d]) / comm_sms);
    sp.gap_ns = std::max(sp.gap_ns, rounds * waits[d] * lat);
  }
  return sp;
}

lcsc::CostReport predict(const wl::WorkloadSpec& spec, const hw::HardwareProfile& profile) {
  wl::WorkloadSpec timing = spec;
  timing.functional = false;
  const wl::Instance inst = wl::build(timing, profile);
  const lcsc::KernelSpec& k = inst.kernel;
  const StaticProfile sp = analyze_kernel(k, profile);
  const StaticProfile base = analyze_kernel(lcsc::strip_communication(k), profile);

  lcsc::CostReport r;
  r.t_launch = profile.launch_overhead_ns;
  r.total_flops = sp.total_flops;
  const double rate = profile.tensor_throughput * sp.compute_sms / profile.sms_per_device * 1e-9;
  r.t_comp = sp.compute_sms > 0 ? sp.total_flops / profile.num_devices / rate : 0.0;
  r.t_mem = sp.hbm_bytes / (profile.hbm_bandwidth * 1e-9);
  r.t_comm = sp.port_ns;

  const double lat = profile.link_latency_ns;
  const double handoff = k.comm.empty() ? 0.0 : des::sync_cost(des::SyncKind::InterDevice, profile);
  const double comm = std::max(sp.port_ns + sp.gap_ns, sp.issue_ns) + lat;
  double body = 0.0;
  switch (coupling_of(spec.kind, k)) {
    case Coupling::Producer:
      body = std::max(sp.compute_ns + sp.chunk_ns + lat, sp.first_ready_ns + handoff + sp.ramp_ns + comm);
      break;
    case Coupling::Consumer: body = std::max(sp.compute_ns + sp.chunk_ns + lat, comm + handoff + sp.tail_ns); break;
    case Coupling::Serial: body = comm + handoff + sp.compute_ns; break;
    case Coupling::CommOnly: body = comm; break;
  }
  r.t_total = r.t_launch + body;
  r.t_baseline = r.t_launch + base.compute_ns;
  r.t_sync = sp.sync_ns;
  r.t_non_overlap = std::max(0.0, r.t_total - std::max({r.t_comp, r.t_mem, r.t_comm}) - r.t_launch - r.t_sync);
  r.comm_ratio = std::max(0.0, (r.t_total - r.t_baseline) / r.t_total);
  r.achieved_flops = r.total_flops / (r.t_total * 1e-9);
  return r;
}

}  // namespace ovsim::cost
