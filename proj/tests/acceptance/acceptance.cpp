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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Reference values are recomputed here, not read back from
// the library.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ovsim/barrier_check.hpp"
#include "ovsim/cli.hpp"
#include "ovsim/costmodel.hpp"
#include "ovsim/validate.hpp"

using namespace ovsim;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

hw::HardwareProfile h100(int n = 8) {
  hw::HardwareProfile p = hw::builtin_profile("h100-sxm-8");
  p.num_devices = n;
  return p;
}

lcsc::ExecOptions timing(bool baseline = false) {
  lcsc::ExecOptions o;
  o.functional = false;
  o.record_log = false;
  o.with_baseline = baseline;
  return o;
}

// -- closed forms --------------------------------------------------------------

Verdict hiding_threshold_value() {
  const double k = cost::hiding_threshold(2, 989e12, 450e9);
  return {std::fabs(k - 2197.8) <= 0.1, fmt("K* = %.4f (want 2197.8 +- 0.1)", k)};
}

Verdict tile_time_identity() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    cost::TileCostInputs in;
    in.m = 16.0 * (1 + static_cast<int>(u(rng) * 16));
    in.n = 16.0 * (1 + static_cast<int>(u(rng) * 16));
    in.k = 16.0 * (1 + static_cast<int>(u(rng) * 8));
    in.K = in.k * (1 + static_cast<int>(u(rng) * 512));
    in.s = (u(rng) < 0.5) ? 2.0 : 1.0 + static_cast<int>(u(rng) * 4);
    in.R = std::pow(10.0, 12 + 3 * u(rng));
    in.B = std::pow(10.0, 10 + 3 * u(rng));
    const auto t = cost::tile_times(in);
    const double comp = 2.0 * in.m * in.n * in.K / in.R * 1e9;
    const double comm = in.s * in.m * in.n / in.B * 1e9;
    const double ratio = 2.0 * in.K * in.B / (in.s * in.R);
    worst = std::max({worst, std::fabs(t.t_comp_tile - comp) / comp, std::fabs(t.t_comm_tile - comm) / comm,
                      std::fabs(t.t_comp_tile / t.t_comm_tile - ratio) / ratio});
  }
  return {worst <= 1e-12, fmt("worst relative error %.3g over 10000 inputs", worst)};
}

// -- GEMM + reduce-scatter sweep -----------------------------------------------

Verdict gemm_rs_sweep() {
  const auto p = h100();
  const std::int64_t ks[] = {512, 1024, 2048, 4096};
  std::vector<double> r;
  for (std::int64_t k : ks) {
    wl::WorkloadSpec w;
    w.kind = wl::Kind::GemmRs;
    w.dims.m = w.dims.n = 32768;
    w.dims.k = k;
    w.mode = lcsc::ScheduleMode::IntraSm;
    r.push_back(lcsc::execute_kernel(wl::build(w, p).kernel, p, timing(true)).report.comm_ratio);
  }
  bool ok = r[0] >= 0.50 && r[1] >= 0.40 && r[2] >= 0.10 && r[2] <= 0.40 && r[3] <= 0.05;
  for (std::size_t i = 1; i < r.size(); ++i) ok = ok && r[i] <= r[i - 1];
  return {ok, fmt("comm ratio K=512 %.3f, 1024 %.3f, 2048 %.3f, ", r[0], r[1], r[2]) + fmt("4096 %.4f", r[3])};
}

// -- calibration -----------------------------------------------------------------

des::Co timed(des::Engine* eng, des::TransferSpec spec, double* done) {
  des::Token t = eng->transfer(spec);
  co_await eng->wait(t);
  *done = eng->now();
}

Verdict calibration() {
  const auto p = h100();
  const int tma = hw::sms_to_saturate(p.tma);
  const int reg = hw::sms_to_saturate(p.register_op);
  des::TransferSpec s;
  s.mech = hw::MechanismKind::CopyEngine;
  s.func = hw::Functionality::P2PTransfer;
  s.issuer_sm = -1;
  s.egress = {0};
  s.ingress = {1};
  s.bytes = 1024.0 * 1024 * 1024;
  des::Engine eng(p);
  double done = 0;
  eng.spawn("host", timed(&eng, s, &done));
  eng.run_until_idle();
  const double gbps = s.bytes / done;
  const double intra = des::sync_cost(des::SyncKind::IntraSmBarrier, p);
  const double inter = des::sync_cost(des::SyncKind::InterSmHbm, p);
  const bool ok = tma == 15 && reg == 76 && gbps >= 0.99 * 368.82 && gbps <= 368.82 && intra == 64 && inter == 832;
  return {ok, "saturation TMA " + std::to_string(tma) + " REG " + std::to_string(reg) +
                  fmt(", CE 1 GiB %.3f GB/s, sync %.0f / %.0f ns", gbps, intra, inter)};
}

// -- capability matrix -------------------------------------------------------------

Verdict capability_matrix() {
  using F = hw::Functionality;
  using M = hw::MechanismKind;
  const std::map<M, std::set<F>> want = {
      {M::CopyEngine, {F::P2PTransfer, F::InFabricBroadcast}},
      {M::Tma, {F::P2PTransfer, F::InFabricBroadcast, F::P2PReduction}},
      {M::RegisterOp,
       {F::P2PTransfer, F::InFabricBroadcast, F::P2PReduction, F::InFabricReduction, F::ElementwiseTransfer}},
  };
  const auto p = h100();
  int checked = 0, wrong = 0;
  for (M m : hw::kAllMechanisms) {
    for (F f : hw::kAllFunctionalities) {
      ++checked;
      const bool expect = want.at(m).count(f) > 0;
      bool refused = false;
      des::Engine eng(p);
      des::TransferSpec s;
      s.mech = m;
      s.func = f;
      s.issuer_sm = m == M::CopyEngine ? -1 : 0;
      s.egress = {0};
      s.ingress = {1};
      s.bytes = 4096;
      try {
        eng.transfer(s);
        eng.run_until_idle();
      } catch (const CapabilityError&) {
        refused = true;
      }
      if (hw::capabilities_of(m).contains(f) != expect || refused == expect) ++wrong;
    }
  }
  return {checked == 15 && wrong == 0, std::to_string(checked) + " pairs, " + std::to_string(wrong) + " wrong"};
}

// -- GEMM + all-reduce ---------------------------------------------------------------

double wire_bytes(const des::EventLog& log) {
  double b = 0;
  for (const auto& r : log.records()) {
    if (r.kind == des::EventKind::XferStart) b += r.bytes;
  }
  return b;
}

Verdict gemm_ar() {
  const int n = 8;
  const auto p = h100(n);
  double per_tile[2];
  int i = 0;
  for (auto mode : {lcsc::ScheduleMode::IntraSm, lcsc::ScheduleMode::InterSm}) {
    wl::WorkloadSpec w = wl::reduced_spec(wl::Kind::GemmAr, n, 0);
    w.mode = mode;
    const auto inst = wl::build(w, p);
    lcsc::ExecOptions o;
    o.functional = false;
    const auto res = lcsc::execute_kernel(inst.kernel, p, o);
    const double tiles = static_cast<double>((w.dims.m / w.tile) * (w.dims.n / w.tile));
    // Intra-SM: every device publishes its partial of every tile.
    per_tile[i++] = wire_bytes(res.log) / (mode == lcsc::ScheduleMode::IntraSm ? n * tiles : tiles);
  }
  const double bytes_ratio = per_tile[0] / per_tile[1];
  std::string detail = fmt("bytes per tile %.0f / %.0f = %.3f; t_total ratio", per_tile[0], per_tile[1], bytes_ratio);
  bool ok = bytes_ratio == 8.0;
  for (const auto& sc : wl::select_scenarios("gemm-ar-sweep")) {
    double t[2];
    int j = 0;
    for (auto mode : {lcsc::ScheduleMode::IntraSm, lcsc::ScheduleMode::InterSm}) {
      wl::WorkloadSpec w = sc.spec;
      w.mode = mode;
      t[j++] = lcsc::execute_kernel(wl::build(w, p).kernel, p, timing()).report.t_total;
    }
    ok = ok && t[0] / t[1] >= 2.5;
    detail += fmt(" n%.0f %.2f", static_cast<double>(sc.spec.dims.m), t[0] / t[1]);
  }
  return {ok, detail};
}

// -- overheads -----------------------------------------------------------------------

des::Co element_load(des::Engine* eng, double* done) {
  des::Token t = prim::element_load_async(*eng, {0, 0, prim::kWarpWidth}, 1);
  co_await eng->wait(t);
  *done = eng->now();
}

Verdict overheads() {
  const auto p = h100();
  bool ok = true;
  std::string detail = "all-reduce on/off";
  for (const auto& sc : wl::select_scenarios("all-reduce-sweep")) {
    const auto inst = wl::build(sc.spec, p);
    auto o = timing();
    const double off = lcsc::execute_kernel(inst.kernel, p, o).report.t_total;
    o.overheads = des::OverheadConfig::all();
    const double on = lcsc::execute_kernel(inst.kernel, p, o).report.t_total;
    ok = ok && on / off >= 1.7;
    detail += fmt(" %.2f", on / off);
  }
  double lat[2];
  for (int ind = 0; ind < 2; ++ind) {
    des::EngineOptions eo;
    eo.overheads.peer_addr_indirection = ind == 1;
    des::Engine eng(p, eo);
    eng.spawn("sm", element_load(&eng, &lat[ind]));
    eng.run_until_idle();
  }
  const double ratio = lat[1] / lat[0];
  ok = ok && std::fabs(ratio - 4.5) <= 0.5;
  return {ok, detail + fmt("; indirection latency ratio %.3f", ratio)};
}

// -- functional oracles -----------------------------------------------------------------

const mem::Pgl* find_layout(const wl::Instance& inst, const std::string& name) {
  for (const auto& p : inst.kernel.pgls) {
    if (p->name() == name) return p.get();
  }
  return nullptr;
}

std::vector<std::vector<double>> buffers(const mem::Pgl& p) {
  std::vector<std::vector<double>> out;
  for (int d = 0; d < p.num_devices(); ++d) {
    auto b = p.buffer(d);
    out.emplace_back(b.begin(), b.end());
  }
  return out;
}

/// Reference final state computed from the inputs alone, for the kinds whose
/// result is a pure data movement. Empty when the kind has none.
std::map<std::string, std::vector<std::vector<double>>> reference(const wl::Instance& inst, int n) {
  std::map<std::string, std::vector<std::vector<double>>> want;
  switch (inst.spec.kind) {
    case wl::Kind::AllGatherTensorDim: {
      std::vector<double> cat;
      for (const auto& b : buffers(*find_layout(inst, "x"))) cat.insert(cat.end(), b.begin(), b.end());
      want["y"].assign(n, cat);
      break;
    }
    case wl::Kind::ReduceScatterTensorDim: {
      const auto x = buffers(*find_layout(inst, "x"));
      const std::size_t shard = x[0].size() / n;
      auto& y = want["y"];
      y.assign(n, std::vector<double>(shard, 0.0));
      for (int d = 0; d < n; ++d) {
        for (int s = 0; s < n; ++s) {
          for (std::size_t i = 0; i < shard; ++i) y[d][i] += x[s][d * shard + i];
        }
      }
      break;
    }
    case wl::Kind::AllReduce: {
      const auto x = buffers(*find_layout(inst, "x"));
      std::vector<double> sum(x[0].size(), 0.0);
      for (const auto& b : x) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b[i];
      }
      want["x"].assign(n, sum);
      break;
    }
    case wl::Kind::AllToAll4D: {
      const mem::Pgl& x = *find_layout(inst, "x");
      const mem::Pgl& xs = *find_layout(inst, "xs");
      const std::int64_t rows = x.shape().r, w = xs.shape().c;
      auto& out = want["xs"];
      out.assign(n, {});
      for (int e = 0; e < n; ++e) {
        for (int s = 0; s < n; ++s) {
          auto v = x.read(s, {0, 0, 0, e * w, rows, w});
          out[e].insert(out[e].end(), v.begin(), v.end());
        }
      }
      break;
    }
    case wl::Kind::RingAttention: {
      const mem::Pgl& kv = *find_layout(inst, "kv");
      const std::int64_t rows = kv.shape().r, cols = kv.shape().c;
      std::vector<std::vector<double>> shard;
      for (int d = 0; d < n; ++d) shard.push_back(kv.read(d, {0, 0, 0, 0, rows, cols}));
      auto& out = want["kv"];
      out.assign(n, {});
      for (int d = 0; d < n; ++d) {
        for (int j = 0; j < n; ++j) {
          const auto& s = shard[((d - j) % n + n) % n];
          out[d].insert(out[d].end(), s.begin(), s.end());
        }
      }
      break;
    }
    default: break;
  }
  return want;
}

Verdict functional_oracles() {
  int runs = 0, independent = 0, failures = 0;
  std::string first;
  for (int n : {2, 4, 8}) {
    const auto p = h100(n);
    for (wl::Kind kind : wl::kAllKinds) {
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = wl::build(wl::reduced_spec(kind, n, seed), p);
        const auto want = reference(inst, n);
        lcsc::ExecOptions o;
        o.seed = seed;
        o.record_log = false;
        lcsc::execute_kernel(inst.kernel, p, o);
        ++runs;
        std::string bad = inst.check();
        for (const auto& [name, bufs] : want) {
          ++independent;
          if (bad.empty() && buffers(*find_layout(inst, name)) != bufs) bad = name + " differs from the reference";
        }
        if (!bad.empty() && failures++ == 0) {
          first = std::string(wl::to_string(kind)) + " n=" + std::to_string(n) + " seed " + std::to_string(seed) +
                  ": " + bad;
        }
      }
    }
  }
  return {failures == 0 && runs == 3000, std::to_string(runs) + " runs, " + std::to_string(independent) +
                                             " independent layout checks, " + std::to_string(failures) + " failures" +
                                             (first.empty() ? "" : "; first: " + first)};
}

// -- barrier model check -------------------------------------------------------------------

Verdict barrier_model() {
  std::int64_t states = 0;
  int models = 0;
  bool ok = true;
  for (int n = 2; n <= 4; ++n) {
    for (int rounds = 1; rounds <= 3; ++rounds) {
      check::BarrierModel m;
      m.num_devices = n;
      m.rounds = rounds;
      const auto r = check::explore_barrier(m);
      ++models;
      states += r.states;
      ok = ok && r.safety_violations == 0 && r.deadlock_states == 0 && r.terminal_states > 0;
      // Every partial arrival pattern must be reported as a deadlock.
      for (const auto& a : check::arrival_patterns(n, rounds)) {
        bool partial = false;
        for (int round = 0; round < rounds; ++round) {
          const auto in = std::count_if(a.begin(), a.end(), [&](int x) { return x > round; });
          partial = partial || (in > 0 && in < n);
        }
        m.arrivals = a;
        const auto ra = check::explore_barrier(m);
        ++models;
        ok = ok && ra.safety_violations == 0 && ra.deadlock_found() == partial;
      }
    }
  }
  return {ok, std::to_string(models) + " models, " + std::to_string(states) + " states in the complete ones"};
}

// -- setup-order permutations --------------------------------------------------------------

/// Prerequisites of each setup step, written out from the protocol.
bool prerequisites_met(const mem::SetupStep& s, const std::vector<mem::SetupStep>& done, int n, int root) {
  using K = mem::StepKind;
  auto has = [&](K k, int dev, int peer = -1) {
    return std::any_of(done.begin(), done.end(), [&](const mem::SetupStep& d) {
      return d.kind == k && d.device == dev && (peer < 0 || d.peer == peer);
    });
  };
  auto all = [&](K k) {
    for (int d = 0; d < n; ++d) {
      if (!has(k, d)) return false;
    }
    return true;
  };
  switch (s.kind) {
    case K::CreatePhysical: return true;
    case K::ExportHandle: return has(K::CreatePhysical, s.device);
    case K::TransferHandleOverSocket: return has(K::ExportHandle, s.device);
    case K::ImportHandle: return has(K::TransferHandleOverSocket, s.peer, s.device);
    case K::CreateMulticastStub: return true;
    case K::RegisterDevice: return has(K::CreateMulticastStub, root);
    case K::BindDeviceMemory: return all(K::RegisterDevice);
    case K::ExportStub: return all(K::BindDeviceMemory);
    case K::TransferStub: return has(K::ExportStub, root);
    case K::ImportStub: return has(K::TransferStub, root, s.device);
    case K::MapVirtual:
      if (s.peer >= 0) return has(K::ImportHandle, s.device, s.peer);
      return s.device == root ? has(K::ExportStub, root) : has(K::ImportStub, s.device);
    default: return false;
  }
}

struct PermStats {
  double covered = 0;
  double linearizations = 0;
  double mismatches = 0;
  std::string first;
};

void explore(const mem::SetupSession& session, std::vector<mem::SetupStep>& prefix, std::vector<mem::SetupStep> rest,
             const std::vector<double>& fact, PermStats& st) {
  if (rest.empty()) {
    st.covered += 1;
    st.linearizations += 1;
    if (!session.complete()) st.mismatches += 1;
    return;
  }
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const mem::SetupStep step = rest[i];
    const bool legal = prerequisites_met(step, prefix, session.num_devices(), session.root());
    mem::SetupSession next = session;
    bool accepted = true;
    try {
      next.advance(step);
    } catch (const ProtocolViolation&) {
      accepted = false;
    }
    if (accepted != legal) {
      if (st.mismatches++ == 0) st.first = mem::describe(step) + (accepted ? " accepted early" : " refused");
    }
    if (!accepted || !legal) {
      st.covered += fact[rest.size() - 1];
      continue;
    }
    std::vector<mem::SetupStep> remaining = rest;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
    prefix.push_back(step);
    explore(next, prefix, std::move(remaining), fact, st);
    prefix.pop_back();
  }
}

Verdict setup_permutations() {
  std::string detail;
  bool ok = true;
  for (auto mode : {mem::SetupMode::Vmm, mem::SetupMode::Multicast}) {
    mem::SetupSession s(mode, 2);
    const auto steps = s.canonical_steps();
    std::vector<double> fact(steps.size() + 1, 1.0);
    for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    PermStats st;
    std::vector<mem::SetupStep> prefix;
    explore(s, prefix, steps, fact, st);
    ok = ok && st.mismatches == 0 && st.covered == fact[steps.size()] && st.linearizations > 0;
    detail += (detail.empty() ? "" : "; ") + std::string(mem::to_string(mode)) +
              fmt(" %.0f orders, %.0f legal, %.0f mismatches", st.covered, st.linearizations, st.mismatches) +
              (st.first.empty() ? "" : " (" + st.first + ")");
  }
  return {ok, detail};
}

// -- predictor accuracy ---------------------------------------------------------------------

Verdict predictor_accuracy() {
  const auto p = h100();
  double worst = 0;
  std::string at;
  int count = 0;
  for (const auto& sc : wl::builtin_scenarios()) {
    const double sim = lcsc::execute_kernel(wl::build(sc.spec, p).kernel, p, timing()).report.t_total;
    const double pred = cost::predict(sc.spec, p).t_total;
    const double err = std::fabs(pred - sim) / sim;
    ++count;
    if (err > worst) {
      worst = err;
      at = sc.name;
    }
  }
  return {worst <= 0.15, std::to_string(count) + " scenarios" + fmt(", worst error %.2f%% at ", 100 * worst) + at};
}

// -- reproducibility ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Verdict reproducible_logs() {
  const auto p = h100();
  int logs = 0, differ = 0;
  for (wl::Kind kind : wl::kAllKinds) {
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const auto inst = wl::build(wl::reduced_spec(kind, 8, 42), p);
      lcsc::ExecOptions o;
      o.seed = 42;
      o.overheads = des::OverheadConfig::all();
      const std::string log = lcsc::execute_kernel(inst.kernel, p, o).log.str();
      if (rep == 0) first = log;
      else differ += log != first || log.empty();
    }
    ++logs;
  }
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "ovsim_acceptance_rerun";
  fs::remove_all(base);
  std::ostringstream sink;
  int files = 0;
  for (const char* run : {"a", "b"}) {
    const int code = cli::run({"simulate", "--scenario", "reduced", "--seed", "9", "--overheads", "all", "--out",
                               (base / run).string()},
                              sink, sink);
    if (code != cli::kExitOk) ++differ;
  }
  for (const auto& e : fs::recursive_directory_iterator(base / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const fs::path other = base / "b" / fs::relative(e.path(), base / "a");
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differ;
  }
  fs::remove_all(base);
  return {differ == 0 && files > 0, std::to_string(logs) + " engine logs and " + std::to_string(files) +
                                        " output files rerun, " + std::to_string(differ) + " differences"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"hiding-threshold", hiding_threshold_value},
      {"tile-time-identity", tile_time_identity},
      {"gemm-rs-comm-ratio", gemm_rs_sweep},
      {"calibration", calibration},
      {"capability-matrix", capability_matrix},
      {"gemm-ar-bytes-and-time", gemm_ar},
      {"overheads", overheads},
      {"functional-oracles", functional_oracles},
      {"barrier-model-check", barrier_model},
      {"setup-orders", setup_permutations},
      {"predictor-accuracy", predictor_accuracy},
      {"reproducible-logs", reproducible_logs},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %-24s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
