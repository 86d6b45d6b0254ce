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
#include <cmath>
#include <cstdio>
#include <fstream>

#include "workloads_internal.hpp"

namespace ovsim::wl {

namespace {

struct KindName {
  Kind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {Kind::AgGemm, "ag-gemm"},
    {Kind::GemmRs, "gemm-rs"},
    {Kind::GemmAr, "gemm-ar"},
    {Kind::RingAttention, "ring-attention"},
    {Kind::UlyssesAllToAll, "ulysses"},
    {Kind::MoeDispatchGemm, "moe-dispatch-gemm"},
    {Kind::AllGatherTensorDim, "all-gather"},
    {Kind::ReduceScatterTensorDim, "reduce-scatter"},
    {Kind::AllToAll4D, "all-to-all-4d"},
    {Kind::AllReduce, "all-reduce"},
};

}  // namespace

std::string_view to_string(Kind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "?";
}

Kind kind_from_string(std::string_view s) {
  for (const auto& kn : kKindNames) {
    if (s == kn.name) return kn.kind;
  }
  throw InvalidArgument("unknown workload kind '" + std::string(s) + "'");
}

lcsc::ScheduleMode default_mode(Kind k) {
  return k == Kind::GemmRs ? lcsc::ScheduleMode::IntraSm : lcsc::ScheduleMode::InterSm;
}

int default_comm_sms(const WorkloadSpec& spec, const hw::HardwareProfile& profile) {
  WorkloadSpec w = spec;
  w.num_comm_sms = 0;
  w.functional = false;
  return build(w, profile).kernel.num_comm_sms;
}

// ---------------------------------------------------------------------------

namespace detail {

std::uint64_t mix(std::uint64_t seed, std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  auto step = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = step(seed);
  for (std::int64_t v : {a, b, c, d}) h = step(h ^ static_cast<std::uint64_t>(v));
  return h;
}

double small_int(std::uint64_t h) { return static_cast<double>(static_cast<int>(h % 17) - 8); }

void check_divides(std::int64_t whole, std::int64_t part, const char* what) {
  if (part <= 0 || whole <= 0 || whole % part != 0) {
    throw InvalidArgument(std::string("indivisible sharding: ") + what + " (" + std::to_string(whole) + " by " +
                          std::to_string(part) + ")");
  }
}

void require_comm_sms(const Builder& B, const char* what) {
  if (B.mode == lcsc::ScheduleMode::IntraSm) {
    throw InvalidArgument(std::string(what) + " needs dedicated communication SMs; intra-SM mode is not available");
  }
}

Builder::Builder(const WorkloadSpec& spec, const hw::HardwareProfile& p)
    : w(spec),
      profile(p),
      n(p.num_devices),
      T(spec.tile),
      s(spec.element_bytes),
      mode(spec.mode.value_or(default_mode(spec.kind))) {
  if (T <= 0 || T % 16 != 0) throw InvalidArgument("tile edge must be a positive multiple of 16");
  if (s <= 0) throw InvalidArgument("element_bytes must be positive");
  inst.spec = spec;
  inst.kernel.name = std::string(to_string(spec.kind));
  inst.kernel.pipeline_stages = spec.pipeline_stages;
  inst.kernel.tile_m = T;
  inst.kernel.tile_n = T;
  inst.kernel.tile_k = 64;
}

int Builder::add_pgl(const std::string& name, mem::Shape4 shape, bool multicast) {
  auto p = std::make_shared<mem::Pgl>(mem::allocate_pgl(shape, s, n, w.functional, name));
  if (multicast) mem::enable_multicast(*p);
  inst.kernel.pgls.push_back(std::move(p));
  return static_cast<int>(inst.kernel.pgls.size()) - 1;
}

int Builder::add_barrier(const std::string& name, mem::Shape4 shape, bool multicast) {
  auto b = std::make_shared<mem::BarrierField>(mem::allocate_barrier(shape, n, name));
  if (multicast) mem::enable_multicast(*b);
  inst.kernel.barriers.push_back(std::move(b));
  return static_cast<int>(inst.kernel.barriers.size()) - 1;
}

void Builder::seed_region(int pgl, int dev, const mem::Region& reg, std::int64_t tag) {
  if (!w.functional) return;
  mem::Pgl& p = *inst.kernel.pgls[pgl];
  std::vector<double> v(static_cast<std::size_t>(reg.elements()));
  for (std::int64_t i = 0; i < reg.rows; ++i) {
    for (std::int64_t j = 0; j < reg.cols; ++j) {
      v[i * reg.cols + j] = small_int(mix(w.seed, tag, dev, (reg.b * p.shape().d + reg.d) * p.shape().r + reg.r0 + i,
                                          reg.c0 + j));
    }
  }
  p.write(dev, reg, v);
}

void Builder::seed_buffer(int pgl, int dev, std::int64_t tag) {
  mem::Pgl& p = *inst.kernel.pgls[pgl];
  const auto& sh = p.shape();
  for (std::int64_t b = 0; b < sh.b; ++b) {
    for (std::int64_t d = 0; d < sh.d; ++d) seed_region(pgl, dev, {b, d, 0, 0, sh.r, sh.c}, tag);
  }
}

prim::Values Builder::synth(std::int64_t a, std::int64_t b, std::int64_t c, int rows, int cols) const {
  if (!w.functional) return nullptr;
  std::vector<double> v(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) v[static_cast<std::size_t>(i) * cols + j] = small_int(mix(w.seed ^ 0x5eed, a, b, c, i * cols + j));
  }
  return std::make_shared<const std::vector<double>>(std::move(v));
}

int Builder::messages(std::int64_t elements) const {
  const std::int64_t per = static_cast<std::int64_t>(T) * T;
  return static_cast<int>(std::max<std::int64_t>(1, (elements + per - 1) / per));
}

void Builder::finish_partition(int fallback_comm_sms) {
  auto& k = inst.kernel;
  k.mode = mode;
  if (mode == lcsc::ScheduleMode::IntraSm) {
    k.num_comm_sms = 0;
    return;
  }
  int c = w.num_comm_sms > 0 ? w.num_comm_sms : fallback_comm_sms;
  k.num_comm_sms = std::clamp(c, 1, profile.sms_per_device - 1);
}

void Builder::expect(int pgl, std::vector<std::vector<double>> buffers) {
  if (!w.functional) return;
  inst.expected.push_back({pgl, std::move(buffers)});
}

void Builder::fold_into(std::vector<double>& acc, int rows, int cols, const std::vector<double>& block,
                        std::int64_t brows, std::int64_t bcols) {
  for (std::int64_t i = 0; i < brows; ++i) {
    for (std::int64_t j = 0; j < bcols; ++j) acc[(i % rows) * cols + j % cols] += block[i * bcols + j];
  }
}

int balanced_comm_sms(double flops_per_device, double link_bytes_per_device, double msg_bytes,
                      hw::MechanismKind mech, const hw::HardwareProfile& profile) {
  const auto& m = profile.mechanism(mech);
  const double eff = hw::effective_bandwidth(m, msg_bytes, profile);
  const int sms = profile.sms_per_device;
  int best = 1;
  double best_t = 0.0;
  for (int c = 1; c < sms; ++c) {
    double t_comp = flops_per_device / (profile.tensor_throughput * (sms - c) / sms);
    double bw = std::min(eff, m.per_sm_issue_rate * c);
    double t = std::max(t_comp, link_bytes_per_device / bw);
    if (c == 1 || t < best_t) {
      best = c;
      best_t = t;
    }
  }
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------

std::string Instance::check() const {
  for (const auto& e : expected) {
    const mem::Pgl& p = *kernel.pgls[e.pgl];
    const auto& sh = p.shape();
    for (int dev = 0; dev < p.num_devices(); ++dev) {
      auto got = p.buffer(dev);
      const auto& want = e.buffers[dev];
      for (std::size_t i = 0; i < want.size(); ++i) {
        if (got[i] == want[i]) continue;
        std::int64_t idx = static_cast<std::int64_t>(i);
        std::int64_t c = idx % sh.c;
        idx /= sh.c;
        std::int64_t r = idx % sh.r;
        idx /= sh.r;
        std::int64_t d = idx % sh.d;
        std::int64_t b = idx / sh.d;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s device %d at (b=%lld, d=%lld, r=%lld, c=%lld): got %.17g, expected %.17g",
                      p.name().c_str(), dev, static_cast<long long>(b), static_cast<long long>(d),
                      static_cast<long long>(r), static_cast<long long>(c), got[i], want[i]);
        return buf;
      }
    }
  }
  return {};
}

Instance build(const WorkloadSpec& spec, const hw::HardwareProfile& profile) {
  Instance inst;
  switch (spec.kind) {
    case Kind::GemmRs: inst = detail::build_gemm_rs(spec, profile); break;
    case Kind::GemmAr: inst = detail::build_gemm_ar(spec, profile); break;
    case Kind::AgGemm: inst = detail::build_ag_gemm(spec, profile); break;
    case Kind::MoeDispatchGemm: inst = detail::build_moe(spec, profile); break;
    case Kind::RingAttention: inst = detail::build_ring_attention(spec, profile); break;
    case Kind::UlyssesAllToAll: inst = detail::build_all_to_all(spec, profile, true); break;
    case Kind::AllToAll4D: inst = detail::build_all_to_all(spec, profile, false); break;
    case Kind::AllGatherTensorDim: inst = detail::build_all_gather(spec, profile); break;
    case Kind::ReduceScatterTensorDim: inst = detail::build_reduce_scatter(spec, profile); break;
    case Kind::AllReduce: inst = detail::build_all_reduce(spec, profile); break;
  }
  inst.kernel.validate(profile);
  return inst;
}

WorkloadSpec reduced_spec(Kind k, int n, std::uint64_t seed) {
  WorkloadSpec w;
  w.kind = k;
  w.tile = 16;
  w.functional = true;
  w.seed = seed;
  w.num_comm_sms = 3;
  Dims& d = w.dims;
  switch (k) {
    case Kind::GemmRs: d.m = n * 32; d.n = 32; d.k = 64; break;
    case Kind::GemmAr: d.m = 32; d.n = 32; d.k = 64; break;
    case Kind::AgGemm: d.m = n * 32; d.n = n * 16; d.k = 32; break;
    case Kind::RingAttention: d.b = 1; d.h = 2; d.s = n * 32; d.d = 16; break;
    case Kind::UlyssesAllToAll:
    case Kind::AllToAll4D: d.b = 2; d.s = 16; d.h = n * 2; d.d = 16; break;
    case Kind::MoeDispatchGemm:
      d.m = 16;
      d.top_k = 2;
      d.experts = 2 * n;
      d.hidden = 32;
      d.expert_hidden = 32;
      d.skew = static_cast<double>(seed % 3);
      break;
    case Kind::AllGatherTensorDim:
    case Kind::ReduceScatterTensorDim: d.m = n * 32; d.n = 32; break;
    case Kind::AllReduce: d.m = 64; d.n = 32; break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

std::vector<Scenario> builtin_scenarios() {
  std::vector<Scenario> out;
  auto add = [&](const std::string& group, const std::string& name, WorkloadSpec w) {
    out.push_back({group, group + "/" + name, w});
  };
  for (std::int64_t k : {512, 1024, 2048, 4096, 8192}) {
    WorkloadSpec w;
    w.kind = Kind::GemmRs;
    w.dims.m = w.dims.n = 32768;
    w.dims.k = k;
    add("gemm-rs-sweep", "k" + std::to_string(k), w);
  }
  for (std::int64_t n : {4096, 8192, 16384}) {
    WorkloadSpec w;
    w.kind = Kind::GemmAr;
    w.dims.m = w.dims.n = n;
    w.dims.k = n / 8;
    add("gemm-ar-sweep", "n" + std::to_string(n), w);
  }
  for (std::int64_t n : {4096, 8192, 16384}) {
    WorkloadSpec w;
    w.kind = Kind::AgGemm;
    w.dims.m = w.dims.n = w.dims.k = n;
    add("ag-gemm-sweep", "n" + std::to_string(n), w);
  }
  for (std::int64_t s : {12288, 24576, 49152}) {
    WorkloadSpec w;
    w.kind = Kind::RingAttention;
    w.dims.b = 16;
    w.dims.h = 16;
    w.dims.d = 128;
    w.dims.s = s;
    add("ring-attention-sweep", "s" + std::to_string(s), w);
  }
  for (std::int64_t s : {512, 1024}) {
    WorkloadSpec w;
    w.kind = Kind::UlyssesAllToAll;
    w.dims.b = 16;
    w.dims.h = 128;
    w.dims.d = 128;
    w.dims.s = s;
    add("ulysses-sweep", "s" + std::to_string(s), w);
  }
  for (std::int64_t m : {1024, 4096}) {
    WorkloadSpec w;
    w.kind = Kind::MoeDispatchGemm;
    w.dims.m = m;
    w.dims.top_k = 8;
    w.dims.experts = 256;
    w.dims.hidden = 7168;
    w.dims.expert_hidden = 2048;
    add("moe-sweep", "m" + std::to_string(m), w);
  }
  for (std::int64_t m : {4096, 16384}) {
    WorkloadSpec w;
    w.kind = Kind::AllGatherTensorDim;
    w.dims.m = m;
    w.dims.n = 4096;
    add("all-gather-sweep", "m" + std::to_string(m), w);
    w.kind = Kind::ReduceScatterTensorDim;
    add("reduce-scatter-sweep", "m" + std::to_string(m), w);
  }
  for (std::int64_t s : {1024, 4096}) {
    WorkloadSpec w;
    w.kind = Kind::AllToAll4D;
    w.dims.b = 4;
    w.dims.h = 32;
    w.dims.d = 128;
    w.dims.s = s;
    add("all-to-all-sweep", "s" + std::to_string(s), w);
  }
  for (std::int64_t m : {512, 2048, 8192}) {
    WorkloadSpec w;
    w.kind = Kind::AllReduce;
    w.dims.m = m;
    w.dims.n = 4096;
    add("all-reduce-sweep", "m" + std::to_string(m), w);
  }
  return out;
}

std::vector<Scenario> select_scenarios(const std::string& key) {
  std::vector<Scenario> out;
  for (auto& sc : builtin_scenarios()) {
    if (key == "all" || sc.name == key || sc.group == key) out.push_back(sc);
  }
  if (out.empty()) throw InvalidArgument("unknown scenario '" + key + "'");
  return out;
}

// ---------------------------------------------------------------------------
// Structured text

WorkloadSpec workload_from_json(const nlohmann::json& j) {
  WorkloadSpec w;
  if (!j.contains("kind")) throw InvalidArgument("workload needs a kind");
  w.kind = kind_from_string(j.at("kind").get<std::string>());
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("m", w.dims.m);
  get("n", w.dims.n);
  get("k", w.dims.k);
  get("b", w.dims.b);
  get("s", w.dims.s);
  get("h", w.dims.h);
  get("d", w.dims.d);
  get("top_k", w.dims.top_k);
  get("experts", w.dims.experts);
  get("hidden", w.dims.hidden);
  get("expert_hidden", w.dims.expert_hidden);
  get("skew", w.dims.skew);
  get("element_bytes", w.element_bytes);
  get("tile", w.tile);
  get("comm_sms", w.num_comm_sms);
  get("seed", w.seed);
  get("pipeline_stages", w.pipeline_stages);
  get("functional", w.functional);
  if (j.contains("mode")) w.mode = lcsc::schedule_mode_from_string(j.at("mode").get<std::string>());
  return w;
}

nlohmann::json workload_to_json(const WorkloadSpec& w) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(w.kind));
  const Dims& d = w.dims;
  auto put = [&](const char* key, auto v) {
    if (v != 0) j[key] = v;
  };
  put("m", d.m);
  put("n", d.n);
  put("k", d.k);
  put("b", d.b);
  put("s", d.s);
  put("h", d.h);
  put("d", d.d);
  put("top_k", d.top_k);
  put("experts", d.experts);
  put("hidden", d.hidden);
  put("expert_hidden", d.expert_hidden);
  put("skew", d.skew);
  j["element_bytes"] = w.element_bytes;
  j["tile"] = w.tile;
  if (w.mode) j["mode"] = std::string(lcsc::to_string(*w.mode));
  put("comm_sms", w.num_comm_sms);
  j["seed"] = w.seed;
  j["pipeline_stages"] = w.pipeline_stages;
  if (w.functional) j["functional"] = true;
  return j;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("scenario file '" + path + "': " + e.what());
  }
  if (!j.contains("scenarios") || !j["scenarios"].is_array()) {
    throw InvalidArgument("scenario file '" + path + "' needs a \"scenarios\" array");
  }
  std::vector<Scenario> out;
  for (const auto& e : j["scenarios"]) {
    Scenario sc;
    sc.name = e.value("name", std::string("scenario") + std::to_string(out.size()));
    sc.group = e.value("group", sc.name);
    sc.spec = workload_from_json(e);
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace ovsim::wl
