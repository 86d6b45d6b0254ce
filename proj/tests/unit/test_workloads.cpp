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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ovsim/workloads.hpp"

namespace ovsim::wl {
namespace {

hw::HardwareProfile profile(int n) {
  hw::HardwareProfile p = hw::builtin_profile("h100-sxm-8");
  p.num_devices = n;
  return p;
}

const mem::Pgl& layout(const Instance& inst, const std::string& name) {
  for (const auto& p : inst.kernel.pgls) {
    if (p->name() == name) return *p;
  }
  throw std::runtime_error("no layout " + name);
}

std::vector<double> whole(const mem::Pgl& p, int dev) {
  auto b = p.buffer(dev);
  return {b.begin(), b.end()};
}

std::vector<std::vector<double>> inputs(const Instance& inst, const std::string& name) {
  const mem::Pgl& p = layout(inst, name);
  std::vector<std::vector<double>> out;
  for (int d = 0; d < p.num_devices(); ++d) out.push_back(whole(p, d));
  return out;
}

void run(const Instance& inst, const hw::HardwareProfile& p, std::uint64_t seed) {
  lcsc::ExecOptions o;
  o.seed = seed;
  o.record_log = false;
  lcsc::execute_kernel(inst.kernel, p, o);
}

class EveryKind : public ::testing::TestWithParam<std::tuple<Kind, int>> {};

TEST_P(EveryKind, MatchesOracle) {
  const auto [kind, n] = GetParam();
  const auto p = profile(n);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Instance inst = build(reduced_spec(kind, n, seed), p);
    ASSERT_FALSE(inst.expected.empty());
    run(inst, p, seed);
    EXPECT_EQ(inst.check(), "") << "seed " << seed;
  }
}

INSTANTIATE_TEST_SUITE_P(Reduced, EveryKind, ::testing::Combine(::testing::ValuesIn(kAllKinds), ::testing::Values(2, 4, 8)),
                         [](const auto& info) {
                           std::string s(to_string(std::get<0>(info.param)));
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s + "_n" + std::to_string(std::get<1>(info.param));
                         });

TEST(Oracles, AllGatherConcatenatesShards) {
  for (int n : {2, 4, 8}) {
    const auto p = profile(n);
    const Instance inst = build(reduced_spec(Kind::AllGatherTensorDim, n, 5), p);
    const auto x = inputs(inst, "x");
    run(inst, p, 5);
    std::vector<double> cat;
    for (const auto& s : x) cat.insert(cat.end(), s.begin(), s.end());
    for (int d = 0; d < n; ++d) EXPECT_EQ(whole(layout(inst, "y"), d), cat);
  }
}

TEST(Oracles, ReduceScatterSumsOwnShard) {
  for (int n : {2, 4, 8}) {
    const auto p = profile(n);
    const Instance inst = build(reduced_spec(Kind::ReduceScatterTensorDim, n, 2), p);
    const auto x = inputs(inst, "x");
    run(inst, p, 2);
    const std::size_t shard = x[0].size() / n;
    for (int d = 0; d < n; ++d) {
      std::vector<double> want(shard, 0.0);
      for (int s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < shard; ++i) want[i] += x[s][d * shard + i];
      }
      EXPECT_EQ(whole(layout(inst, "y"), d), want);
    }
  }
}

TEST(Oracles, AllReduceLeavesEqualSums) {
  for (int n : {2, 4, 8}) {
    const auto p = profile(n);
    const Instance inst = build(reduced_spec(Kind::AllReduce, n, 1), p);
    const auto x = inputs(inst, "x");
    run(inst, p, 1);
    std::vector<double> want(x[0].size(), 0.0);
    for (const auto& s : x) {
      for (std::size_t i = 0; i < want.size(); ++i) want[i] += s[i];
    }
    for (int d = 0; d < n; ++d) EXPECT_EQ(whole(layout(inst, "x"), d), want);
  }
}

TEST(Oracles, GemmArOutputsAgree) {
  const auto p = profile(4);
  const Instance inst = build(reduced_spec(Kind::GemmAr, 4, 0), p);
  run(inst, p, 0);
  for (const auto& e : inst.expected) {
    const mem::Pgl& out = *inst.kernel.pgls[e.pgl];
    for (int d = 1; d < 4; ++d) EXPECT_EQ(whole(out, d), whole(out, 0)) << out.name();
  }
}

TEST(Oracles, RingRotatesShardsForward) {
  for (int n : {2, 4, 8}) {
    const auto p = profile(n);
    const Instance inst = build(reduced_spec(Kind::RingAttention, n, 4), p);
    run(inst, p, 4);
    const mem::Pgl& kv = layout(inst, "kv");
    const auto& sh = kv.shape();
    const mem::Region slot0{0, 0, 0, 0, sh.r, sh.c};
    for (int d = 0; d < n; ++d) {
      for (int j = 0; j < n; ++j) {
        const mem::Region slot{0, j, 0, 0, sh.r, sh.c};
        EXPECT_EQ(kv.read(d, slot), kv.read(((d - j) % n + n) % n, slot0)) << "device " << d << " slot " << j;
      }
    }
  }
}

TEST(Oracles, UlyssesLinkBytes) {
  for (int n : {2, 4, 8}) {
    WorkloadSpec w;
    w.kind = Kind::UlyssesAllToAll;
    w.dims.b = 2;
    w.dims.s = 64;
    w.dims.h = 4 * n;
    w.dims.d = 32;
    w.tile = 16;
    w.num_comm_sms = 4;
    const Instance inst = build(w, profile(n));
    const double want = 2.0 * 64 * (4.0 * n) * 32 * 2 * (n - 1.0) / n;
    EXPECT_DOUBLE_EQ(inst.link_bytes_per_device, want);
  }
}

TEST(Oracles, CollectiveLinkBytes) {
  const int n = 8;
  const auto p = profile(n);
  WorkloadSpec w;
  w.dims.m = 4096;
  w.dims.n = 1024;
  const double bytes = 4096.0 * 1024 * 2;
  w.kind = Kind::AllGatherTensorDim;
  EXPECT_DOUBLE_EQ(build(w, p).link_bytes_per_device, bytes * (n - 1) / n);
  w.kind = Kind::ReduceScatterTensorDim;
  EXPECT_DOUBLE_EQ(build(w, p).link_bytes_per_device, bytes * (n - 1) / n);
}

TEST(Build, IntraSmRejectedWhereCommSmsAreNeeded) {
  const auto p = profile(4);
  for (Kind k : {Kind::RingAttention, Kind::UlyssesAllToAll, Kind::AllGatherTensorDim, Kind::AllReduce}) {
    WorkloadSpec w = reduced_spec(k, 4, 0);
    w.mode = lcsc::ScheduleMode::IntraSm;
    EXPECT_THROW(build(w, p), InvalidArgument) << to_string(k);
  }
}

TEST(Build, IndivisibleExtentsRejected) {
  const auto p = profile(8);
  WorkloadSpec w = reduced_spec(Kind::AllGatherTensorDim, 8, 0);
  w.dims.m += 1;
  EXPECT_THROW(build(w, p), InvalidArgument);
}

TEST(Build, DefaultModes) {
  EXPECT_EQ(default_mode(Kind::GemmRs), lcsc::ScheduleMode::IntraSm);
  EXPECT_EQ(default_mode(Kind::AgGemm), lcsc::ScheduleMode::InterSm);
}

TEST(Scenarios, BuiltinsCoverSweeps) {
  const auto all = builtin_scenarios();
  std::set<std::string> names;
  std::set<std::int64_t> ks;
  for (const auto& sc : all) {
    EXPECT_TRUE(names.insert(sc.name).second) << sc.name;
    if (sc.spec.kind == Kind::GemmRs) ks.insert(sc.spec.dims.k);
    if (sc.spec.kind == Kind::RingAttention) {
      EXPECT_EQ(sc.spec.dims.s / 8 % 768, 0) << sc.name;
    }
  }
  for (std::int64_t k : {512, 1024, 2048, 4096}) EXPECT_TRUE(ks.count(k)) << k;
  std::set<Kind> kinds;
  for (const auto& sc : all) kinds.insert(sc.spec.kind);
  EXPECT_EQ(kinds.size(), std::size(kAllKinds));
}

TEST(Scenarios, SelectByNameGroupAll) {
  EXPECT_EQ(select_scenarios("all").size(), builtin_scenarios().size());
  EXPECT_EQ(select_scenarios("gemm-rs-sweep/k512").size(), 1u);
  EXPECT_GT(select_scenarios("gemm-rs-sweep").size(), 1u);
  EXPECT_THROW(select_scenarios("nope"), InvalidArgument);
}

TEST(Scenarios, JsonRoundTrip) {
  for (const auto& sc : builtin_scenarios()) {
    WorkloadSpec w = sc.spec;
    w.mode = lcsc::ScheduleMode::InterSm;
    w.num_comm_sms = 7;
    w.seed = 11;
    const auto j = workload_to_json(w);
    EXPECT_EQ(workload_to_json(workload_from_json(j)), j) << sc.name;
  }
  for (Kind k : kAllKinds) EXPECT_EQ(kind_from_string(to_string(k)), k);
  EXPECT_THROW(workload_from_json(nlohmann::json::object()), InvalidArgument);
}

TEST(Scenarios, LoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "ovsim_scenarios_test.json";
  {
    std::ofstream f(path);
    f << R"({"scenarios": [{"name": "mine", "kind": "all-reduce", "m": 64, "n": 32, "tile": 16, "functional": true}]})";
  }
  const auto sc = load_scenarios(path.string());
  ASSERT_EQ(sc.size(), 1u);
  EXPECT_EQ(sc[0].name, "mine");
  EXPECT_EQ(sc[0].spec.kind, Kind::AllReduce);
  EXPECT_TRUE(sc[0].spec.functional);
  std::filesystem::remove(path);
  EXPECT_THROW(load_scenarios(path.string()), InvalidArgument);
}

}  // namespace
}  // namespace ovsim::wl
