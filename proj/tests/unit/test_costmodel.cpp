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

#include <random>

#include "ovsim/costmodel.hpp"
#include "ovsim/error.hpp"

namespace ovsim::cost {
namespace {

TEST(KernelTime, Examples) {
  EXPECT_DOUBLE_EQ(kernel_time(0, 5, 3, 4, 0, 0), 5);
  EXPECT_DOUBLE_EQ(kernel_time(1, 0, 0, 0, 0, 0), 1);
  EXPECT_DOUBLE_EQ(kernel_time(2, 5, 3, 7, 1, 0.5), 10.5);
  EXPECT_THROW(kernel_time(0, -1, 0, 0, 0, 0), InvalidArgument);
}

TEST(KernelTime, MonotoneInEveryArgument) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 1000; ++i) {
    double a[6];
    for (double& x : a) x = u(rng);
    const double base = kernel_time(a[0], a[1], a[2], a[3], a[4], a[5]);
    for (int j = 0; j < 6; ++j) {
      double b[6];
      std::copy(a, a + 6, b);
      b[j] += u(rng);
      EXPECT_GE(kernel_time(b[0], b[1], b[2], b[3], b[4], b[5]), base);
    }
  }
}

TEST(TileTimes, Examples) {
  const auto t = tile_times({128, 128, 64, 4096, 2, 989e12, 450e9});
  EXPECT_NEAR(t.t_comp_tile, 135.7, 0.05);
  EXPECT_NEAR(t.t_comm_tile, 72.8, 0.05);
  EXPECT_EQ(tile_times({128, 128, 64, 0, 2, 989e12, 450e9}).t_comp_tile, 0.0);
  EXPECT_THROW(tile_times({128, 128, 64, 64, 2, 0, 450e9}), InvalidArgument);
  EXPECT_THROW(tile_times({128, 128, 64, 64, 2, 989e12, 0}), InvalidArgument);
}

TEST(HidingThreshold, Examples) {
  EXPECT_NEAR(hiding_threshold(2, 989e12, 450e9), 2197.8, 0.1);
  EXPECT_DOUBLE_EQ(hiding_threshold(1, 989e12, 450e9), hiding_threshold(2, 989e12, 450e9) / 2);
  EXPECT_THROW(hiding_threshold(2, 989e12, 0), InvalidArgument);
  const auto b200 = hw::builtin_profile("b200-8");
  EXPECT_DOUBLE_EQ(hiding_threshold(b200), 2 * b200.tensor_throughput / (2 * b200.link_bandwidth));
}

TEST(KIterations, CeilingOnRemainder) {
  EXPECT_EQ(k_iterations(4096, 64), 64);
  EXPECT_EQ(k_iterations(4097, 64), 65);
  EXPECT_EQ(k_iterations(0, 64), 0);
  EXPECT_THROW(k_iterations(64, 0), InvalidArgument);
}

TEST(AllReduceFactor, FactorN) {
  for (int n = 2; n <= 16; ++n) {
    EXPECT_EQ(allreduce_comm_factor(AllReduceStrategy::IntraSmAtomicWrites, n), n);
    EXPECT_EQ(allreduce_comm_factor(AllReduceStrategy::InterSmInFabric, n), 1);
  }
  EXPECT_THROW(allreduce_comm_factor(AllReduceStrategy::InterSmInFabric, 1), InvalidArgument);
}

wl::WorkloadSpec gemm_rs(std::int64_t k) {
  wl::WorkloadSpec w;
  w.kind = wl::Kind::GemmRs;
  w.dims.m = w.dims.n = 32768;
  w.dims.k = k;
  return w;
}

TEST(Predict, GemmRsTrend) {
  const auto p = hw::builtin_profile("h100-sxm-8");
  EXPECT_GE(predict(gemm_rs(512), p).comm_ratio, 0.50);
  EXPECT_LE(predict(gemm_rs(4096), p).comm_ratio, 0.02);
}

TEST(Predict, ReportInvariants) {
  const auto p = hw::builtin_profile("h100-sxm-8");
  for (const auto& sc : wl::builtin_scenarios()) {
    const auto r = predict(sc.spec, p);
    EXPECT_GE(r.t_total, std::max({r.t_comp, r.t_mem, r.t_comm})) << sc.name;
    EXPECT_GE(r.comm_ratio, 0.0) << sc.name;
    EXPECT_LT(r.comm_ratio, 1.0) << sc.name;
    EXPECT_GE(r.t_non_overlap, 0.0) << sc.name;
  }
}

TEST(Predict, NoCommunicationMeansZeroRatio) {
  const auto p = hw::builtin_profile("h100-sxm-8");
  auto w = wl::reduced_spec(wl::Kind::GemmRs, 8, 0);
  w.functional = false;
  const auto inst = wl::build(w, p);
  const auto stripped = lcsc::strip_communication(inst.kernel);
  const auto a = analyze_kernel(stripped, p);
  EXPECT_EQ(a.port_ns, 0.0);
  EXPECT_EQ(a.issue_ns, 0.0);
}

}  // namespace
}  // namespace ovsim::cost
