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

#include <algorithm>
#include <random>

#include "ovsim/primitives.hpp"

namespace ovsim::prim {
namespace {

using des::Co;
using des::Engine;
using mem::TileCoord;

const hw::HardwareProfile& h100() {
  static const hw::HardwareProfile p = hw::builtin_profile("h100-sxm-8");
  return p;
}

des::EngineOptions seeded(std::uint64_t seed) {
  des::EngineOptions o;
  o.seed = seed;
  return o;
}

mem::Pgl multicast_pgl(int n, std::int64_t rows = 32, std::int64_t cols = 32) {
  mem::Pgl p = mem::allocate_pgl({1, 1, rows, cols}, 2, n, true, "x");
  mem::enable_multicast(p);
  return p;
}

mem::BarrierField multicast_barrier(int n, std::int64_t cols = 4) {
  mem::BarrierField b = mem::allocate_barrier({1, 1, 1, cols}, n, "bar");
  mem::enable_multicast(b);
  return b;
}

Co store(Engine* eng, Issuer who, mem::Pgl* dst, mem::SharedTile tile, TileCoord c, DeviceSet targets, bool add) {
  des::Token t = add ? store_add_async(*eng, who, *dst, tile, c, targets) : store_async(*eng, who, *dst, tile, c, targets);
  co_await eng->wait(t);
}

Co run_reduce(Engine* eng, Issuer who, mem::Pgl* dst, mem::Pgl* src, ReduceOp op) {
  co_await reduce(*eng, who, *dst, {0, 0, 0, 0}, *src, {0, 0, 0, 0}, op, 16, 16);
}

Co run_all_reduce(Engine* eng, Issuer who, mem::Pgl* p, ReduceOp op) {
  co_await all_reduce(*eng, who, *p, {0, 0, 0, 0}, op, 16, 16);
}

Co run_wait(Engine* eng, Issuer who, mem::BarrierField* b, TileCoord c, std::int64_t expected, double* at) {
  co_await wait(*eng, who, *b, c, who.device, expected);
  *at = eng->now();
}

Co run_signals(Engine* eng, Issuer who, mem::BarrierField* b, TileCoord c, int dst, int count, double gap) {
  for (int i = 0; i < count; ++i) {
    co_await eng->sleep(gap);
    signal(*eng, who, *b, c, dst, 1);
  }
}

Co run_barrier(Engine* eng, Issuer who, mem::BarrierField* b, TileCoord c, double enter, double* entered,
               double* left) {
  co_await eng->sleep(enter);
  *entered = eng->now();
  co_await barrier(*eng, who, *b, c, who.device);
  *left = eng->now();
}

std::vector<double> tile_values(const mem::Pgl& p, int dev) { return p.read(dev, {0, 0, 0, 0, 16, 16}); }

TEST(StoreAsync, BroadcastConstant) {
  Engine eng(h100());
  mem::Pgl x = multicast_pgl(8);
  eng.spawn("sm", store(&eng, {0, 0, 1}, &x, mem::make_tile(16, 16, 2, 7.0), {0, 0, 0, 0}, all_devices(8), false));
  eng.run_until_idle();
  for (int d = 0; d < 8; ++d) EXPECT_EQ(tile_values(x, d), std::vector<double>(256, 7.0)) << d;
}

TEST(StoreAsync, SingleTargetTouchesOnlyIt) {
  Engine eng(h100());
  mem::Pgl x = mem::allocate_pgl({1, 1, 32, 32}, 2, 8);
  std::vector<std::vector<double>> before;
  for (int d = 0; d < 8; ++d) before.push_back(x.read(d, {0, 0, 0, 0, 32, 32}));
  eng.spawn("sm", store(&eng, {0, 0, 1}, &x, mem::make_tile(16, 16, 2, 3.0), {0, 0, 1, 1}, only(2), false));
  eng.run_until_idle();
  for (int d = 0; d < 8; ++d) {
    if (d == 2) {
      EXPECT_EQ(x.read(d, {0, 0, 16, 16, 16, 16}), std::vector<double>(256, 3.0));
    } else {
      EXPECT_EQ(x.read(d, {0, 0, 0, 0, 32, 32}), before[d]) << d;
    }
  }
}

TEST(StoreAsync, BroadcastNeedsAlias) {
  Engine eng(h100());
  mem::Pgl x = mem::allocate_pgl({1, 1, 16, 16}, 2, 8);
  eng.spawn("sm", store(&eng, {0, 0, 1}, &x, mem::make_tile(16, 16, 2, 1.0), {0, 0, 0, 0}, all_devices(8), false));
  EXPECT_THROW(eng.run_until_idle(), ProtocolViolation);
}

TEST(StoreAsync, LargestSharedTileAccepted) {
  Engine eng(h100());
  mem::Pgl x = mem::allocate_pgl({1, 1, 256, 256}, 2, 2);
  eng.spawn("sm", store(&eng, {0, 0, 1}, &x, mem::make_tile(256, 256, 2, 1.0), {0, 0, 0, 0}, only(1), false));
  EXPECT_NO_THROW(eng.run_until_idle());
  EXPECT_EQ(x.at(1, 0, 0, 255, 255), 1.0);
}

Co store_then_poll(Engine* eng, mem::Pgl* dst, double* side_work_at, double* done_at) {
  des::Token t = store_async(*eng, {0, 0, 1}, *dst, mem::make_tile(64, 64, 2, 1.0), {0, 0, 0, 0}, only(1));
  co_await eng->sleep(1.0);
  *side_work_at = eng->now();
  co_await eng->wait(t);
  *done_at = eng->now();
}

TEST(StoreAsync, IssuerKeepsWorking) {
  Engine eng(h100());
  mem::Pgl x = mem::allocate_pgl({1, 1, 64, 64}, 2, 2);
  double side = -1, done = -1;
  eng.spawn("sm", store_then_poll(&eng, &x, &side, &done));
  eng.run_until_idle();
  EXPECT_LT(side, done);
}

TEST(StoreAddAsync, ConcurrentAddsCommute) {
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    Engine eng(h100(), seeded(seed));
    mem::Pgl x = mem::allocate_pgl({1, 1, 16, 16}, 2, 4);
    x.fill(3, 10.0);
    eng.spawn("a", store(&eng, {0, 0, 1}, &x, mem::make_tile(16, 16, 2, 1.0), {0, 0, 0, 0}, only(3), true));
    eng.spawn("b", store(&eng, {1, 0, 1}, &x, mem::make_tile(16, 16, 2, 2.0), {0, 0, 0, 0}, only(3), true));
    eng.run_until_idle();
    EXPECT_EQ(tile_values(x, 3), std::vector<double>(256, 13.0));
  }
}

TEST(StoreAddAsync, ZeroTileIsIdentity) {
  Engine eng(h100());
  mem::Pgl x = mem::allocate_pgl({1, 1, 16, 16}, 2, 2);
  x.fill(1, 4.0);
  eng.spawn("a", store(&eng, {0, 0, 1}, &x, mem::make_tile(16, 16, 2, 0.0), {0, 0, 0, 0}, only(1), true));
  eng.run_until_idle();
  EXPECT_EQ(tile_values(x, 1), std::vector<double>(256, 4.0));
}

TEST(StoreAddAsync, EveryDeviceAddsItsIndexEverywhere) {
  Engine eng(h100());
  mem::Pgl x = multicast_pgl(8);
  for (int d = 0; d < 8; ++d) {
    eng.spawn("d" + std::to_string(d), store(&eng, {d, 0, 1}, &x, mem::make_tile(16, 16, 2, d), {0, 0, 0, 0},
                                             all_devices(8), true));
  }
  eng.run_until_idle();
  double want = 0;
  for (int d = 0; d < 8; ++d) want += d;
  for (int d = 0; d < 8; ++d) EXPECT_EQ(tile_values(x, d), std::vector<double>(256, want));
}

TEST(Reduce, FoldsAcrossDevices) {
  std::mt19937_64 rng(9);
  for (ReduceOp op : {ReduceOp::Sum, ReduceOp::Max, ReduceOp::Min}) {
    Engine eng(h100());
    mem::Pgl src = multicast_pgl(8, 16, 16);
    mem::Pgl dst = mem::allocate_pgl({1, 1, 16, 16}, 2, 8);
    std::vector<double> want(256);
    for (int d = 0; d < 8; ++d) {
      std::vector<double> v(256);
      for (double& e : v) e = static_cast<double>(static_cast<int>(rng() % 201) - 100);
      src.write(d, {0, 0, 0, 0, 16, 16}, v);
      for (int i = 0; i < 256; ++i) want[i] = d == 0 ? v[i] : fold(op, want[i], v[i]);
    }
    eng.spawn("sm", run_reduce(&eng, {5, 0, kWarpWidth}, &dst, &src, op));
    eng.run_until_idle();
    EXPECT_EQ(tile_values(dst, 5), want) << to_string(op);
  }
}

TEST(Reduce, NeedsWarpAndAlias) {
  {
    Engine eng(h100());
    mem::Pgl src = multicast_pgl(8, 16, 16);
    mem::Pgl dst = mem::allocate_pgl({1, 1, 16, 16}, 2, 8);
    eng.spawn("sm", run_reduce(&eng, {0, 0, 1}, &dst, &src, ReduceOp::Sum));
    EXPECT_THROW(eng.run_until_idle(), InvalidArgument);
  }
  Engine eng(h100());
  mem::Pgl src = mem::allocate_pgl({1, 1, 16, 16}, 2, 8);
  mem::Pgl dst = mem::allocate_pgl({1, 1, 16, 16}, 2, 8);
  eng.spawn("sm", run_reduce(&eng, {0, 0, kWarpWidth}, &dst, &src, ReduceOp::Sum));
  EXPECT_THROW(eng.run_until_idle(), ProtocolViolation);
}

TEST(AllReduce, DeviceIndexSum) {
  Engine eng(h100());
  mem::Pgl x = multicast_pgl(8, 16, 16);
  for (int d = 0; d < 8; ++d) x.fill(d, d);
  eng.spawn("sm", run_all_reduce(&eng, {3, 0, kWarpWidth}, &x, ReduceOp::Sum));
  eng.run_until_idle();
  for (int d = 0; d < 8; ++d) EXPECT_EQ(tile_values(x, d), std::vector<double>(256, 28.0));
}

TEST(AllReduce, MaxIsIdempotentOnEqualBuffers) {
  Engine eng(h100());
  mem::Pgl x = multicast_pgl(4, 16, 16);
  for (int d = 0; d < 4; ++d) x.fill(d, 2.5);
  eng.spawn("sm", run_all_reduce(&eng, {0, 0, kWarpWidth}, &x, ReduceOp::Max));
  eng.run_until_idle();
  for (int d = 0; d < 4; ++d) EXPECT_EQ(tile_values(x, d), std::vector<double>(256, 2.5));
}

TEST(AllReduce, ChargesOneTileEachWay) {
  Engine eng(h100());
  mem::Pgl x = multicast_pgl(8, 16, 16);
  eng.spawn("sm", run_all_reduce(&eng, {3, 0, kWarpWidth}, &x, ReduceOp::Sum));
  eng.run_until_idle();
  double pulled = 0, pushed = 0;
  for (const auto& r : eng.log().records()) {
    if (r.kind == des::EventKind::LdReduceStart) pulled += r.bytes;
    if (r.kind == des::EventKind::XferStart) pushed += r.bytes;
  }
  EXPECT_EQ(pulled, 16 * 16 * 2);
  EXPECT_EQ(pushed, 16 * 16 * 2);
}

Co signal_once(Engine* eng, Issuer who, mem::BarrierField* b, int dst, std::int64_t val) {
  signal(*eng, who, *b, {0, 0, 0, 0}, dst, val);
  co_return;
}

Co signal_all_once(Engine* eng, Issuer who, mem::BarrierField* b) {
  signal_all(*eng, who, *b, {0, 0, 0, 0}, 1);
  co_return;
}

TEST(Signal, AddsToCounter) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Engine eng(h100(), seeded(seed));
    mem::BarrierField b = mem::allocate_barrier({1, 1, 1, 1}, 4);
    eng.spawn("a", signal_once(&eng, {0, 0, 1}, &b, 2, 1));
    eng.spawn("b", signal_once(&eng, {1, 0, 1}, &b, 2, 1));
    eng.spawn("c", signal_once(&eng, {3, 0, 1}, &b, 1, 3));
    eng.spawn("d", signal_once(&eng, {3, 0, 1}, &b, 0, 0));
    eng.run_until_idle();
    EXPECT_EQ(b.at(2, 0, 0, 0, 0), 2);
    EXPECT_EQ(b.at(1, 0, 0, 0, 0), 3);
    EXPECT_EQ(b.at(0, 0, 0, 0, 0), 0);
  }
}

TEST(SignalAll, MatchesSequentialSignalsWithFewerMessages) {
  Engine one(h100());
  mem::BarrierField a = multicast_barrier(8, 1);
  one.spawn("all", signal_all_once(&one, {0, 0, 1}, &a));
  one.run_until_idle();

  Engine many(h100());
  mem::BarrierField b = mem::allocate_barrier({1, 1, 1, 1}, 8);
  for (int d = 0; d < 8; ++d) many.spawn("s" + std::to_string(d), signal_once(&many, {0, 0, 1}, &b, d, 1));
  many.run_until_idle();

  auto signals = [](const Engine& e) {
    return std::count_if(e.log().records().begin(), e.log().records().end(),
                         [](const des::LogRecord& r) { return r.kind == des::EventKind::Signal; });
  };
  for (int d = 0; d < 8; ++d) {
    EXPECT_EQ(a.at(d, 0, 0, 0, 0), 1);
    EXPECT_EQ(a.at(d, 0, 0, 0, 0), b.at(d, 0, 0, 0, 0));
  }
  EXPECT_LT(signals(one), signals(many));
}

TEST(Wait, ZeroReturnsImmediately) {
  Engine eng(h100());
  mem::BarrierField b = mem::allocate_barrier({1, 1, 1, 1}, 2);
  double at = -1;
  eng.spawn("w", run_wait(&eng, {0, 0, 1}, &b, {0, 0, 0, 0}, 0, &at));
  eng.run_until_idle();
  EXPECT_EQ(at, 0.0);
}

TEST(Wait, UnblocksOnEighthSignal) {
  Engine eng(h100());
  mem::BarrierField b = mem::allocate_barrier({1, 1, 1, 1}, 8);
  double at = -1;
  eng.spawn("w", run_wait(&eng, {0, 0, 1}, &b, {0, 0, 0, 0}, 8, &at));
  eng.spawn("s", run_signals(&eng, {1, 0, 1}, &b, {0, 0, 0, 0}, 0, 8, 100.0));
  eng.run_until_idle();
  EXPECT_DOUBLE_EQ(at, 800.0 + des::sync_cost(des::SyncKind::InterDevice, h100()));
}

TEST(Wait, StarvationIsReportedByName) {
  Engine eng(h100());
  mem::BarrierField b = mem::allocate_barrier({1, 1, 1, 1}, 2);
  double at = -1;
  eng.spawn("starved-waiter", run_wait(&eng, {0, 0, 1}, &b, {0, 0, 0, 0}, 1, &at));
  try {
    eng.run_until_idle();
    FAIL() << "no deadlock reported";
  } catch (const DeadlockError& e) {
    EXPECT_NE(std::string(e.what()).find("starved-waiter"), std::string::npos);
  }
}

TEST(Barrier, NoOneLeavesEarly) {
  Engine eng(h100());
  mem::BarrierField b = multicast_barrier(8);
  std::vector<double> in(8), out(8);
  for (int d = 0; d < 8; ++d) {
    eng.spawn("d" + std::to_string(d), run_barrier(&eng, {d, 0, 1}, &b, {0, 0, 0, 0}, 100.0 * d, &in[d], &out[d]));
  }
  eng.run_until_idle();
  EXPECT_GE(*std::min_element(out.begin(), out.end()), *std::max_element(in.begin(), in.end()));
}

TEST(Barrier, MissingDeviceDeadlocks) {
  Engine eng(h100());
  mem::BarrierField b = multicast_barrier(8);
  std::vector<double> in(8), out(8);
  for (int d = 0; d < 7; ++d) {
    eng.spawn("d" + std::to_string(d), run_barrier(&eng, {d, 0, 1}, &b, {0, 0, 0, 0}, 0.0, &in[d], &out[d]));
  }
  EXPECT_THROW(eng.run_until_idle(), DeadlockError);
}

Co two_barriers(Engine* eng, Issuer who, mem::BarrierField* b) {
  co_await barrier(*eng, who, *b, {0, 0, 0, 0}, who.device);
  co_await barrier(*eng, who, *b, {0, 0, 0, 1}, who.device);
}

TEST(Barrier, ConsecutiveCoordsAreIndependent) {
  hw::HardwareProfile four = h100();
  four.num_devices = 4;
  Engine eng(four);
  mem::BarrierField b = multicast_barrier(4);
  for (int d = 0; d < 4; ++d) eng.spawn("d" + std::to_string(d), two_barriers(&eng, {d, 0, 1}, &b));
  eng.run_until_idle();
  for (int d = 0; d < 4; ++d) {
    EXPECT_EQ(b.at(d, 0, 0, 0, 0), 4);
    EXPECT_EQ(b.at(d, 0, 0, 0, 1), 4);
    EXPECT_EQ(b.at(d, 0, 0, 0, 2), 0);
  }
}

}  // namespace
}  // namespace ovsim::prim
