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

#include "ovsim/barrier_check.hpp"
#include "ovsim/error.hpp"

namespace ovsim::check {
namespace {

TEST(BarrierCheck, CompleteArrivalsAreSafeAndLive) {
  for (int n = 2; n <= 4; ++n) {
    for (int rounds = 1; rounds <= 3; ++rounds) {
      BarrierModel m;
      m.num_devices = n;
      m.rounds = rounds;
      const auto r = explore_barrier(m);
      EXPECT_GT(r.states, 0);
      EXPECT_GT(r.terminal_states, 0);
      EXPECT_EQ(r.safety_violations, 0) << r.first_violation;
      EXPECT_EQ(r.deadlock_states, 0) << r.first_deadlock;
    }
  }
}

TEST(BarrierCheck, MissingArrivalDeadlocks) {
  BarrierModel m;
  m.num_devices = 3;
  m.rounds = 1;
  m.arrivals = {1, 1, 0};
  ASSERT_TRUE(incomplete_arrival(m));
  const auto r = explore_barrier(m);
  EXPECT_TRUE(r.deadlock_found());
  EXPECT_FALSE(r.first_deadlock.empty());
  EXPECT_EQ(r.safety_violations, 0);
}

TEST(BarrierCheck, EveryPatternDeadlocksIffIncomplete) {
  for (int n = 2; n <= 3; ++n) {
    for (int rounds = 1; rounds <= 2; ++rounds) {
      for (const auto& a : arrival_patterns(n, rounds)) {
        BarrierModel m;
        m.num_devices = n;
        m.rounds = rounds;
        m.arrivals = a;
        const auto r = explore_barrier(m);
        EXPECT_EQ(r.deadlock_found(), incomplete_arrival(m));
        EXPECT_EQ(r.safety_violations, 0);
      }
    }
  }
}

TEST(BarrierCheck, PatternCount) {
  EXPECT_EQ(arrival_patterns(2, 1).size(), 4u);
  EXPECT_EQ(arrival_patterns(3, 2).size(), 27u);
}

TEST(BarrierCheck, LowThresholdLetsDevicesLeaveEarly) {
  BarrierModel m;
  m.num_devices = 3;
  m.rounds = 1;
  m.wait_threshold = 1;
  EXPECT_GT(explore_barrier(m).safety_violations, 0);
}

TEST(BarrierCheck, SharedCounterAcrossRoundsIsUnsafe) {
  BarrierModel m;
  m.num_devices = 2;
  m.rounds = 2;
  m.distinct_coords = false;
  EXPECT_GT(explore_barrier(m).safety_violations, 0);
}

TEST(BarrierCheck, RejectsOutOfRangeModels) {
  BarrierModel m;
  m.num_devices = 1;
  EXPECT_THROW(explore_barrier(m), Error);
  m.num_devices = 2;
  m.arrivals = {1};
  EXPECT_THROW(explore_barrier(m), Error);
}

}  // namespace
}  // namespace ovsim::check
