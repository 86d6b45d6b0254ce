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

// Explicit-state exploration of the barrier protocol (signal_all + wait)
// over every interleaving of device steps and per-device counter deliveries.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ovsim::check {

struct BarrierModel {
  int num_devices = 2;
  int rounds = 1;
  /// Rounds each device enters before stopping; empty means all rounds.
  std::vector<int> arrivals;
  /// Count each wait needs; 0 means num_devices.
  int wait_threshold = 0;
  /// One counter per round (true) or a single shared counter (false).
  bool distinct_coords = true;
};

struct BarrierCheckResult {
  std::int64_t states = 0;
  std::int64_t terminal_states = 0;
  std::int64_t deadlock_states = 0;
  std::int64_t safety_violations = 0;
  std::string first_violation;
  std::string first_deadlock;

  bool deadlock_found() const { return deadlock_states > 0; }
};

/// True if some round is entered by some but not all devices.
bool incomplete_arrival(const BarrierModel& m);

BarrierCheckResult explore_barrier(const BarrierModel& m);

/// Every arrival vector for the given device count and rounds.
std::vector<std::vector<int>> arrival_patterns(int num_devices, int rounds);

}  // namespace ovsim::check
