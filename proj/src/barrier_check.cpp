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

#include "ovsim/barrier_check.hpp"

#include <unordered_set>

#include "ovsim/error.hpp"

namespace ovsim::check {

// State layout (one byte each): pc per device, then counter and in-flight
// delivery count per (coord, device). A device's pc is 2r before it signals
// round r, 2r+1 while it waits in round r and 2R once it has left the last
// round.

namespace {

struct Layout {
  int n;
  int rounds;
  int coords;
  int thr;
  bool distinct;
  std::vector<int> arrivals;

  int coord(int r) const { return distinct ? r : 0; }
  std::size_t counter(int c, int d) const { return n + 2 * (c * n + d); }
  std::size_t pending(int c, int d) const { return counter(c, d) + 1; }
  std::size_t size() const { return n + 2 * coords * n; }
};

std::string describe(const Layout& L, const std::string& s) {
  std::string out = "pc=[";
  for (int d = 0; d < L.n; ++d) out += (d ? "," : "") + std::to_string(static_cast<int>(s[d]));
  out += "] counters=[";
  for (int c = 0; c < L.coords; ++c) {
    for (int d = 0; d < L.n; ++d) {
      out += ((c || d) ? "," : "") + std::to_string(static_cast<int>(s[L.counter(c, d)]));
    }
  }
  return out + "]";
}

}  // namespace

bool incomplete_arrival(const BarrierModel& m) {
  for (int r = 0; r < m.rounds; ++r) {
    int in = 0;
    for (int d = 0; d < m.num_devices; ++d) {
      int a = m.arrivals.empty() ? m.rounds : m.arrivals[d];
      if (a > r) ++in;
    }
    if (in > 0 && in < m.num_devices) return true;
  }
  return false;
}

BarrierCheckResult explore_barrier(const BarrierModel& m) {
  if (m.num_devices < 2 || m.num_devices > 8) throw InvalidArgument("barrier model supports 2..8 devices");
  if (m.rounds < 1 || m.rounds > 8) throw InvalidArgument("barrier model supports 1..8 rounds");
  if (!m.arrivals.empty() && static_cast<int>(m.arrivals.size()) != m.num_devices) {
    throw InvalidArgument("arrival list must name every device");
  }
  Layout L{m.num_devices, m.rounds, m.distinct_coords ? m.rounds : 1,
           m.wait_threshold > 0 ? m.wait_threshold : m.num_devices, m.distinct_coords, m.arrivals};
  if (L.arrivals.empty()) L.arrivals.assign(L.n, L.rounds);
  for (int a : L.arrivals) {
    if (a < 0 || a > L.rounds) throw InvalidArgument("arrival count out of range");
  }

  BarrierCheckResult res;
  std::unordered_set<std::string> seen;
  std::vector<std::string> stack;
  std::string init(L.size(), '\0');
  seen.insert(init);
  stack.push_back(init);

  auto visit = [&](std::string next) {
    if (seen.insert(next).second) stack.push_back(std::move(next));
  };

  while (!stack.empty()) {
    std::string s = std::move(stack.back());
    stack.pop_back();
    ++res.states;
    bool moved = false;
    bool waiting = false;
    for (int d = 0; d < L.n; ++d) {
      const int pc = s[d];
      const int r = pc / 2;
      if (pc % 2 == 0) {
        if (r < L.arrivals[d]) {
          std::string t = s;
          for (int j = 0; j < L.n; ++j) ++t[L.pending(L.coord(r), j)];
          t[d] = static_cast<char>(pc + 1);
          visit(std::move(t));
          moved = true;
        }
        continue;
      }
      waiting = true;
      if (s[L.counter(L.coord(r), d)] < L.thr) continue;
      int signaled = 0;
      for (int j = 0; j < L.n; ++j) {
        if (s[j] >= 2 * r + 1) ++signaled;
      }
      if (signaled < L.n) {
        if (res.safety_violations++ == 0) {
          res.first_violation = "device " + std::to_string(d) + " left round " + std::to_string(r) + " after " +
                                std::to_string(signaled) + " of " + std::to_string(L.n) + " arrivals: " +
                                describe(L, s);
        }
      }
      std::string t = s;
      t[d] = static_cast<char>(pc + 1);
      visit(std::move(t));
      moved = true;
    }
    for (int c = 0; c < L.coords; ++c) {
      for (int j = 0; j < L.n; ++j) {
        if (s[L.pending(c, j)] == 0) continue;
        std::string t = s;
        --t[L.pending(c, j)];
        ++t[L.counter(c, j)];
        visit(std::move(t));
        moved = true;
      }
    }
    if (!moved) {
      ++res.terminal_states;
      if (waiting && res.deadlock_states++ == 0) res.first_deadlock = describe(L, s);
    }
  }
  return res;
}

std::vector<std::vector<int>> arrival_patterns(int num_devices, int rounds) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(num_devices, 0);
  for (;;) {
    out.push_back(cur);
    int d = 0;
    while (d < num_devices && cur[d] == rounds) cur[d++] = 0;
    if (d == num_devices) break;
    ++cur[d];
  }
  return out;
}

}  // namespace ovsim::check
