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

#include "ovsim/des.hpp"
#include "ovsim/error.hpp"

namespace ovsim::des {

// Flows sharing a port set, weight and cap always receive the same rate, so
// they are grouped into classes. A class keeps one service counter; a flow
// finishes when the counter reaches the value it had at admission plus the
// flow's size.

FlowNetwork::FlowNetwork(std::vector<double> capacities) : capacity_(std::move(capacities)) {
  for (double c : capacity_) {
    if (!(c > 0)) throw InvalidArgument("port capacity must be positive");
  }
}

std::int64_t FlowNetwork::add(const FlowDesc& flow) {
  if (flow.ports.empty()) throw InvalidArgument("a flow must cross at least one port");
  if (!(flow.bytes > 0)) throw InvalidArgument("a flow must carry bytes");
  if (!(flow.coef > 0) || !(flow.cap > 0)) throw InvalidArgument("flow weight and cap must be positive");
  Key key{flow.ports, flow.coef, flow.cap};
  std::sort(key.ports.begin(), key.ports.end());
  key.ports.erase(std::unique(key.ports.begin(), key.ports.end()), key.ports.end());
  for (int p : key.ports) {
    if (p < 0 || p >= static_cast<int>(capacity_.size())) throw InvalidArgument("flow port out of range");
  }
  auto [it, inserted] = class_index_.try_emplace(key, static_cast<int>(classes_.size()));
  if (inserted) classes_.push_back(Class{key, 0.0, 0.0, {}, false});
  int ci = it->second;
  Class& c = classes_[ci];
  if (c.heap.empty()) {
    c.served = 0.0;
    live_.push_back(ci);
  }
  std::int64_t id = next_id_++;
  c.heap.emplace(c.served + flow.bytes, id);
  flow_class_[id] = ci;
  ++active_;
  requested_ += flow.bytes;
  dirty_ = true;
  next_class_ = -1;
  return id;
}

void FlowNetwork::recompute() {
  dirty_ = false;
  const std::size_t np = capacity_.size();
  std::vector<double> left = capacity_;
  std::vector<double> weight(np);
  for (int ci : live_) classes_[ci].frozen = false;
  std::size_t unfrozen = live_.size();
  while (unfrozen > 0) {
    std::fill(weight.begin(), weight.end(), 0.0);
    double level = kInf;
    for (int ci : live_) {
      const Class& c = classes_[ci];
      if (c.frozen) continue;
      double w = static_cast<double>(c.heap.size()) * c.key.coef;
      for (int p : c.key.ports) weight[p] += w;
      level = std::min(level, c.key.cap);
    }
    for (std::size_t p = 0; p < np; ++p) {
      if (weight[p] > 0) level = std::min(level, std::max(0.0, left[p]) / weight[p]);
    }
    const double edge = level * (1 + 1e-12);
    std::vector<int> fixed;
    for (int ci : live_) {
      Class& c = classes_[ci];
      if (c.frozen) continue;
      bool hit = c.key.cap <= edge;
      for (int p : c.key.ports) hit = hit || std::max(0.0, left[p]) / weight[p] <= edge;
      if (hit) {
        c.rate = std::min(level, c.key.cap);
        c.frozen = true;
        fixed.push_back(ci);
      }
    }
    for (int ci : fixed) {
      const Class& c = classes_[ci];
      double use = static_cast<double>(c.heap.size()) * c.key.coef * c.rate;
      for (int p : c.key.ports) left[p] -= use;
    }
    unfrozen -= fixed.size();
  }
  if (observer_) observer_(now_, port_loads());
}

double FlowNetwork::next_completion() {
  if (dirty_) recompute();
  next_class_ = -1;
  next_time_ = kInf;
  for (int ci : live_) {
    const Class& c = classes_[ci];
    if (c.rate <= 0) continue;
    double t = now_ + std::max(0.0, c.heap.top().first - c.served) / c.rate;
    if (t < next_time_) {
      next_time_ = t;
      next_class_ = ci;
    }
  }
  return next_time_;
}

void FlowNetwork::advance(double to) {
  if (to < now_) throw InvalidArgument("flow network clock cannot go backwards");
  if (dirty_) recompute();
  const double dt = to - now_;
  const int forced = (next_class_ >= 0 && to >= next_time_) ? next_class_ : -1;
  now_ = to;
  next_class_ = -1;
  if (dt > 0) {
    for (int ci : live_) {
      Class& c = classes_[ci];
      c.served += c.rate * dt;
      delivered_ += c.rate * dt * static_cast<double>(c.heap.size());
    }
  }
  bool removed = false;
  for (std::size_t i = 0; i < live_.size();) {
    int ci = live_[i];
    Class& c = classes_[ci];
    bool force = ci == forced;
    while (!c.heap.empty()) {
      auto [target, id] = c.heap.top();
      if (!force && target - c.served > 1e-9 * target + 1e-6) break;
      force = false;
      // Book the rounding residual so delivered bytes match requested ones.
      delivered_ += target - c.served;
      c.heap.pop();
      flow_class_.erase(id);
      done_.push_back(id);
      --active_;
      removed = true;
    }
    if (c.heap.empty()) {
      live_[i] = live_.back();
      live_.pop_back();
    } else {
      ++i;
    }
  }
  if (removed) dirty_ = true;
}

std::vector<std::int64_t> FlowNetwork::take_completed() {
  std::vector<std::int64_t> out;
  out.swap(done_);
  std::sort(out.begin(), out.end());
  return out;
}

double FlowNetwork::flow_rate(std::int64_t id) {
  if (dirty_) recompute();
  auto it = flow_class_.find(id);
  return it == flow_class_.end() ? 0.0 : classes_[it->second].rate;
}

std::vector<double> FlowNetwork::port_loads() {
  std::vector<double> load(capacity_.size(), 0.0);
  for (int ci : live_) {
    const Class& c = classes_[ci];
    double use = static_cast<double>(c.heap.size()) * c.key.coef * c.rate;
    for (int p : c.key.ports) load[p] += use;
  }
  return load;
}

}  // namespace ovsim::des
