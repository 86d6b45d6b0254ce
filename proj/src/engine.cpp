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

#include "ovsim/engine.hpp"

#include <algorithm>

namespace ovsim::des {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t device_mask(const std::vector<int>& devs) {
  std::uint64_t m = 0;
  for (int d : devs) m |= std::uint64_t{1} << d;
  return m;
}

}  // namespace

Engine::Engine(const hw::HardwareProfile& profile, EngineOptions options)
    : profile_(profile),
      options_(options),
      net_(std::vector<double>(2 * static_cast<std::size_t>(profile.num_devices), profile.link_bandwidth * 1e-9)),
      log_(options.record_log) {
  profile_.validate();
  stats_.port_charged_bytes.assign(2 * profile.num_devices, 0.0);
  stats_.port_bytes.assign(2 * profile.num_devices, 0.0);
  if (options_.record_port_rates) {
    net_.set_rate_observer([this](double t, const std::vector<double>& loads) {
      const int n = profile_.num_devices;
      for (int p = 0; p < 2 * n; ++p) {
        LogRecord r;
        r.time_ns = t;
        r.kind = EventKind::PortRate;
        r.src = p % n;
        r.sm = p < n ? 0 : 1;
        r.bytes = loads[p] * 1e9;
        log_.add(r);
      }
    });
  }
}

Engine::~Engine() {
  // Drop pending resumptions before the frames they point into.
  while (!queue_.empty()) queue_.pop();
}

void Engine::push_event(Event e) {
  e.seq = seq_++;
  e.key = splitmix64(options_.seed * 0x100000001b3ULL ^ e.seq);
  queue_.push(std::move(e));
}

void Engine::schedule_at(double t, std::function<void()> fn) {
  if (t < now_) throw InvalidArgument("cannot schedule an event in the past");
  push_event(Event{t, 0, 0, -1, {}, std::move(fn)});
}

void Engine::resume_at(double t, int actor, std::coroutine_handle<> h) {
  if (t < now_) throw InvalidArgument("cannot resume an actor in the past");
  push_event(Event{t, 0, 0, actor, h, {}});
}

int Engine::spawn(std::string name, Co co, double start_at) {
  int id = static_cast<int>(actors_.size());
  auto h = co.handle();
  actors_.push_back(ActorInfo{std::move(name), std::move(co)});
  resume_at(start_at < 0 ? now_ : start_at, id, h);
  return id;
}

void Engine::block(const char* what, const std::string* detail) {
  if (current_ < 0) return;
  actors_[current_].blocked_on = what;
  actors_[current_].blocked_detail = detail;
}

void Engine::dispatch(Event& e) {
  if (!e.handle) {
    e.fn();
    return;
  }
  current_ = e.actor;
  actors_[e.actor].blocked_on = nullptr;
  actors_[e.actor].blocked_detail = nullptr;
  e.handle.resume();
  current_ = -1;
  ActorInfo& a = actors_[e.actor];
  if (!a.finished && a.root.handle().done()) {
    a.finished = true;
    if (a.root.handle().promise().error) std::rethrow_exception(a.root.handle().promise().error);
  }
}

double Engine::run_until_idle() {
  for (;;) {
    double tq = queue_.empty() ? kInf : queue_.top().time;
    double tf = net_.next_completion();
    if (tq == kInf && tf == kInf) break;
    if (tf <= tq) {
      net_.advance(tf);
      now_ = std::max(now_, tf);
      for (std::int64_t id : net_.take_completed()) on_flow_done(id);
    } else {
      Event e = std::move(const_cast<Event&>(queue_.top()));
      queue_.pop();
      net_.advance(e.time);
      now_ = e.time;
      dispatch(e);
    }
  }
  std::string blocked;
  for (const auto& a : actors_) {
    if (a.finished) continue;
    if (!blocked.empty()) blocked += "; ";
    blocked += a.name + " waiting on " + (a.blocked_on ? a.blocked_on : "nothing");
    if (a.blocked_detail) blocked += " '" + *a.blocked_detail + "'";
  }
  if (!blocked.empty()) throw DeadlockError("deadlock at t=" + std::to_string(now_) + " ns: " + blocked);
  return now_;
}

void Engine::complete(const Token& t) {
  if (t->done) return;
  t->done = true;
  t->time = now_;
  for (const Waiter& w : t->waiters) resume_at(now_, w.actor, w.handle);
  t->waiters.clear();
}

Token Engine::transfer(const TransferSpec& spec, std::function<void()> on_arrival) {
  const auto& m = profile_.mechanism(spec.mech);
  if (!hw::supports(m, spec.func)) {
    throw CapabilityError(std::string(hw::to_string(spec.mech)) + " does not provide " +
                          std::string(hw::to_string(spec.func)));
  }
  const int n = profile_.num_devices;
  auto in_range = [n](int d) { return d >= 0 && d < n; };
  if (!in_range(spec.issuer_device) || !std::all_of(spec.egress.begin(), spec.egress.end(), in_range) ||
      !std::all_of(spec.ingress.begin(), spec.ingress.end(), in_range)) {
    throw InvalidArgument("transfer names a device out of range");
  }
  if (spec.egress.empty() && spec.ingress.empty()) throw InvalidArgument("transfer crosses no port");

  TransferState st;
  st.spec = spec;
  st.plan = plan_transfer(spec, options_.overheads, profile_);
  TransferSpec shaped = spec;
  shaped.msg_bytes = st.plan.msg_bytes;
  st.coef = flow_wire_coefficient(shaped, profile_);
  st.cap = flow_issue_cap(shaped, profile_);
  st.token = make_token();
  st.on_arrival = std::move(on_arrival);
  Token token = st.token;
  const std::int64_t tid = next_transfer_++;
  ++stats_.transfers;
  if (m.sm_driven() && spec.issuer_sm >= 0) {
    st.sm_key = static_cast<std::int64_t>(spec.issuer_device) * (1 << 20) + spec.issuer_sm;
    SmQueue& q = sm_queues_[st.sm_key];
    transfers_.emplace(tid, std::move(st));
    if (q.busy) {
      q.pending.push_back(tid);
    } else {
      q.busy = true;
      start_transfer(tid);
    }
  } else {
    transfers_.emplace(tid, std::move(st));
    start_transfer(tid);
  }
  return token;
}

void Engine::start_transfer(std::int64_t tid) {
  double delay = transfers_.at(tid).plan.start_delay_ns;
  if (delay > 0) {
    schedule_after(delay, [this, tid] { start_chunk(tid); });
  } else {
    start_chunk(tid);
  }
}

void Engine::start_chunk(std::int64_t tid) {
  double delay = transfers_.at(tid).plan.per_chunk_delay_ns;
  if (delay > 0) {
    schedule_after(delay, [this, tid] { add_chunk_flow(tid); });
  } else {
    add_chunk_flow(tid);
  }
}

void Engine::add_chunk_flow(std::int64_t tid) {
  TransferState& st = transfers_.at(tid);
  const int n = profile_.num_devices;
  FlowDesc desc;
  for (int d : st.spec.egress) desc.ports.push_back(d);
  for (int d : st.spec.ingress) desc.ports.push_back(n + d);
  desc.coef = st.coef;
  desc.cap = st.cap;
  desc.bytes = st.plan.chunk_bytes[st.next_chunk];
  std::int64_t fid = net_.add(desc);
  flow_owner_[fid] = tid;
  for (int d : st.spec.egress) {
    stats_.port_charged_bytes[d] += desc.bytes * desc.coef;
    stats_.port_bytes[d] += desc.bytes;
  }
  for (int d : st.spec.ingress) {
    stats_.port_charged_bytes[n + d] += desc.bytes * desc.coef;
    stats_.port_bytes[n + d] += desc.bytes;
  }
  if (log_.enabled()) {
    LogRecord r;
    r.kind = st.spec.shape == FlowShape::InFabricReduce ? EventKind::LdReduceStart : EventKind::XferStart;
    r.src = st.spec.shape == FlowShape::InFabricReduce || st.spec.egress.empty() ? st.spec.issuer_device
                                                                                 : st.spec.egress.front();
    r.dst_mask = device_mask(st.spec.ingress);
    r.bytes = desc.bytes;
    r.mech = static_cast<int>(st.spec.mech);
    r.flow_id = tid;
    record(r);
  }
}

void Engine::on_flow_done(std::int64_t flow_id) {
  auto owner = flow_owner_.find(flow_id);
  const std::int64_t tid = owner->second;
  flow_owner_.erase(owner);
  TransferState& st = transfers_.at(tid);
  if (++st.next_chunk < st.plan.chunk_bytes.size()) {
    start_chunk(tid);
    return;
  }
  if (st.sm_key >= 0) {
    SmQueue& q = sm_queues_[st.sm_key];
    if (q.pending.empty()) {
      q.busy = false;
    } else {
      std::int64_t next = q.pending.front();
      q.pending.pop_front();
      start_transfer(next);
    }
  }
  schedule_after(profile_.link_latency_ns, [this, tid] {
    auto it = transfers_.find(tid);
    TransferState st = std::move(it->second);
    transfers_.erase(it);
    if (log_.enabled()) {
      LogRecord r;
      r.kind = st.spec.shape == FlowShape::InFabricReduce ? EventKind::LdReduceEnd : EventKind::XferEnd;
      r.src = st.spec.shape == FlowShape::InFabricReduce || st.spec.egress.empty() ? st.spec.issuer_device
                                                                                   : st.spec.egress.front();
      r.dst_mask = device_mask(st.spec.ingress);
      r.bytes = st.spec.bytes;
      r.mech = static_cast<int>(st.spec.mech);
      r.flow_id = tid;
      record(r);
    }
    if (st.on_arrival) st.on_arrival();
    complete(st.token);
  });
}

std::uint64_t Engine::counter_key(const mem::BarrierField& f, int dev, mem::TileCoord c) const {
  auto it = field_ids_.find(&f);
  std::uint64_t fid = it == field_ids_.end() ? field_ids_.size() : it->second;
  const auto& s = f.shape();
  std::uint64_t flat = static_cast<std::uint64_t>(((c.b * s.d + c.d) * s.r + c.r) * s.c + c.c);
  return (fid << 40) + static_cast<std::uint64_t>(dev) * static_cast<std::uint64_t>(s.elements()) + flat;
}

void Engine::park_counter(const CounterAwaiter& a, std::coroutine_handle<> h) {
  field_ids_.try_emplace(a.field, field_ids_.size());
  counter_waiters_[counter_key(*a.field, a.dev, a.coord)].push_back({{current_, h}, a.expected});
  block("barrier counter", &a.field->name());
}

void Engine::add_counter(mem::BarrierField& field, int dev, mem::TileCoord coord, std::int64_t delta) {
  std::int64_t& v = field.at(dev, coord.b, coord.d, coord.r, coord.c);
  v += delta;
  if (!field_ids_.count(&field)) return;
  auto it = counter_waiters_.find(counter_key(field, dev, coord));
  if (it == counter_waiters_.end()) return;
  auto& list = it->second;
  std::size_t keep = 0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (v >= list[i].expected) {
      resume_at(now_, list[i].w.actor, list[i].w.handle);
    } else {
      list[keep++] = list[i];
    }
  }
  list.resize(keep);
  if (list.empty()) counter_waiters_.erase(it);
}

}  // namespace ovsim::des
