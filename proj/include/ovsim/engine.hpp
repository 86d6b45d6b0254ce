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

// Discrete-event engine. Simulated actors (SM roles, host threads) are C++
// coroutines resumed by the engine in (time, seeded tie-break, sequence)
// order; data movements are flows in a FlowNetwork.

#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ovsim/des.hpp"
#include "ovsim/error.hpp"
#include "ovsim/hwmodel.hpp"
#include "ovsim/memsim.hpp"

namespace ovsim::des {

/// Lazily started coroutine; awaiting it runs it to completion.
class Co {
 public:
  struct promise_type {
    std::coroutine_handle<> continuation;
    std::exception_ptr error;

    Co get_return_object() { return Co{std::coroutine_handle<promise_type>::from_promise(*this)}; }
    std::suspend_always initial_suspend() noexcept { return {}; }
    struct Final {
      bool await_ready() noexcept { return false; }
      std::coroutine_handle<> await_suspend(std::coroutine_handle<promise_type> h) noexcept {
        auto c = h.promise().continuation;
        return c ? c : std::noop_coroutine();
      }
      void await_resume() noexcept {}
    };
    Final final_suspend() noexcept { return {}; }
    void return_void() {}
    void unhandled_exception() { error = std::current_exception(); }
  };

  Co() = default;
  explicit Co(std::coroutine_handle<promise_type> h) : h_(h) {}
  Co(Co&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Co& operator=(Co&& o) noexcept {
    if (this != &o) {
      if (h_) h_.destroy();
      h_ = std::exchange(o.h_, {});
    }
    return *this;
  }
  Co(const Co&) = delete;
  Co& operator=(const Co&) = delete;
  ~Co() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return !h_ || h_.done(); }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> caller) noexcept {
    h_.promise().continuation = caller;
    return h_;
  }
  void await_resume() {
    if (h_ && h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

  std::coroutine_handle<promise_type> handle() const { return h_; }

 private:
  std::coroutine_handle<promise_type> h_;
};

struct Waiter {
  int actor = -1;
  std::coroutine_handle<> handle;
};

/// Completion state of an asynchronous operation.
struct Completion {
  bool done = false;
  double time = 0.0;
  std::vector<Waiter> waiters;
};
using Token = std::shared_ptr<Completion>;

struct EngineOptions {
  std::uint64_t seed = 0;
  OverheadConfig overheads;
  bool record_log = true;
  bool record_port_rates = false;
};

struct ActorInfo {
  std::string name;
  Co root;
  bool finished = false;
  const char* blocked_on = nullptr;
  const std::string* blocked_detail = nullptr;
  double sync_ns = 0.0;
};

struct EngineStats {
  std::vector<double> port_charged_bytes;  // egress 0..N-1, ingress N..2N-1
  std::vector<double> port_bytes;
  std::int64_t transfers = 0;
  std::int64_t signals = 0;
};

class Engine {
 public:
  explicit Engine(const hw::HardwareProfile& profile, EngineOptions options = {});
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;
  ~Engine();

  const hw::HardwareProfile& profile() const { return profile_; }
  const EngineOptions& options() const { return options_; }
  int num_devices() const { return profile_.num_devices; }
  double now() const { return now_; }

  void schedule_at(double t, std::function<void()> fn);
  void schedule_after(double dt, std::function<void()> fn) { schedule_at(now_ + dt, std::move(fn)); }
  /// Registers an actor that starts at start_at (default: now).
  int spawn(std::string name, Co co, double start_at = -1.0);
  /// Runs until no event, flow or runnable actor remains; returns the final
  /// time. Throws DeadlockError naming actors still blocked.
  double run_until_idle();

  // -- awaitables, valid inside actors ------------------------------------
  struct SleepAwaiter {
    Engine* eng;
    double dt;
    bool await_ready() const noexcept { return dt <= 0; }
    void await_suspend(std::coroutine_handle<> h) { eng->resume_at(eng->now_ + dt, eng->current_, h); }
    void await_resume() const noexcept {}
  };
  SleepAwaiter sleep(double ns) { return {this, ns}; }

  struct TokenAwaiter {
    Engine* eng;
    Token token;
    bool await_ready() const noexcept { return token->done; }
    void await_suspend(std::coroutine_handle<> h) {
      token->waiters.push_back({eng->current_, h});
      eng->block("transfer completion");
    }
    void await_resume() const noexcept {}
  };
  TokenAwaiter wait(Token t) { return {this, std::move(t)}; }

  Token make_token() { return std::make_shared<Completion>(); }
  void complete(const Token& t);

  /// Issues a transfer; on_arrival runs when the last byte lands.
  Token transfer(const TransferSpec& spec, std::function<void()> on_arrival = {});

  struct CounterAwaiter {
    Engine* eng;
    mem::BarrierField* field;
    int dev;
    mem::TileCoord coord;
    std::int64_t expected;
    bool await_ready() const { return field->at(dev, coord.b, coord.d, coord.r, coord.c) >= expected; }
    void await_suspend(std::coroutine_handle<> h) { eng->park_counter(*this, h); }
    void await_resume() const noexcept {}
  };
  CounterAwaiter wait_counter(mem::BarrierField& field, int dev, mem::TileCoord coord, std::int64_t expected) {
    field.check_device(dev);
    field.check_region({coord.b, coord.d, coord.r, coord.c, 1, 1});
    return {this, &field, dev, coord, expected};
  }
  /// Atomic add on a counter; wakes satisfied waiters.
  void add_counter(mem::BarrierField& field, int dev, mem::TileCoord coord, std::int64_t delta);

  // -- bookkeeping ---------------------------------------------------------
  EventLog& log() { return log_; }
  const EventLog& log() const { return log_; }
  void record(LogRecord r) {
    if (log_.enabled()) {
      r.time_ns = now_;
      log_.add(r);
    }
  }
  int current_actor() const { return current_; }
  /// Marks the running actor as blocked; detail is shown in deadlock reports.
  void block(const char* what, const std::string* detail = nullptr);
  void charge_sync(double ns) {
    if (current_ >= 0) actors_[current_].sync_ns += ns;
  }
  const std::vector<ActorInfo>& actors() const { return actors_; }
  const EngineStats& stats() const { return stats_; }
  FlowNetwork& network() { return net_; }
  void resume_at(double t, int actor, std::coroutine_handle<> h);

 private:
  struct Event {
    double time;
    std::uint64_t key;
    std::uint64_t seq;
    int actor;
    std::coroutine_handle<> handle;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.key != b.key) return a.key > b.key;
      return a.seq > b.seq;
    }
  };
  struct TransferState {
    TransferSpec spec;
    TransferPlan plan;
    std::size_t next_chunk = 0;
    double coef = 1.0;
    double cap = kInf;
    Token token;
    std::function<void()> on_arrival;
    std::int64_t sm_key = -1;
  };
  struct SmQueue {
    bool busy = false;
    std::deque<std::int64_t> pending;
  };
  struct CounterWaiter {
    Waiter w;
    std::int64_t expected;
  };

  void push_event(Event e);
  void dispatch(Event& e);
  void start_transfer(std::int64_t tid);
  void start_chunk(std::int64_t tid);
  void add_chunk_flow(std::int64_t tid);
  void on_flow_done(std::int64_t flow_id);
  void park_counter(const CounterAwaiter& a, std::coroutine_handle<> h);
  std::uint64_t counter_key(const mem::BarrierField& f, int dev, mem::TileCoord c) const;

  hw::HardwareProfile profile_;
  EngineOptions options_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  FlowNetwork net_;
  EventLog log_;
  EngineStats stats_;
  std::vector<ActorInfo> actors_;
  int current_ = -1;
  std::int64_t next_transfer_ = 0;
  std::unordered_map<std::int64_t, TransferState> transfers_;
  std::unordered_map<std::int64_t, std::int64_t> flow_owner_;
  std::unordered_map<std::int64_t, SmQueue> sm_queues_;
  std::unordered_map<const void*, std::uint64_t> field_ids_;
  std::unordered_map<std::uint64_t, std::vector<CounterWaiter>> counter_waiters_;
};

/// Bounded handoff queue between actors with a fixed delivery latency.
template <typename T>
class Channel {
 public:
  Channel(Engine& eng, std::size_t capacity, double latency, std::string name)
      : eng_(&eng), cap_(capacity), latency_(latency), name_(std::move(name)) {
    if (capacity == 0) throw InvalidArgument("channel '" + name_ + "' needs capacity");
  }

  /// Places an item without waiting (initial credits).
  void preload(T v) {
    ++occupied_;
    items_.push_back(std::move(v));
  }

  struct PushAwaiter {
    Channel* ch;
    T value;
    bool suspended = false;
    bool await_ready() const { return ch->occupied_ + ch->reserved_slots_ < ch->cap_; }
    void await_suspend(std::coroutine_handle<> h) {
      suspended = true;
      ch->pushers_.push_back({ch->eng_->current_actor(), h});
      ch->eng_->block("channel space", &ch->name_);
    }
    void await_resume() {
      if (suspended) --ch->reserved_slots_;
      ch->admit(std::move(value));
    }
  };
  PushAwaiter push(T v) { return PushAwaiter{this, std::move(v)}; }

  struct PopAwaiter {
    Channel* ch;
    bool suspended = false;
    bool await_ready() const { return ch->items_.size() > ch->reserved_items_; }
    void await_suspend(std::coroutine_handle<> h) {
      suspended = true;
      ch->poppers_.push_back({ch->eng_->current_actor(), h});
      ch->eng_->block("channel item", &ch->name_);
    }
    T await_resume() {
      if (suspended) --ch->reserved_items_;
      T v = std::move(ch->items_.front());
      ch->items_.pop_front();
      --ch->occupied_;
      if (!ch->pushers_.empty() && ch->occupied_ + ch->reserved_slots_ < ch->cap_) {
        Waiter w = ch->pushers_.front();
        ch->pushers_.pop_front();
        ++ch->reserved_slots_;
        ch->eng_->resume_at(ch->eng_->now(), w.actor, w.handle);
      }
      return v;
    }
  };
  PopAwaiter pop() { return PopAwaiter{this}; }

 private:
  void admit(T v) {
    ++occupied_;
    if (latency_ > 0) {
      in_flight_.push_back(std::move(v));
      eng_->schedule_after(latency_, [this] {
        T front = std::move(in_flight_.front());
        in_flight_.pop_front();
        deliver(std::move(front));
      });
    } else {
      deliver(std::move(v));
    }
  }
  void deliver(T v) {
    items_.push_back(std::move(v));
    if (!poppers_.empty()) {
      Waiter w = poppers_.front();
      poppers_.pop_front();
      ++reserved_items_;
      eng_->resume_at(eng_->now(), w.actor, w.handle);
    }
  }

  Engine* eng_;
  std::size_t cap_;
  double latency_;
  std::string name_;
  std::size_t occupied_ = 0;
  std::size_t reserved_slots_ = 0;
  std::size_t reserved_items_ = 0;
  std::deque<T> items_;
  std::deque<T> in_flight_;
  std::deque<Waiter> pushers_;
  std::deque<Waiter> poppers_;
};

}  // namespace ovsim::des
