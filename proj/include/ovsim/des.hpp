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

// Building blocks of the discrete-event engine: synchronization costs,
// library-overhead toggles, the event log and the port-contention model.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "ovsim/hwmodel.hpp"

namespace ovsim::des {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SyncKind : std::uint8_t { IntraSmBarrier, InterSmHbm, InterDevice };

double sync_cost(SyncKind kind, const hw::HardwareProfile& profile);

struct OverheadConfig {
  bool two_way_handshake = false;
  bool staging_buffers = false;
  bool peer_addr_indirection = false;
  std::int64_t staging_buffer_bytes = 512 * 1024;
  /// Element-wise access latency with indirection over the direct latency.
  double indirection_latency_ratio = 4.5;

  bool any() const { return two_way_handshake || staging_buffers || peer_addr_indirection; }
  static OverheadConfig all();
  /// Comma list of handshake, staging, indirection; "all" or "none".
  static OverheadConfig parse(const std::string& list);
  std::string to_string() const;
};

enum class FlowShape : std::uint8_t { Unicast, Multicast, InFabricReduce, RemoteRead };

/// One data movement as seen by the fabric.
struct TransferSpec {
  hw::MechanismKind mech = hw::MechanismKind::Tma;
  hw::Functionality func = hw::Functionality::P2PTransfer;
  FlowShape shape = FlowShape::Unicast;
  int issuer_device = 0;
  /// SM that issues the transfer; -1 for host-initiated copies.
  int issuer_sm = 0;
  int issuing_sms = 1;
  std::vector<int> egress;   // devices whose egress port carries the bytes
  std::vector<int> ingress;  // devices whose ingress port carries the bytes
  double bytes = 0.0;
  /// Message size on the bandwidth curve; 0 means bytes.
  double msg_bytes = 0.0;

  double message() const { return msg_bytes > 0 ? msg_bytes : bytes; }
};

/// How overhead flags reshape one transfer.
struct TransferPlan {
  double start_delay_ns = 0.0;
  double per_chunk_delay_ns = 0.0;
  std::vector<double> chunk_bytes;  // bytes each chunk puts on the wire
  double msg_bytes = 0.0;
};

TransferPlan plan_transfer(const TransferSpec& spec, const OverheadConfig& cfg, const hw::HardwareProfile& profile);

/// Uncontended completion time of the transfer, overheads included.
double apply_overheads(const TransferSpec& spec, const OverheadConfig& cfg, const hw::HardwareProfile& profile);

/// Latency of one direct element-wise (128-byte) register access to a peer.
double element_access_latency(const hw::HardwareProfile& profile);
/// Extra fixed latency that peer-address indirection adds per access.
double indirection_latency(const OverheadConfig& cfg, const hw::HardwareProfile& profile);

/// Rate limit of one flow in bytes/ns and its port weight.
double flow_issue_cap(const TransferSpec& spec, const hw::HardwareProfile& profile);
double flow_wire_coefficient(const TransferSpec& spec, const hw::HardwareProfile& profile);

// ---------------------------------------------------------------------------
// Event log

enum class EventKind : std::uint8_t {
  XferStart,
  XferEnd,
  LdReduceStart,
  LdReduceEnd,
  Signal,
  SyncIntra,
  SyncInterSm,
  SyncInterDevice,
  Compute,
  Hbm,
  WaitDone,
  PortRate,
};

std::string_view to_string(EventKind k);

struct LogRecord {
  double time_ns = 0.0;
  EventKind kind = EventKind::XferStart;
  int src = -1;
  std::uint64_t dst_mask = 0;  // receiving devices
  int sm = -1;                 // set for SM-local records (compute, hbm, sync)
  double bytes = 0.0;          // bytes, flops for compute, latency ns for sync
  int mech = -1;
  std::int64_t flow_id = -1;
};

/// One line per record: time_ns kind src dst bytes mech flow_id.
std::string format_record(const LogRecord& r);

class EventLog {
 public:
  explicit EventLog(bool enabled = true) : enabled_(enabled) {}
  bool enabled() const { return enabled_; }
  void add(const LogRecord& r) {
    if (enabled_) records_.push_back(r);
  }
  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  void write(std::ostream& out) const;
  std::string str() const;

 private:
  bool enabled_;
  std::vector<LogRecord> records_;
};

// ---------------------------------------------------------------------------
// Port contention: max-min fair sharing with piecewise-constant rates.

struct FlowDesc {
  std::vector<int> ports;
  double coef = 1.0;  // port capacity consumed per delivered byte
  double cap = kInf;  // bytes/ns
  double bytes = 0.0;
};

class FlowNetwork {
 public:
  /// Capacities in bytes/ns.
  explicit FlowNetwork(std::vector<double> capacities);

  std::int64_t add(const FlowDesc& flow);
  /// Absolute time of the next completion, or kInf.
  double next_completion();
  /// Moves the clock forward, accruing service at the current rates.
  void advance(double to);
  /// Flows finished at the current time, in id order.
  std::vector<std::int64_t> take_completed();

  double now() const { return now_; }
  std::size_t active_flows() const { return active_; }
  double delivered_bytes() const { return delivered_; }
  double requested_bytes() const { return requested_; }
  double flow_rate(std::int64_t id);
  /// Current load of every port in bytes/ns.
  std::vector<double> port_loads();
  const std::vector<double>& capacities() const { return capacity_; }

  /// Called with the port loads each time rates change.
  void set_rate_observer(std::function<void(double, const std::vector<double>&)> fn) {
    observer_ = std::move(fn);
  }

 private:
  struct Key {
    std::vector<int> ports;
    double coef;
    double cap;
    bool operator<(const Key& o) const {
      if (ports != o.ports) return ports < o.ports;
      if (coef != o.coef) return coef < o.coef;
      return cap < o.cap;
    }
  };
  struct Class {
    Key key;
    double rate = 0.0;
    double served = 0.0;
    std::priority_queue<std::pair<double, std::int64_t>, std::vector<std::pair<double, std::int64_t>>,
                        std::greater<>>
        heap;
    bool frozen = false;
  };

  void recompute();

  std::vector<double> capacity_;
  std::map<Key, int> class_index_;
  std::vector<Class> classes_;
  std::vector<int> live_;  // classes with flows
  std::vector<std::int64_t> done_;
  double now_ = 0.0;
  bool dirty_ = false;
  std::int64_t next_id_ = 0;
  std::size_t active_ = 0;
  double delivered_ = 0.0;
  double requested_ = 0.0;
  int next_class_ = -1;
  double next_time_ = kInf;
  std::function<void(double, const std::vector<double>&)> observer_;
  std::unordered_map<std::int64_t, int> flow_class_;
};

}  // namespace ovsim::des
