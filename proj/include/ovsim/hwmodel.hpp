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

// Hardware platform description: device/SM counts, throughputs, link
// bandwidth, and the three inter-GPU transfer mechanisms (copy engine, TMA,
// register-level load/store) with their bandwidth curves and capabilities.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ovsim::hw {

enum class MechanismKind : std::uint8_t { CopyEngine, Tma, RegisterOp };

enum class Functionality : std::uint8_t {
  P2PTransfer,
  InFabricBroadcast,
  P2PReduction,
  InFabricReduction,
  ElementwiseTransfer,
};

inline constexpr std::array<MechanismKind, 3> kAllMechanisms = {
    MechanismKind::CopyEngine, MechanismKind::Tma, MechanismKind::RegisterOp};

inline constexpr std::array<Functionality, 5> kAllFunctionalities = {
    Functionality::P2PTransfer, Functionality::InFabricBroadcast,
    Functionality::P2PReduction, Functionality::InFabricReduction,
    Functionality::ElementwiseTransfer};

std::string_view to_string(MechanismKind kind);
std::string_view to_string(Functionality f);
/// Short tag used in event logs ("CE", "TMA", "REG").
std::string_view short_name(MechanismKind kind);
MechanismKind mechanism_from_string(std::string_view s);

/// Small closed set of functionalities.
class CapabilitySet {
 public:
  constexpr CapabilitySet() = default;
  constexpr CapabilitySet(std::initializer_list<Functionality> fs) {
    for (auto f : fs) insert(f);
  }
  constexpr void insert(Functionality f) { bits_ |= mask(f); }
  constexpr bool contains(Functionality f) const { return (bits_ & mask(f)) != 0; }
  constexpr bool operator==(const CapabilitySet&) const = default;

 private:
  static constexpr std::uint8_t mask(Functionality f) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(f));
  }
  std::uint8_t bits_ = 0;
};

/// The fixed capability matrix of each mechanism.
CapabilitySet capabilities_of(MechanismKind kind);

struct TransferMechanism {
  MechanismKind kind = MechanismKind::Tma;
  /// Observed bandwidth ceiling with all SMs driving a 1 GB transfer (bytes/s).
  double peak_bandwidth = 0.0;
  /// Message size at which the curve reaches half of peak (bytes).
  double half_saturation_msg_bytes = 0.0;
  /// Bandwidth one SM can drive on its own (bytes/s); 0 for the copy engine.
  double per_sm_issue_rate = 0.0;
  bool host_initiated = false;
  CapabilitySet capabilities;

  bool sm_driven() const { return kind != MechanismKind::CopyEngine; }
};

/// Anchor points from which a mechanism's curve parameters are derived.
struct MechanismCalibration {
  double peak_bandwidth = 0.0;
  /// Message size anchor and the bandwidth reached there.
  double anchor_msg_bytes = 0.0;
  double anchor_bandwidth = 0.0;
  /// Number of SMs needed to saturate; 0 for the copy engine.
  int saturation_sms = 0;
};

TransferMechanism calibrate_mechanism(MechanismKind kind, const MechanismCalibration& cal);

struct HardwareProfile {
  std::string name;
  int num_devices = 8;
  int sms_per_device = 132;
  double tensor_throughput = 0.0;  // FLOP/s, sustained dense
  double hbm_bandwidth = 0.0;      // bytes/s
  double link_bandwidth = 0.0;     // bytes/s, unidirectional per device
  double intra_sm_sync_ns = 0.0;
  double inter_sm_sync_ns = 0.0;
  double launch_overhead_ns = 0.0;
  std::int64_t max_tma_message_bytes = 0;
  std::int64_t shared_memory_bytes = 0;
  /// One NVLink hop, also the round trip folded into inter-device sync.
  double link_latency_ns = 1500.0;
  std::int64_t vmm_granularity_bytes = 2 * 1024 * 1024;

  MechanismCalibration copy_engine_cal;
  MechanismCalibration tma_cal;
  MechanismCalibration register_op_cal;

  TransferMechanism copy_engine;
  TransferMechanism tma;
  TransferMechanism register_op;

  const TransferMechanism& mechanism(MechanismKind kind) const;

  /// Re-derives the mechanism descriptors from the calibration anchors.
  void rebuild_mechanisms();
  /// Throws InvalidArgument when a rate or count is not positive or the
  /// sync latencies are not ordered.
  void validate() const;
};

std::vector<std::string> builtin_profile_names();
/// "h100-sxm-8" or "b200-8".
HardwareProfile builtin_profile(std::string_view name);

HardwareProfile profile_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const HardwareProfile& p);
HardwareProfile load_profile(const std::filesystem::path& path);
/// Built-in name or a path to a JSON profile.
HardwareProfile resolve_profile(std::string_view name_or_path);

double effective_bandwidth(const TransferMechanism& mech, double msg_bytes,
                           const HardwareProfile& profile);
double aggregate_issue_bandwidth(const TransferMechanism& mech, int num_sms);
int sms_to_saturate(const TransferMechanism& mech);
bool supports(const TransferMechanism& mech, Functionality f);

/// Picks the mechanism with the highest achievable bandwidth for the request.
/// The copy engine only competes when the data is contiguous and host-drivable.
/// Ties break Tma, RegisterOp, CopyEngine in that order.
const TransferMechanism& select_mechanism(Functionality f, double msg_bytes, int sm_budget,
                                          const HardwareProfile& profile,
                                          bool host_drivable_contiguous = false);

}  // namespace ovsim::hw
