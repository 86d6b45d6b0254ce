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

// Kernel generators for the evaluated workloads. Each build yields a kernel
// spec, its layouts, and the brute-force final state of the checked layouts.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovsim/lcsc.hpp"

namespace ovsim::wl {

enum class Kind : std::uint8_t {
  AgGemm,
  GemmRs,
  GemmAr,
  RingAttention,
  UlyssesAllToAll,
  MoeDispatchGemm,
  AllGatherTensorDim,
  ReduceScatterTensorDim,
  AllToAll4D,
  AllReduce,
};

inline constexpr Kind kAllKinds[] = {Kind::AgGemm,          Kind::GemmRs,          Kind::GemmAr,
                                     Kind::RingAttention,   Kind::UlyssesAllToAll, Kind::MoeDispatchGemm,
                                     Kind::AllGatherTensorDim, Kind::ReduceScatterTensorDim,
                                     Kind::AllToAll4D,      Kind::AllReduce};

std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view s);

/// Kind-specific extents. GEMMs use m, n, k (k is the per-device reduction
/// extent for GemmRs/GemmAr, the full one for AgGemm). Sequence kinds use b,
/// s, h, d with s the total sequence for RingAttention and the per-device
/// one for UlyssesAllToAll/AllToAll4D. MoE uses m tokens per device.
struct Dims {
  std::int64_t m = 0, n = 0, k = 0;
  std::int64_t b = 0, s = 0, h = 0, d = 0;
  int top_k = 0;
  int experts = 0;
  std::int64_t hidden = 0;
  std::int64_t expert_hidden = 0;
  /// Routing skew; 0 is uniform.
  double skew = 0.0;
};

struct WorkloadSpec {
  Kind kind = Kind::GemmRs;
  Dims dims;
  int element_bytes = 2;
  /// Square tile edge.
  int tile = 256;
  std::optional<lcsc::ScheduleMode> mode;
  /// 0 picks the default partition.
  int num_comm_sms = 0;
  /// Allocate storage and compute oracle state.
  bool functional = false;
  std::uint64_t seed = 0;
  int pipeline_stages = 4;
};

struct Expectation {
  int pgl = 0;
  std::vector<std::vector<double>> buffers;  // per device, row-major
};

struct Instance {
  WorkloadSpec spec;
  lcsc::KernelSpec kernel;
  std::vector<Expectation> expected;
  /// Bytes each device must move across its link for the chosen algorithm.
  double link_bytes_per_device = 0.0;
  double total_flops = 0.0;
  lcsc::ReusePolicy reuse = lcsc::ReusePolicy::NoTransfer;

  /// Empty when every checked layout matches its oracle; otherwise names the
  /// first divergent coordinate.
  std::string check() const;
};

lcsc::ScheduleMode default_mode(Kind k);
/// Default communication SM count for the spec's mode.
int default_comm_sms(const WorkloadSpec& spec, const hw::HardwareProfile& profile);

Instance build(const WorkloadSpec& spec, const hw::HardwareProfile& profile);

/// Small extents for functional checks on num_devices devices.
WorkloadSpec reduced_spec(Kind k, int num_devices, std::uint64_t seed);

struct Scenario {
  std::string group;
  std::string name;
  WorkloadSpec spec;
};

std::vector<Scenario> builtin_scenarios();
/// Scenarios whose name or group equals key; "all" selects everything.
std::vector<Scenario> select_scenarios(const std::string& key);

WorkloadSpec workload_from_json(const nlohmann::json& j);
nlohmann::json workload_to_json(const WorkloadSpec& w);
/// A scenario file holds {"scenarios": [{"name": ..., <workload>}, ...]}.
std::vector<Scenario> load_scenarios(const std::string& path);

}  // namespace ovsim::wl
