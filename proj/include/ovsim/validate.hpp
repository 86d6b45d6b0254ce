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

// Calibration self-test: the fixed anchors a profile is expected to
// reproduce, each with its measured value.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ovsim/lcsc.hpp"

namespace ovsim::calib {

struct Anchor {
  std::string name;
  double measured = 0.0;
  /// Inclusive acceptance band.
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

/// Runs every anchor against the profile. The reference values are those of
/// the H100 SXM platform; a perturbed profile fails the affected anchors.
std::vector<Anchor> run_anchors(const hw::HardwareProfile& profile);

bool all_pass(const std::vector<Anchor>& anchors);
nlohmann::json to_json(const std::vector<Anchor>& anchors);
/// One "PASS|FAIL name measured [lo, hi]" line per anchor.
std::string to_text(const std::vector<Anchor>& anchors);

/// Link bytes the issuing devices put on the wire per published tile:
/// transfer starts over the number of tile-publishing operations (compute
/// tasks with an asynchronous store, and all-reduce operations).
double link_bytes_per_tile(const lcsc::KernelSpec& spec, const des::EventLog& log);

}  // namespace ovsim::calib
