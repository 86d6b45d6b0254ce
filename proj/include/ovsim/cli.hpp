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

// Command-line front end: analyze, simulate, autotune and validate.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ovsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; args excludes the program name. Returns the exit
/// status: 0 when every requested scenario succeeds, 1 on a failed oracle or
/// anchor, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a over the compact dump of a configuration object, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace ovsim::cli
