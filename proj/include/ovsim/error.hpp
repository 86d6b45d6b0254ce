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

#pragma once

#include <stdexcept>
#include <string>

namespace ovsim {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad extents, bad device, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A transfer message is larger than the mechanism can issue in one go.
class GranularityError : public Error {
 public:
  using Error::Error;
};

/// A mechanism was asked for a functionality it does not provide.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A memory-setup step was taken out of order.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

/// The event engine ran dry while actors were still blocked.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// Simulated output diverged from the brute-force oracle.
class OracleMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace ovsim
