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

#include "ovsim/memsim.hpp"

namespace ovsim::mem {

namespace {

constexpr int kNumStepKinds = 14;

bool pairwise(SetupMode mode, StepKind k) {
  switch (k) {
    case StepKind::ShareStub:
    case StepKind::OpenMemHandle:
    case StepKind::TransferHandleOverSocket:
    case StepKind::ImportHandle:
    case StepKind::TransferStub:
      return true;
    case StepKind::MapVirtual:
      return mode == SetupMode::Vmm;
    default:
      return false;
  }
}

bool belongs(SetupMode mode, StepKind k) {
  switch (mode) {
    case SetupMode::Ipc:
      return k == StepKind::GetMemHandle || k == StepKind::ShareStub || k == StepKind::OpenMemHandle;
    case SetupMode::Vmm:
      return k == StepKind::CreatePhysical || k == StepKind::ExportHandle ||
             k == StepKind::TransferHandleOverSocket || k == StepKind::ImportHandle || k == StepKind::MapVirtual;
    case SetupMode::Multicast:
      return k == StepKind::CreateMulticastStub || k == StepKind::RegisterDevice ||
             k == StepKind::BindDeviceMemory || k == StepKind::ExportStub || k == StepKind::TransferStub ||
             k == StepKind::ImportStub || k == StepKind::MapVirtual;
  }
  return false;
}

}  // namespace

std::string_view to_string(SetupMode m) {
  switch (m) {
    case SetupMode::Ipc: return "Ipc";
    case SetupMode::Vmm: return "Vmm";
    case SetupMode::Multicast: return "Multicast";
  }
  return "?";
}

std::string_view to_string(StepKind k) {
  switch (k) {
    case StepKind::GetMemHandle: return "GetMemHandle";
    case StepKind::ShareStub: return "ShareStub";
    case StepKind::OpenMemHandle: return "OpenMemHandle";
    case StepKind::CreatePhysical: return "CreatePhysical";
    case StepKind::ExportHandle: return "ExportHandle";
    case StepKind::TransferHandleOverSocket: return "TransferHandleOverSocket";
    case StepKind::ImportHandle: return "ImportHandle";
    case StepKind::CreateMulticastStub: return "CreateMulticastStub";
    case StepKind::RegisterDevice: return "RegisterDevice";
    case StepKind::BindDeviceMemory: return "BindDeviceMemory";
    case StepKind::ExportStub: return "ExportStub";
    case StepKind::TransferStub: return "TransferStub";
    case StepKind::ImportStub: return "ImportStub";
    case StepKind::MapVirtual: return "MapVirtual";
  }
  return "?";
}

std::string describe(const SetupStep& s) {
  std::string out(to_string(s.kind));
  out += "(dev " + std::to_string(s.device);
  if (s.peer >= 0) out += ", peer " + std::to_string(s.peer);
  out += ")";
  return out;
}

SetupSession::SetupSession(SetupMode mode, int num_devices, std::int64_t alloc_bytes, std::int64_t granularity,
                           int root)
    : mode_(mode),
      num_devices_(num_devices),
      alloc_bytes_(alloc_bytes),
      granularity_(granularity),
      root_(root) {
  if (num_devices < 2) throw InvalidArgument("setup needs at least two devices");
  if (root < 0 || root >= num_devices) throw InvalidArgument("multicast root out of range");
  if (granularity <= 0) throw InvalidArgument("granularity must be positive");
  done_.assign(static_cast<std::size_t>(kNumStepKinds) * num_devices * (num_devices + 1), 0);
  total_steps_ = canonical_steps().size();
}

int SetupSession::index(StepKind k, int device, int peer) const {
  return (static_cast<int>(k) * num_devices_ + device) * (num_devices_ + 1) + (peer + 1);
}

bool SetupSession::complete() const { return done_count_ == total_steps_; }

bool SetupSession::done(const SetupStep& step) const {
  if (step.device < 0 || step.device >= num_devices_ || step.peer < -1 || step.peer >= num_devices_) return false;
  return is_done(step.kind, step.device, step.peer);
}

void SetupSession::require(const SetupStep& step, StepKind k, int device, int peer) const {
  if (!is_done(k, device, peer)) {
    SetupStep missing{k, device, peer, 0};
    throw ProtocolViolation(describe(step) + " requires " + describe(missing) + " first");
  }
}

void SetupSession::advance(const SetupStep& step) {
  const int n = num_devices_;
  if (!belongs(mode_, step.kind)) {
    throw ProtocolViolation(describe(step) + " is not a " + std::string(to_string(mode_)) + " step");
  }
  if (step.device < 0 || step.device >= n) throw InvalidArgument(describe(step) + ": device out of range");
  if (pairwise(mode_, step.kind)) {
    if (step.peer < 0 || step.peer >= n || step.peer == step.device) {
      throw InvalidArgument(describe(step) + ": needs a distinct peer device");
    }
  } else if (step.peer != -1) {
    throw InvalidArgument(describe(step) + ": takes no peer");
  }
  if (is_done(step.kind, step.device, step.peer)) {
    throw ProtocolViolation(describe(step) + " was already taken");
  }

  const int d = step.device;
  const int p = step.peer;
  switch (step.kind) {
    case StepKind::GetMemHandle:
      break;
    case StepKind::ShareStub:
      require(step, StepKind::GetMemHandle, d);
      break;
    case StepKind::OpenMemHandle:
      require(step, StepKind::ShareStub, p, d);
      break;
    case StepKind::CreatePhysical:
      if (step.bytes <= 0 || step.bytes % granularity_ != 0) {
        throw GranularityError(describe(step) + ": size " + std::to_string(step.bytes) +
                               " is not a positive multiple of the " + std::to_string(granularity_) +
                               "-byte granularity");
      }
      break;
    case StepKind::ExportHandle:
      require(step, StepKind::CreatePhysical, d);
      break;
    case StepKind::TransferHandleOverSocket:
      require(step, StepKind::ExportHandle, d);
      break;
    case StepKind::ImportHandle:
      require(step, StepKind::TransferHandleOverSocket, p, d);
      break;
    case StepKind::CreateMulticastStub:
      if (d != root_) throw ProtocolViolation(describe(step) + ": only the root creates the multicast object");
      break;
    case StepKind::RegisterDevice:
      require(step, StepKind::CreateMulticastStub, root_);
      break;
    case StepKind::BindDeviceMemory:
      for (int i = 0; i < n; ++i) require(step, StepKind::RegisterDevice, i);
      break;
    case StepKind::ExportStub:
      if (d != root_) throw ProtocolViolation(describe(step) + ": only the root exports the multicast object");
      for (int i = 0; i < n; ++i) require(step, StepKind::BindDeviceMemory, i);
      break;
    case StepKind::TransferStub:
      if (d != root_) throw ProtocolViolation(describe(step) + ": only the root sends the multicast handle");
      require(step, StepKind::ExportStub, root_);
      break;
    case StepKind::ImportStub:
      if (d == root_) throw ProtocolViolation(describe(step) + ": the root does not import its own handle");
      require(step, StepKind::TransferStub, root_, d);
      break;
    case StepKind::MapVirtual:
      if (mode_ == SetupMode::Vmm) {
        require(step, StepKind::ImportHandle, d, p);
      } else if (d == root_) {
        require(step, StepKind::ExportStub, root_);
      } else {
        require(step, StepKind::ImportStub, d);
      }
      break;
  }
  done_[index(step.kind, step.device, step.peer)] = 1;
  ++done_count_;
  transcript_.push_back(step);
}

std::vector<SetupStep> SetupSession::canonical_steps() const {
  const int n = num_devices_;
  std::vector<SetupStep> out;
  switch (mode_) {
    case SetupMode::Ipc:
      for (int o = 0; o < n; ++o) out.push_back({StepKind::GetMemHandle, o, -1, 0});
      for (int o = 0; o < n; ++o)
        for (int p = 0; p < n; ++p)
          if (p != o) out.push_back({StepKind::ShareStub, o, p, 0});
      for (int p = 0; p < n; ++p)
        for (int o = 0; o < n; ++o)
          if (p != o) out.push_back({StepKind::OpenMemHandle, p, o, 0});
      break;
    case SetupMode::Vmm:
      for (int o = 0; o < n; ++o) {
        out.push_back({StepKind::CreatePhysical, o, -1, alloc_bytes_});
        out.push_back({StepKind::ExportHandle, o, -1, 0});
        for (int p = 0; p < n; ++p) {
          if (p == o) continue;
          out.push_back({StepKind::TransferHandleOverSocket, o, p, 0});
          out.push_back({StepKind::ImportHandle, p, o, 0});
          out.push_back({StepKind::MapVirtual, p, o, 0});
        }
      }
      break;
    case SetupMode::Multicast:
      out.push_back({StepKind::CreateMulticastStub, root_, -1, 0});
      for (int d = 0; d < n; ++d) out.push_back({StepKind::RegisterDevice, d, -1, 0});
      for (int d = 0; d < n; ++d) out.push_back({StepKind::BindDeviceMemory, d, -1, 0});
      out.push_back({StepKind::ExportStub, root_, -1, 0});
      for (int p = 0; p < n; ++p) {
        if (p == root_) continue;
        out.push_back({StepKind::TransferStub, root_, p, 0});
        out.push_back({StepKind::ImportStub, p, -1, 0});
      }
      for (int d = 0; d < n; ++d) out.push_back({StepKind::MapVirtual, d, -1, 0});
      break;
  }
  return out;
}

nlohmann::json SetupSession::transcript_json() const {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : transcript_) {
    nlohmann::json j{{"step", std::string(to_string(s.kind))}, {"device", s.device}};
    if (s.peer >= 0) j["peer"] = s.peer;
    if (s.bytes > 0) j["bytes"] = s.bytes;
    steps.push_back(std::move(j));
  }
  return {{"mode", std::string(to_string(mode_))},
          {"num_devices", num_devices_},
          {"complete", complete()},
          {"steps", std::move(steps)}};
}

SetupSession advance_setup(SetupSession session, const SetupStep& step) {
  session.advance(step);
  return session;
}

}  // namespace ovsim::mem
