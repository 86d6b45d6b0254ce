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

#include <gtest/gtest.h>

#include <algorithm>

#include "ovsim/memsim.hpp"

namespace ovsim::mem {
namespace {

TEST(Pgl, AllocationShapes) {
  const Pgl p = allocate_pgl({1, 1, 256, 256}, 2, 8);
  EXPECT_EQ(p.num_devices(), 8);
  EXPECT_EQ(p.buffer_bytes(), 256 * 256 * 2);
  for (int d = 0; d < 8; ++d) EXPECT_EQ(p.buffer(d).size(), 256u * 256u);
  EXPECT_FALSE(p.has_multicast());
  EXPECT_THROW(allocate_pgl({1, 1, 16, 16}, 2, 1), InvalidArgument);
  EXPECT_THROW(allocate_pgl({1, 1, 0, 16}, 2, 2), InvalidArgument);
}

TEST(Pgl, TileRoundTripAndIndependentBuffers) {
  Pgl p = allocate_pgl({1, 2, 64, 64}, 2, 8);
  const SharedTile fresh = read_tile(p, 0, {0, 1, 2, 3}, 16, 16);
  EXPECT_TRUE(std::all_of(fresh.data.begin(), fresh.data.end(), [](double v) { return v == 0.0; }));
  SharedTile t = make_tile(16, 16, 2);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<double>(i) * 0.5;
  write_tile(p, 3, {0, 1, 2, 3}, t);
  EXPECT_EQ(read_tile(p, 3, {0, 1, 2, 3}, 16, 16).data, t.data);
  const SharedTile other = read_tile(p, 5, {0, 1, 2, 3}, 16, 16);
  EXPECT_TRUE(std::all_of(other.data.begin(), other.data.end(), [](double v) { return v == 0.0; }));
  EXPECT_THROW(read_tile(p, 0, {0, 2, 0, 0}, 16, 16), InvalidArgument);
  EXPECT_THROW(read_tile(p, 8, {0, 0, 0, 0}, 16, 16), InvalidArgument);
}

TEST(Pgl, StorageFreeLayoutRefusesData) {
  Pgl p = allocate_pgl({1, 1, 32, 32}, 2, 2, false);
  EXPECT_EQ(p.buffer_bytes(), 32 * 32 * 2);
  EXPECT_THROW(p.read(0, {0, 0, 0, 0, 16, 16}), InvalidArgument);
}

TEST(SharedTileShape, SharedMemoryLimit) {
  EXPECT_NO_THROW(validate_tile_shape(256, 256, 2));
  EXPECT_THROW(validate_tile_shape(512, 512, 2), InvalidArgument);
  EXPECT_THROW(validate_tile_shape(17, 16, 2), InvalidArgument);
  EXPECT_THROW(make_tile(16, 24, 2), InvalidArgument);
}

TEST(Multicast, RequiresSetupAndIsWriteOnly) {
  Pgl p = allocate_pgl({1, 1, 16, 16}, 2, 4);
  EXPECT_THROW(MulticastView<double>{p}, ProtocolViolation);
  enable_multicast(p);
  MulticastView<double> mc(p);
  const std::vector<double> v(256, 7.0);
  mc.write({0, 0, 0, 0, 16, 16}, v);
  for (int d = 0; d < 4; ++d) EXPECT_EQ(p.read(d, {0, 0, 0, 0, 16, 16}), v);
  mc.add({0, 0, 0, 0, 16, 16}, v);
  EXPECT_EQ(p.at(2, 0, 0, 5, 5), 14.0);
  EXPECT_THROW(mc.read({0, 0, 0, 0, 16, 16}), ProtocolViolation);
}

TEST(Setup, VmmOutOfOrderMapIsRejected) {
  SetupSession s(SetupMode::Vmm, 2);
  s.advance({StepKind::CreatePhysical, 0, -1, 2 * 1024 * 1024});
  s.advance({StepKind::ExportHandle, 0, -1, 0});
  try {
    s.advance({StepKind::MapVirtual, 1, 0, 0});
    FAIL() << "map before import accepted";
  } catch (const ProtocolViolation& e) {
    EXPECT_NE(std::string(e.what()).find("ImportHandle"), std::string::npos);
  }
}

TEST(Setup, VmmGranularity) {
  SetupSession s(SetupMode::Vmm, 2);
  EXPECT_THROW(s.advance({StepKind::CreatePhysical, 0, -1, 3 * 1024 * 1024}), GranularityError);
}

TEST(Setup, MulticastCompletesAndAttaches) {
  SetupSession s(SetupMode::Multicast, 4);
  for (const auto& step : s.canonical_steps()) s = advance_setup(s, step);
  EXPECT_TRUE(s.complete());
  Pgl p = allocate_pgl({1, 1, 16, 16}, 2, 4);
  attach_multicast(s, p);
  EXPECT_TRUE(p.has_multicast());
  const auto j = s.transcript_json();
  EXPECT_EQ(j["mode"], "Multicast");
  EXPECT_EQ(j["steps"].size(), s.canonical_steps().size());
}

TEST(Setup, IpcCompletesWithoutAlias) {
  SetupSession s(SetupMode::Ipc, 2);
  for (const auto& step : s.canonical_steps()) s.advance(step);
  EXPECT_TRUE(s.complete());
  Pgl p = allocate_pgl({1, 1, 16, 16}, 2, 2);
  EXPECT_THROW(attach_multicast(s, p), ProtocolViolation);
  EXPECT_FALSE(p.has_multicast());
}

TEST(Setup, BindWaitsForEveryRegistration) {
  SetupSession s(SetupMode::Multicast, 3);
  s.advance({StepKind::CreateMulticastStub, 0, -1, 0});
  s.advance({StepKind::RegisterDevice, 0, -1, 0});
  s.advance({StepKind::RegisterDevice, 1, -1, 0});
  EXPECT_THROW(s.advance({StepKind::BindDeviceMemory, 0, -1, 0}), ProtocolViolation);
  s.advance({StepKind::RegisterDevice, 2, -1, 0});
  EXPECT_NO_THROW(s.advance({StepKind::BindDeviceMemory, 0, -1, 0}));
  EXPECT_THROW(s.advance({StepKind::BindDeviceMemory, 0, -1, 0}), ProtocolViolation);
  EXPECT_THROW(s.advance({StepKind::GetMemHandle, 0, -1, 0}), ProtocolViolation);
}

}  // namespace
}  // namespace ovsim::mem
