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

#include "ovsim/primitives.hpp"

#include <algorithm>
#include <bit>

namespace ovsim::prim {

using des::Engine;
using des::EventKind;
using des::FlowShape;
using des::LogRecord;
using des::Token;
using des::TransferSpec;
using hw::Functionality;
using hw::MechanismKind;

std::string_view to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::Sum: return "sum";
    case ReduceOp::Max: return "max";
    case ReduceOp::Min: return "min";
  }
  return "?";
}

double fold(ReduceOp op, double acc, double v) {
  switch (op) {
    case ReduceOp::Sum: return acc + v;
    case ReduceOp::Max: return std::max(acc, v);
    case ReduceOp::Min: return std::min(acc, v);
  }
  return acc;
}

int count(DeviceSet s) { return std::popcount(s); }

std::vector<int> members(DeviceSet s) {
  std::vector<int> out;
  for (int d = 0; s != 0; ++d, s >>= 1) {
    if (s & 1u) out.push_back(d);
  }
  return out;
}

namespace {

void check_targets(const Engine& eng, DeviceSet targets) {
  if (targets == 0) throw InvalidArgument("primitive needs at least one target device");
  if (targets & ~all_devices(eng.num_devices())) throw InvalidArgument("target device out of range");
}

void check_group(const Issuer& who, const char* what) {
  if (who.group_width < kWarpWidth) {
    throw InvalidArgument(std::string(what) + " needs at least warp-level participation (" +
                          std::to_string(kWarpWidth) + " threads), got " + std::to_string(who.group_width));
  }
}

void check_tma_message(const Engine& eng, double msg) {
  if (msg > static_cast<double>(eng.profile().max_tma_message_bytes)) {
    throw GranularityError("tile of " + std::to_string(static_cast<long long>(msg)) +
                           " bytes exceeds the TMA message limit of " +
                           std::to_string(eng.profile().max_tma_message_bytes) + " bytes");
  }
}

double region_bytes(const mem::Pgl& pgl, const mem::Region& reg) {
  return static_cast<double>(reg.elements()) * pgl.element_bytes();
}

Values snapshot(const mem::Pgl& pgl, int dev, const mem::Region& reg) {
  if (!pgl.has_storage()) return nullptr;
  return std::make_shared<const std::vector<double>>(pgl.read(dev, reg));
}

Values fold_all(const mem::Pgl& pgl, const mem::Region& reg, ReduceOp op) {
  if (!pgl.has_storage()) return nullptr;
  std::vector<double> acc = pgl.read(0, reg);
  for (int d = 1; d < pgl.num_devices(); ++d) {
    auto v = pgl.read(d, reg);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = fold(op, acc[i], v[i]);
  }
  return std::make_shared<const std::vector<double>>(std::move(acc));
}

}  // namespace

Token store_region_async(Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::Region& dst_reg, Values values,
                         DeviceSet targets, bool add, double msg_bytes) {
  check_targets(eng, targets);
  dst.check_region(dst_reg);
  if (values && static_cast<std::int64_t>(values->size()) != dst_reg.elements()) {
    throw InvalidArgument("store source does not match the destination region");
  }
  const int fanout = count(targets);
  if (fanout > 1 && !dst.has_multicast()) {
    throw ProtocolViolation("store to " + std::to_string(fanout) + " devices of '" + dst.name() +
                            "' needs a multicast alias");
  }
  const double bytes = region_bytes(dst, dst_reg);
  const double msg = msg_bytes > 0 ? msg_bytes : bytes;
  const auto& profile = eng.profile();

  TransferSpec spec;
  spec.issuer_device = who.device;
  spec.issuer_sm = who.sm;
  spec.egress = {who.device};
  spec.bytes = bytes;
  spec.msg_bytes = msg;

  if (!add) {
    spec.func = fanout > 1 ? Functionality::InFabricBroadcast : Functionality::P2PTransfer;
    spec.mech = hw::select_mechanism(spec.func, msg, 1, profile).kind;
    if (spec.mech == MechanismKind::Tma) check_tma_message(eng, msg);
    spec.shape = fanout > 1 ? FlowShape::Multicast : FlowShape::Unicast;
    spec.ingress = members(targets);
    mem::Pgl* out = &dst;
    return eng.transfer(spec, [out, dst_reg, values, targets] {
      if (!values) return;
      for (int t : members(targets)) out->write(t, dst_reg, *values);
    });
  }

  spec.func = Functionality::P2PReduction;
  spec.mech = hw::select_mechanism(spec.func, msg, 1, profile).kind;
  if (spec.mech == MechanismKind::Tma) check_tma_message(eng, msg);
  spec.shape = FlowShape::Unicast;
  if (fanout == 1) {
    spec.ingress = members(targets);
    mem::Pgl* out = &dst;
    int t = spec.ingress.front();
    return eng.transfer(spec, [out, dst_reg, values, t] {
      if (values) out->add(t, dst_reg, *values);
    });
  }
  // One point-to-point reduction per target, starting after the issuer so
  // that concurrent issuers spread over the ports; the joint token resolves
  // when the last one lands.
  Token joint = eng.make_token();
  auto left = std::make_shared<int>(fanout);
  std::vector<int> order = members(targets);
  std::rotate(order.begin(), std::upper_bound(order.begin(), order.end(), who.device), order.end());
  for (int t : order) {
    TransferSpec one = spec;
    one.ingress = {t};
    mem::Pgl* out = &dst;
    eng.transfer(one, [&eng, out, dst_reg, values, t, left, joint] {
      if (values) out->add(t, dst_reg, *values);
      if (--*left == 0) eng.complete(joint);
    });
  }
  return joint;
}

std::pair<Token, Values> load_remote_async(Engine& eng, const Issuer& who, const mem::Pgl& src, int src_dev,
                                           const mem::Region& reg, double msg_bytes) {
  src.check_device(src_dev);
  src.check_region(reg);
  const double bytes = region_bytes(src, reg);
  TransferSpec spec;
  spec.func = Functionality::P2PTransfer;
  spec.shape = FlowShape::RemoteRead;
  spec.issuer_device = who.device;
  spec.issuer_sm = who.sm;
  spec.egress = {src_dev};
  spec.ingress = {who.device};
  spec.bytes = bytes;
  spec.msg_bytes = msg_bytes > 0 ? msg_bytes : bytes;
  spec.mech = hw::select_mechanism(spec.func, spec.msg_bytes, 1, eng.profile()).kind;
  if (spec.mech == MechanismKind::Tma) check_tma_message(eng, spec.msg_bytes);
  Values v = snapshot(src, src_dev, reg);
  return {eng.transfer(spec), v};
}

des::Co reduce_region(Engine& eng, Issuer who, mem::Pgl& dst, mem::Region dst_reg, mem::Pgl& src,
                      mem::Region src_reg, ReduceOp op, double msg_bytes) {
  check_group(who, "reduce");
  if (!src.has_multicast()) {
    throw ProtocolViolation("reduce reads '" + src.name() + "' through multicast memory, which is not set up");
  }
  dst.check_region(dst_reg);
  src.check_region(src_reg);
  if (dst_reg.rows != src_reg.rows || dst_reg.cols != src_reg.cols) {
    throw InvalidArgument("reduce source and destination shapes differ");
  }
  TransferSpec spec;
  spec.mech = MechanismKind::RegisterOp;
  spec.func = Functionality::InFabricReduction;
  spec.shape = FlowShape::InFabricReduce;
  spec.issuer_device = who.device;
  spec.issuer_sm = who.sm;
  spec.ingress = {who.device};
  spec.bytes = region_bytes(src, src_reg);
  spec.msg_bytes = msg_bytes;
  Values folded = fold_all(src, src_reg, op);
  co_await eng.wait(eng.transfer(spec));
  if (folded && dst.has_storage()) dst.write(who.device, dst_reg, *folded);
}

des::Co all_reduce_region(Engine& eng, Issuer who, mem::Pgl& pgl, mem::Region reg, ReduceOp op, double msg_bytes) {
  check_group(who, "all_reduce");
  if (!pgl.has_multicast()) {
    throw ProtocolViolation("all_reduce on '" + pgl.name() + "' needs a multicast alias");
  }
  pgl.check_region(reg);
  TransferSpec pull;
  pull.mech = MechanismKind::RegisterOp;
  pull.func = Functionality::InFabricReduction;
  pull.shape = FlowShape::InFabricReduce;
  pull.issuer_device = who.device;
  pull.issuer_sm = who.sm;
  pull.ingress = {who.device};
  pull.bytes = region_bytes(pgl, reg);
  pull.msg_bytes = msg_bytes;
  Values folded = fold_all(pgl, reg, op);
  co_await eng.wait(eng.transfer(pull));

  TransferSpec push = pull;
  push.func = Functionality::InFabricBroadcast;
  push.shape = FlowShape::Multicast;
  push.egress = {who.device};
  push.ingress = members(all_devices(eng.num_devices()));
  mem::Pgl* out = &pgl;
  Token done = eng.transfer(push, [out, reg, folded] {
    if (!folded) return;
    for (int d = 0; d < out->num_devices(); ++d) out->write(d, reg, *folded);
  });
  co_await eng.wait(done);
}

Token store_async(Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::SharedTile& src, mem::TileCoord coord,
                  DeviceSet targets) {
  check_tma_message(eng, static_cast<double>(src.bytes()));
  mem::validate_tile_shape(src.rows, src.cols, src.element_bytes, eng.profile().shared_memory_bytes);
  auto values = std::make_shared<const std::vector<double>>(src.data);
  return store_region_async(eng, who, dst, mem::tile_region(coord, src.rows, src.cols),
                            dst.has_storage() ? values : nullptr, targets, false);
}

Token store_add_async(Engine& eng, const Issuer& who, mem::Pgl& dst, const mem::SharedTile& src,
                      mem::TileCoord coord, DeviceSet targets) {
  check_tma_message(eng, static_cast<double>(src.bytes()));
  mem::validate_tile_shape(src.rows, src.cols, src.element_bytes, eng.profile().shared_memory_bytes);
  auto values = std::make_shared<const std::vector<double>>(src.data);
  return store_region_async(eng, who, dst, mem::tile_region(coord, src.rows, src.cols),
                            dst.has_storage() ? values : nullptr, targets, true);
}

des::Co reduce(Engine& eng, Issuer who, mem::Pgl& dst, mem::TileCoord dst_coord, mem::Pgl& src,
               mem::TileCoord src_coord, ReduceOp op, int rows, int cols) {
  co_await reduce_region(eng, who, dst, mem::tile_region(dst_coord, rows, cols), src,
                         mem::tile_region(src_coord, rows, cols), op);
}

des::Co all_reduce(Engine& eng, Issuer who, mem::Pgl& pgl, mem::TileCoord coord, ReduceOp op, int rows, int cols) {
  co_await all_reduce_region(eng, who, pgl, mem::tile_region(coord, rows, cols), op);
}

void signal(Engine& eng, const Issuer& who, mem::BarrierField& bar, mem::TileCoord coord, int dst_dev,
            std::int64_t val) {
  bar.check_device(dst_dev);
  bar.check_region({coord.b, coord.d, coord.r, coord.c, 1, 1});
  const bool local = dst_dev == who.device;
  const double latency =
      des::sync_cost(local ? des::SyncKind::InterSmHbm : des::SyncKind::InterDevice, eng.profile());
  LogRecord r;
  r.kind = EventKind::Signal;
  r.src = who.device;
  r.dst_mask = only(dst_dev);
  r.bytes = 4;
  eng.record(r);
  LogRecord s;
  s.kind = local ? EventKind::SyncInterSm : EventKind::SyncInterDevice;
  s.src = who.device;
  s.dst_mask = only(dst_dev);
  s.bytes = latency;
  eng.record(s);
  eng.charge_sync(latency);
  mem::BarrierField* field = &bar;
  eng.schedule_after(latency, [&eng, field, dst_dev, coord, val] { eng.add_counter(*field, dst_dev, coord, val); });
}

void signal_all(Engine& eng, const Issuer& who, mem::BarrierField& bar, mem::TileCoord coord, std::int64_t val) {
  if (!bar.has_multicast()) {
    throw ProtocolViolation("signal_all on '" + bar.name() + "' needs a multicast alias");
  }
  bar.check_region({coord.b, coord.d, coord.r, coord.c, 1, 1});
  const double latency = des::sync_cost(des::SyncKind::InterDevice, eng.profile());
  const DeviceSet everyone = all_devices(eng.num_devices());
  LogRecord r;
  r.kind = EventKind::Signal;
  r.src = who.device;
  r.dst_mask = everyone;
  r.bytes = 4;
  eng.record(r);
  LogRecord s;
  s.kind = EventKind::SyncInterDevice;
  s.src = who.device;
  s.dst_mask = everyone;
  s.bytes = latency;
  eng.record(s);
  eng.charge_sync(latency);
  mem::BarrierField* field = &bar;
  eng.schedule_after(latency, [&eng, field, coord, val] {
    for (int d = 0; d < field->num_devices(); ++d) eng.add_counter(*field, d, coord, val);
  });
}

des::Co wait(Engine& eng, Issuer who, mem::BarrierField& bar, mem::TileCoord coord, int dev, std::int64_t expected) {
  if (expected < 0) throw InvalidArgument("wait needs a nonnegative expected count");
  co_await eng.wait_counter(bar, dev, coord, expected);
  LogRecord r;
  r.kind = EventKind::WaitDone;
  r.src = who.device;
  r.dst_mask = only(dev);
  r.bytes = static_cast<double>(expected);
  eng.record(r);
}

des::Co barrier(Engine& eng, Issuer who, mem::BarrierField& bar, mem::TileCoord coord, int dev) {
  signal_all(eng, who, bar, coord, 1);
  co_await wait(eng, who, bar, coord, dev, eng.num_devices());
}

Token element_load_async(Engine& eng, const Issuer& who, int peer, double bytes) {
  TransferSpec spec;
  spec.mech = MechanismKind::RegisterOp;
  spec.func = Functionality::ElementwiseTransfer;
  spec.shape = FlowShape::RemoteRead;
  spec.issuer_device = who.device;
  spec.issuer_sm = who.sm;
  spec.egress = {peer};
  spec.ingress = {who.device};
  spec.bytes = bytes;
  return eng.transfer(spec);
}

}  // namespace ovsim::prim
