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

#include "ovsim/lcsc.hpp"

#include <algorithm>
#include <deque>

namespace ovsim::lcsc {

using des::Co;
using des::Engine;
using des::Token;

std::string_view to_string(ScheduleMode m) {
  switch (m) {
    case ScheduleMode::IntraSm: return "intra-sm";
    case ScheduleMode::InterSm: return "inter-sm";
    case ScheduleMode::Hybrid: return "hybrid";
  }
  return "?";
}

ScheduleMode schedule_mode_from_string(std::string_view s) {
  if (s == "intra-sm" || s == "intra" || s == "IntraSm") return ScheduleMode::IntraSm;
  if (s == "inter-sm" || s == "inter" || s == "InterSm") return ScheduleMode::InterSm;
  if (s == "hybrid" || s == "Hybrid") return ScheduleMode::Hybrid;
  throw InvalidArgument("unknown schedule mode '" + std::string(s) + "'");
}

std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::LoadLocal: return "load_local";
    case OpKind::LoadRemote: return "load_remote";
    case OpKind::StoreLocal: return "store_local";
    case OpKind::StoreLocalAdd: return "store_local_add";
    case OpKind::StoreAsync: return "store_async";
    case OpKind::StoreAddAsync: return "store_add_async";
    case OpKind::Signal: return "signal";
    case OpKind::SignalAll: return "signal_all";
    case OpKind::Wait: return "wait";
    case OpKind::Barrier: return "barrier";
    case OpKind::Reduce: return "reduce";
    case OpKind::AllReduce: return "all_reduce";
  }
  return "?";
}

Op load_local(int pgl, mem::Region reg) {
  Op o;
  o.kind = OpKind::LoadLocal;
  o.pgl = pgl;
  o.region = reg;
  return o;
}

Op load_remote(int pgl, int device, mem::Region reg, int count) {
  Op o;
  o.kind = OpKind::LoadRemote;
  o.pgl = pgl;
  o.device = device;
  o.region = reg;
  o.count = count;
  return o;
}

namespace {

Op store_like(OpKind kind, int pgl, mem::Region reg, prim::DeviceSet targets, int src_pgl, mem::Region src,
              int count) {
  Op o;
  o.kind = kind;
  o.pgl = pgl;
  o.region = reg;
  o.targets = targets;
  o.src_pgl = src_pgl;
  o.src_region = src_pgl < 0 ? mem::Region{} : src;
  o.count = count;
  return o;
}

}  // namespace

Op store_local(int pgl, mem::Region reg, int src_pgl, mem::Region src) {
  return store_like(OpKind::StoreLocal, pgl, reg, 0, src_pgl, src, 1);
}

Op store_local_add(int pgl, mem::Region reg, int src_pgl, mem::Region src) {
  return store_like(OpKind::StoreLocalAdd, pgl, reg, 0, src_pgl, src, 1);
}

Op store_async(int pgl, mem::Region reg, prim::DeviceSet targets, int src_pgl, mem::Region src, int count) {
  return store_like(OpKind::StoreAsync, pgl, reg, targets, src_pgl, src, count);
}

Op store_add_async(int pgl, mem::Region reg, prim::DeviceSet targets, int src_pgl, mem::Region src, int count) {
  return store_like(OpKind::StoreAddAsync, pgl, reg, targets, src_pgl, src, count);
}

Op signal_op(int barrier, mem::TileCoord coord, int device, std::int64_t value) {
  Op o;
  o.kind = OpKind::Signal;
  o.barrier = barrier;
  o.coord = coord;
  o.device = device;
  o.value = value;
  return o;
}

Op signal_all_op(int barrier, mem::TileCoord coord, std::int64_t value) {
  Op o;
  o.kind = OpKind::SignalAll;
  o.barrier = barrier;
  o.coord = coord;
  o.value = value;
  return o;
}

Op wait_op(int barrier, mem::TileCoord coord, std::int64_t expected, int device) {
  Op o;
  o.kind = OpKind::Wait;
  o.barrier = barrier;
  o.coord = coord;
  o.device = device;
  o.value = expected;
  return o;
}

Op barrier_op(int barrier, mem::TileCoord coord) {
  Op o;
  o.kind = OpKind::Barrier;
  o.barrier = barrier;
  o.coord = coord;
  return o;
}

Op reduce_op(int dst, mem::Region dst_reg, int src, mem::Region src_reg, prim::ReduceOp op) {
  Op o;
  o.kind = OpKind::Reduce;
  o.pgl = dst;
  o.region = dst_reg;
  o.src_pgl = src;
  o.src_region = src_reg;
  o.reduce_op = op;
  return o;
}

Op all_reduce_op(int pgl, mem::Region reg, prim::ReduceOp op, int count) {
  Op o;
  o.kind = OpKind::AllReduce;
  o.pgl = pgl;
  o.region = reg;
  o.reduce_op = op;
  o.count = count;
  return o;
}

// ---------------------------------------------------------------------------

int KernelSpec::compute_sms(const hw::HardwareProfile& profile) const {
  return mode == ScheduleMode::IntraSm ? profile.sms_per_device : profile.sms_per_device - num_comm_sms;
}

void KernelSpec::validate(const hw::HardwareProfile& profile) const {
  if (pipeline_stages < 1) throw InvalidArgument("pipeline_stages must be at least 1");
  if (output_buffers < 1) throw InvalidArgument("output_buffers must be at least 1");
  if (num_comm_sms < 0 || num_comm_sms >= profile.sms_per_device) {
    throw InvalidArgument("num_comm_sms must lie in [0, " + std::to_string(profile.sms_per_device) + ")");
  }
  if (mode == ScheduleMode::IntraSm && (num_comm_sms != 0 || !comm.empty())) {
    throw InvalidArgument("intra-SM schedules have no communication SMs");
  }
  if (mode != ScheduleMode::IntraSm && !comm.empty() && num_comm_sms == 0) {
    throw InvalidArgument("communicator programs need at least one communication SM");
  }
  const int n = profile.num_devices;
  auto check_op = [&](const Op& o) {
    auto bad_pgl = [&](int i) { return i < 0 || i >= static_cast<int>(pgls.size()) || !pgls[i]; };
    auto bad_bar = [&](int i) { return i < 0 || i >= static_cast<int>(barriers.size()) || !barriers[i]; };
    switch (o.kind) {
      case OpKind::Signal:
      case OpKind::SignalAll:
      case OpKind::Wait:
      case OpKind::Barrier:
        if (bad_bar(o.barrier)) throw InvalidArgument(std::string(to_string(o.kind)) + " names no barrier");
        if (barriers[o.barrier]->num_devices() != n) throw InvalidArgument("barrier spans the wrong device count");
        break;
      default:
        if (bad_pgl(o.pgl)) throw InvalidArgument(std::string(to_string(o.kind)) + " names no layout");
        if (pgls[o.pgl]->num_devices() != n) throw InvalidArgument("layout spans the wrong device count");
        if (o.src_pgl >= 0 && bad_pgl(o.src_pgl)) throw InvalidArgument("source layout index out of range");
        break;
    }
    if (o.count < 1) throw InvalidArgument("message count must be positive");
  };
  for (const auto& t : compute) {
    if (t.device < 0 || t.device >= n) throw InvalidArgument("compute task device out of range");
    if (t.out_rows <= 0 || t.out_cols <= 0 || t.flops < 0 || t.load_bytes < 0) {
      throw InvalidArgument("compute task extents must be positive");
    }
    for (const auto& o : t.loads) check_op(o);
    for (const auto& o : t.stores) check_op(o);
  }
  for (const auto& c : comm) {
    if (c.device < 0 || c.device >= n) throw InvalidArgument("communicator device out of range");
    for (const auto& o : c.ops) check_op(o);
  }
}

KernelSpec strip_communication(const KernelSpec& spec) {
  KernelSpec out;
  out.name = spec.name + "/compute-only";
  out.mode = ScheduleMode::IntraSm;
  out.pipeline_stages = spec.pipeline_stages;
  out.output_buffers = spec.output_buffers;
  out.tile_m = spec.tile_m;
  out.tile_n = spec.tile_n;
  out.tile_k = spec.tile_k;
  out.pgls = spec.pgls;
  out.barriers = spec.barriers;
  for (const auto& t : spec.compute) {
    ComputeTask c = t;
    c.loads.clear();
    c.stores.clear();
    for (const auto& o : t.loads) {
      if (o.kind == OpKind::LoadLocal) {
        c.loads.push_back(o);
      } else if (o.kind == OpKind::LoadRemote) {
        c.load_bytes += static_cast<double>(o.region.elements()) * spec.pgls[o.pgl]->element_bytes();
      }
    }
    for (const auto& o : t.stores) {
      if (o.kind == OpKind::StoreLocal || o.kind == OpKind::StoreLocalAdd) c.stores.push_back(o);
    }
    out.compute.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

struct Input {
  prim::Values values;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
};

struct Stage {
  std::vector<Input> inputs;
};

using Tile = std::shared_ptr<const std::vector<double>>;

/// Per-actor state shared by the op interpreter.
struct Ctx {
  int device = 0;
  int sm = 0;
  int group_width = 1;
  std::vector<Token> outstanding;
  std::vector<Input> inputs;
  Tile out;
  int out_rows = 0;
  int out_cols = 0;
};

struct Run {
  Run(const KernelSpec& s, const hw::HardwareProfile& p, const ExecOptions& o)
      : spec(s),
        profile(p),
        opts(o),
        eng(p, des::EngineOptions{o.seed, o.overheads, o.record_log, false}),
        sm_flop_rate(p.tensor_throughput / p.sms_per_device * 1e-9),
        sm_hbm_rate(p.hbm_bandwidth / p.sms_per_device * 1e-9),
        sm_flops(p.num_devices, std::vector<double>(p.sms_per_device, 0.0)),
        hbm_bytes(p.num_devices, 0.0) {}

  const KernelSpec& spec;
  const hw::HardwareProfile& profile;
  ExecOptions opts;
  std::deque<des::Channel<Stage>> stage_q;
  std::deque<des::Channel<Tile>> out_q;
  std::deque<des::Channel<int>> credit_q;
  std::deque<std::vector<int>> task_lists;
  std::deque<std::string> names;
  Engine eng;
  double sm_flop_rate;  // flop/ns
  double sm_hbm_rate;   // bytes/ns
  std::vector<std::vector<double>> sm_flops;
  std::vector<double> hbm_bytes;

  mem::Pgl& pgl(int i) const { return *spec.pgls[i]; }
  mem::BarrierField& bar(int i) const { return *spec.barriers[i]; }
  bool functional(const mem::Pgl& p) const { return opts.functional && p.has_storage(); }
};

double region_bytes(const mem::Pgl& p, const mem::Region& r) {
  return static_cast<double>(r.elements()) * p.element_bytes();
}

Co drain(Engine& eng, Ctx& ctx) {
  while (!ctx.outstanding.empty()) {
    Token t = std::move(ctx.outstanding.back());
    ctx.outstanding.pop_back();
    co_await eng.wait(std::move(t));
  }
}

Co hbm_delay(Run& run, int device, double bytes) {
  run.hbm_bytes[device] += bytes;
  co_await run.eng.sleep(bytes / run.sm_hbm_rate);
}

/// Values an op stores: the SM's output tile or a region of a local layout.
prim::Values source_values(Run& run, Ctx& ctx, const Op& op) {
  const mem::Pgl& dst = run.pgl(op.pgl);
  if (op.src_pgl < 0) {
    if (op.region.rows != ctx.out_rows || op.region.cols != ctx.out_cols) {
      throw InvalidArgument("tile-grid mismatch: " + std::string(to_string(op.kind)) + " of " +
                            std::to_string(op.region.rows) + "x" + std::to_string(op.region.cols) +
                            " from a " + std::to_string(ctx.out_rows) + "x" + std::to_string(ctx.out_cols) +
                            " output tile");
    }
    return run.functional(dst) ? ctx.out : nullptr;
  }
  const mem::Pgl& src = run.pgl(op.src_pgl);
  if (op.src_region.elements() != op.region.elements()) {
    throw InvalidArgument("tile-grid mismatch between source and destination regions");
  }
  if (!run.functional(src) || !run.functional(dst)) return nullptr;
  return std::make_shared<const std::vector<double>>(src.read(ctx.device, op.src_region));
}

Co exec_op(Run& run, Ctx& ctx, const Op& op) {
  Engine& eng = run.eng;
  const prim::Issuer who{ctx.device, ctx.sm, ctx.group_width};
  switch (op.kind) {
    case OpKind::LoadLocal: {
      mem::Pgl& p = run.pgl(op.pgl);
      p.check_region(op.region);
      prim::Values v;
      if (run.functional(p)) v = std::make_shared<const std::vector<double>>(p.read(ctx.device, op.region));
      co_await hbm_delay(run, ctx.device, op.bytes >= 0 ? op.bytes : region_bytes(p, op.region));
      ctx.inputs.push_back({v, op.region.rows, op.region.cols});
      break;
    }
    case OpKind::LoadRemote: {
      mem::Pgl& p = run.pgl(op.pgl);
      auto [tok, v] = prim::load_remote_async(eng, who, p, op.device, op.region, region_bytes(p, op.region) / op.count);
      ctx.outstanding.push_back(tok);
      ctx.inputs.push_back({run.functional(p) ? v : nullptr, op.region.rows, op.region.cols});
      break;
    }
    case OpKind::StoreLocal:
    case OpKind::StoreLocalAdd: {
      mem::Pgl& p = run.pgl(op.pgl);
      p.check_region(op.region);
      prim::Values v = source_values(run, ctx, op);
      co_await hbm_delay(run, ctx.device, op.bytes >= 0 ? op.bytes : region_bytes(p, op.region));
      if (v) {
        if (op.kind == OpKind::StoreLocal) {
          p.write(ctx.device, op.region, *v);
        } else {
          p.add(ctx.device, op.region, *v);
        }
      }
      break;
    }
    case OpKind::StoreAsync:
    case OpKind::StoreAddAsync: {
      mem::Pgl& p = run.pgl(op.pgl);
      prim::Values v = source_values(run, ctx, op);
      ctx.outstanding.push_back(prim::store_region_async(eng, who, p, op.region, v, op.targets,
                                                         op.kind == OpKind::StoreAddAsync,
                                                         region_bytes(p, op.region) / op.count));
      break;
    }
    case OpKind::Signal:
      co_await drain(eng, ctx);
      prim::signal(eng, who, run.bar(op.barrier), op.coord, op.device < 0 ? ctx.device : op.device, op.value);
      break;
    case OpKind::SignalAll:
      co_await drain(eng, ctx);
      prim::signal_all(eng, who, run.bar(op.barrier), op.coord, op.value);
      break;
    case OpKind::Wait:
      co_await prim::wait(eng, who, run.bar(op.barrier), op.coord, op.device < 0 ? ctx.device : op.device,
                          op.value);
      break;
    case OpKind::Barrier:
      co_await drain(eng, ctx);
      co_await prim::barrier(eng, who, run.bar(op.barrier), op.coord, ctx.device);
      break;
    case OpKind::Reduce: {
      mem::Pgl& dst = run.pgl(op.pgl);
      mem::Pgl& src = run.pgl(op.src_pgl);
      co_await prim::reduce_region(eng, who, dst, op.region, src, op.src_region, op.reduce_op,
                                   region_bytes(src, op.src_region) / op.count);
      break;
    }
    case OpKind::AllReduce: {
      mem::Pgl& p = run.pgl(op.pgl);
      co_await prim::all_reduce_region(eng, who, p, op.region, op.reduce_op, region_bytes(p, op.region) / op.count);
      break;
    }
  }
}

Tile fold_inputs(const ComputeTask& t, const std::vector<Input>& inputs) {
  std::vector<double> out(static_cast<std::size_t>(t.out_rows) * t.out_cols, 0.0);
  for (const Input& in : inputs) {
    if (!in.values) return nullptr;
    if (in.rows % t.out_rows != 0 || in.cols % t.out_cols != 0) {
      throw InvalidArgument("tile-grid mismatch: loaded " + std::to_string(in.rows) + "x" + std::to_string(in.cols) +
                            " does not fold onto a " + std::to_string(t.out_rows) + "x" +
                            std::to_string(t.out_cols) + " tile");
    }
    const auto& v = *in.values;
    for (std::int64_t i = 0; i < in.rows; ++i) {
      double* row = &out[static_cast<std::size_t>(i % t.out_rows) * t.out_cols];
      const double* src = &v[static_cast<std::size_t>(i) * in.cols];
      for (std::int64_t j = 0; j < in.cols; ++j) row[j % t.out_cols] += src[j];
    }
  }
  if (t.synth) {
    if (t.synth->size() != out.size()) throw InvalidArgument("synthetic tile does not match the output tile");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*t.synth)[i];
  }
  for (double& x : out) x = t.scale * x + t.bias;
  return std::make_shared<const std::vector<double>>(std::move(out));
}

Co loader(Run& run, int dev, int sm, const std::vector<int>& tasks, des::Channel<Stage>& q) {
  Ctx ctx{dev, sm, 1, {}, {}, nullptr, 0, 0};
  for (int ti : tasks) {
    const ComputeTask& t = run.spec.compute[ti];
    ctx.inputs.clear();
    for (const Op& op : t.loads) co_await exec_op(run, ctx, op);
    if (t.load_bytes > 0) co_await hbm_delay(run, dev, t.load_bytes);
    co_await drain(run.eng, ctx);
    Stage st{std::move(ctx.inputs)};
    co_await q.push(std::move(st));
  }
}

Co consumer(Run& run, int dev, int sm, const std::vector<int>& tasks, des::Channel<Stage>& in,
            des::Channel<Tile>& out, des::Channel<int>& credits) {
  bool values = run.opts.functional;
  for (int ti : tasks) {
    const ComputeTask& t = run.spec.compute[ti];
    Stage st = co_await in.pop();
    if (t.flops > 0) {
      des::LogRecord r;
      r.kind = des::EventKind::Compute;
      r.src = dev;
      r.sm = sm;
      r.bytes = t.flops;
      run.eng.record(r);
      run.sm_flops[dev][sm] += t.flops;
      co_await run.eng.sleep(t.flops / run.sm_flop_rate);
    }
    co_await credits.pop();
    Tile tile = values ? fold_inputs(t, st.inputs) : nullptr;
    co_await out.push(std::move(tile));
  }
}

Co storer(Run& run, int dev, int sm, const std::vector<int>& tasks, des::Channel<Tile>& in,
          des::Channel<int>& credits) {
  Ctx ctx{dev, sm, prim::kWarpWidth, {}, {}, nullptr, 0, 0};
  const double handoff = des::sync_cost(des::SyncKind::IntraSmBarrier, run.profile);
  for (int ti : tasks) {
    const ComputeTask& t = run.spec.compute[ti];
    ctx.out = co_await in.pop();
    ctx.out_rows = t.out_rows;
    ctx.out_cols = t.out_cols;
    des::LogRecord r;
    r.kind = des::EventKind::SyncIntra;
    r.src = dev;
    r.sm = sm;
    r.bytes = handoff;
    run.eng.record(r);
    run.eng.charge_sync(handoff);
    for (const Op& op : t.stores) co_await exec_op(run, ctx, op);
    co_await drain(run.eng, ctx);
    co_await credits.push(1);
  }
}

Co communicator(Run& run, int dev, int sm, const std::vector<int>& tasks) {
  Ctx ctx{dev, sm, 4 * prim::kWarpWidth, {}, {}, nullptr, 0, 0};
  for (int ti : tasks) {
    for (const Op& op : run.spec.comm[ti].ops) co_await exec_op(run, ctx, op);
    co_await drain(run.eng, ctx);
  }
}

}  // namespace

ExecResult execute_kernel(const KernelSpec& spec, const hw::HardwareProfile& profile, const ExecOptions& opts) {
  spec.validate(profile);
  Run run(spec, profile, opts);
  const int n = profile.num_devices;
  const int csms = spec.compute_sms(profile);
  const double t0 = profile.launch_overhead_ns;
  const double intra = des::sync_cost(des::SyncKind::IntraSmBarrier, profile);

  std::vector<std::vector<std::vector<int>>> per_sm(n, std::vector<std::vector<int>>(csms));
  std::vector<int> seen(n, 0);
  for (int i = 0; i < static_cast<int>(spec.compute.size()); ++i) {
    int d = spec.compute[i].device;
    per_sm[d][seen[d]++ % csms].push_back(i);
  }
  for (int d = 0; d < n; ++d) {
    for (int s = 0; s < csms; ++s) {
      if (per_sm[d][s].empty()) continue;
      const auto& tasks = run.task_lists.emplace_back(std::move(per_sm[d][s]));
      std::string tag = "dev" + std::to_string(d) + "/sm" + std::to_string(s);
      auto& sq = run.stage_q.emplace_back(run.eng, spec.pipeline_stages, intra, tag + "/stages");
      auto& oq = run.out_q.emplace_back(run.eng, 1, intra, tag + "/output");
      auto& cq = run.credit_q.emplace_back(run.eng, spec.output_buffers, intra, tag + "/credits");
      for (int b = 0; b < spec.output_buffers; ++b) cq.preload(1);
      run.eng.spawn(tag + "/loader", loader(run, d, s, tasks, sq), t0);
      run.eng.spawn(tag + "/consumer", consumer(run, d, s, tasks, sq, oq, cq), t0);
      run.eng.spawn(tag + "/storer", storer(run, d, s, tasks, oq, cq), t0);
    }
  }
  if (!spec.comm.empty()) {
    std::vector<std::vector<std::vector<int>>> comm_sm(n, std::vector<std::vector<int>>(spec.num_comm_sms));
    std::fill(seen.begin(), seen.end(), 0);
    for (int i = 0; i < static_cast<int>(spec.comm.size()); ++i) {
      int d = spec.comm[i].device;
      comm_sm[d][seen[d]++ % spec.num_comm_sms].push_back(i);
    }
    for (int d = 0; d < n; ++d) {
      for (int c = 0; c < spec.num_comm_sms; ++c) {
        if (comm_sm[d][c].empty()) continue;
        const auto& tasks = run.task_lists.emplace_back(std::move(comm_sm[d][c]));
        int sm = csms + c;
        run.eng.spawn("dev" + std::to_string(d) + "/sm" + std::to_string(sm) + "/comm",
                      communicator(run, d, sm, tasks), t0);
      }
    }
  }

  const double end = run.eng.run_until_idle();

  ExecResult res;
  CostReport& rep = res.report;
  rep.t_launch = t0;
  rep.t_total = std::max(end, t0);
  const double rate = profile.tensor_throughput * csms / profile.sms_per_device * 1e-9;
  for (int d = 0; d < n; ++d) {
    double f = 0.0;
    for (double x : run.sm_flops[d]) f += x;
    rep.total_flops += f;
    rep.t_comp = std::max(rep.t_comp, f / rate);
    rep.t_mem = std::max(rep.t_mem, run.hbm_bytes[d] / (profile.hbm_bandwidth * 1e-9));
  }
  for (double b : run.eng.stats().port_charged_bytes) rep.t_comm = std::max(rep.t_comm, b / (profile.link_bandwidth * 1e-9));
  for (const auto& a : run.eng.actors()) rep.t_sync = std::max(rep.t_sync, a.sync_ns);
  rep.t_non_overlap =
      std::max(0.0, rep.t_total - std::max({rep.t_comp, rep.t_mem, rep.t_comm}) - rep.t_launch - rep.t_sync);
  rep.achieved_flops = rep.total_flops / (rep.t_total * 1e-9);
  rep.comm_ratio = rep.t_non_overlap / rep.t_total;
  if (opts.with_baseline) {
    ExecOptions bopts = opts;
    bopts.record_log = false;
    bopts.functional = false;
    bopts.with_baseline = false;
    rep.t_baseline = execute_kernel(strip_communication(spec), profile, bopts).report.t_total;
    rep.comm_ratio = std::max(0.0, (rep.t_total - rep.t_baseline) / rep.t_total);
  }
  res.stats = run.eng.stats();
  res.log = std::move(run.eng.log());
  res.sm_flops = std::move(run.sm_flops);
  return res;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ReusePolicy p) {
  switch (p) {
    case ReusePolicy::NoTransfer: return "none";
    case ReusePolicy::DirectRemoteRead: return "direct-remote-read";
    case ReusePolicy::StageToLocalHbm: return "stage-to-local-hbm";
  }
  return "?";
}

double reuse_cost(ReusePolicy p, int k, double bytes, const hw::HardwareProfile& profile) {
  if (k < 0 || bytes < 0) throw InvalidArgument("reuse count and bytes must be nonnegative");
  const double link = bytes / profile.link_bandwidth;
  const double hbm = bytes / profile.hbm_bandwidth;
  switch (p) {
    case ReusePolicy::NoTransfer: return 0.0;
    case ReusePolicy::DirectRemoteRead: return k * link;
    case ReusePolicy::StageToLocalHbm: return k == 0 ? 0.0 : link + k * hbm;
  }
  return 0.0;
}

ReusePolicy remote_reuse_policy(int k, double bytes, const hw::HardwareProfile& profile) {
  if (k == 0) return ReusePolicy::NoTransfer;
  double direct = reuse_cost(ReusePolicy::DirectRemoteRead, k, bytes, profile);
  double stage = reuse_cost(ReusePolicy::StageToLocalHbm, k, bytes, profile);
  return stage < direct ? ReusePolicy::StageToLocalHbm : ReusePolicy::DirectRemoteRead;
}

}  // namespace ovsim::lcsc
