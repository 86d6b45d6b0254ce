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

// GEMM-shaped workloads: GEMM+RS, GEMM+AR, AG+GEMM and MoE dispatch+GEMM.
// The value model replaces each output tile's arithmetic with seeded
// integers (synth), so reductions stay exactly checkable.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "workloads_internal.hpp"

namespace ovsim::wl::detail {

using lcsc::ComputeTask;
using lcsc::CommTask;
using lcsc::ScheduleMode;
using mem::Region;

namespace {

bool via_comm(ScheduleMode mode, std::int64_t idx) {
  return mode == ScheduleMode::InterSm || (mode == ScheduleMode::Hybrid && idx % 2 == 1);
}

void add_tile(std::vector<double>& buf, std::int64_t ld, std::int64_t r0, std::int64_t c0, int T,
              const std::vector<double>& tile) {
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) buf[(r0 + i) * ld + c0 + j] += tile[static_cast<std::size_t>(i) * T + j];
  }
}

}  // namespace

Instance build_gemm_rs(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  const int n = B.n, T = B.T;
  check_divides(d.m, static_cast<std::int64_t>(n) * T, "GEMM+RS rows over devices and tiles");
  check_divides(d.n, T, "GEMM+RS columns over tiles");
  if (d.k <= 0) throw InvalidArgument("GEMM+RS needs a positive k");
  const std::int64_t tr = d.m / T, tc = d.n / T, shard = tr / n;

  const int out = B.add_pgl("out", {1, 1, d.m / n, d.n});
  int stage = -1, ready = -1;
  if (B.mode != ScheduleMode::IntraSm) {
    stage = B.add_pgl("stage", {1, 1, d.m, d.n});
    ready = B.add_barrier("ready", {1, 1, tr, tc});
  }
  const double flops = 2.0 * T * T * d.k;
  const double share = static_cast<double>(d.m * d.k + d.k * d.n) * B.s / static_cast<double>(tr * tc);
  std::vector<std::vector<double>> want;
  if (w.functional) want.assign(n, std::vector<double>(static_cast<std::size_t>(d.m / n * d.n), 0.0));

  for (int dev = 0; dev < n; ++dev) {
    std::int64_t idx = 0;
    for (int j = 1; j <= n; ++j) {
      const int o = (dev + j) % n;
      for (std::int64_t i = o * shard; i < (o + 1) * shard; ++i) {
        for (std::int64_t c = 0; c < tc; ++c, ++idx) {
          ComputeTask t;
          t.device = dev;
          t.out_rows = t.out_cols = T;
          t.flops = flops;
          t.load_bytes = share;
          t.synth = B.synth(dev, i, c, T, T);
          const Region tile{0, 0, i * T, c * T, T, T};
          const Region dst{0, 0, (i - o * shard) * T, c * T, T, T};
          if (!via_comm(B.mode, idx)) {
            t.stores.push_back(o != dev ? lcsc::store_add_async(out, dst, prim::only(o)) : lcsc::store_local_add(out, dst));
          } else {
            t.stores.push_back(lcsc::store_local(stage, tile));
            t.stores.push_back(lcsc::signal_op(ready, {0, 0, i, c}, dev));
            CommTask ct{dev, {lcsc::wait_op(ready, {0, 0, i, c}, 1)}};
            ct.ops.push_back(o != dev ? lcsc::store_add_async(out, dst, prim::only(o), stage, tile)
                                      : lcsc::store_local_add(out, dst, stage, tile));
            B.inst.kernel.comm.push_back(std::move(ct));
          }
          if (w.functional) add_tile(want[o], d.n, dst.r0, dst.c0, T, *t.synth);
          B.inst.kernel.compute.push_back(std::move(t));
        }
      }
    }
  }
  B.inst.link_bytes_per_device = (n - 1.0) / n * static_cast<double>(d.m * d.n) * B.s;
  B.inst.total_flops = 2.0 * static_cast<double>(d.m) * d.n * d.k * n;
  B.finish_partition(balanced_comm_sms(B.inst.total_flops / n, B.inst.link_bytes_per_device,
                                       static_cast<double>(T) * T * B.s, hw::MechanismKind::Tma, p));
  B.expect(out, std::move(want));
  return std::move(B.inst);
}

Instance build_gemm_ar(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  const int n = B.n, T = B.T;
  check_divides(d.m, T, "GEMM+AR rows over tiles");
  check_divides(d.n, T, "GEMM+AR columns over tiles");
  if (d.k <= 0) throw InvalidArgument("GEMM+AR needs a positive k");
  const std::int64_t tr = d.m / T, tc = d.n / T;

  const int out = B.add_pgl("out", {1, 1, d.m, d.n}, true);
  int ready = -1;
  if (B.mode != ScheduleMode::IntraSm) ready = B.add_barrier("ready", {1, 1, tr, tc});
  const double flops = 2.0 * T * T * d.k;
  const double share = static_cast<double>(d.m * d.k + d.k * d.n) * B.s / static_cast<double>(tr * tc);
  std::vector<double> sum;
  if (w.functional) sum.assign(static_cast<std::size_t>(d.m * d.n), 0.0);

  for (int dev = 0; dev < n; ++dev) {
    for (std::int64_t idx = 0; idx < tr * tc; ++idx) {
      const std::int64_t i = idx / tc, c = idx % tc;
      ComputeTask t;
      t.device = dev;
      t.out_rows = t.out_cols = T;
      t.flops = flops;
      t.load_bytes = share;
      t.synth = B.synth(dev, i, c, T, T);
      const Region tile{0, 0, i * T, c * T, T, T};
      if (!via_comm(B.mode, idx)) {
        t.stores.push_back(lcsc::store_add_async(out, tile, prim::all_devices(n)));
      } else {
        t.stores.push_back(lcsc::store_local(out, tile));
        t.stores.push_back(lcsc::signal_op(ready, {0, 0, i, c}, static_cast<int>(idx % n)));
      }
      if (w.functional) add_tile(sum, d.n, tile.r0, tile.c0, T, *t.synth);
      B.inst.kernel.compute.push_back(std::move(t));
    }
  }
  for (std::int64_t idx = 0; idx < tr * tc; ++idx) {
    if (!via_comm(B.mode, idx)) continue;
    const std::int64_t i = idx / tc, c = idx % tc;
    B.inst.kernel.comm.push_back(CommTask{static_cast<int>(idx % n),
                                          {lcsc::wait_op(ready, {0, 0, i, c}, n),
                                           lcsc::all_reduce_op(out, {0, 0, i * T, c * T, T, T})}});
  }
  const double bytes = static_cast<double>(d.m * d.n) * B.s;
  B.inst.link_bytes_per_device = B.mode == ScheduleMode::IntraSm ? n * bytes : (1.0 + 1.0 / n) * bytes;
  B.inst.total_flops = 2.0 * static_cast<double>(d.m) * d.n * d.k * n;
  B.finish_partition(balanced_comm_sms(B.inst.total_flops / n, (1.0 + 1.0 / n) * bytes,
                                       static_cast<double>(T) * T * B.s, hw::MechanismKind::RegisterOp, p));
  B.expect(out, std::vector<std::vector<double>>(w.functional ? n : 0, sum));
  return std::move(B.inst);
}

Instance build_ag_gemm(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  const int n = B.n, T = B.T;
  check_divides(d.m, static_cast<std::int64_t>(n) * T, "AG+GEMM rows over devices and tiles");
  check_divides(d.n, static_cast<std::int64_t>(n) * T, "AG+GEMM columns over devices and tiles");
  check_divides(d.k, T, "AG+GEMM reduction extent over tiles");
  const std::int64_t tr = d.m / T, shard = tr / n, ncols = d.n / n, tc = ncols / T;
  const bool inter = B.mode != ScheduleMode::IntraSm;

  const int a = B.add_pgl("a", {1, 1, d.m, d.k}, inter);
  const int out = B.add_pgl("out", {1, 1, d.m, ncols});
  int ready = -1;
  if (inter) ready = B.add_barrier("ready", {1, 1, tr, 1}, true);
  for (int dev = 0; dev < n; ++dev) B.seed_region(a, dev, {0, 0, dev * shard * T, 0, shard * T, d.k}, 1);

  const double flops = 2.0 * T * T * d.k;
  const double share = static_cast<double>(d.m * d.k + d.k * ncols) * B.s / static_cast<double>(tr * tc);
  const int msgs = static_cast<int>(d.k / T);
  auto rows = [&](std::int64_t i) { return Region{0, 0, i * T, 0, T, d.k}; };

  if (inter) {
    prim::DeviceSet everyone = prim::all_devices(n);
    for (int dev = 0; dev < n; ++dev) {
      for (std::int64_t bi = 0; bi < shard; ++bi) {
        const std::int64_t i = dev * shard + bi;
        for (int q = 0; q < msgs; ++q) {
          const Region piece{0, 0, i * T, q * T, T, T};
          B.inst.kernel.comm.push_back(CommTask{
              dev,
              {lcsc::store_async(a, piece, everyone & ~prim::only(dev), a, piece),
               lcsc::signal_all_op(ready, {0, 0, i, 0})}});
        }
      }
    }
  }

  std::vector<std::vector<double>> want_out, want_a;
  std::vector<double> gathered;
  if (w.functional) {
    want_out.assign(n, std::vector<double>(static_cast<std::size_t>(d.m * ncols), 0.0));
    gathered.assign(static_cast<std::size_t>(d.m * d.k), 0.0);
    for (int o = 0; o < n; ++o) {
      Region r{0, 0, o * shard * T, 0, shard * T, d.k};
      auto v = B.pgl(a).read(o, r);
      std::copy(v.begin(), v.end(), gathered.begin() + r.r0 * d.k);
    }
  }

  for (int dev = 0; dev < n; ++dev) {
    std::vector<std::int64_t> order;
    for (std::int64_t bi = 0; bi < shard; ++bi) order.push_back(dev * shard + bi);
    for (std::int64_t bi = 0; bi < shard; ++bi) {
      for (int j = 1; j < n; ++j) order.push_back(((dev + j) % n) * shard + bi);
    }
    for (std::int64_t i : order) {
      const int owner = static_cast<int>(i / shard);
      for (std::int64_t c = 0; c < tc; ++c) {
        ComputeTask t;
        t.device = dev;
        t.out_rows = t.out_cols = T;
        t.flops = flops;
        t.synth = B.synth(dev, i, c, T, T);
        if (owner == dev || inter) {
          if (owner != dev) t.loads.push_back(lcsc::wait_op(ready, {0, 0, i, 0}, msgs));
          lcsc::Op ld = lcsc::load_local(a, rows(i));
          ld.bytes = share;
          t.loads.push_back(ld);
        } else {
          t.loads.push_back(lcsc::load_remote(a, owner, rows(i), msgs));
        }
        const Region dst{0, 0, i * T, c * T, T, T};
        t.stores.push_back(lcsc::store_local(out, dst));
        if (w.functional) {
          std::vector<double> acc(*t.synth);
          std::vector<double> block(gathered.begin() + i * T * d.k, gathered.begin() + (i + 1) * T * d.k);
          Builder::fold_into(acc, T, T, block, T, d.k);
          for (int r = 0; r < T; ++r) {
            for (int q = 0; q < T; ++q) want_out[dev][(dst.r0 + r) * ncols + dst.c0 + q] = acc[r * T + q];
          }
        }
        B.inst.kernel.compute.push_back(std::move(t));
      }
    }
  }
  const double gathered_bytes = static_cast<double>(d.m * d.k) * B.s;
  B.inst.link_bytes_per_device = (n - 1.0) / n * gathered_bytes * (inter ? 1.0 : static_cast<double>(tc));
  B.inst.total_flops = 2.0 * static_cast<double>(d.m) * d.n * d.k;
  B.inst.reuse = lcsc::remote_reuse_policy(static_cast<int>(tc), static_cast<double>(T) * d.k * B.s, p);
  B.finish_partition(balanced_comm_sms(B.inst.total_flops / n, (n - 1.0) / n * gathered_bytes,
                                       static_cast<double>(T) * T * B.s, hw::MechanismKind::Tma, p));
  B.expect(out, std::move(want_out));
  if (w.functional && inter) {
    want_a.assign(n, gathered);
    B.expect(a, std::move(want_a));
  }
  return std::move(B.inst);
}

// ---------------------------------------------------------------------------

Instance build_moe(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  require_comm_sms(B, "MoE dispatch");
  const Dims& d = w.dims;
  const int n = B.n, T = B.T;
  if (d.m <= 0 || d.top_k <= 0 || d.experts <= 0) throw InvalidArgument("MoE needs tokens, top_k and experts");
  if (d.top_k > d.experts) throw InvalidArgument("MoE top_k exceeds the expert count");
  check_divides(d.experts, n, "experts over devices");
  check_divides(d.hidden, T, "MoE hidden size over tiles");
  check_divides(d.expert_hidden, T, "MoE expert hidden size over tiles");
  const int E = d.experts, epd = E / n;
  const std::int64_t H = d.hidden, He = d.expert_hidden;

  // Routing: top_k distinct experts per token, weight (x+1)^-skew.
  std::vector<std::vector<std::int64_t>> cnt(n, std::vector<std::int64_t>(E, 0));
  std::vector<double> weight(E);
  for (int x = 0; x < E; ++x) weight[x] = std::pow(x + 1.0, -d.skew);
  for (int dev = 0; dev < n; ++dev) {
    std::mt19937_64 rng(mix(w.seed, 77, dev));
    std::discrete_distribution<int> pick(weight.begin(), weight.end());
    for (std::int64_t tok = 0; tok < d.m; ++tok) {
      std::set<int> chosen;
      while (static_cast<int>(chosen.size()) < d.top_k) chosen.insert(pick(rng));
      for (int x : chosen) ++cnt[dev][x];
    }
  }
  std::vector<std::int64_t> cap(E, 0), seg(E, 0);
  std::vector<std::vector<std::int64_t>> pre(n, std::vector<std::int64_t>(E, 0)), src(n, std::vector<std::int64_t>(E, 0));
  std::int64_t rmax = T;
  for (int e = 0; e < n; ++e) {
    std::int64_t off = 0;
    for (int xl = 0; xl < epd; ++xl) {
      const int x = e * epd + xl;
      std::int64_t tot = 0;
      for (int dev = 0; dev < n; ++dev) {
        pre[dev][x] = tot;
        tot += cnt[dev][x];
      }
      cap[x] = (tot + T - 1) / T * T;
      seg[x] = off;
      off += cap[x];
    }
    rmax = std::max(rmax, off);
  }
  for (int dev = 0; dev < n; ++dev) {
    std::int64_t off = 0;
    for (int x = 0; x < E; ++x) {
      src[dev][x] = off;
      off += cnt[dev][x];
    }
  }

  const std::int64_t rin = d.m * d.top_k;
  const int xin = B.add_pgl("x", {1, 1, rin, H});
  const int recv = B.add_pgl("recv", {1, 1, rmax, H});
  const int y = B.add_pgl("y", {1, 1, rmax, He});
  const int arrived = B.add_barrier("arrived", {1, 1, epd, 1});
  for (int dev = 0; dev < n; ++dev) B.seed_buffer(xin, dev, 2);

  for (int dev = 0; dev < n; ++dev) {
    for (int xl = 0; xl < epd; ++xl) {
      for (int j = 1; j <= n; ++j) {
        const int e = (dev + j) % n;
        const int x = e * epd + xl;
        CommTask ct{dev, {}};
        const std::int64_t c = cnt[dev][x];
        if (c > 0) {
          const Region to{0, 0, seg[x] + pre[dev][x], 0, c, H};
          const Region from{0, 0, src[dev][x], 0, c, H};
          ct.ops.push_back(e != dev ? lcsc::store_async(recv, to, prim::only(e), xin, from, B.messages(c * H))
                                    : lcsc::store_local(recv, to, xin, from));
        }
        ct.ops.push_back(lcsc::signal_op(arrived, {0, 0, xl, 0}, e));
        B.inst.kernel.comm.push_back(std::move(ct));
      }
    }
  }

  std::vector<std::vector<double>> want_recv, want_y;
  if (w.functional) {
    want_recv.assign(n, std::vector<double>(static_cast<std::size_t>(rmax * H), 0.0));
    want_y.assign(n, std::vector<double>(static_cast<std::size_t>(rmax * He), 0.0));
    for (int dev = 0; dev < n; ++dev) {
      for (int x = 0; x < E; ++x) {
        if (cnt[dev][x] == 0) continue;
        auto v = B.pgl(xin).read(dev, {0, 0, src[dev][x], 0, cnt[dev][x], H});
        std::copy(v.begin(), v.end(), want_recv[x / epd].begin() + (seg[x] + pre[dev][x]) * H);
      }
    }
  }

  const std::int64_t ct_n = He / T;
  double flops_total = 0.0;
  for (int e = 0; e < n; ++e) {
    for (int xl = 0; xl < epd; ++xl) {
      const int x = e * epd + xl;
      const std::int64_t rt_n = cap[x] / T;
      if (rt_n == 0) continue;
      const double share = static_cast<double>(cap[x] * H + H * He) * B.s / static_cast<double>(rt_n * ct_n);
      for (std::int64_t rt = 0; rt < rt_n; ++rt) {
        for (std::int64_t c = 0; c < ct_n; ++c) {
          ComputeTask t;
          t.device = e;
          t.out_rows = t.out_cols = T;
          t.flops = 2.0 * T * T * H;
          t.synth = B.synth(e, x, rt * ct_n + c, T, T);
          t.loads.push_back(lcsc::wait_op(arrived, {0, 0, xl, 0}, n));
          lcsc::Op ld = lcsc::load_local(recv, {0, 0, seg[x] + rt * T, 0, T, H});
          ld.bytes = share;
          t.loads.push_back(ld);
          const Region dst{0, 0, seg[x] + rt * T, c * T, T, T};
          t.stores.push_back(lcsc::store_local(y, dst));
          flops_total += t.flops;
          if (w.functional) {
            std::vector<double> acc(*t.synth);
            std::vector<double> block(want_recv[e].begin() + dst.r0 * H, want_recv[e].begin() + (dst.r0 + T) * H);
            Builder::fold_into(acc, T, T, block, T, H);
            for (int r = 0; r < T; ++r) {
              for (int q = 0; q < T; ++q) want_y[e][(dst.r0 + r) * He + dst.c0 + q] = acc[r * T + q];
            }
          }
          B.inst.kernel.compute.push_back(std::move(t));
        }
      }
    }
  }
  double link = 0.0;
  for (int dev = 0; dev < n; ++dev) {
    double b = 0.0;
    for (int x = 0; x < E; ++x) {
      if (x / epd != dev) b += static_cast<double>(cnt[dev][x] * H) * B.s;
    }
    link = std::max(link, b);
  }
  B.inst.link_bytes_per_device = link;
  B.inst.total_flops = flops_total;
  B.finish_partition(balanced_comm_sms(flops_total / n, link, static_cast<double>(T) * T * B.s,
                                       hw::MechanismKind::Tma, p));
  B.expect(recv, std::move(want_recv));
  B.expect(y, std::move(want_y));
  return std::move(B.inst);
}

}  // namespace ovsim::wl::detail
