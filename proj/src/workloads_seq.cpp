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

// Sequence-parallel workloads: ring attention and head-dimension
// all-to-all (with or without the attention that follows it).

#include "workloads_internal.hpp"

namespace ovsim::wl::detail {

using lcsc::ComputeTask;
using lcsc::CommTask;
using mem::Region;

Instance build_ring_attention(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  require_comm_sms(B, "ring attention");
  const Dims& d = w.dims;
  const int n = B.n;
  if (d.b <= 0 || d.h <= 0 || d.d <= 0) throw InvalidArgument("ring attention needs positive b, h, d");
  check_divides(d.s, n, "sequence over devices");
  const std::int64_t sl = d.s / n;
  const std::int64_t qblock = w.functional ? B.T : 768;
  check_divides(sl, qblock, "per-device sequence over query blocks");
  const std::int64_t bh = d.b * d.h, rows = bh * sl, cols = 2 * d.d, nq = sl / qblock;
  const int chunks = w.functional ? 2 : 32;
  check_divides(rows, chunks, "KV shard over forwarding chunks");
  const std::int64_t rc = rows / chunks;

  const int kv = B.add_pgl("kv", {1, n, rows, cols});
  const int out = B.add_pgl("o", {1, 1, rows, d.d});
  const int chunk_ready = B.add_barrier("chunk_ready", {1, n, 1, chunks});
  const int slot_ready = B.add_barrier("slot_ready", {1, n, 1, 1});
  for (int dev = 0; dev < n; ++dev) B.seed_region(kv, dev, {0, 0, 0, 0, rows, cols}, 3);

  for (int dev = 0; dev < n; ++dev) {
    const int next = (dev + 1) % n;
    for (int j = 0; j + 1 < n; ++j) {
      for (int c = 0; c < chunks; ++c) {
        CommTask ct{dev, {}};
        if (j > 0) ct.ops.push_back(lcsc::wait_op(chunk_ready, {0, j, 0, c}, 1));
        const Region from{0, j, c * rc, 0, rc, cols};
        const Region to{0, j + 1, c * rc, 0, rc, cols};
        ct.ops.push_back(lcsc::store_async(kv, to, prim::only(next), kv, from, B.messages(rc * cols)));
        ct.ops.push_back(lcsc::signal_op(chunk_ready, {0, j + 1, 0, c}, next));
        ct.ops.push_back(lcsc::signal_op(slot_ready, {0, j + 1, 0, 0}, next));
        B.inst.kernel.comm.push_back(std::move(ct));
      }
    }
  }

  const double flops = 4.0 * qblock * sl * d.d;
  for (int dev = 0; dev < n; ++dev) {
    for (int j = 0; j < n; ++j) {
      for (std::int64_t g = 0; g < bh; ++g) {
        for (std::int64_t q = 0; q < nq; ++q) {
          ComputeTask t;
          t.device = dev;
          t.out_rows = static_cast<int>(qblock);
          t.out_cols = static_cast<int>(d.d);
          t.flops = flops;
          if (j == 0) t.synth = B.synth(dev, g, q, t.out_rows, t.out_cols);
          if (j > 0) t.loads.push_back(lcsc::wait_op(slot_ready, {0, j, 0, 0}, chunks));
          t.loads.push_back(lcsc::load_local(kv, {0, j, g * sl, 0, sl, cols}));
          t.stores.push_back(lcsc::store_local_add(out, {0, 0, g * sl + q * qblock, 0, qblock, d.d}));
          B.inst.kernel.compute.push_back(std::move(t));
        }
      }
    }
  }

  if (w.functional) {
    std::vector<std::vector<double>> shard(n), want_kv(n), want_o(n);
    for (int o = 0; o < n; ++o) shard[o] = B.pgl(kv).read(o, {0, 0, 0, 0, rows, cols});
    for (int dev = 0; dev < n; ++dev) {
      want_kv[dev].assign(static_cast<std::size_t>(n * rows * cols), 0.0);
      for (int j = 0; j < n; ++j) {
        const auto& src = shard[((dev - j) % n + n) % n];
        std::copy(src.begin(), src.end(), want_kv[dev].begin() + j * rows * cols);
      }
      want_o[dev].assign(static_cast<std::size_t>(rows * d.d), 0.0);
      for (std::int64_t g = 0; g < bh; ++g) {
        std::vector<double> folded(static_cast<std::size_t>(qblock * d.d), 0.0);
        for (int o = 0; o < n; ++o) {
          std::vector<double> block(shard[o].begin() + g * sl * cols, shard[o].begin() + (g + 1) * sl * cols);
          Builder::fold_into(folded, static_cast<int>(qblock), static_cast<int>(d.d), block, sl, cols);
        }
        for (std::int64_t q = 0; q < nq; ++q) {
          auto syn = B.synth(dev, g, q, static_cast<int>(qblock), static_cast<int>(d.d));
          for (std::int64_t i = 0; i < qblock * d.d; ++i) {
            want_o[dev][(g * sl + q * qblock) * d.d + i] = folded[i] + (*syn)[i];
          }
        }
      }
    }
    B.expect(kv, std::move(want_kv));
    B.expect(out, std::move(want_o));
  }

  const double shard_bytes = static_cast<double>(rows * cols) * B.s;
  B.inst.link_bytes_per_device = (n - 1.0) * shard_bytes;
  B.inst.total_flops = flops * static_cast<double>(n * n * bh * nq);
  B.inst.reuse = lcsc::remote_reuse_policy(static_cast<int>(nq), static_cast<double>(sl * cols) * B.s, p);
  B.finish_partition(balanced_comm_sms(B.inst.total_flops / n, B.inst.link_bytes_per_device,
                                       static_cast<double>(B.T) * B.T * B.s, hw::MechanismKind::Tma, p));
  return std::move(B.inst);
}

Instance build_all_to_all(const WorkloadSpec& w, const hw::HardwareProfile& p, bool with_attention) {
  Builder B(w, p);
  require_comm_sms(B, "all-to-all");
  const Dims& d = w.dims;
  const int n = B.n;
  if (d.b <= 0 || d.s <= 0 || d.d <= 0) throw InvalidArgument("all-to-all needs positive b, s, d");
  check_divides(d.h, n, "heads over devices");
  const std::int64_t hl = d.h / n, rows = d.b * d.s, wcols = hl * d.d;
  const int chunks = w.functional ? 2 : 8;
  check_divides(rows, chunks, "rows over all-to-all chunks");
  const std::int64_t rc = rows / chunks;

  const int in = B.add_pgl("x", {1, 1, rows, d.h * d.d});
  const int seq = B.add_pgl("xs", {1, n, rows, wcols});
  const int arrived = B.add_barrier("arrived", {1, 1, 1, 1});
  for (int dev = 0; dev < n; ++dev) B.seed_buffer(in, dev, 4);

  for (int dev = 0; dev < n; ++dev) {
    for (int j = 1; j <= n; ++j) {
      const int e = (dev + j) % n;
      for (int c = 0; c < chunks; ++c) {
        const Region from{0, 0, c * rc, e * wcols, rc, wcols};
        const Region to{0, dev, c * rc, 0, rc, wcols};
        CommTask ct{dev, {}};
        ct.ops.push_back(e != dev ? lcsc::store_async(seq, to, prim::only(e), in, from, B.messages(rc * wcols))
                                  : lcsc::store_local(seq, to, in, from));
        ct.ops.push_back(lcsc::signal_op(arrived, {0, 0, 0, 0}, e));
        B.inst.kernel.comm.push_back(std::move(ct));
      }
    }
  }

  std::vector<std::vector<double>> want_seq;
  if (w.functional) {
    want_seq.assign(n, std::vector<double>(static_cast<std::size_t>(n * rows * wcols), 0.0));
    for (int src = 0; src < n; ++src) {
      for (int e = 0; e < n; ++e) {
        auto v = B.pgl(in).read(src, {0, 0, 0, e * wcols, rows, wcols});
        std::copy(v.begin(), v.end(), want_seq[e].begin() + src * rows * wcols);
      }
    }
  }

  B.inst.link_bytes_per_device = static_cast<double>(rows * d.h * d.d) * B.s * (n - 1.0) / n;
  if (with_attention) {
    std::int64_t qblock = w.functional ? B.T : 1024;
    while (qblock > 16 && d.s % qblock != 0) qblock /= 2;
    check_divides(d.s, qblock, "per-device sequence over query blocks");
    const std::int64_t total = n * d.s, nq = total / qblock;
    const int out = B.add_pgl("o", {1, 1, d.b * hl * total, d.d});
    const double flops = 4.0 * qblock * total * d.d;
    for (int dev = 0; dev < n; ++dev) {
      for (std::int64_t bi = 0; bi < d.b; ++bi) {
        for (std::int64_t h = 0; h < hl; ++h) {
          for (std::int64_t q = 0; q < nq; ++q) {
            ComputeTask t;
            t.device = dev;
            t.out_rows = static_cast<int>(qblock);
            t.out_cols = static_cast<int>(d.d);
            t.flops = flops;
            t.loads.push_back(lcsc::wait_op(arrived, {0, 0, 0, 0}, static_cast<std::int64_t>(n) * chunks));
            for (int e = 0; e < n; ++e) {
              lcsc::Op ld = lcsc::load_local(seq, {0, e, bi * d.s, h * d.d, d.s, d.d});
              ld.bytes = 2.0 * d.s * d.d * B.s;
              t.loads.push_back(ld);
            }
            t.stores.push_back(lcsc::store_local(out, {0, 0, ((bi * hl + h) * nq + q) * qblock, 0, qblock, d.d}));
            B.inst.kernel.compute.push_back(std::move(t));
          }
        }
      }
    }
    B.inst.total_flops = flops * static_cast<double>(n * d.b * hl * nq);
    if (w.functional) {
      std::vector<std::vector<double>> want_o(n, std::vector<double>(static_cast<std::size_t>(d.b * hl * total * d.d), 0.0));
      for (int dev = 0; dev < n; ++dev) {
        for (std::int64_t bi = 0; bi < d.b; ++bi) {
          for (std::int64_t h = 0; h < hl; ++h) {
            std::vector<double> folded(static_cast<std::size_t>(qblock * d.d), 0.0);
            for (int e = 0; e < n; ++e) {
              std::vector<double> block(static_cast<std::size_t>(d.s * d.d));
              for (std::int64_t r = 0; r < d.s; ++r) {
                for (std::int64_t c = 0; c < d.d; ++c) {
                  block[r * d.d + c] = want_seq[dev][(e * rows + bi * d.s + r) * wcols + h * d.d + c];
                }
              }
              Builder::fold_into(folded, static_cast<int>(qblock), static_cast<int>(d.d), block, d.s, d.d);
            }
            for (std::int64_t q = 0; q < nq; ++q) {
              std::copy(folded.begin(), folded.end(), want_o[dev].begin() + ((bi * hl + h) * nq + q) * qblock * d.d);
            }
          }
        }
      }
      B.expect(out, std::move(want_o));
    }
  }
  B.finish_partition(hw::sms_to_saturate(p.tma));
  B.expect(seq, std::move(want_seq));
  return std::move(B.inst);
}

}  // namespace ovsim::wl::detail
