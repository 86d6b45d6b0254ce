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

// Communication-only kernels along the row dimension of a 2-D tensor.

#include "workloads_internal.hpp"

namespace ovsim::wl::detail {

using lcsc::CommTask;
using mem::Region;

namespace {

void check_collective(const Builder& B, const Dims& d, bool sharded) {
  require_comm_sms(B, "collectives");
  check_divides(d.m, sharded ? static_cast<std::int64_t>(B.n) * B.T : B.T, "collective rows over devices and tiles");
  check_divides(d.n, B.T, "collective columns over tiles");
}

}  // namespace

Instance build_all_gather(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  check_collective(B, d, true);
  const int n = B.n, T = B.T;
  const std::int64_t shard = d.m / n;
  const int in = B.add_pgl("x", {1, 1, shard, d.n});
  const int out = B.add_pgl("y", {1, 1, d.m, d.n}, true);
  for (int dev = 0; dev < n; ++dev) B.seed_buffer(in, dev, 5);
  const prim::DeviceSet everyone = prim::all_devices(n);
  for (int dev = 0; dev < n; ++dev) {
    for (std::int64_t r = 0; r < shard; r += T) {
      for (std::int64_t c = 0; c < d.n; c += T) {
        const Region from{0, 0, r, c, T, T};
        const Region to{0, 0, dev * shard + r, c, T, T};
        B.inst.kernel.comm.push_back(CommTask{
            dev, {lcsc::store_async(out, to, everyone & ~prim::only(dev), in, from), lcsc::store_local(out, to, in, from)}});
      }
    }
  }
  if (w.functional) {
    std::vector<double> cat;
    for (int o = 0; o < n; ++o) {
      auto v = B.pgl(in).read(o, {0, 0, 0, 0, shard, d.n});
      cat.insert(cat.end(), v.begin(), v.end());
    }
    B.expect(out, std::vector<std::vector<double>>(n, cat));
  }
  B.inst.link_bytes_per_device = (n - 1.0) / n * static_cast<double>(d.m * d.n) * B.s;
  B.finish_partition(hw::sms_to_saturate(p.tma));
  return std::move(B.inst);
}

Instance build_reduce_scatter(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  check_collective(B, d, true);
  const int n = B.n, T = B.T;
  const std::int64_t shard = d.m / n;
  const int in = B.add_pgl("x", {1, 1, d.m, d.n});
  const int out = B.add_pgl("y", {1, 1, shard, d.n});
  for (int dev = 0; dev < n; ++dev) B.seed_buffer(in, dev, 6);
  for (int dev = 0; dev < n; ++dev) {
    for (int j = 1; j <= n; ++j) {
      const int o = (dev + j) % n;
      for (std::int64_t r = 0; r < shard; r += T) {
        for (std::int64_t c = 0; c < d.n; c += T) {
          const Region from{0, 0, o * shard + r, c, T, T};
          const Region to{0, 0, r, c, T, T};
          B.inst.kernel.comm.push_back(CommTask{
              dev, {o != dev ? lcsc::store_add_async(out, to, prim::only(o), in, from)
                             : lcsc::store_local_add(out, to, in, from)}});
        }
      }
    }
  }
  if (w.functional) {
    std::vector<std::vector<double>> want(n, std::vector<double>(static_cast<std::size_t>(shard * d.n), 0.0));
    for (int src = 0; src < n; ++src) {
      for (int o = 0; o < n; ++o) {
        auto v = B.pgl(in).read(src, {0, 0, o * shard, 0, shard, d.n});
        for (std::size_t i = 0; i < v.size(); ++i) want[o][i] += v[i];
      }
    }
    B.expect(out, std::move(want));
  }
  B.inst.link_bytes_per_device = (n - 1.0) / n * static_cast<double>(d.m * d.n) * B.s;
  B.finish_partition(hw::sms_to_saturate(p.tma));
  return std::move(B.inst);
}

Instance build_all_reduce(const WorkloadSpec& w, const hw::HardwareProfile& p) {
  Builder B(w, p);
  const Dims& d = w.dims;
  check_collective(B, d, false);
  const int n = B.n, T = B.T;
  const int data = B.add_pgl("x", {1, 1, d.m, d.n}, true);
  for (int dev = 0; dev < n; ++dev) B.seed_buffer(data, dev, 7);
  std::vector<double> sum;
  if (w.functional) {
    sum.assign(static_cast<std::size_t>(d.m * d.n), 0.0);
    for (int dev = 0; dev < n; ++dev) {
      auto v = B.pgl(data).read(dev, {0, 0, 0, 0, d.m, d.n});
      for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
    }
  }
  // Row strips short enough that every communication SM gets work.
  const int csms = w.num_comm_sms > 0 ? w.num_comm_sms : hw::sms_to_saturate(p.register_op);
  std::int64_t rt = T;
  while (rt > 8 && (d.m / rt) * (d.n / T) < 2LL * n * csms) rt /= 2;
  std::int64_t idx = 0;
  for (std::int64_t r = 0; r < d.m; r += rt) {
    for (std::int64_t c = 0; c < d.n; c += T, ++idx) {
      B.inst.kernel.comm.push_back(
          CommTask{static_cast<int>(idx % n), {lcsc::all_reduce_op(data, {0, 0, r, c, rt, T}, prim::ReduceOp::Sum)}});
    }
  }
  B.expect(data, std::vector<std::vector<double>>(w.functional ? n : 0, sum));
  B.inst.link_bytes_per_device = (1.0 + 1.0 / n) * static_cast<double>(d.m * d.n) * B.s;
  B.finish_partition(hw::sms_to_saturate(p.register_op));
  return std::move(B.inst);
}

}  // namespace ovsim::wl::detail
