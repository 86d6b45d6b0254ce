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

#include <algorithm>

namespace ovsim::mem {

template <typename T>
BasicPgl<T>::BasicPgl(std::string name, Shape4 shape, int element_bytes, int num_devices, bool with_storage)
    : name_(std::move(name)),
      shape_(shape),
      element_bytes_(element_bytes),
      num_devices_(num_devices),
      storage_(with_storage) {
  if (shape.b <= 0 || shape.d <= 0 || shape.r <= 0 || shape.c <= 0) {
    throw InvalidArgument("layout '" + name_ + "' needs positive extents");
  }
  if (element_bytes <= 0) throw InvalidArgument("layout '" + name_ + "' needs a positive element size");
  if (num_devices < 2) throw InvalidArgument("layout '" + name_ + "' needs at least two devices");
  if (storage_) buffers_.assign(num_devices, std::vector<T>(static_cast<std::size_t>(shape.elements()), T{}));
}

template <typename T>
void BasicPgl<T>::check_device(int dev) const {
  if (dev < 0 || dev >= num_devices_) {
    throw InvalidArgument("device " + std::to_string(dev) + " out of range for '" + name_ + "'");
  }
}

template <typename T>
void BasicPgl<T>::check_region(const Region& reg) const {
  bool ok = reg.b >= 0 && reg.b < shape_.b && reg.d >= 0 && reg.d < shape_.d && reg.r0 >= 0 &&
            reg.c0 >= 0 && reg.rows > 0 && reg.cols > 0 && reg.r0 + reg.rows <= shape_.r &&
            reg.c0 + reg.cols <= shape_.c;
  if (!ok) {
    throw InvalidArgument("region (" + std::to_string(reg.b) + "," + std::to_string(reg.d) + "," +
                          std::to_string(reg.r0) + "+" + std::to_string(reg.rows) + "," +
                          std::to_string(reg.c0) + "+" + std::to_string(reg.cols) + ") out of range for '" +
                          name_ + "'");
  }
}

template <typename T>
void BasicPgl<T>::check_storage() const {
  if (!storage_) throw InvalidArgument("layout '" + name_ + "' carries no data");
}

template <typename T>
T& BasicPgl<T>::at(int dev, std::int64_t b, std::int64_t d, std::int64_t r, std::int64_t c) {
  check_device(dev);
  check_storage();
  check_region({b, d, r, c, 1, 1});
  return buffers_[dev][offset(b, d, r, c)];
}

template <typename T>
const T& BasicPgl<T>::at(int dev, std::int64_t b, std::int64_t d, std::int64_t r, std::int64_t c) const {
  return const_cast<BasicPgl*>(this)->at(dev, b, d, r, c);
}

template <typename T>
std::span<T> BasicPgl<T>::buffer(int dev) {
  check_device(dev);
  check_storage();
  return buffers_[dev];
}

template <typename T>
std::span<const T> BasicPgl<T>::buffer(int dev) const {
  check_device(dev);
  check_storage();
  return buffers_[dev];
}

template <typename T>
std::vector<T> BasicPgl<T>::read(int dev, const Region& reg) const {
  check_device(dev);
  check_storage();
  check_region(reg);
  std::vector<T> out(static_cast<std::size_t>(reg.elements()));
  const auto& buf = buffers_[dev];
  for (std::int64_t i = 0; i < reg.rows; ++i) {
    auto src = buf.begin() + offset(reg.b, reg.d, reg.r0 + i, reg.c0);
    std::copy(src, src + reg.cols, out.begin() + i * reg.cols);
  }
  return out;
}

template <typename T>
void BasicPgl<T>::write(int dev, const Region& reg, std::span<const T> values) {
  check_device(dev);
  check_storage();
  check_region(reg);
  if (static_cast<std::int64_t>(values.size()) != reg.elements()) {
    throw InvalidArgument("write to '" + name_ + "' with mismatched value count");
  }
  auto& buf = buffers_[dev];
  for (std::int64_t i = 0; i < reg.rows; ++i) {
    std::copy(values.begin() + i * reg.cols, values.begin() + (i + 1) * reg.cols,
              buf.begin() + offset(reg.b, reg.d, reg.r0 + i, reg.c0));
  }
}

template <typename T>
void BasicPgl<T>::add(int dev, const Region& reg, std::span<const T> values) {
  check_device(dev);
  check_storage();
  check_region(reg);
  if (static_cast<std::int64_t>(values.size()) != reg.elements()) {
    throw InvalidArgument("add to '" + name_ + "' with mismatched value count");
  }
  auto& buf = buffers_[dev];
  for (std::int64_t i = 0; i < reg.rows; ++i) {
    auto dst = buf.begin() + offset(reg.b, reg.d, reg.r0 + i, reg.c0);
    for (std::int64_t j = 0; j < reg.cols; ++j) dst[j] += values[i * reg.cols + j];
  }
}

template <typename T>
void BasicPgl<T>::fill(int dev, T value) {
  auto buf = buffer(dev);
  std::fill(buf.begin(), buf.end(), value);
}

template class BasicPgl<double>;
template class BasicPgl<std::int64_t>;

template <typename T>
MulticastView<T>::MulticastView(BasicPgl<T>& pgl) : pgl_(&pgl) {
  if (!pgl.has_multicast()) {
    throw ProtocolViolation("layout '" + pgl.name() + "' has no multicast alias; finish multicast setup first");
  }
}

template <typename T>
void MulticastView<T>::write(const Region& reg, std::span<const T> values) {
  for (int d = 0; d < pgl_->num_devices(); ++d) pgl_->write(d, reg, values);
}

template <typename T>
void MulticastView<T>::add(const Region& reg, std::span<const T> values) {
  for (int d = 0; d < pgl_->num_devices(); ++d) pgl_->add(d, reg, values);
}

template <typename T>
std::vector<T> MulticastView<T>::read(const Region&) const {
  throw ProtocolViolation("reading through the multicast address of '" + pgl_->name() + "' is undefined");
}

template class MulticastView<double>;
template class MulticastView<std::int64_t>;

void validate_tile_shape(int rows, int cols, int element_bytes, std::int64_t smem_bytes) {
  if (rows <= 0 || cols <= 0 || rows % 16 != 0 || cols % 16 != 0) {
    throw InvalidArgument("shared tile " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " must have extents that are positive multiples of 16");
  }
  std::int64_t bytes = static_cast<std::int64_t>(rows) * cols * element_bytes;
  if (bytes > smem_bytes) {
    throw InvalidArgument("shared tile " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                          std::to_string(bytes) + " bytes, more than the " + std::to_string(smem_bytes) +
                          "-byte shared memory");
  }
}

SharedTile make_tile(int rows, int cols, int element_bytes, double fill, std::int64_t smem_bytes) {
  validate_tile_shape(rows, cols, element_bytes, smem_bytes);
  SharedTile t;
  t.rows = rows;
  t.cols = cols;
  t.element_bytes = element_bytes;
  t.data.assign(static_cast<std::size_t>(rows) * cols, fill);
  return t;
}

Pgl allocate_pgl(Shape4 shape, int element_bytes, int num_devices, bool with_storage, std::string name) {
  return Pgl(std::move(name), shape, element_bytes, num_devices, with_storage);
}

BarrierField allocate_barrier(Shape4 counters, int num_devices, std::string name) {
  return BarrierField(std::move(name), counters, 4, num_devices, true);
}

SharedTile read_tile(const Pgl& pgl, int dev, TileCoord coord, int rows, int cols) {
  SharedTile t;
  t.rows = rows;
  t.cols = cols;
  t.element_bytes = pgl.element_bytes();
  t.data = pgl.read(dev, tile_region(coord, rows, cols));
  return t;
}

void write_tile(Pgl& pgl, int dev, TileCoord coord, const SharedTile& tile) {
  if (tile.element_bytes != pgl.element_bytes()) {
    throw InvalidArgument("tile element size does not match layout '" + pgl.name() + "'");
  }
  pgl.write(dev, tile_region(coord, tile.rows, tile.cols), tile.data);
}

}  // namespace ovsim::mem
