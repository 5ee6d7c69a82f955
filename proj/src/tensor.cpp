// Copyright 2026 The segxplain Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segx/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <type_traits>
#include <cmath>

namespace segx {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

namespace {

void check_dims(const Shape& s) {
  if (s.n == 0 || s.c == 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("tensor dimensions must be >= 1, got " + s.str());
  }
}

}  // namespace

template <class T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(shape) {
  check_dims(shape_);
  data_.assign(shape_.size(), fill);
}

template <class T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data) : shape_(shape), data_(data.begin(), data.end()) {
  check_dims(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor " + shape_.str() + " needs " + std::to_string(shape_.size()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

template <class T>
BasicTensor<T> BasicTensor<T>::uninitialized(Shape shape) {
  check_dims(shape);
  BasicTensor<T> t;
  t.shape_ = shape;
  t.data_ = Buffer<T>(shape.size());
  return t;
}

template <class T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <class T>
T BasicTensor<T>::sum() const {
  T acc = 0;
  for (T v : data_) acc += v;
  return acc;
}

template <class T>
bool BasicTensor<T>::all_finite() const {
  // Non-finite values have an all-ones exponent field.
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits exponent = static_cast<Bits>(sizeof(T) == 4 ? 0x7f800000ull : 0x7ff0000000000000ull);
  Bits bad = 0;
  for (T v : data_) bad |= static_cast<Bits>((std::bit_cast<Bits>(v) & exponent) == exponent);
  return bad == 0;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

void ConvGeometry::validate() const {
  if (kh == 0 || kw == 0) throw GeometryError("kernel size must be >= 1");
  if (sh == 0 || sw == 0) throw GeometryError("stride must be >= 1");
}

std::pair<std::size_t, std::size_t> ConvGeometry::conv_output(std::size_t h, std::size_t w) const {
  validate();
  const auto dim = [](std::size_t in, std::size_t k, std::size_t s, std::size_t p, const char* axis) {
    const long long span = static_cast<long long>(in) + 2LL * static_cast<long long>(p) -
                           static_cast<long long>(k);
    if (span < 0) {
      throw GeometryError(std::string("convolution ") + axis + ": kernel " + std::to_string(k) +
                          " exceeds padded input " + std::to_string(in + 2 * p));
    }
    return static_cast<std::size_t>(span) / s + 1;
  };
  return {dim(h, kh, sh, ph, "height"), dim(w, kw, sw, pw, "width")};
}

std::pair<std::size_t, std::size_t> ConvGeometry::tconv_output(std::size_t h, std::size_t w) const {
  validate();
  const auto dim = [](std::size_t in, std::size_t k, std::size_t s, std::size_t p, const char* axis) {
    const long long out = (static_cast<long long>(in) - 1) * static_cast<long long>(s) -
                          2LL * static_cast<long long>(p) + static_cast<long long>(k);
    if (in == 0 || out < 1) {
      throw GeometryError(std::string("transposed convolution ") + axis +
                          ": non-positive output size " + std::to_string(out));
    }
    return static_cast<std::size_t>(out);
  };
  return {dim(h, kh, sh, ph, "height"), dim(w, kw, sw, pw, "width")};
}

}  // namespace segx
