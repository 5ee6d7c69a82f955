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

#ifndef SEGX_TENSOR_HPP_
#define SEGX_TENSOR_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Dimensions of a 4-D (batch, channel, row, column) tensor.
struct Shape {
  std::size_t n = 1;
  std::size_t c = 1;
  std::size_t h = 1;
  std::size_t w = 1;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Allocator whose value-less construct() leaves trivial types
/// uninitialized, so buffers that are about to be overwritten skip a fill.
template <class T>
struct DefaultInitAllocator : std::allocator<T> {
  template <class U>
  struct rebind {
    using other = DefaultInitAllocator<U>;
  };
  DefaultInitAllocator() = default;
  template <class U>
  DefaultInitAllocator(const DefaultInitAllocator<U>&) noexcept {}

  template <class U>
  void construct(U* p) noexcept {
    ::new (static_cast<void*>(p)) U;
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }
};

template <class T>
using Buffer = std::vector<T, DefaultInitAllocator<T>>;

/// Dense NCHW tensor. Every dimension is at least one and the storage is
/// contiguous in n, c, h, w order.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() : shape_{}, data_(1, T(0)) {}
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  /// Storage with unspecified contents; every element must be written
  /// before it is read.
  static BasicTensor uninitialized(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

  /// Pointer to the (n, c) image plane.
  T* plane(std::size_t n, std::size_t c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
  const T* plane(std::size_t n, std::size_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  void fill(T value);
  T sum() const;
  bool all_finite() const;

  template <class U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out = BasicTensor<U>::uninitialized(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const BasicTensor&) const = default;

 private:
  Shape shape_;
  Buffer<T> data_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Kernel, stride and zero-padding of a 2-D (transposed) convolution.
struct ConvGeometry {
  std::size_t kh = 4;
  std::size_t kw = 4;
  std::size_t sh = 2;
  std::size_t sw = 2;
  std::size_t ph = 1;
  std::size_t pw = 1;

  static ConvGeometry square(std::size_t kernel, std::size_t stride, std::size_t pad) {
    return {kernel, kernel, stride, stride, pad, pad};
  }

  /// Throws GeometryError for zero kernel or stride.
  void validate() const;

  /// Output size of a convolution over an h x w input. Throws when either
  /// dimension would be < 1.
  std::pair<std::size_t, std::size_t> conv_output(std::size_t h, std::size_t w) const;
  /// Output size of a transposed convolution over an h x w input.
  std::pair<std::size_t, std::size_t> tconv_output(std::size_t h, std::size_t w) const;

  bool operator==(const ConvGeometry&) const = default;
};

}  // namespace segx

#endif  // SEGX_TENSOR_HPP_
