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

// Convolution, transposed convolution, activations and channel concatenation
// with their analytic gradients.
//
// All functions are instantiated for float (production) and double (used by
// the finite-difference and adjointness checks). The float path runs the
// dispatched SIMD GEMM; the double path uses the portable reference loop.

#ifndef SEGX_OPS_HPP_
#define SEGX_OPS_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segx/tensor.hpp"

namespace segx {

enum class ActivationKind { leaky_relu, relu, tanh, sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  float alpha = 0.2f;  // leaky_relu slope, must lie in (0, 1)

  static Activation leaky(float a = 0.2f) { return {ActivationKind::leaky_relu, a}; }
  static Activation relu() { return {ActivationKind::relu, 0.2f}; }
  static Activation tanh() { return {ActivationKind::tanh, 0.2f}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.2f}; }

  bool operator==(const Activation&) const = default;
};

std::string to_string(ActivationKind kind);
ActivationKind parse_activation(const std::string& name);

/// Which gradients a backward call should produce.
struct GradRequest {
  bool input = true;
  bool params = true;
};

template <class T>
struct LinearGrads {
  BasicTensor<T> input;     // empty-shaped (1x1x1x1) when not requested
  BasicTensor<T> weights;   // idem
  std::vector<T> bias;      // empty when not requested
};

/// weights: [out_c, in_c, kh, kw]. `bias` is either empty (zero bias) or has
/// out_c entries.
template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                      std::span<const T> bias, const ConvGeometry& geom);

template <class T>
LinearGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                               const ConvGeometry& geom, const BasicTensor<T>& grad_out,
                               GradRequest want = {});

/// weights: [in_c, out_c, kh, kw]. The linear part is the adjoint of conv2d
/// with the same weights and geometry.
template <class T>
BasicTensor<T> tconv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                       std::span<const T> bias, const ConvGeometry& geom);

template <class T>
LinearGrads<T> tconv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const ConvGeometry& geom, const BasicTensor<T>& grad_out,
                                GradRequest want = {});

/// Adjoint of the linear part of conv2d: maps an output-shaped tensor back to
/// input shape (`input_shape`). Equivalent to conv2d_backward's grad_input.
template <class T>
BasicTensor<T> conv2d_adjoint(const BasicTensor<T>& y, const BasicTensor<T>& weights,
                              const ConvGeometry& geom, const Shape& input_shape);

template <class T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation act);

/// grad_out * act'(pre_activation). leaky_relu'(0) is 1.
template <class T>
BasicTensor<T> activation_backward(const BasicTensor<T>& pre_activation, Activation act,
                                   const BasicTensor<T>& grad_out);

template <class T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Splits off the first `channels_a` channels. 1 <= channels_a < x.c.
template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x, std::size_t channels_a);

/// Generic row-major GEMM used by the ops: C (+)= A[m x k] * B[k x n].
/// float dispatches to the active SIMD kernel.
template <class T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate);

}  // namespace segx

#endif  // SEGX_OPS_HPP_
