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

#include "segx/ops.hpp"

#include <cmath>
#include <cstring>

#include "segx/kernels/kernels.hpp"

namespace segx {

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::leaky_relu:
      return "leaky_relu";
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::tanh:
      return "tanh";
    case ActivationKind::sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

ActivationKind parse_activation(const std::string& name) {
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  if (name == "relu") return ActivationKind::relu;
  if (name == "tanh") return ActivationKind::tanh;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  throw Error("unknown activation '" + name + "'");
}

template <class T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  if constexpr (std::is_same_v<T, float>) {
    kernels::sgemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      if (!accumulate) std::fill(crow, crow + n, T(0));
      for (std::size_t p = 0; p < k; ++p) {
        const T av = a[i * lda + p];
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

namespace {

// A column matrix has one row per (channel, dy, dx) kernel tap and one column
// per (batch, out_y, out_x) window; `transposed` selects [windows x taps].

template <class T>
std::vector<T> im2col(const BasicTensor<T>& img, const ConvGeometry& g, std::size_t oh, std::size_t ow,
                      bool transposed) {
  const Shape& s = img.shape();
  const std::size_t taps = s.c * g.kh * g.kw;
  const std::size_t windows = s.n * oh * ow;
  std::vector<T> col(taps * windows, T(0));
  if (transposed) {
    // Window-major: each row of the result is written contiguously.
    for (std::size_t b = 0; b < s.n; ++b) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          T* row = col.data() + ((b * oh + y) * ow + x) * taps;
          for (std::size_t c = 0; c < s.c; ++c) {
            const T* src = img.plane(b, c);
            for (std::size_t dy = 0; dy < g.kh; ++dy) {
              const long long iy = static_cast<long long>(y * g.sh + dy) - static_cast<long long>(g.ph);
              if (iy < 0 || iy >= static_cast<long long>(s.h)) continue;
              T* out = row + (c * g.kh + dy) * g.kw;
              for (std::size_t dx = 0; dx < g.kw; ++dx) {
                const long long ix = static_cast<long long>(x * g.sw + dx) - static_cast<long long>(g.pw);
                if (ix < 0 || ix >= static_cast<long long>(s.w)) continue;
                out[dx] = src[iy * static_cast<long long>(s.w) + ix];
              }
            }
          }
        }
      }
    }
    return col;
  }
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* src = img.plane(b, c);
      for (std::size_t dy = 0; dy < g.kh; ++dy) {
        for (std::size_t dx = 0; dx < g.kw; ++dx) {
          T* out = col.data() + ((c * g.kh + dy) * g.kw + dx) * windows + b * oh * ow;
          for (std::size_t y = 0; y < oh; ++y) {
            const long long iy = static_cast<long long>(y * g.sh + dy) - static_cast<long long>(g.ph);
            if (iy < 0 || iy >= static_cast<long long>(s.h)) continue;
            for (std::size_t x = 0; x < ow; ++x) {
              const long long ix = static_cast<long long>(x * g.sw + dx) - static_cast<long long>(g.pw);
              if (ix < 0 || ix >= static_cast<long long>(s.w)) continue;
              out[y * ow + x] = src[iy * static_cast<long long>(s.w) + ix];
            }
          }
        }
      }
    }
  }
  return col;
}

// Scatter-adds a window-major column matrix [windows x taps] back onto an
// image of shape `s`.
template <class T>
BasicTensor<T> col2im(const T* col, const Shape& s, const ConvGeometry& g, std::size_t oh, std::size_t ow) {
  const std::size_t taps = s.c * g.kh * g.kw;
  BasicTensor<T> img(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const T* row = col + ((b * oh + y) * ow + x) * taps;
        for (std::size_t c = 0; c < s.c; ++c) {
          T* dst = img.plane(b, c);
          for (std::size_t dy = 0; dy < g.kh; ++dy) {
            const long long iy = static_cast<long long>(y * g.sh + dy) - static_cast<long long>(g.ph);
            if (iy < 0 || iy >= static_cast<long long>(s.h)) continue;
            const T* in = row + (c * g.kh + dy) * g.kw;
            for (std::size_t dx = 0; dx < g.kw; ++dx) {
              const long long ix = static_cast<long long>(x * g.sw + dx) - static_cast<long long>(g.pw);
              if (ix < 0 || ix >= static_cast<long long>(s.w)) continue;
              dst[iy * static_cast<long long>(s.w) + ix] += in[dx];
            }
          }
        }
      }
    }
  }
  return img;
}

// NCHW -> [C x (n*h*w)]
template <class T>
Buffer<T> to_channel_major(const BasicTensor<T>& t) {
  const Shape& s = t.shape();
  const std::size_t hw = s.plane();
  Buffer<T> out(t.size());
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      std::memcpy(out.data() + c * s.n * hw + b * hw, t.plane(b, c), hw * sizeof(T));
    }
  }
  return out;
}

// NCHW -> [(n*h*w) x C]
template <class T>
Buffer<T> to_window_major(const BasicTensor<T>& t) {
  const Shape& s = t.shape();
  const std::size_t hw = s.plane();
  Buffer<T> out(t.size());
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const T* src = t.plane(b, c);
      for (std::size_t p = 0; p < hw; ++p) out[(b * hw + p) * s.c + c] = src[p];
    }
  }
  return out;
}

// [C x (n*h*w)] -> NCHW
template <class T>
BasicTensor<T> from_channel_major(const Buffer<T>& mat, const Shape& s) {
  const std::size_t hw = s.plane();
  BasicTensor<T> out = BasicTensor<T>::uninitialized(s);
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      std::memcpy(out.plane(b, c), mat.data() + c * s.n * hw + b * hw, hw * sizeof(T));
    }
  }
  return out;
}

template <class T>
void add_bias(BasicTensor<T>& out, std::span<const T> bias) {
  if (bias.empty()) return;
  const Shape& s = out.shape();
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      T* p = out.plane(b, c);
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += bias[c];
    }
  }
}

template <class T>
std::vector<T> channel_sums(const BasicTensor<T>& t) {
  const Shape& s = t.shape();
  std::vector<T> out(s.c, T(0));
  for (std::size_t c = 0; c < s.c; ++c) {
    T acc = 0;
    for (std::size_t b = 0; b < s.n; ++b) {
      const T* p = t.plane(b, c);
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
    }
    out[c] = acc;
  }
  return out;
}

void check_kernel(const Shape& w, const ConvGeometry& g, const char* op) {
  g.validate();
  if (w.h != g.kh || w.w != g.kw) {
    throw ShapeError(std::string(op) + ": weight kernel " + std::to_string(w.h) + "x" + std::to_string(w.w) +
                     " does not match geometry kernel " + std::to_string(g.kh) + "x" + std::to_string(g.kw));
  }
}

template <class T>
void check_bias(std::span<const T> bias, std::size_t channels, const char* op) {
  if (!bias.empty() && bias.size() != channels) {
    throw ShapeError(std::string(op) + ": bias has " + std::to_string(bias.size()) + " entries, expected " +
                     std::to_string(channels));
  }
}

}  // namespace

template <class T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights, std::span<const T> bias,
                      const ConvGeometry& geom) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_kernel(ws, geom, "conv2d");
  if (is.c != ws.c) {
    throw ShapeError("conv2d: input " + is.str() + " has " + std::to_string(is.c) + " channels but weights " +
                     ws.str() + " expect " + std::to_string(ws.c));
  }
  check_bias(bias, ws.n, "conv2d");
  const auto [oh, ow] = geom.conv_output(is.h, is.w);
  const std::size_t taps = ws.c * ws.h * ws.w;
  const std::size_t windows = is.n * oh * ow;
  const std::vector<T> col = im2col(input, geom, oh, ow, false);
  Buffer<T> y(ws.n * windows);
  gemm<T>(ws.n, windows, taps, weights.raw(), taps, col.data(), windows, y.data(), windows, false);
  BasicTensor<T> out = from_channel_major(y, Shape{is.n, ws.n, oh, ow});
  add_bias(out, bias);
  return out;
}

template <class T>
BasicTensor<T> conv2d_adjoint(const BasicTensor<T>& y, const BasicTensor<T>& weights, const ConvGeometry& geom,
                              const Shape& input_shape) {
  const Shape& ws = weights.shape();
  check_kernel(ws, geom, "conv2d_adjoint");
  const auto [oh, ow] = geom.conv_output(input_shape.h, input_shape.w);
  const Shape expected{input_shape.n, ws.n, oh, ow};
  if (y.shape() != expected || input_shape.c != ws.c) {
    throw ShapeError("conv2d_adjoint: gradient " + y.shape().str() + " does not match conv output " +
                     expected.str() + " of input " + input_shape.str() + " with weights " + ws.str());
  }
  const std::size_t taps = ws.c * ws.h * ws.w;
  const std::size_t windows = input_shape.n * oh * ow;
  // colT[windows x taps] = Y^T[windows x out_c] * W[out_c x taps]
  const Buffer<T> yt = to_window_major(y);
  Buffer<T> colt(windows * taps);
  gemm<T>(windows, taps, ws.n, yt.data(), ws.n, weights.raw(), taps, colt.data(), taps, false);
  return col2im(colt.data(), input_shape, geom, oh, ow);
}

template <class T>
LinearGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights, const ConvGeometry& geom,
                               const BasicTensor<T>& grad_out, GradRequest want) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_kernel(ws, geom, "conv2d_backward");
  if (is.c != ws.c) {
    throw ShapeError("conv2d_backward: input " + is.str() + " incompatible with weights " + ws.str());
  }
  const auto [oh, ow] = geom.conv_output(is.h, is.w);
  const Shape expected{is.n, ws.n, oh, ow};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_out " + grad_out.shape().str() + " does not match output " +
                     expected.str());
  }
  LinearGrads<T> g;
  if (want.params) {
    const std::size_t taps = ws.c * ws.h * ws.w;
    const std::size_t windows = is.n * oh * ow;
    const Buffer<T> gy = to_channel_major(grad_out);
    const std::vector<T> colt = im2col(input, geom, oh, ow, true);
    g.weights = BasicTensor<T>::uninitialized(ws);
    gemm<T>(ws.n, taps, windows, gy.data(), windows, colt.data(), taps, g.weights.raw(), taps, false);
    g.bias = channel_sums(grad_out);
  }
  if (want.input) g.input = conv2d_adjoint(grad_out, weights, geom, is);
  return g;
}

template <class T>
BasicTensor<T> tconv2d(const BasicTensor<T>& input, const BasicTensor<T>& weights, std::span<const T> bias,
                       const ConvGeometry& geom) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_kernel(ws, geom, "tconv2d");
  if (is.c != ws.n) {
    throw ShapeError("tconv2d: input " + is.str() + " has " + std::to_string(is.c) + " channels but weights " +
                     ws.str() + " expect " + std::to_string(ws.n));
  }
  check_bias(bias, ws.c, "tconv2d");
  const auto [oh, ow] = geom.tconv_output(is.h, is.w);
  const std::size_t taps = ws.c * ws.h * ws.w;
  const std::size_t windows = is.n * is.h * is.w;
  // colT[windows x taps] = X^T[windows x in_c] * W[in_c x taps]
  const Buffer<T> xt = to_window_major(input);
  Buffer<T> colt(windows * taps);
  gemm<T>(windows, taps, ws.n, xt.data(), ws.n, weights.raw(), taps, colt.data(), taps, false);
  BasicTensor<T> out = col2im(colt.data(), Shape{is.n, ws.c, oh, ow}, geom, is.h, is.w);
  add_bias(out, bias);
  return out;
}

template <class T>
LinearGrads<T> tconv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                                const ConvGeometry& geom, const BasicTensor<T>& grad_out, GradRequest want) {
  const Shape& is = input.shape();
  const Shape& ws = weights.shape();
  check_kernel(ws, geom, "tconv2d_backward");
  if (is.c != ws.n) {
    throw ShapeError("tconv2d_backward: input " + is.str() + " incompatible with weights " + ws.str());
  }
  const auto [oh, ow] = geom.tconv_output(is.h, is.w);
  const Shape expected{is.n, ws.c, oh, ow};
  if (grad_out.shape() != expected) {
    throw ShapeError("tconv2d_backward: grad_out " + grad_out.shape().str() + " does not match output " +
                     expected.str());
  }
  LinearGrads<T> g;
  if (want.input) {
    // The adjoint of a transposed convolution is the plain convolution with
    // the same weight tensor.
    g.input = conv2d<T>(grad_out, weights, {}, geom);
  }
  if (want.params) {
    const std::size_t taps = ws.c * ws.h * ws.w;
    const std::size_t windows = is.n * is.h * is.w;
    const Buffer<T> x = to_channel_major(input);
    const std::vector<T> colt = im2col(grad_out, geom, is.h, is.w, true);
    g.weights = BasicTensor<T>::uninitialized(ws);
    gemm<T>(ws.n, taps, windows, x.data(), windows, colt.data(), taps, g.weights.raw(), taps, false);
    g.bias = channel_sums(grad_out);
  }
  return g;
}

namespace {

template <class T>
T sigmoid_of(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

void check_alpha(const Activation& act) {
  if (act.kind == ActivationKind::leaky_relu && !(act.alpha > 0.0f && act.alpha < 1.0f)) {
    throw Error("leaky_relu slope must lie in (0, 1), got " + std::to_string(act.alpha));
  }
}

}  // namespace

template <class T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation act) {
  check_alpha(act);
  BasicTensor<T> out = BasicTensor<T>::uninitialized(input.shape());
  const T* x = input.raw();
  T* y = out.raw();
  const std::size_t n = input.size();
  switch (act.kind) {
    case ActivationKind::leaky_relu:
      if constexpr (std::is_same_v<T, float>) {
        kernels::leaky_relu(x, y, n, act.alpha);
      } else {
        const T a = static_cast<T>(act.alpha);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] >= T(0) ? x[i] : a * x[i];
      }
      break;
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
      break;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) y[i] = sigmoid_of(x[i]);
      break;
  }
  return out;
}

template <class T>
BasicTensor<T> activation_backward(const BasicTensor<T>& pre, Activation act, const BasicTensor<T>& grad_out) {
  check_alpha(act);
  if (pre.shape() != grad_out.shape()) {
    throw ShapeError("activation_backward: pre-activation " + pre.shape().str() + " vs gradient " +
                     grad_out.shape().str());
  }
  BasicTensor<T> out = BasicTensor<T>::uninitialized(pre.shape());
  const T* x = pre.raw();
  const T* g = grad_out.raw();
  T* y = out.raw();
  const std::size_t n = pre.size();
  switch (act.kind) {
    case ActivationKind::leaky_relu: {
      const T a = static_cast<T>(act.alpha);
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] >= T(0) ? g[i] : a * g[i];
      break;
    }
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? g[i] : T(0);
      break;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) {
        const T t = std::tanh(x[i]);
        y[i] = g[i] * (T(1) - t * t);
      }
      break;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) {
        const T s = sigmoid_of(x[i]);
        y[i] = g[i] * (s * (T(1) - s));
      }
      break;
  }
  return out;
}

template <class T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw ShapeError("concat_channels: " + sa.str() + " and " + sb.str() + " differ outside the channel axis");
  }
  auto out = BasicTensor<T>::uninitialized(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t hw = sa.plane();
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::memcpy(out.plane(n, 0), a.plane(n, 0), sa.c * hw * sizeof(T));
    std::memcpy(out.plane(n, sa.c), b.plane(n, 0), sb.c * hw * sizeof(T));
  }
  return out;
}

template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x, std::size_t channels_a) {
  const Shape& s = x.shape();
  if (channels_a < 1 || channels_a >= s.c) {
    throw ShapeError("split_channels: cannot split " + std::to_string(channels_a) + " channels off " + s.str());
  }
  auto a = BasicTensor<T>::uninitialized(Shape{s.n, channels_a, s.h, s.w});
  auto b = BasicTensor<T>::uninitialized(Shape{s.n, s.c - channels_a, s.h, s.w});
  const std::size_t hw = s.plane();
  for (std::size_t n = 0; n < s.n; ++n) {
    std::memcpy(a.plane(n, 0), x.plane(n, 0), channels_a * hw * sizeof(T));
    std::memcpy(b.plane(n, 0), x.plane(n, channels_a), (s.c - channels_a) * hw * sizeof(T));
  }
  return {std::move(a), std::move(b)};
}

#define SEGX_INSTANTIATE_OPS(T)                                                                               \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t, const T*, std::size_t, \
                        T*, std::size_t, bool);                                                              \
  template BasicTensor<T> conv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&, std::span<const T>,        \
                                    const ConvGeometry&);                                                    \
  template LinearGrads<T> conv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                             const ConvGeometry&, const BasicTensor<T>&, GradRequest);       \
  template BasicTensor<T> conv2d_adjoint<T>(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                            const ConvGeometry&, const Shape&);                              \
  template BasicTensor<T> tconv2d<T>(const BasicTensor<T>&, const BasicTensor<T>&, std::span<const T>,       \
                                     const ConvGeometry&);                                                   \
  template LinearGrads<T> tconv2d_backward<T>(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                              const ConvGeometry&, const BasicTensor<T>&, GradRequest);      \
  template BasicTensor<T> activation<T>(const BasicTensor<T>&, Activation);                                  \
  template BasicTensor<T> activation_backward<T>(const BasicTensor<T>&, Activation, const BasicTensor<T>&);  \
  template BasicTensor<T> concat_channels<T>(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels<T>(const BasicTensor<T>&, std::size_t);

SEGX_INSTANTIATE_OPS(float)
SEGX_INSTANTIATE_OPS(double)

#undef SEGX_INSTANTIATE_OPS

}  // namespace segx
