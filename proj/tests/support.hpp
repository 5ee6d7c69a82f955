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

#ifndef SEGX_TESTS_SUPPORT_HPP_
#define SEGX_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "segx/tensor.hpp"

namespace segx::test {

// Test-side randomness is drawn from std::minstd_rand so that fixtures do
// not share a generator with the code under test.
class Draw {
 public:
  explicit Draw(std::uint32_t seed) : engine_(seed) {}
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  bool coin() { return index(0, 1) == 1; }

  template <class T>
  BasicTensor<T> tensor(Shape s, double lo = -1.0, double hi = 1.0) {
    BasicTensor<T> t(s);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(real(lo, hi));
    return t;
  }

  template <class T>
  std::vector<T> vec(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(real(lo, hi));
    return v;
  }

 private:
  std::minstd_rand engine_;
};

inline double rel_err(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

// Largest elementwise error, relative to the largest reference magnitude.
template <class A, class B>
double max_rel_err(const A& got, const B& want) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    num = std::max(num, std::abs(static_cast<double>(got[i]) - static_cast<double>(want[i])));
    den = std::max(den, std::abs(static_cast<double>(want[i])));
  }
  return den == 0.0 ? num : num / den;
}

template <class T>
double dot(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <class T>
double total(const BasicTensor<T>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]);
  return s;
}

// Direct sliding-window convolution. weights: [out_c, in_c, kh, kw].
template <class T>
std::vector<double> naive_conv(const BasicTensor<T>& x, const BasicTensor<T>& w, const std::vector<T>& bias,
                               const ConvGeometry& g, std::size_t& oh, std::size_t& ow) {
  const Shape s = x.shape();
  const std::size_t oc = w.shape().n;
  oh = (s.h + 2 * g.ph - g.kh) / g.sh + 1;
  ow = (s.w + 2 * g.pw - g.kw) / g.sw + 1;
  std::vector<double> out(s.n * oc * oh * ow, 0.0);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[o]);
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t dy = 0; dy < g.kh; ++dy)
              for (std::size_t dx = 0; dx < g.kw; ++dx) {
                const long iy = static_cast<long>(y * g.sh + dy) - static_cast<long>(g.ph);
                const long ix = static_cast<long>(xx * g.sw + dx) - static_cast<long>(g.pw);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(s.h) || ix >= static_cast<long>(s.w)) continue;
                acc += static_cast<double>(x.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))) *
                       static_cast<double>(w.at(o, c, dy, dx));
              }
          out[((n * oc + o) * oh + y) * ow + xx] = acc;
        }
  return out;
}

// Scatter form of transposed convolution. weights: [in_c, out_c, kh, kw].
template <class T>
std::vector<double> naive_tconv(const BasicTensor<T>& x, const BasicTensor<T>& w, const std::vector<T>& bias,
                                const ConvGeometry& g, std::size_t& oh, std::size_t& ow) {
  const Shape s = x.shape();
  const std::size_t oc = w.shape().c;
  oh = (s.h - 1) * g.sh + g.kh - 2 * g.ph;
  ow = (s.w - 1) * g.sw + g.kw - 2 * g.pw;
  std::vector<double> out(s.n * oc * oh * ow, 0.0);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t xx = 0; xx < s.w; ++xx)
          for (std::size_t o = 0; o < oc; ++o)
            for (std::size_t dy = 0; dy < g.kh; ++dy)
              for (std::size_t dx = 0; dx < g.kw; ++dx) {
                const long oy = static_cast<long>(y * g.sh + dy) - static_cast<long>(g.ph);
                const long ox = static_cast<long>(xx * g.sw + dx) - static_cast<long>(g.pw);
                if (oy < 0 || ox < 0 || oy >= static_cast<long>(oh) || ox >= static_cast<long>(ow)) continue;
                out[((n * oc + o) * oh + static_cast<std::size_t>(oy)) * ow + static_cast<std::size_t>(ox)] +=
                    static_cast<double>(x.at(n, c, y, xx)) * static_cast<double>(w.at(c, o, dy, dx));
              }
  if (!bias.empty()) {
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t i = 0; i < oh * ow; ++i) out[(n * oc + o) * oh * ow + i] += static_cast<double>(bias[o]);
  }
  return out;
}

inline std::vector<char> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("segx_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace segx::test

#endif  // SEGX_TESTS_SUPPORT_HPP_
