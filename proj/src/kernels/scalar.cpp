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

// Portable reference kernels. Compiled without any ISA flags.

#include <cmath>
#include <vector>

#include "segx/kernels/kernels.hpp"

namespace segx::kernels::scalar {

void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  // i-k-j order keeps the inner loop contiguous; each c[i][j] still sums k
  // in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0f;
    }
    const float* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      const float* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c) {
  const float one_minus_b1 = 1.0f - c.beta1;
  const float one_minus_b2 = 1.0f - c.beta2;
  bool finite = true;
  for (std::size_t i = 0; i < count; ++i) {
    const float g = grad[i];
    if (!std::isfinite(g)) {
      finite = false;
      continue;
    }
    const float mi = c.beta1 * m[i] + one_minus_b1 * g;
    const float vi = c.beta2 * v[i] + one_minus_b2 * (g * g);
    m[i] = mi;
    v[i] = vi;
    const float mhat = mi / c.bias_correction1;
    const float vhat = vi / c.bias_correction2;
    param[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
  return finite;
}

bool sgd_update(float* param, const float* grad, std::size_t count, float rate) {
  bool finite = true;
  for (std::size_t i = 0; i < count; ++i) {
    const float g = grad[i];
    if (!std::isfinite(g)) {
      finite = false;
      continue;
    }
    param[i] -= rate * g;
  }
  return finite;
}

void leaky_relu(const float* x, float* out, std::size_t count, float alpha) {
  for (std::size_t i = 0; i < count; ++i) out[i] = x[i] >= 0.0f ? x[i] : alpha * x[i];
}

}  // namespace segx::kernels::scalar
