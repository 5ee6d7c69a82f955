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

// Data-parallel float kernels. Each kernel has a portable scalar reference
// and, where the build enables it, an AVX2/FMA variant. The variant is picked
// once at startup from CPUID (override with SEGX_KERNELS=scalar|avx2 or
// set_isa()). Every variant keeps a fixed reduction order per output element,
// so results never depend on the thread count.

#ifndef SEGX_KERNELS_KERNELS_HPP_
#define SEGX_KERNELS_KERNELS_HPP_

#include <cstddef>
#include <string_view>

namespace segx::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_isa();
Isa active_isa();
/// Throws segx::Error if the variant is not compiled in or the CPU lacks it.
void set_isa(Isa isa);

/// Row-major C[m x n] (+)= A[m x k] * B[k x n].
/// With accumulate == false, C is overwritten.
void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);

struct AdamCoeffs {
  float lr;
  float beta1;
  float beta2;
  float eps;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
};

/// In-place Adam update over `count` parameters. Entries whose gradient is
/// not finite are left untouched; returns false if there were any.
bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c);

/// In-place param[i] -= rate * grad[i]. Same non-finite contract as
/// adam_update.
bool sgd_update(float* param, const float* grad, std::size_t count, float rate);

/// out[i] = x[i] >= 0 ? x[i] : alpha * x[i]
void leaky_relu(const float* x, float* out, std::size_t count, float alpha);

// Direct entry points per variant, used by the equivalence tests.
namespace scalar {
void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);
bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c);
bool sgd_update(float* param, const float* grad, std::size_t count, float rate);
void leaky_relu(const float* x, float* out, std::size_t count, float alpha);
}  // namespace scalar

namespace avx2 {
void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);
bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c);
bool sgd_update(float* param, const float* grad, std::size_t count, float rate);
void leaky_relu(const float* x, float* out, std::size_t count, float alpha);
}  // namespace avx2

}  // namespace segx::kernels

#endif  // SEGX_KERNELS_KERNELS_HPP_
