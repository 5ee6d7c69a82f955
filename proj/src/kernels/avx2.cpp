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

// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the dispatcher has checked CPUID.

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "segx/kernels/kernels.hpp"

namespace segx::kernels::avx2 {

namespace {

// Register tile: 6 rows x 16 columns = 12 ymm accumulators.
constexpr std::size_t kMR = 6;
constexpr std::size_t kNR = 16;
constexpr std::size_t kKC = 256;
constexpr std::size_t kMC = 96;
constexpr std::size_t kNC = 3072;
// Below this many rows packing B costs more than it saves.
constexpr std::size_t kPackMinRows = 12;
constexpr std::size_t kL2Floats = 65536;
// Unpacked B is read from kc separate rows at once; keep that count small.
constexpr std::size_t kKCUnpacked = 32;
constexpr std::size_t kNarrowN = 4;
constexpr std::size_t kNarrowMinK = 32;

// Packs a kc x nc block of B into NR-column panels: panel[p * NR + j].
void pack_b(const float* b, std::size_t ldb, std::size_t kc, std::size_t nc, float* out) {
  for (std::size_t j0 = 0; j0 < nc; j0 += kNR) {
    const std::size_t cols = std::min(kNR, nc - j0);
    if (cols == kNR) {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = b + p * ldb + j0;
        _mm256_storeu_ps(out, _mm256_loadu_ps(src));
        _mm256_storeu_ps(out + 8, _mm256_loadu_ps(src + 8));
        out += kNR;
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        const float* src = b + p * ldb + j0;
        std::size_t j = 0;
        for (; j < cols; ++j) out[j] = src[j];
        for (; j < kNR; ++j) out[j] = 0.0f;
        out += kNR;
      }
    }
  }
}

// A is read in place through one pointer per row; each row is kc contiguous
// floats.
struct RowPtrs {
  const float* r[kMR];
};

void micro_6x16(std::size_t kc, const RowPtrs& a, const float* pb, std::size_t bstride, float* c,
                std::size_t ldc, bool accumulate) {
  const float* a0 = a.r[0];
  const float* a1 = a.r[1];
  const float* a2 = a.r[2];
  const float* a3 = a.r[3];
  const float* a4 = a.r[4];
  const float* a5 = a.r[5];
  __m256 c00, c01, c10, c11, c20, c21, c30, c31, c40, c41, c50, c51;
  if (accumulate) {
    c00 = _mm256_loadu_ps(c + 0 * ldc);
    c01 = _mm256_loadu_ps(c + 0 * ldc + 8);
    c10 = _mm256_loadu_ps(c + 1 * ldc);
    c11 = _mm256_loadu_ps(c + 1 * ldc + 8);
    c20 = _mm256_loadu_ps(c + 2 * ldc);
    c21 = _mm256_loadu_ps(c + 2 * ldc + 8);
    c30 = _mm256_loadu_ps(c + 3 * ldc);
    c31 = _mm256_loadu_ps(c + 3 * ldc + 8);
    c40 = _mm256_loadu_ps(c + 4 * ldc);
    c41 = _mm256_loadu_ps(c + 4 * ldc + 8);
    c50 = _mm256_loadu_ps(c + 5 * ldc);
    c51 = _mm256_loadu_ps(c + 5 * ldc + 8);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = _mm256_setzero_ps();
    c30 = c31 = c40 = c41 = c50 = c51 = _mm256_setzero_ps();
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(pb);
    const __m256 b1 = _mm256_loadu_ps(pb + 8);
    __m256 av = _mm256_broadcast_ss(a0 + p);
    c00 = _mm256_fmadd_ps(av, b0, c00);
    c01 = _mm256_fmadd_ps(av, b1, c01);
    av = _mm256_broadcast_ss(a1 + p);
    c10 = _mm256_fmadd_ps(av, b0, c10);
    c11 = _mm256_fmadd_ps(av, b1, c11);
    av = _mm256_broadcast_ss(a2 + p);
    c20 = _mm256_fmadd_ps(av, b0, c20);
    c21 = _mm256_fmadd_ps(av, b1, c21);
    av = _mm256_broadcast_ss(a3 + p);
    c30 = _mm256_fmadd_ps(av, b0, c30);
    c31 = _mm256_fmadd_ps(av, b1, c31);
    av = _mm256_broadcast_ss(a4 + p);
    c40 = _mm256_fmadd_ps(av, b0, c40);
    c41 = _mm256_fmadd_ps(av, b1, c41);
    av = _mm256_broadcast_ss(a5 + p);
    c50 = _mm256_fmadd_ps(av, b0, c50);
    c51 = _mm256_fmadd_ps(av, b1, c51);
    pb += bstride;
  }
  _mm256_storeu_ps(c + 0 * ldc, c00);
  _mm256_storeu_ps(c + 0 * ldc + 8, c01);
  _mm256_storeu_ps(c + 1 * ldc, c10);
  _mm256_storeu_ps(c + 1 * ldc + 8, c11);
  _mm256_storeu_ps(c + 2 * ldc, c20);
  _mm256_storeu_ps(c + 2 * ldc + 8, c21);
  _mm256_storeu_ps(c + 3 * ldc, c30);
  _mm256_storeu_ps(c + 3 * ldc + 8, c31);
  _mm256_storeu_ps(c + 4 * ldc, c40);
  _mm256_storeu_ps(c + 4 * ldc + 8, c41);
  _mm256_storeu_ps(c + 5 * ldc, c50);
  _mm256_storeu_ps(c + 5 * ldc + 8, c51);
}

// Partial tiles go through a scratch tile so the arithmetic per element is
// identical to the full-tile path.
void micro_edge(std::size_t kc, const RowPtrs& a, const float* pb, std::size_t bstride, float* c,
                std::size_t ldc, std::size_t rows, std::size_t cols, bool accumulate) {
  alignas(32) float tile[kMR * kNR];
  if (accumulate) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::memcpy(tile + r * kNR, c + r * ldc, cols * sizeof(float));
    }
  }
  micro_6x16(kc, a, pb, bstride, tile, kNR, accumulate);
  for (std::size_t r = 0; r < rows; ++r) {
    std::memcpy(c + r * ldc, tile + r * kNR, cols * sizeof(float));
  }
}

float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_movehdup_ps(s));
  return _mm_cvtss_f32(s);
}

// C (m x N) for tiny N: B is transposed once, then every output is a dot
// product over k with eight lanes and a fixed reduction order.
template <std::size_t N>
void narrow_rows(std::size_t i0, std::size_t rows, std::size_t k, const float* a, std::size_t lda,
                 const float* bt, float* c, std::size_t ldc, bool accumulate) {
  __m256 acc[2][N];
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < N; ++j) acc[r][j] = _mm256_setzero_ps();
  }
  const float* ar[2] = {a + i0 * lda, a + (i0 + (rows > 1 ? 1 : 0)) * lda};
  const std::size_t k8 = k / 8 * 8;
  for (std::size_t p = 0; p < k8; p += 8) {
    const __m256 a0 = _mm256_loadu_ps(ar[0] + p);
    const __m256 a1 = _mm256_loadu_ps(ar[1] + p);
    for (std::size_t j = 0; j < N; ++j) {
      const __m256 bv = _mm256_loadu_ps(bt + j * k + p);
      acc[0][j] = _mm256_fmadd_ps(a0, bv, acc[0][j]);
      acc[1][j] = _mm256_fmadd_ps(a1, bv, acc[1][j]);
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < N; ++j) {
      float sum = hsum(acc[r][j]);
      for (std::size_t p = k8; p < k; ++p) sum += ar[r][p] * bt[j * k + p];
      float* out = c + (i0 + r) * ldc + j;
      *out = accumulate ? *out + sum : sum;
    }
  }
}

template <std::size_t N>
void narrow_all(std::size_t m, std::size_t k, const float* a, std::size_t lda, const float* bt, float* c,
                std::size_t ldc, bool accumulate) {
  const long long pairs = static_cast<long long>((m + 1) / 2);
#pragma omp parallel for schedule(static) if (m * k > 65536)
  for (long long u = 0; u < pairs; ++u) {
    const std::size_t i0 = static_cast<std::size_t>(u) * 2;
    narrow_rows<N>(i0, std::min<std::size_t>(2, m - i0), k, a, lda, bt, c, ldc, accumulate);
  }
}

void narrow_gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                 const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  thread_local std::vector<float> bt;
  bt.resize(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * ldb + j];
  }
  switch (n) {
    case 1: narrow_all<1>(m, k, a, lda, bt.data(), c, ldc, accumulate); break;
    case 2: narrow_all<2>(m, k, a, lda, bt.data(), c, ldc, accumulate); break;
    case 3: narrow_all<3>(m, k, a, lda, bt.data(), c, ldc, accumulate); break;
    default: narrow_all<4>(m, k, a, lda, bt.data(), c, ldc, accumulate); break;
  }
}

}  // namespace

void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, 0.0f);
    }
    return;
  }
  if (n <= kNarrowN && k >= kNarrowMinK) {
    narrow_gemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }

  thread_local std::vector<float> packed_b;
  const bool pack = m > kPackMinRows;
  const std::size_t row_tiles = (m + kMR - 1) / kMR;
  const std::size_t m_blocks = (m + kMC - 1) / kMC;

  for (std::size_t jc = 0; jc < n; jc += kNC) {
    const std::size_t nc = std::min(kNC, n - jc);
    const std::size_t nc_padded = (nc + kNR - 1) / kNR * kNR;
    const std::size_t panels = nc_padded / kNR;
    const std::size_t kc_step = pack ? kKC : kKCUnpacked;
    for (std::size_t pc = 0; pc < k; pc += kc_step) {
      const std::size_t kc = std::min(kc_step, k - pc);
      const bool acc = accumulate || pc > 0;
      const float* bsrc = b + pc * ldb + jc;
      if (pack) {
        packed_b.resize(kc * nc_padded);
        pack_b(bsrc, ldb, kc, nc, packed_b.data());
      }
      const float* pb_all = packed_b.data();

      const auto tile = [&](std::size_t i0, std::size_t jr) {
        const std::size_t rows = std::min(kMR, m - i0);
        const std::size_t cols = std::min(kNR, nc - jr);
        RowPtrs rp;
        for (std::size_t r = 0; r < kMR; ++r) rp.r[r] = a + (i0 + (r < rows ? r : 0)) * lda + pc;
        const float* pb = pb_all + jr * kc;
        std::size_t bstride = kNR;
        alignas(32) float edge[kKC * kNR];
        if (!pack) {
          if (cols == kNR) {
            pb = bsrc + jr;
            bstride = ldb;
          } else {
            pack_b(bsrc + jr, ldb, kc, cols, edge);
            pb = edge;
          }
        }
        float* ctile = c + i0 * ldc + jc + jr;
        if (rows == kMR && cols == kNR) {
          micro_6x16(kc, rp, pb, bstride, ctile, ldc, acc);
        } else {
          micro_edge(kc, rp, pb, bstride, ctile, ldc, rows, cols, acc);
        }
      };

      const bool parallel = m * nc * kc > 262144;
      if (!pack || kc * nc_padded <= kL2Floats) {
        // B stays cache resident: sweep C row tile by row tile.
        const long long units = static_cast<long long>(row_tiles);
#pragma omp parallel for schedule(static) if (parallel && units > 1)
        for (long long u = 0; u < units; ++u) {
          for (std::size_t jr = 0; jr < nc; jr += kNR) tile(static_cast<std::size_t>(u) * kMR, jr);
        }
      } else {
        const long long units = static_cast<long long>(m_blocks * panels);
#pragma omp parallel for schedule(static) if (parallel && units > 8)
        for (long long u = 0; u < units; ++u) {
          const std::size_t ic = static_cast<std::size_t>(u) / panels * kMC;
          const std::size_t jr = static_cast<std::size_t>(u) % panels * kNR;
          const std::size_t mc = std::min(kMC, m - ic);
          for (std::size_t ir = 0; ir < mc; ir += kMR) tile(ic + ir, jr);
        }
      }
    }
  }
}

bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c) {
  const __m256 b1 = _mm256_set1_ps(c.beta1);
  const __m256 b2 = _mm256_set1_ps(c.beta2);
  const __m256 omb1 = _mm256_set1_ps(1.0f - c.beta1);
  const __m256 omb2 = _mm256_set1_ps(1.0f - c.beta2);
  const __m256 bc1 = _mm256_set1_ps(c.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(c.bias_correction2);
  const __m256 lr = _mm256_set1_ps(c.lr);
  const __m256 eps = _mm256_set1_ps(c.eps);
  const __m256 zero = _mm256_setzero_ps();
  __m256 all_ok = _mm256_castsi256_ps(_mm256_set1_epi32(-1));
  std::size_t i = 0;
  // No FMA here: the sequence of roundings matches the scalar reference.
  for (; i + 8 <= count; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 ok = _mm256_cmp_ps(_mm256_sub_ps(g, g), zero, _CMP_EQ_OQ);
    all_ok = _mm256_and_ps(all_ok, ok);
    const __m256 m0 = _mm256_loadu_ps(m + i);
    const __m256 v0 = _mm256_loadu_ps(v + i);
    const __m256 p0 = _mm256_loadu_ps(param + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, m0), _mm256_mul_ps(omb1, g));
    const __m256 vi = _mm256_add_ps(_mm256_mul_ps(b2, v0), _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    const __m256 mhat = _mm256_div_ps(mi, bc1);
    const __m256 vhat = _mm256_div_ps(vi, bc2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, mhat), _mm256_add_ps(_mm256_sqrt_ps(vhat), eps));
    _mm256_storeu_ps(m + i, _mm256_blendv_ps(m0, mi, ok));
    _mm256_storeu_ps(v + i, _mm256_blendv_ps(v0, vi, ok));
    _mm256_storeu_ps(param + i, _mm256_blendv_ps(p0, _mm256_sub_ps(p0, step), ok));
  }
  bool finite = _mm256_movemask_ps(all_ok) == 0xff;
  if (i < count) finite = scalar::adam_update(param + i, m + i, v + i, grad + i, count - i, c) && finite;
  return finite;
}

bool sgd_update(float* param, const float* grad, std::size_t count, float rate) {
  const __m256 r = _mm256_set1_ps(rate);
  const __m256 zero = _mm256_setzero_ps();
  __m256 all_ok = _mm256_castsi256_ps(_mm256_set1_epi32(-1));
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 ok = _mm256_cmp_ps(_mm256_sub_ps(g, g), zero, _CMP_EQ_OQ);
    all_ok = _mm256_and_ps(all_ok, ok);
    const __m256 p0 = _mm256_loadu_ps(param + i);
    _mm256_storeu_ps(param + i, _mm256_blendv_ps(p0, _mm256_sub_ps(p0, _mm256_mul_ps(r, g)), ok));
  }
  bool finite = _mm256_movemask_ps(all_ok) == 0xff;
  if (i < count) finite = scalar::sgd_update(param + i, grad + i, count - i, rate) && finite;
  return finite;
}

void leaky_relu(const float* x, float* out, std::size_t count, float alpha) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 slope = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 keep = _mm256_cmp_ps(v, zero, _CMP_GE_OQ);
    _mm256_storeu_ps(out + i, _mm256_blendv_ps(_mm256_mul_ps(slope, v), v, keep));
  }
  if (i < count) scalar::leaky_relu(x + i, out + i, count - i, alpha);
}

}  // namespace segx::kernels::avx2
