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

#include <atomic>
#include <cstdlib>
#include <string>

#include "segx/kernels/kernels.hpp"
#include "segx/tensor.hpp"

namespace segx::kernels {

namespace {

struct Table {
  decltype(&scalar::sgemm) sgemm;
  decltype(&scalar::adam_update) adam_update;
  decltype(&scalar::sgd_update) sgd_update;
  decltype(&scalar::leaky_relu) leaky_relu;
};

constexpr Table kScalar{&scalar::sgemm, &scalar::adam_update, &scalar::sgd_update, &scalar::leaky_relu};
#if SEGX_HAVE_AVX2
constexpr Table kAvx2{&avx2::sgemm, &avx2::adam_update, &avx2::sgd_update, &avx2::leaky_relu};
#endif

const Table& table_for(Isa isa) {
#if SEGX_HAVE_AVX2
  if (isa == Isa::avx2) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

Isa initial_isa() {
  if (const char* env = std::getenv("SEGX_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
  }
  return best_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if SEGX_HAVE_AVX2 && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this build/CPU");
  }
  current().store(isa, std::memory_order_relaxed);
}

void sgemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
           const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  table_for(active_isa()).sgemm(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

bool adam_update(float* param, float* m, float* v, const float* grad, std::size_t count,
                 const AdamCoeffs& c) {
  return table_for(active_isa()).adam_update(param, m, v, grad, count, c);
}

bool sgd_update(float* param, const float* grad, std::size_t count, float rate) {
  return table_for(active_isa()).sgd_update(param, grad, count, rate);
}

void leaky_relu(const float* x, float* out, std::size_t count, float alpha) {
  table_for(active_isa()).leaky_relu(x, out, count, alpha);
}

}  // namespace segx::kernels
