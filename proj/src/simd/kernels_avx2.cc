// Copyright 2026 the bnclab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 only. FMA stays disabled so that mul/add round
// separately, exactly as the scalar reference does.

#include <immintrin.h>

#include "kernels_internal.h"

namespace bnclab::simd::avx2 {
namespace {

double Dot(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, prod);
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  for (size_t i = full; i < n; ++i) lane[i - full] = lane[i - full] + x[i] * y[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void Axpy(double a, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (size_t i = full; i < n; ++i) y[i] = y[i] + a * x[i];
}

void Scale(double a, double* x, size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (size_t i = full; i < n; ++i) x[i] = a * x[i];
}

void Relu(double* x, size_t n) {
  // max_pd(v, 0) yields the second operand unless v > 0, which matches the
  // scalar rule for -0.0 and NaN as well.
  const __m256d zero = _mm256_setzero_pd();
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (size_t i = full; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

constexpr KernelTable kAvx2 = {"avx2", Dot, Axpy, Scale, Relu};

}  // namespace

const KernelTable* Table() { return &kAvx2; }

}  // namespace bnclab::simd::avx2
