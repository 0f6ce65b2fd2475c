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

// AArch64 only. Two float64x2 accumulators emulate the four reference lanes;
// vmulq/vaddq are used instead of vfmaq to keep the reference rounding.

#include <arm_neon.h>

#include "kernels_internal.h"

namespace bnclab::simd::neon {
namespace {

double Dot(const double* x, const double* y, size_t n) {
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double lane[4];
  vst1q_f64(lane, acc01);
  vst1q_f64(lane + 2, acc23);
  for (size_t i = full; i < n; ++i) lane[i - full] = lane[i - full] + x[i] * y[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void Axpy(double a, const double* x, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const size_t full = n & ~size_t{1};
  for (size_t i = 0; i < full; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (size_t i = full; i < n; ++i) y[i] = y[i] + a * x[i];
}

void Scale(double a, double* x, size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const size_t full = n & ~size_t{1};
  for (size_t i = 0; i < full; i += 2) vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (size_t i = full; i < n; ++i) x[i] = a * x[i];
}

void Relu(double* x, size_t n) {
  // Select rather than vmaxq: vmaxq propagates NaN, the reference does not.
  const float64x2_t zero = vdupq_n_f64(0.0);
  const size_t full = n & ~size_t{1};
  for (size_t i = 0; i < full; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    vst1q_f64(x + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
  }
  for (size_t i = full; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

constexpr KernelTable kNeon = {"neon", Dot, Axpy, Scale, Relu};

}  // namespace

const KernelTable* Table() { return &kNeon; }

}  // namespace bnclab::simd::neon
