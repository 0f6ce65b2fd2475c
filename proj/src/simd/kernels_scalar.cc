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

#include "bnclab/simd/kernels.h"

namespace bnclab::simd {
namespace {

double DotScalar(const double* x, const double* y, size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  const size_t full = n & ~size_t{3};
  for (size_t i = 0; i < full; i += 4) {
    lane[0] = lane[0] + x[i] * y[i];
    lane[1] = lane[1] + x[i + 1] * y[i + 1];
    lane[2] = lane[2] + x[i + 2] * y[i + 2];
    lane[3] = lane[3] + x[i + 3] * y[i + 3];
  }
  for (size_t i = full; i < n; ++i) lane[i - full] = lane[i - full] + x[i] * y[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void AxpyScalar(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void ScaleScalar(double a, double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] = a * x[i];
}

void ReluScalar(double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

constexpr KernelTable kScalar = {"scalar", DotScalar, AxpyScalar, ScaleScalar, ReluScalar};

}  // namespace

const KernelTable& ScalarKernels() { return kScalar; }

}  // namespace bnclab::simd
