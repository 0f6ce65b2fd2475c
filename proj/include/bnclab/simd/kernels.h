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

// Dense double-precision kernels behind the simplex row updates, MLP layers
// and the sign-vector enumeration.
//
// Every variant reproduces the scalar reference bit-for-bit:
//  - element-wise kernels are a single IEEE operation per element (no FMA);
//  - Dot accumulates into four lanes, lane l holding indices i with
//    i % 4 == l over the full blocks, the n % 4 tail elements go to lanes
//    0.. in order, and the result is (lane0 + lane1) + (lane2 + lane3).
// Because of this, runtime dispatch never changes a trace or a report.

#ifndef BNCLAB_SIMD_KERNELS_H_
#define BNCLAB_SIMD_KERNELS_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace bnclab::simd {

struct KernelTable {
  const char* name;
  double (*dot)(const double* x, const double* y, size_t n);
  // y[i] = y[i] + a * x[i]
  void (*axpy)(double a, const double* x, double* y, size_t n);
  // x[i] = a * x[i]
  void (*scale)(double a, double* x, size_t n);
  // x[i] = x[i] > 0 ? x[i] : 0
  void (*relu)(double* x, size_t n);
};

const KernelTable& ScalarKernels();
// nullptr when the variant is not compiled in or the CPU lacks it.
const KernelTable* Avx2Kernels();
const KernelTable* NeonKernels();

// All variants usable on this machine, scalar first.
std::vector<const KernelTable*> AvailableKernels();

// The table used by the free functions below. Chosen once: the widest
// supported variant, unless BNCLAB_KERNELS names another one.
const KernelTable& ActiveKernels();
// Overrides the active table; returns false if `name` is unavailable.
bool SelectKernels(std::string_view name);

inline double Dot(std::span<const double> x, std::span<const double> y) {
  return ActiveKernels().dot(x.data(), y.data(), x.size());
}
inline void Axpy(double a, std::span<const double> x, std::span<double> y) {
  ActiveKernels().axpy(a, x.data(), y.data(), x.size());
}
inline void Scale(double a, std::span<double> x) { ActiveKernels().scale(a, x.data(), x.size()); }
inline void Relu(std::span<double> x) { ActiveKernels().relu(x.data(), x.size()); }

}  // namespace bnclab::simd

#endif  // BNCLAB_SIMD_KERNELS_H_
