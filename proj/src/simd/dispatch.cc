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

#include <atomic>
#include <cstdlib>

#include "kernels_internal.h"

namespace bnclab::simd {

const KernelTable* Avx2Kernels() {
#if defined(BNCLAB_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2::Table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* NeonKernels() {
#if defined(BNCLAB_HAVE_NEON)
  return neon::Table();
#else
  return nullptr;
#endif
}

std::vector<const KernelTable*> AvailableKernels() {
  std::vector<const KernelTable*> out = {&ScalarKernels()};
  if (const KernelTable* t = Avx2Kernels()) out.push_back(t);
  if (const KernelTable* t = NeonKernels()) out.push_back(t);
  return out;
}

namespace {

const KernelTable* FindKernels(std::string_view name) {
  for (const KernelTable* t : AvailableKernels()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

const KernelTable* DefaultKernels() {
  if (const char* env = std::getenv("BNCLAB_KERNELS")) {
    if (const KernelTable* t = FindKernels(env)) return t;
  }
  return AvailableKernels().back();
}

std::atomic<const KernelTable*>& Active() {
  static std::atomic<const KernelTable*> active{DefaultKernels()};
  return active;
}

}  // namespace

const KernelTable& ActiveKernels() { return *Active().load(std::memory_order_relaxed); }

bool SelectKernels(std::string_view name) {
  const KernelTable* t = FindKernels(name);
  if (t == nullptr) return false;
  Active().store(t, std::memory_order_relaxed);
  return true;
}

}  // namespace bnclab::simd
