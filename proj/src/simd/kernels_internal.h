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

#ifndef BNCLAB_SRC_SIMD_KERNELS_INTERNAL_H_
#define BNCLAB_SRC_SIMD_KERNELS_INTERNAL_H_

#include "bnclab/simd/kernels.h"

namespace bnclab::simd {
namespace avx2 {
const KernelTable* Table();
}
namespace neon {
const KernelTable* Table();
}
}  // namespace bnclab::simd

#endif  // BNCLAB_SRC_SIMD_KERNELS_INTERNAL_H_
