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

#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "bnclab/simd/kernels.h"
#include "bnclab/util.h"

namespace bnclab {
namespace {

using simd::KernelTable;

bool SameBits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> RandomVector(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-1e3, 1e3) * std::pow(10.0, rng.UniformInt(-8, 8));
  return v;
}

TEST(Kernels, ScalarAlwaysAvailableAndFirst) {
  auto all = simd::AvailableKernels();
  ASSERT_FALSE(all.empty());
  EXPECT_STREQ(all.front()->name, "scalar");
}

TEST(Kernels, VariantsBitIdenticalToScalar) {
  const KernelTable& ref = simd::ScalarKernels();
  Rng rng(11);
  for (const KernelTable* k : simd::AvailableKernels()) {
    for (size_t n = 0; n <= 67; ++n) {
      for (int rep = 0; rep < 8; ++rep) {
        auto x = RandomVector(rng, n);
        auto y = RandomVector(rng, n);
        const double a = rng.Uniform(-3.0, 3.0);
        EXPECT_TRUE(SameBits(ref.dot(x.data(), y.data(), n), k->dot(x.data(), y.data(), n)))
            << k->name << " dot n=" << n;

        auto y1 = y, y2 = y;
        ref.axpy(a, x.data(), y1.data(), n);
        k->axpy(a, x.data(), y2.data(), n);
        for (size_t i = 0; i < n; ++i) EXPECT_TRUE(SameBits(y1[i], y2[i])) << k->name << " axpy";

        auto s1 = x, s2 = x;
        ref.scale(a, s1.data(), n);
        k->scale(a, s2.data(), n);
        for (size_t i = 0; i < n; ++i) EXPECT_TRUE(SameBits(s1[i], s2[i])) << k->name << " scale";

        auto r1 = x, r2 = x;
        ref.relu(r1.data(), n);
        k->relu(r2.data(), n);
        for (size_t i = 0; i < n; ++i) EXPECT_TRUE(SameBits(r1[i], r2[i])) << k->name << " relu";
      }
    }
  }
}

TEST(Kernels, DotLaneOrderMatchesDocumentedReduction) {
  // Values chosen so that summation order is visible in the result.
  std::vector<double> x = {1e16, 1.0, -1e16, 1.0, 3.0, 1.0, 1.0};
  std::vector<double> y(x.size(), 1.0);
  double lane[4] = {0, 0, 0, 0};
  for (size_t i = 0; i < 4; ++i) lane[i] += x[i];
  for (size_t i = 4; i < x.size(); ++i) lane[i - 4] += x[i];
  const double expected = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (const KernelTable* k : simd::AvailableKernels()) {
    EXPECT_TRUE(SameBits(expected, k->dot(x.data(), y.data(), x.size()))) << k->name;
  }
}

TEST(Kernels, ReluHandlesSignedZeroAndNan) {
  for (const KernelTable* k : simd::AvailableKernels()) {
    std::vector<double> v = {-0.0, 0.0, -1.0, 2.0, std::nan("")};
    std::vector<double> ref = v;
    simd::ScalarKernels().relu(ref.data(), ref.size());
    k->relu(v.data(), v.size());
    for (size_t i = 0; i < v.size(); ++i) EXPECT_TRUE(SameBits(ref[i], v[i])) << k->name;
  }
}

TEST(Kernels, SelectByName) {
  const std::string before = simd::ActiveKernels().name;
  EXPECT_TRUE(simd::SelectKernels("scalar"));
  EXPECT_STREQ(simd::ActiveKernels().name, "scalar");
  EXPECT_FALSE(simd::SelectKernels("no-such-variant"));
  EXPECT_TRUE(simd::SelectKernels(before));
}

}  // namespace
}  // namespace bnclab
