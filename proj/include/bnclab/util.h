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

// Hashing, portable random numbers and a deterministic task fan-out.

#ifndef BNCLAB_UTIL_H_
#define BNCLAB_UTIL_H_

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace bnclab {

inline constexpr char kVersion[] = "bnclab 1.0.0";

// FNV-1a over canonicalized values. Used for state digests, score hashes,
// config hashes and slice-scan trace signatures, where a collision can only
// skip a refinement step.
class Hasher {
 public:
  template <std::integral T>
  Hasher& Add(T v) {
    if constexpr (std::is_signed_v<T>) {
      return AddWord(static_cast<uint64_t>(static_cast<int64_t>(v)));
    } else {
      return AddWord(static_cast<uint64_t>(v));
    }
  }
  // -0.0 hashes like 0.0 and every NaN hashes alike.
  Hasher& Add(double v);
  Hasher& Add(std::span<const double> v);
  Hasher& Add(std::string_view s);
  uint64_t digest() const { return state_; }

 private:
  Hasher& AddWord(uint64_t v);
  uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string HexDigest(uint64_t digest);

// std::mt19937_64 is bit-exact across standard libraries; the standard
// distributions are not, so the few we need are written out here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }
  // Uniform on the closed integer interval [lo, hi].
  int64_t UniformInt(int64_t lo, int64_t hi);
  // Uniform on [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a label.
uint64_t DeriveSeed(uint64_t base, uint64_t label);

// Runs task(i) for i in [0, count) on up to `threads` workers. Results are
// written by index, so the outcome never depends on scheduling.
void ParallelFor(size_t count, int threads, const std::function<void(size_t)>& task);

int DefaultThreads();

}  // namespace bnclab

#endif  // BNCLAB_UTIL_H_
