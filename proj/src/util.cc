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

#include "bnclab/util.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "bnclab/errors.h"

namespace bnclab {

Hasher& Hasher::AddWord(uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (v >> (8 * i)) & 0xffu;
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Hasher& Hasher::Add(double v) {
  if (v == 0.0) v = 0.0;
  if (std::isnan(v)) return AddWord(0x7ff8000000000000ULL);
  return AddWord(std::bit_cast<uint64_t>(v));
}

Hasher& Hasher::Add(std::span<const double> v) {
  Add(v.size());
  for (double x : v) Add(x);
  return *this;
}

Hasher& Hasher::Add(std::string_view s) {
  Add(s.size());
  for (unsigned char ch : s) {
    state_ ^= ch;
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

std::string HexDigest(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

int64_t Rng::UniformInt(int64_t lo, int64_t hi) {
  if (hi < lo) throw ParameterError("UniformInt: empty interval");
  const uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo);
  if (span == UINT64_MAX) return static_cast<int64_t>(engine_());
  const uint64_t range = span + 1;
  // Reject the top partial bucket so every value is equally likely.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<int64_t>(static_cast<uint64_t>(lo) + x % range);
}

uint64_t DeriveSeed(uint64_t base, uint64_t label) {
  // splitmix64 finalizer over the pair.
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int DefaultThreads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void ParallelFor(size_t count, int threads, const std::function<void(size_t)>& task) {
  if (threads <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const size_t n = std::min<size_t>(static_cast<size_t>(threads), count);
  std::vector<std::jthread> pool;
  pool.reserve(n);
  for (size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bnclab
