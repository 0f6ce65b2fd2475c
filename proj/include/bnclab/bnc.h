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

// Branch-and-cut as a three-type decision process: node selection, cut
// selection, branching.

#ifndef BNCLAB_BNC_H_
#define BNCLAB_BNC_H_

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bnclab/cuts.h"
#include "bnclab/decision.h"
#include "bnclab/instance.h"
#include "bnclab/lp.h"
#include "bnclab/policy.h"

namespace bnclab {

struct BncConfig {
  int max_rounds = 50;  // M
  double eps_gap = 1e-6;
  int root_cut_rounds = 1;  // R
  int kappa = 2;            // cuts taken per cut round
  int cut_cap = 10;         // r, candidate pool size
  // Only "root-rounds": cut while at the root with fewer than R cut rounds.
  std::string cut_rule = "root-rounds";
};

void ValidateBncConfig(const BncConfig& cfg);

// Availability caps (max(M,2), max(r,2), max(n,2)).
std::array<double, 3> BncRho(const BncConfig& cfg, const MipInstance& inst);

// Upper bound H on V: M * (p1 + max(p2 + p3, kappa * p2)).
double BncPenaltyBound(const BncConfig& cfg, const PenaltySpec& penalties);

// Memoizes node LPs of one instance. Results are bitwise what SolveLp
// returns, so cached and uncached runs agree exactly. Thread-safe.
class LpCache {
 public:
  explicit LpCache(size_t max_entries = 20000) : max_entries_(max_entries) {}
  std::shared_ptr<const LpSolution> Solve(const LpProblem& p);
  size_t hits() const;
  size_t misses() const;

 private:
  struct Entry {
    const MipInstance* base;
    std::vector<ExtraRow> rows;
    std::shared_ptr<const LpSolution> sol;
  };
  mutable std::mutex mu_;
  size_t max_entries_;
  size_t size_ = 0;
  size_t hits_ = 0;
  size_t misses_ = 0;
  std::unordered_map<uint64_t, std::vector<Entry>> map_;
};

struct BncResult {
  enum class Status { kOptimal, kInfeasible, kLimit };
  enum class Termination { kEmpty, kGap, kMaxRounds };
  Status status = Status::kLimit;
  Termination termination = Termination::kMaxRounds;
  std::optional<std::vector<double>> x;
  double lb = 0.0;
  double ub = 0.0;
  double v = 0.0;
  RunTrace trace;
  std::vector<Cut> cuts;  // every generated candidate, in id order
  int nodes_created = 0;
  int lp_solves = 0;
};

std::string_view StatusName(BncResult::Status s);
std::string_view TerminationName(BncResult::Termination t);

BncResult SolveBnc(const MipInstance& inst, const PolicyBundle& bundle, const BncConfig& cfg,
                   const PenaltySpec& penalties = {}, LpCache* cache = nullptr);

}  // namespace bnclab

#endif  // BNCLAB_BNC_H_
