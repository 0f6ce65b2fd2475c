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

// Chvatal-Gomory cuts read off an optimal tableau.

#ifndef BNCLAB_CUTS_H_
#define BNCLAB_CUTS_H_

#include <cstdint>
#include <vector>

#include "bnclab/instance.h"
#include "bnclab/lp.h"

namespace bnclab {

struct CutOrigin {
  int node = 0;
  int round = 0;
  int source_var = -1;  // basic variable whose tableau row produced the cut

  bool operator==(const CutOrigin&) const = default;
};

// alpha^T x <= beta over the original variables.
struct Cut {
  std::vector<double> alpha;
  double beta = 0.0;
  CutOrigin origin;
  int64_t id = 0;

  ExtraRow AsRow() const { return {alpha, beta}; }
  bool operator==(const Cut&) const = default;
};

inline constexpr double kIntTol = 1e-6;
inline constexpr double kCutViolationTol = 1e-7;

// One cut per fractional basic integer variable, most fractional first
// (ties by variable index), at most `cap` of them. Ids continue from
// *next_id, which is advanced. A source row is skipped when one of its
// nonzero nonbasic entries belongs to a variable that is not integral at
// every integer-feasible point (a continuous structural, or the slack of a
// row with fractional data or continuous support).
std::vector<Cut> GenerateCandidateCuts(const LpSolution& sol, const MipInstance& inst, int cap,
                                       CutOrigin origin, int64_t* next_id);

// True iff every feasible integer point satisfies alpha^T x <= beta + 1e-7.
// Throws RefusedError on instances the enumeration oracle cannot handle.
bool CheckCutValidity(const Cut& cut, const MipInstance& inst);

// Row-wise integrality used for slack variables.
bool RowHasIntegralSlack(std::span<const double> row, double rhs, int n1);

}  // namespace bnclab

#endif  // BNCLAB_CUTS_H_
