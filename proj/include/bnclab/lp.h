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

// Dense two-phase primal simplex for node relaxations.
//
// Every constraint becomes a row  a^T x <= b  with its own slack, in this
// order: the base rows of the instance, one row x_j <= u_j per finite upper
// bound, then the extra rows in insertion order. Variable indices
// 0..n-1 are structural; n + i is the slack of row i, defined as
// s_i = b_i - a_i^T x. Lower bounds are always zero.

#ifndef BNCLAB_LP_H_
#define BNCLAB_LP_H_

#include <cstdint>
#include <span>
#include <vector>

#include "bnclab/instance.h"

namespace bnclab {

struct ExtraRow {
  std::vector<double> coeffs;  // length n
  double rhs = 0.0;

  bool operator==(const ExtraRow&) const = default;
};

struct LpProblem {
  const MipInstance* base = nullptr;
  std::vector<ExtraRow> extra_rows;
};

inline constexpr double kLpTol = 1e-9;
inline constexpr double kLpExposedTol = 1e-7;
inline constexpr double kPivotTol = 1e-10;
inline constexpr int kBlandAfterDegenerate = 1000;

struct LpSolution {
  enum class Status { kOptimal, kInfeasible, kUnbounded };
  Status status = Status::kInfeasible;
  std::vector<double> x;  // structural part, length n
  double value = 0.0;
  // basis[r] is the variable basic in tableau row r.
  std::vector<int> basis;

  // Row system the tableau refers to (base, bound and extra rows).
  int n = 0;
  int n1 = 0;
  std::vector<double> rows;  // num_rows x n, row-major
  std::vector<double> rhs;

  // Final tableau over the n + num_rows structural and slack columns.
  std::vector<double> tableau;  // num_rows x (n + num_rows)
  std::vector<double> tableau_rhs;

  int num_rows() const { return static_cast<int>(rhs.size()); }
  int num_cols() const { return n + num_rows(); }
  std::span<const double> row(int i) const {
    return {rows.data() + static_cast<size_t>(i) * n, static_cast<size_t>(n)};
  }
  bool is_basic(int var) const;
};

// Builds the row system described above.
void BuildRows(const LpProblem& p, std::vector<double>& rows, std::vector<double>& rhs);

uint64_t Digest(const LpProblem& p);

// Deterministic: identical problems give identical bases and bitwise
// identical x. Throws SolverError on numerical breakdown or iteration cap.
LpSolution SolveLp(const LpProblem& p);

struct TableauRowView {
  int basic = -1;
  std::vector<int> nonbasic;  // ascending variable index
  std::vector<double> coeffs;
  double rhs = 0.0;
};

// x_basic + sum_j coeffs[j] * x_{nonbasic[j]} = rhs.
// Throws ParameterError if sol is not optimal or basic_index is not basic.
TableauRowView TableauRow(const LpSolution& sol, int basic_index);

// Max over rows of a_i^T x - b_i (0 for an empty system).
double MaxRowResidual(const LpSolution& sol, std::span<const double> x);

}  // namespace bnclab

#endif  // BNCLAB_LP_H_
