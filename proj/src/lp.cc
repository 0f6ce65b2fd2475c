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

#include "bnclab/lp.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "bnclab/errors.h"
#include "bnclab/simd/kernels.h"
#include "bnclab/util.h"

namespace bnclab {

bool LpSolution::is_basic(int var) const {
  return std::find(basis.begin(), basis.end(), var) != basis.end();
}

void BuildRows(const LpProblem& p, std::vector<double>& rows, std::vector<double>& rhs) {
  if (p.base == nullptr) throw ParameterError("LP problem without base instance");
  const MipInstance& inst = *p.base;
  Validate(inst);
  const int n = inst.n();
  rows.assign(inst.a.begin(), inst.a.end());
  rhs.assign(inst.b.begin(), inst.b.end());
  for (int j = 0; j < n; ++j) {
    const double u = inst.upper(j);
    if (!std::isfinite(u)) continue;
    for (int k = 0; k < n; ++k) rows.push_back(k == j ? 1.0 : 0.0);
    rhs.push_back(u);
  }
  for (const ExtraRow& r : p.extra_rows) {
    if (r.coeffs.size() != static_cast<size_t>(n)) {
      throw ValidationError("extra row has " + std::to_string(r.coeffs.size()) +
                            " coefficients, expected " + std::to_string(n));
    }
    rows.insert(rows.end(), r.coeffs.begin(), r.coeffs.end());
    rhs.push_back(r.rhs);
  }
}

uint64_t Digest(const LpProblem& p) {
  Hasher h;
  if (p.base != nullptr) h.Add(Digest(*p.base));
  for (const ExtraRow& r : p.extra_rows) h.Add(std::span<const double>(r.coeffs)).Add(r.rhs);
  return h.digest();
}

namespace {

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), stride_(cols + 1) {
    data_.assign(static_cast<size_t>(rows) * stride_, 0.0);
    obj_.assign(static_cast<size_t>(stride_), 0.0);
    basis_.assign(static_cast<size_t>(rows), -1);
  }

  double& at(int r, int c) { return data_[static_cast<size_t>(r) * stride_ + c]; }
  double& rhs(int r) { return at(r, cols_); }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * stride_, static_cast<size_t>(stride_)};
  }
  std::span<double> obj() { return obj_; }
  std::vector<int>& basis() { return basis_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void Pivot(int r, int e) {
    const double p = at(r, e);
    simd::Scale(1.0 / p, row(r));
    at(r, e) = 1.0;
    for (int i = 0; i < rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, e);
      if (f == 0.0) continue;
      simd::Axpy(-f, row(r), row(i));
      at(i, e) = 0.0;
    }
    const double f = obj_[e];
    if (f != 0.0) {
      simd::Axpy(-f, row(r), obj());
      obj_[e] = 0.0;
    }
    basis_[r] = e;
  }

 private:
  int rows_;
  int cols_;
  int stride_;
  std::vector<double> data_;
  std::vector<double> obj_;
  std::vector<int> basis_;
};

enum class Outcome { kOptimal, kUnbounded };

// Runs primal simplex on the current objective row over columns [0, allowed).
Outcome Iterate(Tableau& t, int allowed, uint64_t digest) {
  const long cap = 20000 + 50L * (t.rows() + t.cols());
  long degenerate = 0;
  bool bland = false;
  for (long iter = 0;; ++iter) {
    if (iter >= cap) {
      throw SolverError("simplex iteration cap reached (problem " + HexDigest(digest) + ")",
                        digest);
    }
    auto obj = t.obj();
    int enter = -1;
    double best = -kLpTol;
    for (int j = 0; j < allowed; ++j) {
      if (obj[j] < best) {
        enter = j;
        if (bland) break;
        best = obj[j];
      }
    }
    if (enter < 0) return Outcome::kOptimal;

    int leave = -1;
    double best_ratio = 0.0;
    auto& basis = t.basis();
    for (int r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, t.rhs(r)) / a;
      if (leave < 0 || ratio < best_ratio - 1e-12 ||
          (ratio <= best_ratio + 1e-12 && basis[r] < basis[leave])) {
        if (leave < 0 || ratio < best_ratio - 1e-12) best_ratio = ratio;
        leave = r;
      }
    }
    if (leave < 0) return Outcome::kUnbounded;
    if (best_ratio <= kLpTol) {
      if (++degenerate >= kBlandAfterDegenerate) bland = true;
    }
    t.Pivot(leave, enter);
  }
}

}  // namespace

LpSolution SolveLp(const LpProblem& p) {
  LpSolution sol;
  BuildRows(p, sol.rows, sol.rhs);
  const MipInstance& inst = *p.base;
  const int n = inst.n();
  const int rows = static_cast<int>(sol.rhs.size());
  sol.n = n;
  sol.n1 = inst.n1;
  const uint64_t digest = Digest(p);

  std::vector<int> art_row;
  for (int r = 0; r < rows; ++r) {
    if (sol.rhs[r] < 0.0) art_row.push_back(r);
  }
  const int real_cols = n + rows;
  const int cols = real_cols + static_cast<int>(art_row.size());
  Tableau t(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto a = sol.row(r);
    const double sign = sol.rhs[r] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) t.at(r, j) = sign * a[j];
    t.at(r, n + r) = sign;
    t.rhs(r) = sign * sol.rhs[r];
    t.basis()[r] = n + r;
  }
  for (size_t k = 0; k < art_row.size(); ++k) {
    const int r = art_row[k];
    const int col = real_cols + static_cast<int>(k);
    t.at(r, col) = 1.0;
    t.basis()[r] = col;
  }

  if (!art_row.empty()) {
    // Phase 1: minimize the sum of artificials.
    auto obj = t.obj();
    for (int r : art_row) simd::Axpy(-1.0, t.row(r), obj);
    for (int c = real_cols; c < cols; ++c) obj[c] = 0.0;
    Iterate(t, cols, digest);
    double infeasibility = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (t.basis()[r] >= real_cols) infeasibility += t.rhs(r);
    }
    if (infeasibility > kLpExposedTol) {
      sol.status = LpSolution::Status::kInfeasible;
      return sol;
    }
    for (int r = 0; r < rows; ++r) {
      if (t.basis()[r] < real_cols) continue;
      int best = -1;
      double mag = kPivotTol;
      for (int j = 0; j < real_cols; ++j) {
        const double v = std::abs(t.at(r, j));
        if (v > mag) {
          mag = v;
          best = j;
        }
      }
      if (best < 0) {
        throw SolverError(
            "cannot drive artificial out of basis (problem " + HexDigest(digest) + ")", digest);
      }
      t.Pivot(r, best);
    }
  }

  // Phase 2.
  auto obj = t.obj();
  std::fill(obj.begin(), obj.end(), 0.0);
  for (int j = 0; j < n; ++j) obj[j] = inst.c[j];
  for (int r = 0; r < rows; ++r) {
    const int b = t.basis()[r];
    if (b < n && inst.c[b] != 0.0) simd::Axpy(-inst.c[b], t.row(r), obj);
  }
  for (int c = real_cols; c < cols; ++c) obj[c] = 0.0;
  if (Iterate(t, real_cols, digest) == Outcome::kUnbounded) {
    sol.status = LpSolution::Status::kUnbounded;
    return sol;
  }

  sol.status = LpSolution::Status::kOptimal;
  sol.basis = t.basis();
  sol.x.assign(static_cast<size_t>(n), 0.0);
  sol.tableau.resize(static_cast<size_t>(rows) * real_cols);
  sol.tableau_rhs.resize(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < real_cols; ++j) {
      sol.tableau[static_cast<size_t>(r) * real_cols + j] = t.at(r, j);
    }
    double v = t.rhs(r);
    if (v < 0.0 && v > -kLpTol) v = 0.0;
    sol.tableau_rhs[r] = v;
    if (sol.basis[r] < n) sol.x[sol.basis[r]] = v;
  }
  sol.value = 0.0;
  for (int j = 0; j < n; ++j) sol.value += inst.c[j] * sol.x[j];
  return sol;
}

TableauRowView TableauRow(const LpSolution& sol, int basic_index) {
  if (sol.status != LpSolution::Status::kOptimal) {
    throw ParameterError("tableau row requested from a non-optimal solution");
  }
  const auto it = std::find(sol.basis.begin(), sol.basis.end(), basic_index);
  if (it == sol.basis.end()) {
    throw ParameterError("variable " + std::to_string(basic_index) + " is not basic");
  }
  const int r = static_cast<int>(it - sol.basis.begin());
  const int cols = sol.num_cols();
  std::vector<bool> basic(static_cast<size_t>(cols), false);
  for (int b : sol.basis) basic[b] = true;
  TableauRowView view;
  view.basic = basic_index;
  view.rhs = sol.tableau_rhs[r];
  for (int j = 0; j < cols; ++j) {
    if (basic[j]) continue;
    view.nonbasic.push_back(j);
    view.coeffs.push_back(sol.tableau[static_cast<size_t>(r) * cols + j]);
  }
  return view;
}

double MaxRowResidual(const LpSolution& sol, std::span<const double> x) {
  double worst = 0.0;
  for (int i = 0; i < sol.num_rows(); ++i) {
    const auto a = sol.row(i);
    double lhs = 0.0;
    for (int j = 0; j < sol.n; ++j) lhs += a[j] * x[j];
    worst = std::max(worst, lhs - sol.rhs[i]);
  }
  return worst;
}

}  // namespace bnclab
