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

#include "bnclab/cuts.h"

#include <algorithm>
#include <cmath>

#include "bnclab/errors.h"

namespace bnclab {
namespace {

constexpr double kSnap = 1e-9;

bool NearInteger(double v) { return std::abs(v - std::round(v)) <= kSnap; }

double SnappedFloor(double v) { return NearInteger(v) ? std::round(v) : std::floor(v); }

double Fraction(double v) { return v - SnappedFloor(v); }

}  // namespace

bool RowHasIntegralSlack(std::span<const double> row, double rhs, int n1) {
  if (!NearInteger(rhs)) return false;
  for (size_t j = 0; j < row.size(); ++j) {
    if (static_cast<int>(j) < n1) {
      if (!NearInteger(row[j])) return false;
    } else if (row[j] != 0.0) {
      return false;
    }
  }
  return true;
}

std::vector<Cut> GenerateCandidateCuts(const LpSolution& sol, const MipInstance& inst, int cap,
                                       CutOrigin origin, int64_t* next_id) {
  if (sol.status != LpSolution::Status::kOptimal) {
    throw ParameterError("cut generation needs an optimal LP solution");
  }
  std::vector<Cut> cuts;
  if (cap <= 0) return cuts;
  const int n = sol.n;

  struct Source {
    int var;
    double frac_score;
  };
  std::vector<Source> sources;
  for (int var : sol.basis) {
    if (var >= inst.n1) continue;
    const double f = Fraction(sol.x[var]);
    const double score = std::min(f, 1.0 - f);
    if (score > kIntTol) sources.push_back({var, score});
  }
  std::sort(sources.begin(), sources.end(), [](const Source& a, const Source& b) {
    if (a.frac_score != b.frac_score) return a.frac_score > b.frac_score;
    return a.var < b.var;
  });

  std::vector<bool> integral_slack(static_cast<size_t>(sol.num_rows()));
  for (int i = 0; i < sol.num_rows(); ++i) {
    integral_slack[i] = RowHasIntegralSlack(sol.row(i), sol.rhs[i], inst.n1);
  }

  for (const Source& src : sources) {
    if (static_cast<int>(cuts.size()) >= cap) break;
    const TableauRowView tr = TableauRow(sol, src.var);
    bool usable = true;
    for (size_t k = 0; k < tr.nonbasic.size() && usable; ++k) {
      if (std::abs(tr.coeffs[k]) <= kSnap) continue;
      const int j = tr.nonbasic[k];
      if (j < n) {
        usable = j < inst.n1;
      } else {
        usable = integral_slack[j - n];
      }
    }
    if (!usable) continue;

    // x_B + sum floor(abar_j) x_j <= floor(bbar), then s_i = b_i - a_i^T x.
    std::vector<double> alpha(static_cast<size_t>(n), 0.0);
    double beta = SnappedFloor(tr.rhs);
    alpha[src.var] = 1.0;
    for (size_t k = 0; k < tr.nonbasic.size(); ++k) {
      const double g = SnappedFloor(tr.coeffs[k]);
      if (g == 0.0) continue;
      const int j = tr.nonbasic[k];
      if (j < n) {
        alpha[j] += g;
      } else {
        const int i = j - n;
        const auto a = sol.row(i);
        for (int q = 0; q < n; ++q) alpha[q] -= g * a[q];
        beta -= g * sol.rhs[i];
      }
    }
    bool nonzero = false;
    for (double& v : alpha) {
      if (NearInteger(v)) v = std::round(v);
      if (v == -0.0) v = 0.0;
      nonzero = nonzero || v != 0.0;
    }
    if (NearInteger(beta)) beta = std::round(beta);
    if (!nonzero) continue;

    double lhs = 0.0;
    for (int q = 0; q < n; ++q) lhs += alpha[q] * sol.x[q];
    if (lhs - beta <= kCutViolationTol) continue;

    Cut cut;
    cut.alpha = std::move(alpha);
    cut.beta = beta;
    cut.origin = origin;
    cut.origin.source_var = src.var;
    cut.id = (*next_id)++;
    cuts.push_back(std::move(cut));
  }
  return cuts;
}

bool CheckCutValidity(const Cut& cut, const MipInstance& inst) {
  if (cut.alpha.size() != static_cast<size_t>(inst.n())) {
    throw ValidationError("cut dimension does not match instance");
  }
  bool valid = true;
  ForEachFeasibleIntegerPoint(inst, [&](std::span<const double> x) {
    if (!valid) return;
    double lhs = 0.0;
    for (size_t j = 0; j < x.size(); ++j) lhs += cut.alpha[j] * x[j];
    if (lhs > cut.beta + kCutViolationTol) valid = false;
  });
  return valid;
}

}  // namespace bnclab
