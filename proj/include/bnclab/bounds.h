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

// Closed-form complexity bounds. Natural logarithms throughout; counts that
// can overflow are carried as logarithms.

#ifndef BNCLAB_BOUNDS_H_
#define BNCLAB_BOUNDS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bnclab {

struct LogMagnitude {
  double log = 0.0;

  // exp(log) when it is a finite double.
  std::optional<double> Materialize() const;
  static LogMagnitude FromValue(double v);
};

// Region count Gamma (as ln Gamma), exponent gamma and degree beta.
struct StructureTriple {
  double log_gamma = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
};

void ValidateTriple(const StructureTriple& t);

struct MlpDims {
  int L = 1;
  int W = 1;
  int U = 1;
  int p = 2;
  int alpha = 1;

  bool is_relu() const { return p == 2 && alpha == 1; }
};

struct TypeInputs {
  double rho = 2.0;
  int W = 0;
  StructureTriple structure;
  std::optional<MlpDims> mlp;   // when set, `structure` is derived from it
  bool linear = false;          // structure (1, 0, 1)
  std::optional<double> q_sum;  // observed sum over the sample of Q_{M,k}
  std::optional<double> mu;     // mean Q_{M,k} per instance
};

struct BoundInputs {
  int M = 1;
  double H = 3.0;
  int N = 1;
  double delta = 0.1;
  std::vector<TypeInputs> types;

  int d() const { return static_cast<int>(types.size()); }
  int W() const;
};

// Fills `structure` for linear and MLP entries and checks the basic ranges.
BoundInputs Normalize(BoundInputs in);

// 4 (gamma ln(2 gamma + 1) + W ln(4 e beta + 1) + ln 2 + ln Gamma).
double PdimUpperBound(const StructureTriple& t, int W);

// (Gamma', gamma', 0) of the cost class. Requires beta_k >= 1.
StructureTriple CostStructure(const BoundInputs& in);

// 4 (W ln(3e) + 2W ln prod rho + (d+1) ln 2 + W (M+1) sum ln rho).
double LinearPdimBound(const BoundInputs& in);

// (2^L alpha^(L^2 W) (2 e p U / W)^(L W), L W, L alpha^L); ln Gamma is
// floored at 0 and alpha = 0 uses alpha^(L^2 W) -> 1.
StructureTriple MlpStructure(const MlpDims& dims);

// PdimUpperBound(CostStructure(MlpStructure(...)), W).
double MlpPdimBound(const BoundInputs& in);

struct QBound {
  LogMagnitude log_value;
  double value = 0.0;  // exact product, +inf on overflow
};
// rho_k * (prod_j rho_j)^M. Requires every rho_j >= 2.
QBound QWorstCase(std::span<const double> rho, int M, int k);

// ln of 2^d Gamma_bar prod Q_k^gamma_k (e sum Q_k rho_k beta_k / W)^W.
LogMagnitude RBound(const BoundInputs& in);

struct MassartResult {
  double estimate = 0.0;
  double bound = 0.0;  // max_j ||x^j - mean|| sqrt(2 ln r) / N
  size_t distinct = 0;
};

struct MassartMode {
  bool exact = true;
  uint64_t seed = 0;
  int draws = 0;
};

inline constexpr int kMaxExactMassartN = 20;

// E_sigma sup_j (1/N) sigma . x^j over the given vectors.
MassartResult MassartEstimate(const std::vector<std::vector<double>>& vectors,
                              MassartMode mode = {});

// H sqrt((2/N)(d + sum ln Gamma_k + (gamma~ + W) ln sum Q + W ln(e sum rho beta / W))).
double RademacherBoundEmpirical(const BoundInputs& in);

// H sqrt((pdim + ln(1/delta)) / N), suppressed constant taken as 1.
double UniformConvergencePdim(double H, double pdim, int N, double delta);
// rad + H sqrt(ln(1/delta) / N), suppressed constant taken as 1.
double UniformConvergenceRademacher(double H, double rad, int N, double delta);

// ReLU-only distribution-level bound with N sum mu inside the logarithm.
double ExpectedRademacherBound(const BoundInputs& in);

// 1 if beta == 0, else 2 (2 e N beta / W)^W. Requires N >= W >= 1.
LogMagnitude SignPatternBound(int N, double beta, int W);

struct AuxViolation {
  int inequality = 0;  // 1, 2 or 3
  std::vector<double> inputs;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct AuxReport {
  int draws = 0;
  std::vector<AuxViolation> violations;
};

AuxReport AuxInequalityFuzz(uint64_t seed, int draws);

// ---- Tables and files ------------------------------------------------------

struct BoundRow {
  std::string name;
  LogMagnitude log_value;
  double value = 0.0;  // plain value; NaN when it does not fit a double
  std::string note;
};

// Every bound that the inputs allow, in a fixed order.
std::vector<BoundRow> ComputeBoundTable(const BoundInputs& in);
std::string BoundTableCsv(const std::vector<BoundRow>& rows);
std::string BoundTableText(const std::vector<BoundRow>& rows);

// JSON with schema "bnclab.bounds/1".
BoundInputs ParseBoundInputs(std::string_view json_text);
std::string SerializeBoundInputs(const BoundInputs& in);

}  // namespace bnclab

#endif  // BNCLAB_BOUNDS_H_
