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

// MIP instances  min { c^T x | A x <= b, x in Z^n1_+ x R^n2_+ },
// their generators, the text format, and the brute-force oracle.

#ifndef BNCLAB_INSTANCE_H_
#define BNCLAB_INSTANCE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bnclab {

struct MipInstance {
  std::string name;
  int m = 0;
  int n1 = 0;  // integer variables come first
  int n2 = 0;
  std::vector<double> a;  // row-major, m x n
  std::vector<double> b;
  std::vector<double> c;
  // Per-variable upper bounds; +inf allowed. The enumeration oracle needs
  // every integer variable finitely bounded.
  std::optional<std::vector<double>> var_upper;
  std::optional<uint64_t> seed;

  int n() const { return n1 + n2; }
  std::span<const double> row(int i) const {
    return {a.data() + static_cast<size_t>(i) * n(), static_cast<size_t>(n())};
  }
  double upper(int j) const;
  bool is_integer(int j) const { return j < n1; }

  bool operator==(const MipInstance&) const = default;
};

// Throws ValidationError on inconsistent dimensions, ParameterError on
// m < 1 or n < 1.
void Validate(const MipInstance& inst);

uint64_t Digest(const MipInstance& inst);

enum class Family { kKnapsack, kPacking, kCovering };

std::string_view FamilyName(Family f);
Family ParseFamily(std::string_view name);

struct GeneratorSpec {
  Family family = Family::kKnapsack;
  int n1 = 5;
  int n2 = 0;
  int m = 1;
  int coeff_lo = 1;
  int coeff_hi = 10;
  uint64_t seed = 0;
};

// Deterministic in the spec. All data are small integers. Integer variables
// are binary; continuous variables are bounded by 1 as well.
//  knapsack: dense nonnegative rows, b = floor(row sum / 2), c = -profit.
//  packing:  about half the coefficients zero, otherwise as knapsack.
//  covering: sum_j a_ij x_j >= ceil(row sum / 2) written as -A x <= -b,
//            c = +cost.
MipInstance GenerateInstance(const GeneratorSpec& spec);

// Text format, one record per line:
//   mip <name> <m> <n1> <n2>
//   c <n values>
//   row <n coefficients> <= <rhs>      (m lines)
//   ub <n values>                      (optional; "inf" allowed)
//   seed <u64>                         (optional)
// Blank lines and lines starting with '#' are ignored. Numbers are written
// with 17 significant digits so parse(serialize(x)) == x exactly.
std::string SerializeInstance(const MipInstance& inst);
MipInstance ParseInstance(std::string_view text);

MipInstance ReadInstanceFile(const std::string& path);
void WriteInstanceFile(const MipInstance& inst, const std::string& path);

struct IntegerOptimum {
  enum class Status { kOptimal, kInfeasible };
  Status status = Status::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
  // Set when continuous variables were gridded rather than optimized.
  bool approximate = false;
};

inline constexpr double kOracleFeasTol = 1e-9;
inline constexpr uint64_t kMaxEnumerationPoints = uint64_t{1} << 24;

// Enumerates the integer box in lexicographic order and keeps the first
// point attaining the minimum. With n2 > 0 a grid resolution is required;
// continuous variable j then ranges over {0, u_j/g, ..., u_j}.
// Throws RefusedError if the box is unbounded or too large.
IntegerOptimum EnumerateIntegerOptimum(const MipInstance& inst,
                                       std::optional<int> continuous_grid = std::nullopt);

// Calls visit(x) on every feasible point of the (pure integer) box, in
// lexicographic order. Same refusal rules as above.
void ForEachFeasibleIntegerPoint(const MipInstance& inst,
                                 const std::function<void(std::span<const double>)>& visit);

bool IsFeasible(const MipInstance& inst, std::span<const double> x, double tol);

}  // namespace bnclab

#endif  // BNCLAB_INSTANCE_H_
