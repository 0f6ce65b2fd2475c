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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "bnclab/bounds.h"
#include "bnclab/errors.h"
#include "bnclab/util.h"
#include "oracle/crosscheck.h"
#include "oracle/formulas.h"

namespace bnclab {
namespace {

constexpr double kE = 2.718281828459045;

BoundInputs LinearOne(int M, int W, double rho) {
  BoundInputs in;
  in.M = M;
  in.H = 3.0 * M;
  in.N = 10;
  TypeInputs t;
  t.rho = rho;
  t.W = W;
  t.linear = true;
  in.types = {t};
  return Normalize(in);
}

TEST(Pdim, FrozenExamples) {
  EXPECT_NEAR(PdimUpperBound({0, 0, 0}, 0), static_cast<double>(oracle::Pdim(1, 0, 0, 0)), 1e-12);
  EXPECT_NEAR(PdimUpperBound({0, 0, 0}, 0), 2.7726, 5e-5);
  EXPECT_NEAR(PdimUpperBound({0, 0, 1}, 1), static_cast<double>(oracle::Pdim(1, 0, 1, 1)), 1e-12);
  EXPECT_NEAR(PdimUpperBound({0, 0, 1}, 1), 12.670, 5e-4);
}

TEST(Pdim, MonotoneInEveryArgument) {
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    StructureTriple t{rng.Uniform(0, 50), static_cast<double>(rng.UniformInt(0, 50)),
                      static_cast<double>(rng.UniformInt(0, 20))};
    const int W = static_cast<int>(rng.UniformInt(0, 50));
    const double base = PdimUpperBound(t, W);
    StructureTriple g = t;
    g.log_gamma += rng.Uniform(0, 5);
    EXPECT_GE(PdimUpperBound(g, W), base);
    g = t;
    g.gamma += 1;
    EXPECT_GE(PdimUpperBound(g, W), base);
    g = t;
    g.beta += 1;
    EXPECT_GE(PdimUpperBound(g, W), base);
    EXPECT_GE(PdimUpperBound(t, W + 1), base);
  }
}

TEST(CostStructure, LinearExample) {
  BoundInputs in = LinearOne(1, 4, 2);
  const StructureTriple s = CostStructure(in);
  EXPECT_EQ(s.gamma, 4.0);
  EXPECT_EQ(s.beta, 0.0);
  EXPECT_NEAR(std::exp(s.log_gamma), 512.0 * std::exp(4.0), 1e-8 * 512.0 * std::exp(4.0));
  EXPECT_NEAR(std::exp(s.log_gamma), 27954.0, 1.0);
}

TEST(CostStructure, GammaAdditivityAndZeroBeta) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    BoundInputs in;
    in.M = static_cast<int>(rng.UniformInt(1, 20));
    double expected = 0.0;
    for (int k = 0; k < 3; ++k) {
      TypeInputs t;
      t.rho = static_cast<double>(rng.UniformInt(2, 30));
      t.W = static_cast<int>(rng.UniformInt(0, 8));
      t.structure = {rng.Uniform(0, 10), static_cast<double>(rng.UniformInt(0, 9)),
                     static_cast<double>(rng.UniformInt(1, 4))};
      expected += t.structure.gamma + t.W;
      in.types.push_back(t);
    }
    if (in.W() == 0) continue;
    const StructureTriple s = CostStructure(in);
    EXPECT_EQ(s.gamma, expected);
    EXPECT_EQ(s.beta, 0.0);
  }
}

TEST(CostStructure, ZeroBetaViolatesHypothesis) {
  BoundInputs in = LinearOne(1, 4, 2);
  in.types[0].linear = false;
  in.types[0].structure.beta = 0.0;
  EXPECT_THROW(CostStructure(in), ParameterError);
}

TEST(LinearPdim, Example) {
  const double v = LinearPdimBound(LinearOne(1, 4, 2));
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(v, 4 * (4 * std::log(3 * kE) + 8 * ln2 + 2 * ln2 + 8 * ln2), 1e-10);
  EXPECT_NEAR(v, static_cast<double>(oracle::LinearPdim({oracle::Type{2, 4}}, 1)), 1e-10);
  EXPECT_NEAR(v, 83.48, 0.01);
}

TEST(LinearPdim, DoublingMAddsLinearTerm) {
  for (int W : {1, 4, 9}) {
    for (double rho : {2.0, 5.0, 40.0}) {
      const double d =
          LinearPdimBound(LinearOne(2, W, rho)) - LinearPdimBound(LinearOne(1, W, rho));
      EXPECT_NEAR(d, 4.0 * W * std::log(rho), 1e-9);
      const double d2 =
          LinearPdimBound(LinearOne(3, W, rho)) - LinearPdimBound(LinearOne(2, W, rho));
      EXPECT_NEAR(d2, d, 1e-9);
    }
  }
}

TEST(LinearPdim, RejectsNonLinearTriples) {
  BoundInputs in = LinearOne(1, 4, 2);
  in.types[0].linear = false;
  in.types[0].structure = {1.0, 2.0, 1.0};
  EXPECT_THROW(LinearPdimBound(in), ParameterError);
}

TEST(MlpStructure, SingleRelu) {
  const StructureTriple s = MlpStructure({1, 3, 1, 2, 1});
  EXPECT_NEAR(std::exp(s.log_gamma), 2 * std::pow(4 * kE / 3, 3), 1e-9);
  EXPECT_NEAR(std::exp(s.log_gamma), 95.22, 0.005);
  EXPECT_EQ(s.gamma, 3.0);
  EXPECT_EQ(s.beta, 1.0);
  for (int L = 1; L <= 4; ++L) {
    const StructureTriple t = MlpStructure({L, 20, 8, 2, 1});
    EXPECT_EQ(t.beta, L);
    EXPECT_EQ(t.gamma, L * 20.0);
  }
  EXPECT_THROW(MlpStructure({0, 3, 1, 2, 1}), ParameterError);
}

TEST(MlpPdim, CompositionIdentityExact) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    BoundInputs in;
    in.M = static_cast<int>(rng.UniformInt(1, 100));
    const int d = static_cast<int>(rng.UniformInt(1, 3));
    for (int k = 0; k < d; ++k) {
      TypeInputs t;
      t.rho = static_cast<double>(rng.UniformInt(2, 100));
      t.mlp =
          MlpDims{static_cast<int>(rng.UniformInt(1, 4)), static_cast<int>(rng.UniformInt(1, 300)),
                  static_cast<int>(rng.UniformInt(1, 64)), 2, 1};
      in.types.push_back(t);
    }
    const BoundInputs n = Normalize(in);
    EXPECT_EQ(MlpPdimBound(in), PdimUpperBound(CostStructure(n), n.W()));
  }
}

TEST(MlpPdim, RootCutAndThreePolicyScenariosFinite) {
  // Root-cut scenario: one learned cut scorer, rho = r, M = kappa R.
  BoundInputs root;
  root.M = 2 * 3;
  TypeInputs cut;
  cut.rho = 20;
  cut.mlp = MlpDims{2, 50, 16, 2, 1};
  root.types = {cut};
  EXPECT_TRUE(std::isfinite(MlpPdimBound(root)));
  // Three-policy scenario with rho = (M, m + M, n).
  BoundInputs three;
  three.M = 50;
  for (double rho : {50.0, 60.0, 30.0}) {
    TypeInputs t;
    t.rho = rho;
    t.mlp = MlpDims{2, 50, 16, 2, 1};
    three.types.push_back(t);
  }
  EXPECT_TRUE(std::isfinite(MlpPdimBound(three)));
  EXPECT_GT(MlpPdimBound(three), MlpPdimBound(root));
}

TEST(QWorstCase, Examples) {
  const std::vector<double> rho = {2, 3};
  EXPECT_EQ(QWorstCase(rho, 2, 0).value, 72.0);
  EXPECT_EQ(QWorstCase(rho, 2, 1).value, 108.0);
  EXPECT_EQ(QWorstCase(std::vector<double>{2}, 1, 0).value, 4.0);
  EXPECT_NEAR(QWorstCase(rho, 2, 1).log_value.log, std::log(108.0), 1e-12);
  EXPECT_THROW(QWorstCase(std::vector<double>{1.5, 3}, 2, 0), ParameterError);
  const QBound huge = QWorstCase(std::vector<double>{1000, 1000}, 200, 0);
  EXPECT_TRUE(std::isinf(huge.value));
  EXPECT_FALSE(huge.log_value.Materialize().has_value());
}

TEST(RBound, Example) {
  BoundInputs in;
  in.N = 1;
  TypeInputs t;
  t.rho = 2;
  t.W = 1;
  t.structure = {0, 0, 1};
  t.q_sum = 10;
  in.types = {t};
  EXPECT_NEAR(std::exp(RBound(in).log), 2 * 20 * kE, 1e-10);
  EXPECT_NEAR(std::exp(RBound(in).log), 108.7, 0.05);
}

TEST(RBound, LogLinearInQ) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    BoundInputs in;
    double gw = 0;
    for (int k = 0; k < 2; ++k) {
      TypeInputs t;
      t.rho = static_cast<double>(rng.UniformInt(2, 10));
      t.W = static_cast<int>(rng.UniformInt(1, 5));
      t.structure = {rng.Uniform(0, 4), static_cast<double>(rng.UniformInt(0, 5)), 1};
      t.q_sum = std::floor(rng.Uniform(1, 1000));
      gw += t.structure.gamma + t.W;
      in.types.push_back(t);
    }
    in.N = static_cast<int>(gw) + 5;
    BoundInputs doubled = in;
    for (auto& t : doubled.types) *t.q_sum *= 2;
    const double tilde = in.types[0].structure.gamma + in.types[1].structure.gamma + in.W();
    EXPECT_NEAR(RBound(doubled).log - RBound(in).log, tilde * std::log(2.0), 1e-9);
    BoundInputs one = in;
    *one.types[0].q_sum += 1;
    EXPECT_GE(RBound(one).log, RBound(in).log);
  }
}

TEST(RBound, Preconditions) {
  BoundInputs in;
  in.N = 1;
  TypeInputs t;
  t.W = 2;
  t.structure = {0, 0, 1};
  t.q_sum = 3;
  in.types = {t};
  EXPECT_THROW(RBound(in), ParameterError);
  in.N = 2;
  in.types[0].q_sum = 0.5;
  EXPECT_THROW(RBound(in), ParameterError);
}

TEST(Massart, Examples) {
  EXPECT_EQ(MassartEstimate({{3, 1, 4}}).estimate, 0.0);
  const MassartResult r = MassartEstimate({{1, 0}, {0, 1}});
  EXPECT_DOUBLE_EQ(r.estimate, 0.25);
  EXPECT_EQ(r.distinct, 2u);
  EXPECT_LE(r.estimate, r.bound);
  std::vector<std::vector<double>> wide(2, std::vector<double>(21, 0.0));
  wide[1][0] = 1;
  EXPECT_THROW(MassartEstimate(wide), RefusedError);
  EXPECT_NO_THROW(MassartEstimate(wide, MassartMode{false, 1, 2000}));
}

// Exhaustive sign enumeration written independently of the library.
double BruteRademacher(const std::vector<std::vector<double>>& v) {
  const size_t n = v[0].size();
  double total = 0.0;
  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
    double best = -INFINITY;
    for (const auto& x : v) {
      double s = 0.0;
      for (size_t i = 0; i < n; ++i) s += ((mask >> i) & 1 ? 1.0 : -1.0) * x[i];
      best = std::max(best, s / static_cast<double>(n));
    }
    total += best;
  }
  return total / static_cast<double>(uint64_t{1} << n);
}

TEST(Massart, EstimateMatchesBruteForceAndStaysBelowBound) {
  Rng rng(7);
  for (int i = 0; i < 60; ++i) {
    const int n = static_cast<int>(rng.UniformInt(1, 10));
    const int r = static_cast<int>(rng.UniformInt(1, 12));
    std::vector<std::vector<double>> v(r, std::vector<double>(n));
    for (auto& x : v) {
      for (auto& e : x) e = static_cast<double>(rng.UniformInt(0, 30));
    }
    const MassartResult m = MassartEstimate(v);
    EXPECT_NEAR(m.estimate, BruteRademacher(v), 1e-12);
    EXPECT_LE(m.estimate, m.bound + 1e-12);
    const MassartResult mc = MassartEstimate(v, MassartMode{false, 3, 20000});
    double max_norm = 0.0;
    for (const auto& x : v) {
      double sq = 0.0;
      for (double e : x) sq += e * e;
      max_norm = std::max(max_norm, std::sqrt(sq));
    }
    EXPECT_NEAR(mc.estimate, m.estimate, 6.0 * max_norm / n / std::sqrt(20000.0));
  }
}

TEST(RademacherEmpirical, LinearFixtureMatchesRecomputation) {
  BoundInputs in = LinearOne(10, 4, 2);
  in.types[0].q_sum = 40;
  const double expected =
      30.0 * std::sqrt(2.0 / 10.0 * (1 + 4 * std::log(40.0) + 4 * std::log(kE * 2 / 4)));
  EXPECT_NEAR(RademacherBoundEmpirical(in), expected, 1e-10);
  BoundInputs twice = in;
  twice.H *= 2;
  EXPECT_NEAR(RademacherBoundEmpirical(twice), 2 * RademacherBoundEmpirical(in), 1e-10);
}

TEST(RademacherEmpirical, QuadruplingSample) {
  // Q sums grow with the sample, so the bound shrinks by a factor in (1/2, 1).
  BoundInputs in = LinearOne(10, 4, 2);
  in.types[0].q_sum = 4000;
  in.N = 100;
  BoundInputs big = in;
  big.N = 400;
  big.types[0].q_sum = 16000;
  const double ratio = RademacherBoundEmpirical(big) / RademacherBoundEmpirical(in);
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 1.0);
  const double x = 4000;
  const double inner = 1 + 4 * std::log(x) + 4 * std::log(kE / 2);
  const double inner4 = 1 + 4 * std::log(4 * x) + 4 * std::log(kE / 2);
  EXPECT_NEAR(ratio, 0.5 * std::sqrt(inner4 / inner), 1e-12);
}

TEST(UniformConvergence, Example) {
  const double v = UniformConvergencePdim(30, 100, 1000, 0.1);
  EXPECT_NEAR(v, 30 * std::sqrt((100 + std::log(10.0)) / 1000), 1e-12);
  EXPECT_NEAR(v, 9.595, 5e-4);
  EXPECT_NEAR(UniformConvergencePdim(30, 100, 4000, 0.1), v / 2, 1e-12);
  EXPECT_GT(UniformConvergencePdim(30, 100, 1000, 0.01), v);
  const double r = UniformConvergenceRademacher(30, 2, 1000, 0.1);
  EXPECT_GT(UniformConvergenceRademacher(30, 2, 1000, 0.01), r);
  EXPECT_THROW(UniformConvergencePdim(30, 100, 0, 0.1), ParameterError);
  EXPECT_THROW(UniformConvergenceRademacher(30, 2, 10, 1.0), ParameterError);
}

BoundInputs ReluSingle(double mu) {
  BoundInputs in;
  in.M = 10;
  in.H = 30;
  in.N = 200;
  TypeInputs t;
  t.rho = 20;
  t.mlp = MlpDims{2, 50, 16, 2, 1};
  t.mu = mu;
  in.types = {t};
  return Normalize(in);
}

TEST(ExpectedRademacher, FiniteLinearInHAndMonotoneInMu) {
  const BoundInputs in = ReluSingle(30);
  const double v = ExpectedRademacherBound(in);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0);
  BoundInputs twice = in;
  twice.H *= 2;
  EXPECT_NEAR(ExpectedRademacherBound(twice), 2 * v, 1e-9);
  EXPECT_GT(ExpectedRademacherBound(ReluSingle(60)), v);
}

TEST(ExpectedRademacher, WorstCaseMuDominatesObservedQ) {
  // mu at the worst case Q_{M,k} against observed Q sums below N times it.
  BoundInputs in = ReluSingle(0);
  const double worst = QWorstCase(std::vector<double>{20}, in.M, 0).value;
  in.types[0].mu = worst;
  const double expected = ExpectedRademacherBound(in);
  for (double frac : {1e-6, 1e-3, 1.0}) {
    BoundInputs obs = in;
    obs.types[0].q_sum = std::max(1.0, frac * worst * in.N);
    EXPECT_GE(expected, RademacherBoundEmpirical(obs)) << "fraction " << frac;
  }
}

TEST(ExpectedRademacher, RejectsNonRelu) {
  BoundInputs in = ReluSingle(5);
  in.types[0].mlp->alpha = 2;
  in = Normalize(in);
  EXPECT_THROW(ExpectedRademacherBound(in), ParameterError);
}

TEST(SignPattern, Examples) {
  EXPECT_EQ(SignPatternBound(5, 0, 3).log, 0.0);
  EXPECT_NEAR(std::exp(SignPatternBound(1, 1, 1).log), 4 * kE, 1e-12);
  EXPECT_NEAR(std::exp(SignPatternBound(1, 1, 1).log), 10.873, 5e-4);
  for (int W : {1, 3, 7}) {
    EXPECT_NEAR(SignPatternBound(40, 2, W).log - SignPatternBound(20, 2, W).log, W * std::log(2.0),
                1e-12);
  }
  EXPECT_THROW(SignPatternBound(2, 1, 3), ParameterError);
}

TEST(AuxInequalities, NoViolations) {
  const AuxReport r = AuxInequalityFuzz(123, 10000);
  EXPECT_EQ(r.draws, 10000);
  EXPECT_TRUE(r.violations.empty());
}

TEST(CrossCheck, IndependentRecomputation) {
  for (const auto& c : oracle::RunCrossChecks(99, 100)) {
    EXPECT_GE(c.cases, 100) << c.name;
    EXPECT_LE(c.max_rel, 1e-9L) << c.name;
  }
}

TEST(LogMagnitude, Materialize) {
  EXPECT_NEAR(*LogMagnitude{std::log(5.0)}.Materialize(), 5.0, 1e-12);
  EXPECT_FALSE(LogMagnitude{1000.0}.Materialize().has_value());
  EXPECT_NEAR(LogMagnitude::FromValue(7.0).log, std::log(7.0), 1e-15);
}

TEST(BoundFiles, RoundTripAndTable) {
  BoundInputs in;
  in.M = 7;
  in.H = 21;
  in.N = 50;
  in.delta = 0.05;
  TypeInputs a;
  a.rho = 7;
  a.linear = true;
  a.W = 4;
  a.q_sum = 120;
  TypeInputs b;
  b.rho = 10;
  b.mlp = MlpDims{1, 9, 2, 2, 1};
  b.q_sum = 80;
  b.mu = 2.5;
  in.types = {a, b};
  const std::string text = SerializeBoundInputs(in);
  EXPECT_EQ(SerializeBoundInputs(ParseBoundInputs(text)), text);
  const auto rows = ComputeBoundTable(in);
  EXPECT_FALSE(rows.empty());
  EXPECT_EQ(BoundTableText(rows).rfind("# schema bnclab.boundtable/1", 0), 0u);
  EXPECT_THROW(ParseBoundInputs("{\"schema\": \"other/1\"}"), Error);
  EXPECT_THROW(ParseBoundInputs("{not json"), ParseError);
}

}  // namespace
}  // namespace bnclab
