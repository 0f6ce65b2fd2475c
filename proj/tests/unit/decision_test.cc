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

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <gtest/gtest.h>
#include "json.hpp"

#include "bnclab/decision.h"
#include "bnclab/errors.h"
#include "bnclab/policy.h"
#include "bnclab/util.h"

namespace bnclab {
namespace {

// Synthetic process: the state is the action history; type k offers
// `width[k]` actions per decision with seeded one-dimensional features.
class Chain : public DecisionProcess {
 public:
  explicit Chain(std::vector<int> width, int terminal_after = -1, int fail_after = -1)
      : width_(std::move(width)), terminal_after_(terminal_after), fail_after_(fail_after) {}

  int num_types() const override { return static_cast<int>(width_.size()); }
  bool IsTerminal() const override { return terminal_after_ >= 0 && applied_ >= terminal_after_; }
  void Available(int k, std::vector<uint64_t>* ids, std::vector<FeatureVector>* features) override {
    Rng rng(DeriveSeed(state_, static_cast<uint64_t>(k)));
    for (int a = 0; a < width_[k]; ++a) {
      ids->push_back(static_cast<uint64_t>(a));
      features->push_back({rng.Uniform(-1, 1)});
    }
  }
  void Apply(int k, size_t index) override {
    if (fail_after_ >= 0 && applied_ >= fail_after_) throw std::runtime_error("callback failed");
    state_ = Hasher().Add(state_).Add(k).Add(static_cast<uint64_t>(index)).digest();
    ++applied_;
  }
  uint64_t StateDigest() const override { return state_; }

 private:
  std::vector<int> width_;
  int terminal_after_;
  int fail_after_;
  uint64_t state_ = 1;
  int applied_ = 0;
};

std::vector<Scorer> Linear1(int d) { return std::vector<Scorer>(d, LinearScorer({1.0})); }

TEST(RunProcess, ZeroRoundsIsFree) {
  Chain c({3});
  const uint64_t s0 = c.StateDigest();
  const RunTrace t = RunProcess(c, Linear1(1), PenaltySpec{{1.0}, {}}, 0);
  EXPECT_EQ(t.v, 0.0);
  EXPECT_TRUE(t.steps.empty());
  EXPECT_EQ(c.StateDigest(), s0);
}

TEST(RunProcess, TerminalStartIsFree) {
  Chain c({3}, 0);
  const RunTrace t = RunProcess(c, Linear1(1), PenaltySpec{{1.0}, {}}, 10);
  EXPECT_EQ(t.v, 0.0);
  EXPECT_TRUE(t.steps.empty());
}

TEST(RunProcess, ConstantPenaltyChain) {
  Chain c({3});
  const RunTrace t = RunProcess(c, Linear1(1), PenaltySpec{{1.0}, {}}, 5);
  EXPECT_EQ(t.v, 5.0);
  EXPECT_EQ(t.steps.size(), 5u);
  EXPECT_EQ(t.rounds, 5);
}

TEST(RunProcess, EmptyActionSetIsSkipped) {
  Chain c({0, 2});
  const RunTrace t = RunProcess(c, Linear1(2), PenaltySpec{{5.0, 1.0}, {}}, 4);
  EXPECT_EQ(t.v, 4.0);
  for (const Step& s : t.steps) EXPECT_EQ(s.k, 1);
}

TEST(RunProcess, TerminalMidRoundStops) {
  Chain c({2, 2, 2}, 4);
  const RunTrace t = RunProcess(c, Linear1(3), PenaltySpec{}, 10);
  EXPECT_EQ(t.steps.size(), 4u);
  EXPECT_EQ(t.steps.back().k, 0);
  EXPECT_EQ(t.rounds, 2);
}

TEST(RunProcess, AbortCarriesPartialTrace) {
  Chain c({2}, -1, 3);
  try {
    RunProcess(c, Linear1(1), PenaltySpec{{1.0}, {}}, 10);
    FAIL() << "expected an aborted run";
  } catch (const RunAbortedError& e) {
    EXPECT_EQ(e.partial_trace().steps.size(), 3u);
    EXPECT_EQ(e.partial_trace().v, 3.0);
  }
}

TEST(RunProcess, ScorerMismatchIsParameterError) {
  Chain c({2, 2});
  EXPECT_THROW(RunProcess(c, Linear1(1), PenaltySpec{}, 3), ParameterError);
}

TEST(TreeCost, SumsPenaltiesByType) {
  RunTrace t;
  for (int k : {1, 1, 2, 2, 2}) {
    Step s;
    s.k = k;
    t.steps.push_back(s);
  }
  EXPECT_EQ(TreeSizeCost(t, PenaltySpec{}), 2 * 1.0 + 3 * 2.0);
  EXPECT_EQ(TreeSizeCost(RunTrace{}, PenaltySpec{}), 0.0);
}

TEST(QCount, NoCutStepsGiveZero) {
  RunTrace t;
  Step s;
  s.k = 2;
  s.candidates = {1, 2};
  t.steps.push_back(s);
  EXPECT_EQ(CountStateActionPairs(t, 3)[1], 0u);
  EXPECT_EQ(CountStateActionPairs(t, 3)[2], 2u);
}

TEST(QCount, WorstCaseRespected) {
  const std::vector<double> rho = {2, 3};
  EXPECT_NEAR(std::exp(LogQWorstCase(rho, 2, 0)), 72.0, 1e-9);
  EXPECT_NEAR(std::exp(LogQWorstCase(rho, 2, 1)), 108.0, 1e-9);
  for (int terminal : {-1, 1, 3}) {
    Chain c({2, 3}, terminal);
    const RunTrace t = RunProcess(c, Linear1(2), PenaltySpec{}, 2, rho);
    // Independent count: distinct (state, candidate) pairs per type.
    std::vector<std::set<std::pair<uint64_t, uint64_t>>> pairs(2);
    for (const Step& s : t.steps) {
      for (uint64_t a : s.candidates) pairs[s.k].insert({s.state, a});
    }
    EXPECT_EQ(t.q_counts[0], pairs[0].size());
    EXPECT_EQ(t.q_counts[1], pairs[1].size());
    EXPECT_LE(t.q_counts[0], 72u);
    EXPECT_LE(t.q_counts[1], 108u);
    EXPECT_TRUE(t.q_violations.empty());
    EXPECT_EQ(CountStateActionPairs(t, 2), t.q_counts);
  }
}

TEST(QCount, LiveAssertionFlagsCapOverrun) {
  Chain c({5});
  const std::vector<double> rho = {2};
  const RunTrace t = RunProcess(c, Linear1(1), PenaltySpec{{1.0}, {}}, 3, rho);
  EXPECT_FALSE(t.q_violations.empty());
}

TEST(Trace, ExportFormat) {
  Chain c({2, 3});
  const RunTrace t = RunProcess(c, Linear1(2), PenaltySpec{}, 3);
  const std::string text = ExportTrace(t);
  std::vector<nlohmann::json> lines;
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t nl = text.find('\n', pos);
    lines.push_back(nlohmann::json::parse(text.substr(pos, nl - pos)));
    pos = nl + 1;
  }
  ASSERT_EQ(lines.size(), t.steps.size() + 1);
  EXPECT_EQ(lines[0]["k"], 1);
  EXPECT_EQ(lines[1]["k"], 2);
  EXPECT_EQ(lines[1]["candidates"], 3);
  EXPECT_TRUE(lines.back()["summary"].get<bool>());
  EXPECT_EQ(lines.back()["V"].get<double>(), t.v);
}

TEST(Trace, Deterministic) {
  Chain a({2, 3}), b({2, 3});
  EXPECT_EQ(ExportTrace(RunProcess(a, Linear1(2), PenaltySpec{}, 6)),
            ExportTrace(RunProcess(b, Linear1(2), PenaltySpec{}, 6)));
}

}  // namespace
}  // namespace bnclab
