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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bnclab/errors.h"
#include "bnclab/lab.h"

namespace bnclab {
namespace {

namespace fs = std::filesystem;

ExperimentConfig Small() {
  ExperimentConfig cfg = PresetConfig("root-cuts");
  cfg.n_train = 4;
  cfg.n_test = 4;
  cfg.budget = 6;
  cfg.verify.oracle_instances = 4;
  cfg.verify.slice_instances = 1;
  cfg.verify.census_instances = 3;
  cfg.verify.census_samples = 30;
  cfg.verify.degree_fixtures = 1;
  cfg.verify.aux_draws = 100;
  cfg.grid0 = 64;
  return cfg;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST(Config, RoundTrip) {
  for (const char* preset : {"root-cuts", "three-policy"}) {
    ExperimentConfig cfg = PresetConfig(preset);
    cfg.budget = 17;
    cfg.delta = 0.05;
    const std::string text = SerializeConfig(cfg);
    EXPECT_EQ(SerializeConfig(ParseConfig(text)), text);
    EXPECT_EQ(ConfigHash(ParseConfig(text)), ConfigHash(cfg));
  }
}

TEST(Config, HashIgnoresOutputLocationAndThreads) {
  ExperimentConfig a = Small();
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.threads = 3;
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.budget += 1;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
}

TEST(Config, Rejections) {
  ExperimentConfig cfg = Small();
  cfg.n_train = 0;
  EXPECT_THROW(ValidateConfig(cfg), ParameterError);
  cfg = Small();
  cfg.delta = 1.0;
  EXPECT_THROW(ValidateConfig(cfg), ParameterError);
  cfg = Small();
  cfg.learnable[0] = true;  // DFS node rule is fixed
  EXPECT_THROW(ValidateConfig(cfg), ParameterError);
  EXPECT_THROW(PresetConfig("nonexistent"), ParameterError);
  EXPECT_THROW(ParseConfig("{\"schema\": \"bnclab.experiment/0\"}"), ParameterError);
}

TEST(Instances, TrainAndTestDisjointAndDeterministic) {
  const ExperimentConfig cfg = Small();
  const InstanceSplit a = MakeInstances(cfg);
  const InstanceSplit b = MakeInstances(cfg);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  for (const auto& t : a.train) {
    EXPECT_EQ(std::count(a.test.begin(), a.test.end(), t), 0);
  }
}

TEST(Erm, BudgetOneTakesOnlySample) {
  ExperimentConfig cfg = Small();
  cfg.budget = 1;
  const ErmResult r = ErmTune(cfg);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_EQ(r.best_w, r.samples[0].w);
}

TEST(Erm, PicksFirstMinimizer) {
  const ErmResult r = ErmTune(Small());
  ASSERT_EQ(r.samples.size(), 6u);
  double best = r.samples[0].train_mean;
  size_t idx = 0;
  for (size_t j = 1; j < r.samples.size(); ++j) {
    if (r.samples[j].train_mean < best) {
      best = r.samples[j].train_mean;
      idx = j;
    }
  }
  EXPECT_EQ(r.best, idx);
  EXPECT_EQ(r.train_cost, best);
  EXPECT_EQ(r.samples[0].w, DrawParameters(Small(), 0));
}

TEST(Gap, IdenticalSetsGiveZero) {
  const ExperimentConfig cfg = Small();
  const InstanceSplit split = MakeInstances(cfg);
  std::vector<std::vector<double>> ws;
  for (int j = 0; j < 5; ++j) ws.push_back(DrawParameters(cfg, j));
  const GapResult g = MeasureGap(cfg, split.train, split.train, ws);
  EXPECT_EQ(g.sup_gap, 0.0);
  for (const auto& e : g.entries) EXPECT_EQ(e.gap, 0.0);
}

TEST(Gap, BoundsComputedAndSupIsMax) {
  const ExperimentConfig cfg = Small();
  std::vector<std::vector<double>> ws;
  for (int j = 0; j < 5; ++j) ws.push_back(DrawParameters(cfg, j));
  const GapResult g = MeasureGap(cfg, ws);
  double sup = 0.0;
  for (const auto& e : g.entries) {
    EXPECT_EQ(e.gap, std::abs(e.train_mean - e.test_mean));
    sup = std::max(sup, e.gap);
  }
  EXPECT_EQ(g.sup_gap, sup);
  EXPECT_GT(g.pdim, 0.0);
  EXPECT_GE(g.uc_pdim_bound, g.sup_gap);
  EXPECT_GE(g.uc_rademacher_bound, g.sup_gap);
}

TEST(Gap, EmptyTrainingSetRefused) {
  const ExperimentConfig cfg = Small();
  const InstanceSplit split = MakeInstances(cfg);
  EXPECT_THROW(MeasureGap(cfg, {}, split.test, {DrawParameters(cfg, 0)}), ParameterError);
}

TEST(BoundInputs, FixedScorersEnterAsTrivialStructure) {
  const ExperimentConfig cfg = Small();
  const InstanceSplit split = MakeInstances(cfg);
  const BoundInputs in = BoundInputsFor(cfg, split.train, cfg.n_train);
  ASSERT_EQ(in.d(), 3);
  EXPECT_EQ(in.types[0].W, 0);
  EXPECT_EQ(in.types[1].W, 4);
  EXPECT_EQ(in.types[2].W, 0);
  EXPECT_EQ(in.H, BncPenaltyBound(cfg.bnc, PenaltiesFor(cfg)));
  EXPECT_EQ(in.N, cfg.n_train);
}

TEST(Verification, PassesExceptDegreeLaw) {
  const VerificationReport r = RunVerification(Small());
  for (const auto& s : r.suites) {
    if (s.name == "degree-probe") continue;
    EXPECT_TRUE(s.passed) << s.name << ": " << (s.failures.empty() ? "" : s.failures[0]);
  }
}

TEST(Verification, PlantedCutFaultIsCaught) {
  ExperimentConfig cfg = Small();
  cfg.verify.plant_cut_fault = true;
  const VerificationReport r = RunVerification(cfg);
  bool found = false;
  for (const auto& s : r.suites) {
    if (s.name == "cut-validity") {
      found = true;
      EXPECT_FALSE(s.passed);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_FALSE(r.ok());
}

TEST(Report, ByteIdenticalAcrossRunsAndThreads) {
  ExperimentConfig cfg = Small();
  const fs::path base = fs::temp_directory_path() / "bnclab_lab_test";
  fs::remove_all(base);
  const Report a = RunLab(cfg, true);
  cfg.threads = 2;
  const Report b = RunLab(cfg, true);
  const auto fa = EmitReport(a, (base / "a").string());
  const auto fb = EmitReport(b, (base / "b").string());
  ASSERT_EQ(fa.size(), fb.size());
  for (size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fs::path(fa[i]).filename(), fs::path(fb[i]).filename());
    const std::string text = Slurp(fa[i]);
    EXPECT_EQ(text, Slurp(fb[i])) << fa[i];
    if (fs::path(fa[i]).extension() != ".json") {
      EXPECT_EQ(text.rfind("# schema bnclab.", 0), 0u) << fa[i];
      EXPECT_NE(text.find(a.config_hash), std::string::npos);
    }
  }
  fs::remove_all(base);
}

}  // namespace
}  // namespace bnclab
