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

// Experiment harness: configs, random-search tuning, generalization gaps,
// verification suites and report files.

#ifndef BNCLAB_LAB_H_
#define BNCLAB_LAB_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bnclab/bnc.h"
#include "bnclab/bounds.h"
#include "bnclab/instance.h"
#include "bnclab/policy.h"
#include "bnclab/probe.h"

namespace bnclab {

struct VerifySpec {
  int oracle_instances = 40;  // taken from train then test
  int slice_instances = 3;
  int slices_per_instance = 1;
  int census_instances = 5;
  int census_samples = 200;
  int degree_fixtures = 6;
  int aux_draws = 10000;
  bool plant_cut_fault = false;  // every cut's rhs decremented before checking
};

struct ExperimentConfig {
  std::string preset = "root-cuts";
  GeneratorSpec generator;
  int n_train = 20;
  int n_test = 20;
  BncConfig bnc;
  std::vector<double> penalties = {0.0, 1.0, 2.0};
  PolicyBundle bundle;
  std::array<bool, kNumActionTypes> learnable{};
  std::array<std::pair<double, double>, kNumActionTypes> boxes{
      {{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}};
  int budget = 50;
  uint64_t tuner_seed = 1;
  int grid0 = 1024;
  double bisect_tol = 1e-7;
  double delta = 0.1;
  VerifySpec verify;
  std::string output_dir = "report";
  int threads = 1;
};

// "root-cuts": learn the cut scorer only, DFS nodes, product branching.
// "three-policy": learn linear scorers for all three types.
ExperimentConfig PresetConfig(std::string_view name);
void ValidateConfig(const ExperimentConfig& cfg);

// JSON with schema "bnclab.experiment/1". Missing keys take preset values.
ExperimentConfig ParseConfig(std::string_view json_text);
std::string SerializeConfig(const ExperimentConfig& cfg);
std::string ConfigHash(const ExperimentConfig& cfg);

struct InstanceSplit {
  std::vector<MipInstance> train;
  std::vector<MipInstance> test;
};
// Train and test draw from disjoint derived seed streams.
InstanceSplit MakeInstances(const ExperimentConfig& cfg);

PolicyTemplate TemplateFor(const ExperimentConfig& cfg);
PenaltySpec PenaltiesFor(const ExperimentConfig& cfg);
// Parameter sample j drawn from the per-type boxes.
std::vector<double> DrawParameters(const ExperimentConfig& cfg, int j);

// Bound inputs of the configured class for a sample of n instances.
// Fixed scorers enter as (1, 0, 1) structures with W_k = 0.
BoundInputs BoundInputsFor(const ExperimentConfig& cfg, const std::vector<MipInstance>& insts,
                           int n);

struct ParamSample {
  std::vector<double> w;
  double train_mean = 0.0;
  bool valid = true;  // false if some run aborted
};

struct ErmResult {
  std::vector<ParamSample> samples;
  size_t best = 0;
  std::vector<double> best_w;
  double train_cost = 0.0;
  uint64_t aborted_runs = 0;
};

ErmResult ErmTune(const ExperimentConfig& cfg);

struct GapEntry {
  std::vector<double> w;
  double train_mean = 0.0;
  double test_mean = 0.0;
  double gap = 0.0;
};

struct GapResult {
  std::vector<GapEntry> entries;
  double sup_gap = 0.0;
  std::vector<double> train_q_sums;  // union of Q-pairs over w_set, per type
  double pdim = 0.0;
  double uc_pdim_bound = 0.0;  // up to the suppressed constant
  double rademacher = 0.0;
  double uc_rademacher_bound = 0.0;  // up to the suppressed constant
};

GapResult MeasureGap(const ExperimentConfig& cfg, const std::vector<std::vector<double>>& w_set);
// Same, on explicit instance sets.
GapResult MeasureGap(const ExperimentConfig& cfg, const std::vector<MipInstance>& train,
                     const std::vector<MipInstance>& test,
                     const std::vector<std::vector<double>>& w_set);

struct SuiteResult {
  std::string name;
  bool passed = true;
  int checks = 0;
  std::vector<std::string> failures;
  std::vector<std::string> notes;
};

struct VerificationReport {
  std::vector<SuiteResult> suites;
  std::vector<SliceScan> scans;
  std::optional<OutputCensus> census;

  bool ok() const;
};

VerificationReport RunVerification(const ExperimentConfig& cfg);

struct Report {
  ExperimentConfig cfg;
  std::string config_hash;
  std::optional<ErmResult> erm;
  std::optional<GapResult> gap;
  std::vector<BoundRow> bounds;
  std::optional<VerificationReport> verification;
};

// Tuning, gap over the tuning samples, bound table and verification.
Report RunLab(const ExperimentConfig& cfg, bool with_verification = true);

// Writes costs.csv, scan.csv, census.csv, summary.json and bounds.txt.
// Returns the written paths.
std::vector<std::string> EmitReport(const Report& report, const std::string& dir);

}  // namespace bnclab

#endif  // BNCLAB_LAB_H_
