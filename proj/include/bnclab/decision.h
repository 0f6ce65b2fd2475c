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

// Generic multi-type greedy decision process with penalties and traces.

#ifndef BNCLAB_DECISION_H_
#define BNCLAB_DECISION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bnclab/errors.h"
#include "bnclab/policy.h"

namespace bnclab {

struct PenaltySpec {
  std::vector<double> constant = {0.0, 1.0, 2.0};
  // Overrides `constant` when set. Must return nonnegative values.
  std::function<double(int k, uint64_t state, uint64_t action, int round)> fn;

  double Eval(int k, uint64_t state, uint64_t action, int round) const;
};

struct Step {
  int round = 0;
  int k = 0;
  uint64_t state = 0;
  std::vector<uint64_t> candidates;  // action ids in canonical order
  uint64_t chosen = 0;
  uint64_t score_hash = 0;
  double penalty = 0.0;
  double lb = 0.0;  // process bounds after the step, if the process has any
  double ub = 0.0;
};

struct RunTrace {
  std::vector<Step> steps;
  std::vector<uint64_t> q_counts;  // per action type
  double v = 0.0;
  int rounds = 0;
  // Availability caps used by the live assertion; empty disables it.
  std::vector<double> rho;
  int max_rounds = 0;
  std::vector<std::string> q_violations;
};

class RunAbortedError : public Error {
 public:
  RunAbortedError(const std::string& what, RunTrace partial)
      : Error(what), partial_(std::move(partial)) {}
  const RunTrace& partial_trace() const { return partial_; }

 private:
  RunTrace partial_;
};

class DecisionProcess {
 public:
  virtual ~DecisionProcess() = default;

  virtual int num_types() const = 0;
  virtual bool IsTerminal() const = 0;
  // Available type-k actions in canonical order: ids and feature vectors.
  virtual void Available(int k, std::vector<uint64_t>* ids,
                         std::vector<FeatureVector>* features) = 0;
  virtual void Apply(int k, size_t index) = 0;
  virtual uint64_t StateDigest() const = 0;

  // Another type-k decision in the same round (used for multi-cut picks).
  virtual bool Repeat(int /*k*/) const { return false; }
  virtual void EndRound(int /*round*/) {}
  virtual void Annotate(Step* /*step*/) const {}
};

// While not terminal and i < M: for k = 1..d, skip empty action sets, take
// the lexicographically first argmax, add P_k, transition, stop the round
// on a terminal state. Failures inside callbacks surface as
// RunAbortedError carrying the steps taken so far.
RunTrace RunProcess(DecisionProcess& process, std::span<const Scorer> scorers,
                    const PenaltySpec& penalties, int max_rounds, std::span<const double> rho = {});

// Sum of step penalties recomputed from the trace.
double TreeSizeCost(const RunTrace& trace, const PenaltySpec& penalties);

// Distinct (state, action) pairs per type over every scored candidate.
std::vector<uint64_t> CountStateActionPairs(const RunTrace& trace, int num_types);

// Same pairs as opaque keys, for unions across runs.
std::vector<std::vector<uint64_t>> StateActionKeys(const RunTrace& trace, int num_types);

// log(rho_k * prod_j rho_j ^ M).
double LogQWorstCase(std::span<const double> rho, int max_rounds, int k);

// One JSON object per step, then a summary line.
std::string ExportTrace(const RunTrace& trace);

}  // namespace bnclab

#endif  // BNCLAB_DECISION_H_
