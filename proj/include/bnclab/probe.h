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

// Empirical probes of how run cost depends on policy parameters: 1-D slice
// scans, output-vector census, shattering search and MLP degree probing.

#ifndef BNCLAB_PROBE_H_
#define BNCLAB_PROBE_H_

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bnclab/bnc.h"
#include "bnclab/policy.h"

namespace bnclab {

// Maps a flat parameter vector onto the learnable scorers of a bundle. The
// layout concatenates the learnable scorers' weights in action-type order.
struct PolicyTemplate {
  PolicyBundle base;
  std::array<bool, kNumActionTypes> learnable{};

  int ParameterCount() const;
  int ParameterCount(int k) const;  // 0 when type k is not learnable
  PolicyBundle Instantiate(std::span<const double> w) const;
};

// Learnable flags default to every learnable scorer in the bundle.
PolicyTemplate MakeTemplate(const PolicyBundle& bundle);

// A cost together with a signature of the decisions that produced it. Scans
// bisect wherever either changes, which finds pieces whose cost returns to
// its old value between two grid points. For linear scorers every action's
// winning set along a line is an interval, so equal signatures at two points
// imply a constant trace between them.
struct SliceSample {
  double v = 0.0;
  uint64_t signature = 0;
};

struct QAudit {
  std::atomic<uint64_t> runs{0};
  std::atomic<uint64_t> violations{0};
  std::atomic<uint64_t> aborted{0};
};

// Evaluates V(I_i, w) for a fixed instance list. Thread-safe; node LPs are
// memoized per instance and every run feeds the live Q assertion audit.
class CostOracle {
 public:
  CostOracle(std::vector<MipInstance> instances, PolicyTemplate tmpl, BncConfig cfg,
             PenaltySpec penalties = {});

  size_t size() const { return instances_.size(); }
  int dim() const { return tmpl_.ParameterCount(); }
  const std::vector<MipInstance>& instances() const { return instances_; }
  const PolicyTemplate& policy_template() const { return tmpl_; }
  const BncConfig& config() const { return cfg_; }
  const PenaltySpec& penalties() const { return penalties_; }
  const QAudit& audit() const { return *audit_; }

  BncResult Run(size_t i, std::span<const double> w) const;
  double Cost(size_t i, std::span<const double> w) const;
  // Cost plus a digest of the chosen action sequence.
  SliceSample Sample(size_t i, std::span<const double> w) const;
  std::vector<double> Costs(std::span<const double> w) const;
  double Total(std::span<const double> w) const;

 private:
  std::vector<MipInstance> instances_;
  PolicyTemplate tmpl_;
  BncConfig cfg_;
  PenaltySpec penalties_;
  std::vector<std::unique_ptr<LpCache>> caches_;
  std::unique_ptr<QAudit> audit_;
};

// ---- Slice scans -----------------------------------------------------------

using CostFunction = std::function<double(std::span<const double> w)>;

using TracedCostFunction = std::function<SliceSample(std::span<const double> w)>;

struct ScanOptions {
  int grid0 = 1024;
  double bisect_tol = 1e-7;
  uint64_t seed = 0;
  int resamples = 3;      // interior points re-checked per piece
  int refine_passes = 3;  // resample/refine rounds before reporting
  int max_jitters = 3;
  size_t max_evaluations = 1000000;
  int threads = 1;
};

struct ScanPoint {
  double t = 0.0;
  double v = 0.0;
};

struct SliceScan {
  std::vector<double> w0;  // anchor actually used (after any jitter)
  std::vector<double> u;
  double t_lo = 0.0;
  double t_hi = 1.0;
  int grid0 = 0;
  double bisect_tol = 0.0;
  std::vector<double> breakpoints;
  std::vector<double> piece_values;
  std::vector<ScanPoint> points;  // every evaluation, sorted by t
  int jitters = 0;
  size_t evaluations = 0;
  std::vector<std::string> violations;  // structural-violation reports

  bool ok() const { return violations.empty(); }
  // Piece containing t; breakpoints belong to the piece on their right.
  double ValueAt(double t) const;
};

SliceScan ScanSlice(const CostFunction& cost, std::span<const double> w0, std::span<const double> u,
                    double t_lo, double t_hi, const ScanOptions& opts = {});
SliceScan ScanSlice(const TracedCostFunction& cost, std::span<const double> w0,
                    std::span<const double> u, double t_lo, double t_hi,
                    const ScanOptions& opts = {});

// Same piece values and pairwise breakpoints within `tol`.
bool SameStructure(const SliceScan& a, const SliceScan& b, double tol);

std::string ScanCsv(const SliceScan& scan);

// ---- Census ----------------------------------------------------------------

struct ParameterSampler {
  uint64_t seed = 0;
  int count = 1;
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::pair<double, double>> boxes;  // per coordinate; overrides lo/hi

  // Sample j, drawn from its own derived stream so that j alone fixes it.
  std::vector<double> Draw(int j, int dim) const;
};

struct OutputCensus {
  ParameterSampler sampler;
  size_t instances = 0;
  std::vector<std::vector<double>> outputs;   // one N-vector per sample
  std::vector<std::vector<double>> distinct;  // sorted, exact dedup
  size_t count = 0;
  // Per type k: sum over instances of |union over samples of Q-pairs|.
  std::vector<double> q_sums;
  // Per type k: largest single-run Q_{M,k}.
  std::vector<uint64_t> q_max;
};

OutputCensus CensusOutputVectors(const CostOracle& oracle, const ParameterSampler& sampler,
                                 int threads = 1);

std::string CensusCsv(const OutputCensus& census);

// ---- Shattering ------------------------------------------------------------

inline constexpr int kMaxShatterSubset = 20;

struct ShatterResult {
  std::vector<size_t> subset;
  std::vector<double> thresholds;  // aligned with subset
  std::vector<size_t> witnesses;   // sample index per sign pattern (bit j = subset[j] above)
  size_t size() const { return subset.size(); }
};

// Greedy search over instances (columns of `outputs`) and candidate
// thresholds. Default thresholds are midpoints between sorted distinct
// observed values of each instance.
ShatterResult ShatterSearch(const std::vector<std::vector<double>>& outputs,
                            const std::optional<std::vector<double>>& thresholds, int max_subset);

// ---- Degree probe ----------------------------------------------------------

inline constexpr double kDegreeRelTol = 1e-6;

struct DegreeRegion {
  double t_lo = 0.0;
  double t_hi = 0.0;
  uint64_t pattern = 0;
  bool skipped = false;
  std::string notice;
  std::vector<double> rel_diff;  // rel_diff[j-1]: normalized j-th difference
  int measured_degree = 0;       // smallest j with a vanishing (j+1)-th difference
  bool certified = false;        // (beta+1)-th difference vanishes
};

struct DegreeReport {
  int beta = 0;  // L * alpha^L
  std::vector<DegreeRegion> regions;
  int max_measured_degree = 0;

  bool all_certified() const;
};

DegreeReport DegreeProbe(const MlpSpec& spec, std::span<const double> input,
                         std::span<const double> w0, std::span<const double> u, double t_lo,
                         double t_hi, int samples);

}  // namespace bnclab

#endif  // BNCLAB_PROBE_H_
