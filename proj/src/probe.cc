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

#include "bnclab/probe.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "bnclab/errors.h"
#include "bnclab/util.h"

namespace bnclab {

// ---- PolicyTemplate --------------------------------------------------------

int PolicyTemplate::ParameterCount(int k) const {
  if (!learnable[k]) return 0;
  return base.policies[k].scorer.ParameterCount();
}

int PolicyTemplate::ParameterCount() const {
  int total = 0;
  for (int k = 0; k < kNumActionTypes; ++k) total += ParameterCount(k);
  return total;
}

PolicyBundle PolicyTemplate::Instantiate(std::span<const double> w) const {
  if (static_cast<int>(w.size()) != ParameterCount()) {
    throw ParameterError("parameter vector has " + std::to_string(w.size()) +
                         " entries, expected " + std::to_string(ParameterCount()));
  }
  PolicyBundle out = base;
  size_t offset = 0;
  for (int k = 0; k < kNumActionTypes; ++k) {
    const int n = ParameterCount(k);
    if (n == 0) continue;
    if (!out.policies[k].scorer.learnable()) {
      throw ParameterError("action type " + std::to_string(k + 1) + " has a fixed scorer");
    }
    out.policies[k].scorer.w.assign(w.begin() + offset, w.begin() + offset + n);
    offset += n;
  }
  return out;
}

PolicyTemplate MakeTemplate(const PolicyBundle& bundle) {
  PolicyTemplate t;
  t.base = bundle;
  for (int k = 0; k < kNumActionTypes; ++k) t.learnable[k] = bundle.policies[k].scorer.learnable();
  return t;
}

// ---- CostOracle ------------------------------------------------------------

CostOracle::CostOracle(std::vector<MipInstance> instances, PolicyTemplate tmpl, BncConfig cfg,
                       PenaltySpec penalties)
    : instances_(std::move(instances)),
      tmpl_(std::move(tmpl)),
      cfg_(std::move(cfg)),
      penalties_(std::move(penalties)),
      audit_(std::make_unique<QAudit>()) {
  ValidateBncConfig(cfg_);
  ValidateBundle(tmpl_.base);
  for (const auto& inst : instances_) {
    Validate(inst);
    caches_.push_back(std::make_unique<LpCache>());
  }
}

BncResult CostOracle::Run(size_t i, std::span<const double> w) const {
  const PolicyBundle bundle = tmpl_.Instantiate(w);
  ++audit_->runs;
  try {
    BncResult r = SolveBnc(instances_.at(i), bundle, cfg_, penalties_, caches_[i].get());
    audit_->violations += r.trace.q_violations.size();
    return r;
  } catch (const RunAbortedError& e) {
    ++audit_->aborted;
    audit_->violations += e.partial_trace().q_violations.size();
    throw;
  }
}

double CostOracle::Cost(size_t i, std::span<const double> w) const { return Run(i, w).v; }

SliceSample CostOracle::Sample(size_t i, std::span<const double> w) const {
  const BncResult r = Run(i, w);
  Hasher h;
  for (const Step& step : r.trace.steps) h.Add(step.k).Add(step.chosen);
  return {r.v, h.digest()};
}

std::vector<double> CostOracle::Costs(std::span<const double> w) const {
  std::vector<double> out(instances_.size());
  for (size_t i = 0; i < instances_.size(); ++i) out[i] = Cost(i, w);
  return out;
}

double CostOracle::Total(std::span<const double> w) const {
  double s = 0.0;
  for (size_t i = 0; i < instances_.size(); ++i) s += Cost(i, w);
  return s;
}

// ---- Slice scans -----------------------------------------------------------

namespace {

bool operator==(const SliceSample& a, const SliceSample& b) {
  return a.v == b.v && a.signature == b.signature;
}

struct ScanState {
  const TracedCostFunction* cost;
  std::vector<double> anchor;
  std::vector<double> u;
  std::map<double, SliceSample> points;
  size_t evaluations = 0;
  size_t budget = 0;
  bool exhausted = false;

  SliceSample Eval(double t) {
    auto it = points.find(t);
    if (it != points.end()) return it->second;
    std::vector<double> w(anchor.size());
    for (size_t j = 0; j < w.size(); ++j) w[j] = anchor[j] + t * u[j];
    const SliceSample v = (*cost)(w);
    ++evaluations;
    if (evaluations >= budget) exhausted = true;
    points.emplace(t, v);
    return v;
  }

  // Bisects every adjacent pair with differing samples down to `tol`.
  void Refine(double tol) {
    std::vector<std::pair<double, double>> work;
    for (auto it = points.begin(); std::next(it) != points.end(); ++it) {
      auto nx = std::next(it);
      if (!(it->second == nx->second) && nx->first - it->first >= tol) {
        work.emplace_back(it->first, nx->first);
      }
    }
    while (!work.empty() && !exhausted) {
      auto [a, b] = work.back();
      work.pop_back();
      const SliceSample va = points.at(a);
      const SliceSample vb = points.at(b);
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) continue;
      const SliceSample vm = Eval(mid);
      if (!(vm == va) && mid - a >= tol) work.emplace_back(a, mid);
      if (!(vm == vb) && b - mid >= tol) work.emplace_back(mid, b);
    }
  }
};

struct Pieces {
  std::vector<double> breakpoints;
  std::vector<double> values;
};

// Pieces are maximal runs of equal cost; signature changes inside a run are
// not breakpoints.
Pieces ExtractPieces(const std::map<double, SliceSample>& points) {
  Pieces p;
  auto it = points.begin();
  p.values.push_back(it->second.v);
  for (auto nx = std::next(it); nx != points.end(); ++it, ++nx) {
    if (nx->second.v != it->second.v) {
      p.breakpoints.push_back(0.5 * (it->first + nx->first));
      p.values.push_back(nx->second.v);
    }
  }
  return p;
}

SliceScan ScanOnce(const TracedCostFunction& cost, std::span<const double> anchor,
                   std::span<const double> u, double t_lo, double t_hi, const ScanOptions& opts,
                   bool* degenerate) {
  ScanState st;
  st.cost = &cost;
  st.anchor.assign(anchor.begin(), anchor.end());
  st.u.assign(u.begin(), u.end());
  st.budget = opts.max_evaluations;

  std::vector<double> grid(static_cast<size_t>(opts.grid0));
  for (int i = 0; i < opts.grid0; ++i) {
    grid[i] = i + 1 == opts.grid0 ? t_hi : t_lo + (t_hi - t_lo) * i / (opts.grid0 - 1);
  }
  std::vector<SliceSample> grid_values(grid.size());
  ParallelFor(grid.size(), opts.threads, [&](size_t i) {
    std::vector<double> w(st.anchor.size());
    for (size_t j = 0; j < w.size(); ++j) w[j] = st.anchor[j] + grid[i] * st.u[j];
    grid_values[i] = cost(w);
  });
  for (size_t i = 0; i < grid.size(); ++i) st.points.emplace(grid[i], grid_values[i]);
  st.evaluations = grid.size();

  SliceScan scan;
  scan.w0 = st.anchor;
  scan.u = st.u;
  scan.t_lo = t_lo;
  scan.t_hi = t_hi;
  scan.grid0 = opts.grid0;
  scan.bisect_tol = opts.bisect_tol;

  Rng rng(DeriveSeed(opts.seed, 0x5ca1e));
  const double tol = opts.bisect_tol;
  std::vector<std::string> mismatches;
  for (int pass = 0; pass < std::max(opts.refine_passes, 1); ++pass) {
    st.Refine(tol);
    if (st.exhausted) break;
    mismatches.clear();
    const Pieces pieces = ExtractPieces(st.points);
    for (size_t p = 0; p < pieces.values.size(); ++p) {
      const double lo = (p == 0 ? t_lo : pieces.breakpoints[p - 1]) + tol;
      const double hi = (p + 1 == pieces.values.size() ? t_hi : pieces.breakpoints[p]) - tol;
      if (!(hi > lo)) continue;
      for (int s = 0; s < opts.resamples; ++s) {
        const double t = rng.Uniform(lo, hi);
        const double v = st.Eval(t).v;
        if (v != pieces.values[p]) {
          char buf[160];
          std::snprintf(buf, sizeof(buf), "t=%.17g: piece value %.17g but sampled %.17g", t,
                        pieces.values[p], v);
          mismatches.push_back(buf);
        }
      }
    }
    if (mismatches.empty()) break;
  }
  if (st.exhausted) {
    scan.violations.push_back("evaluation budget of " + std::to_string(opts.max_evaluations) +
                              " exhausted before the slice resolved");
  }
  for (auto& m : mismatches) scan.violations.push_back("non-constant piece: " + m);

  const Pieces pieces = ExtractPieces(st.points);
  scan.breakpoints = pieces.breakpoints;
  scan.piece_values = pieces.values;
  scan.evaluations = st.evaluations;
  scan.points.reserve(st.points.size());
  for (const auto& [t, v] : st.points) scan.points.push_back({t, v.v});

  // A grid point sitting on an isolated tie shows up as a piece narrower
  // than the bisection tolerance that contains a grid point.
  *degenerate = false;
  for (size_t p = 1; p + 1 < pieces.values.size(); ++p) {
    const double lo = pieces.breakpoints[p - 1];
    const double hi = pieces.breakpoints[p];
    if (hi - lo >= tol) continue;
    auto g = std::lower_bound(grid.begin(), grid.end(), lo);
    if (g != grid.end() && *g <= hi) *degenerate = true;
  }
  return scan;
}

}  // namespace

double SliceScan::ValueAt(double t) const {
  const size_t idx =
      std::upper_bound(breakpoints.begin(), breakpoints.end(), t) - breakpoints.begin();
  return piece_values.at(idx);
}

SliceScan ScanSlice(const CostFunction& cost, std::span<const double> w0, std::span<const double> u,
                    double t_lo, double t_hi, const ScanOptions& opts) {
  const TracedCostFunction traced = [&cost](std::span<const double> w) {
    return SliceSample{cost(w), 0};
  };
  return ScanSlice(traced, w0, u, t_lo, t_hi, opts);
}

SliceScan ScanSlice(const TracedCostFunction& cost, std::span<const double> w0,
                    std::span<const double> u, double t_lo, double t_hi, const ScanOptions& opts) {
  if (opts.grid0 < 2) throw ParameterError("grid0 must be >= 2");
  if (!(opts.bisect_tol > 0.0)) throw ParameterError("bisect_tol must be positive");
  if (!(t_lo < t_hi)) throw ParameterError("scan interval must satisfy t_lo < t_hi");
  if (w0.size() != u.size()) throw ParameterError("anchor and direction differ in length");
  double norm = 0.0;
  for (double x : u) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw ParameterError("scan direction must be nonzero");

  Rng rng(DeriveSeed(opts.seed, 0x717732));
  std::vector<double> anchor(w0.begin(), w0.end());
  for (int attempt = 0;; ++attempt) {
    bool degenerate = false;
    SliceScan scan = ScanOnce(cost, anchor, u, t_lo, t_hi, opts, &degenerate);
    scan.jitters = attempt;
    if (!degenerate) return scan;
    if (attempt >= opts.max_jitters) {
      scan.violations.push_back("breakpoint kept coinciding with a grid point after " +
                                std::to_string(attempt) + " jitters");
      return scan;
    }
    std::vector<double> dir(anchor.size());
    double dn = 0.0;
    for (double& x : dir) {
      x = rng.Uniform(-1.0, 1.0);
      dn += x * x;
    }
    dn = std::sqrt(dn);
    const double scale = 1e-9 * norm * rng.Uniform(0.5, 1.0) / (dn > 0.0 ? dn : 1.0);
    for (size_t j = 0; j < anchor.size(); ++j) anchor[j] = w0[j] + scale * dir[j];
  }
}

bool SameStructure(const SliceScan& a, const SliceScan& b, double tol) {
  if (a.piece_values != b.piece_values) return false;
  for (size_t i = 0; i < a.breakpoints.size(); ++i) {
    if (std::abs(a.breakpoints[i] - b.breakpoints[i]) > tol) return false;
  }
  return true;
}

std::string ScanCsv(const SliceScan& scan) {
  std::string out = "# schema bnclab.scan/1\nt,v\n";
  char buf[80];
  for (const auto& p : scan.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.t, p.v);
    out += buf;
  }
  return out;
}

// ---- Census ----------------------------------------------------------------

std::vector<double> ParameterSampler::Draw(int j, int dim) const {
  Rng rng(DeriveSeed(seed, static_cast<uint64_t>(j)));
  if (!boxes.empty() && static_cast<int>(boxes.size()) != dim) {
    throw ParameterError("sampler box does not match the parameter count");
  }
  std::vector<double> w(static_cast<size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const auto [a, b] = boxes.empty() ? std::pair{lo, hi} : boxes[i];
    w[i] = rng.Uniform(a, b);
  }
  return w;
}

OutputCensus CensusOutputVectors(const CostOracle& oracle, const ParameterSampler& sampler,
                                 int threads) {
  if (oracle.size() == 0) throw ParameterError("census needs at least one instance");
  if (sampler.count < 1) throw ParameterError("census needs at least one parameter sample");
  if (!(sampler.lo <= sampler.hi)) throw ParameterError("census box is empty");
  for (const auto& [a, b] : sampler.boxes) {
    if (!(a <= b)) throw ParameterError("census box is empty");
  }
  const size_t n = oracle.size();
  const int dim = oracle.dim();

  OutputCensus census;
  census.sampler = sampler;
  census.instances = n;
  census.outputs.assign(static_cast<size_t>(sampler.count), std::vector<double>(n));
  // keys[j][i][k]: Q-pair keys of run (sample j, instance i) for type k.
  std::vector<std::vector<std::vector<std::vector<uint64_t>>>> keys(
      static_cast<size_t>(sampler.count));
  ParallelFor(static_cast<size_t>(sampler.count), threads, [&](size_t j) {
    const std::vector<double> w = sampler.Draw(static_cast<int>(j), dim);
    keys[j].resize(n);
    for (size_t i = 0; i < n; ++i) {
      const BncResult r = oracle.Run(i, w);
      census.outputs[j][i] = r.v;
      keys[j][i] = StateActionKeys(r.trace, kNumActionTypes);
    }
  });

  census.q_sums.assign(kNumActionTypes, 0.0);
  census.q_max.assign(kNumActionTypes, 0);
  for (size_t i = 0; i < n; ++i) {
    for (int k = 0; k < kNumActionTypes; ++k) {
      std::unordered_set<uint64_t> all;
      for (size_t j = 0; j < keys.size(); ++j) {
        const auto& v = keys[j][i][k];
        census.q_max[k] = std::max<uint64_t>(census.q_max[k], v.size());
        all.insert(v.begin(), v.end());
      }
      census.q_sums[k] += static_cast<double>(all.size());
    }
  }
  std::set<std::vector<double>> distinct(census.outputs.begin(), census.outputs.end());
  census.distinct.assign(distinct.begin(), distinct.end());
  census.count = census.distinct.size();
  return census;
}

std::string CensusCsv(const OutputCensus& census) {
  std::string out = "# schema bnclab.census/1\nsample";
  for (size_t i = 0; i < census.instances; ++i) out += ",v" + std::to_string(i + 1);
  out += "\n";
  char buf[40];
  for (size_t j = 0; j < census.outputs.size(); ++j) {
    out += std::to_string(j);
    for (double v : census.outputs[j]) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---- Shattering ------------------------------------------------------------

namespace {

// Witness sample per sign pattern, or nullopt when a pattern is missing.
std::optional<std::vector<size_t>> Shattered(const std::vector<std::vector<double>>& outputs,
                                             const std::vector<size_t>& subset,
                                             const std::vector<double>& thresholds) {
  const size_t patterns = size_t{1} << subset.size();
  std::vector<size_t> witness(patterns, SIZE_MAX);
  size_t found = 0;
  for (size_t j = 0; j < outputs.size() && found < patterns; ++j) {
    size_t mask = 0;
    for (size_t b = 0; b < subset.size(); ++b) {
      if (outputs[j][subset[b]] > thresholds[b]) mask |= size_t{1} << b;
    }
    if (witness[mask] == SIZE_MAX) {
      witness[mask] = j;
      ++found;
    }
  }
  if (found < patterns) return std::nullopt;
  return witness;
}

}  // namespace

ShatterResult ShatterSearch(const std::vector<std::vector<double>>& outputs,
                            const std::optional<std::vector<double>>& thresholds, int max_subset) {
  if (max_subset < 0 || max_subset > kMaxShatterSubset) {
    throw ParameterError("max_subset must lie in [0, 20]");
  }
  ShatterResult best;
  if (outputs.empty()) return best;
  const size_t n = outputs.front().size();
  if (thresholds && thresholds->size() != n) {
    throw ParameterError("need one threshold per instance");
  }
  best.witnesses = {0};
  for (size_t i = 0; i < n && static_cast<int>(best.subset.size()) < max_subset; ++i) {
    std::vector<double> candidates;
    if (thresholds) {
      candidates.push_back((*thresholds)[i]);
    } else {
      std::set<double> values;
      for (const auto& row : outputs) values.insert(row[i]);
      for (auto it = values.begin(); std::next(it) != values.end(); ++it) {
        candidates.push_back(0.5 * (*it + *std::next(it)));
      }
    }
    for (double th : candidates) {
      std::vector<size_t> subset = best.subset;
      std::vector<double> ths = best.thresholds;
      subset.push_back(i);
      ths.push_back(th);
      if (auto w = Shattered(outputs, subset, ths)) {
        best.subset = std::move(subset);
        best.thresholds = std::move(ths);
        best.witnesses = std::move(*w);
        break;
      }
    }
  }
  return best;
}

// ---- Degree probe ----------------------------------------------------------

bool DegreeReport::all_certified() const {
  for (const auto& r : regions) {
    if (!r.skipped && !r.certified) return false;
  }
  return true;
}

DegreeReport DegreeProbe(const MlpSpec& spec, std::span<const double> input,
                         std::span<const double> w0, std::span<const double> u, double t_lo,
                         double t_hi, int samples) {
  ValidateMlpSpec(spec);
  const int L = spec.L();
  if (samples < L + 3) throw ParameterError("degree probe needs samples >= L + 3");
  if (static_cast<int>(w0.size()) != spec.W() || static_cast<int>(u.size()) != spec.W()) {
    throw ParameterError("line does not match the MLP parameter count");
  }
  if (!(t_lo < t_hi)) throw ParameterError("probe interval must satisfy t_lo < t_hi");

  DegreeReport report;
  report.beta = L;
  {
    double b = L * std::pow(static_cast<double>(spec.activation.alpha()), L);
    report.beta = static_cast<int>(std::min(b, 1e9));
  }

  std::vector<double> w(w0.size());
  std::vector<int> pattern;
  auto at = [&](double t, uint64_t* pat) {
    for (size_t j = 0; j < w.size(); ++j) w[j] = w0[j] + t * u[j];
    const double y = MlpForward(spec, w, input, &pattern);
    if (pat) {
      Hasher h;
      for (int p : pattern) h.Add(p);
      *pat = h.digest();
    }
    return y;
  };

  constexpr int kGrid = 4096;
  const double tol = 1e-12 * (t_hi - t_lo);
  std::map<double, uint64_t> pats;
  for (int i = 0; i < kGrid; ++i) {
    const double t = i + 1 == kGrid ? t_hi : t_lo + (t_hi - t_lo) * i / (kGrid - 1);
    uint64_t p;
    at(t, &p);
    pats.emplace(t, p);
  }

  constexpr int kMaxPasses = 8;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    // Bisect pattern changes down to tol.
    std::vector<std::pair<double, double>> work;
    for (auto it = pats.begin(); std::next(it) != pats.end(); ++it) {
      auto nx = std::next(it);
      if (!(it->second == nx->second) && nx->first - it->first >= tol) {
        work.emplace_back(it->first, nx->first);
      }
    }
    while (!work.empty()) {
      auto [a, b] = work.back();
      work.pop_back();
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) continue;
      uint64_t pm;
      at(mid, &pm);
      pats.emplace(mid, pm);
      if (pm != pats.at(a) && mid - a >= tol) work.emplace_back(a, mid);
      if (pm != pats.at(b) && b - mid >= tol) work.emplace_back(mid, b);
    }

    report.regions.clear();
    bool consistent = true;
    auto it = pats.begin();
    while (it != pats.end()) {
      auto end = it;
      while (std::next(end) != pats.end() && std::next(end)->second == it->second) ++end;
      DegreeRegion region;
      region.t_lo = it->first;
      region.t_hi = end->first;
      region.pattern = it->second;
      it = std::next(end);

      const double width = region.t_hi - region.t_lo;
      if (!(width > 1e-9 * (t_hi - t_lo))) {
        region.skipped = true;
        region.notice = "region too short for " + std::to_string(samples) + " samples";
        report.regions.push_back(std::move(region));
        continue;
      }
      std::vector<double> y(static_cast<size_t>(samples));
      for (int j = 0; j < samples; ++j) {
        const double t = j + 1 == samples ? region.t_hi : region.t_lo + width * j / (samples - 1);
        uint64_t p;
        y[j] = at(t, &p);
        if (p != region.pattern) {
          pats.emplace(t, p);
          consistent = false;
        }
      }
      double ymax = 0.0;
      for (double v : y) ymax = std::max(ymax, std::abs(v));
      std::vector<double> d = y;
      for (int j = 1; j < samples; ++j) {
        for (size_t s = 0; s + 1 < d.size(); ++s) d[s] = d[s + 1] - d[s];
        d.pop_back();
        double dmax = 0.0;
        for (double v : d) dmax = std::max(dmax, std::abs(v));
        region.rel_diff.push_back(ymax > 0.0 ? dmax / (std::ldexp(1.0, j) * ymax) : 0.0);
      }
      region.measured_degree = samples - 1;
      for (int j = 0; j < static_cast<int>(region.rel_diff.size()); ++j) {
        if (region.rel_diff[j] <= kDegreeRelTol) {
          region.measured_degree = j;
          break;
        }
      }
      if (report.beta < static_cast<int>(region.rel_diff.size())) {
        region.certified = region.rel_diff[report.beta] <= kDegreeRelTol;
      } else {
        region.notice = "too few samples to test the (beta+1)-th difference";
      }
      report.regions.push_back(std::move(region));
    }
    if (consistent) break;
    if (pass + 1 == kMaxPasses) {
      for (auto& r : report.regions) {
        if (!r.skipped && r.notice.empty()) r.notice = "activation pattern not resolved";
      }
    }
  }
  for (const auto& r : report.regions) {
    if (!r.skipped)
      report.max_measured_degree = std::max(report.max_measured_degree, r.measured_degree);
  }
  return report;
}

}  // namespace bnclab
