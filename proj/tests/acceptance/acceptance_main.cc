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

// Acceptance gate: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bnclab/bnc.h"
#include "bnclab/bounds.h"
#include "bnclab/cuts.h"
#include "bnclab/instance.h"
#include "bnclab/lab.h"
#include "bnclab/policy.h"
#include "bnclab/probe.h"
#include "bnclab/util.h"
#include "oracle/crosscheck.h"

namespace bnclab {
namespace {

namespace fs = std::filesystem;

struct Line {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<double> Uniform(Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(lo, hi);
  return v;
}

// Everything a pipeline run measures; `report` holds only deterministic
// content so that two runs can be compared byte for byte.
struct Pipeline {
  std::vector<Line> lines;
  std::string report;
  uint64_t q_runs = 0;
  uint64_t q_violations = 0;
  int threads = 1;

  void Record(const std::string& key, const std::string& value) {
    report += key + " " + value + "\n";
  }
  void Audit(const QAudit& a) {
    q_runs += a.runs.load();
    q_violations += a.violations.load();
  }
  void Audit(const RunTrace& t) {
    ++q_runs;
    q_violations += t.q_violations.size();
  }
};

template <typename F>
void Timed(Pipeline& p, int id, const std::string& name, F body) {
  const auto start = std::chrono::steady_clock::now();
  Line line;
  line.id = id;
  line.name = name;
  body(line);
  line.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  p.Record("criterion." + std::to_string(id),
           std::string(line.pass ? "PASS " : "FAIL ") + line.detail);
  p.lines.push_back(std::move(line));
}

// ---- Criteria 1 and 2 ------------------------------------------------------

void OracleAndCuts(Pipeline& p) {
  BncConfig cfg;
  cfg.max_rounds = 200;
  cfg.root_cut_rounds = 2;
  const ExperimentConfig three = PresetConfig("three-policy");
  const PolicyTemplate tmpl = TemplateFor(three);

  int compared = 0, limit = 0, mismatches = 0, cut_total = 0, cut_bad = 0;
  std::string first_mismatch;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 200; ++i) {
    GeneratorSpec g;
    g.family = static_cast<Family>(i % 3);
    g.n1 = 5 + i % 6;
    g.m = 1 + (i / 3) % 6;
    g.coeff_lo = 1;
    g.coeff_hi = 12;
    g.seed = DeriveSeed(20260101, static_cast<uint64_t>(i));
    const MipInstance inst = GenerateInstance(g);
    Rng rng(DeriveSeed(g.seed, 1));
    const PolicyBundle bundle = i % 2 == 0
                                    ? DefaultBundle(Uniform(rng, 4, -1, 1))
                                    : tmpl.Instantiate(Uniform(rng, tmpl.ParameterCount(), -1, 1));
    const BncResult r = SolveBnc(inst, bundle, cfg);
    p.Audit(r.trace);
    for (const Cut& c : r.cuts) {
      ++cut_total;
      if (!CheckCutValidity(c, inst)) ++cut_bad;
    }
    if (r.status == BncResult::Status::kLimit) {
      ++limit;
      continue;
    }
    ++compared;
    const IntegerOptimum opt = EnumerateIntegerOptimum(inst);
    const bool inf_b = r.status == BncResult::Status::kInfeasible;
    const bool inf_o = opt.status == IntegerOptimum::Status::kInfeasible;
    if (inf_b != inf_o || (!inf_o && std::fabs(r.ub - opt.value) > 1e-6)) {
      ++mismatches;
      if (first_mismatch.empty())
        first_mismatch = " first mismatch at instance " + std::to_string(i);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Line l1;
  l1.id = 1;
  l1.name = "oracle equivalence";
  l1.pass = mismatches == 0 && compared >= 190 && secs < 60.0;
  l1.detail = std::to_string(compared) + " compared, " + std::to_string(limit) +
              " hit the round limit, " + std::to_string(mismatches) + " mismatches" +
              first_mismatch;
  l1.seconds = secs;
  p.Record("criterion.1", std::string(l1.pass ? "PASS " : "FAIL ") + l1.detail);
  p.lines.push_back(l1);

  Line l2;
  l2.id = 2;
  l2.name = "cut validity";
  l2.pass = cut_bad == 0 && cut_total > 0;
  l2.detail = std::to_string(cut_total) + " cuts checked, " + std::to_string(cut_bad) + " invalid";
  p.Record("criterion.2", std::string(l2.pass ? "PASS " : "FAIL ") + l2.detail);
  p.lines.push_back(l2);
}

// ---- Criterion 3 -----------------------------------------------------------

ExperimentConfig ReluCutConfig() {
  ExperimentConfig cfg = PresetConfig("root-cuts");
  MlpSpec spec;
  spec.hidden = {4};
  cfg.bundle.at(ActionType::kCut) =
      Policy{kCutExtractor, MlpScorer(spec, std::vector<double>(spec.W(), 0.0))};
  return cfg;
}

void Piecewise(Pipeline& p) {
  Timed(p, 3, "piecewise constancy", [&](Line& line) {
    int scans = 0, violations = 0, unstable = 0;
    size_t breakpoints = 0;
    for (const bool relu : {false, true}) {
      ExperimentConfig cfg = relu ? ReluCutConfig() : PresetConfig("root-cuts");
      cfg.n_train = 20;
      cfg.n_test = 0;
      const InstanceSplit split = MakeInstances(cfg);
      const CostOracle oracle(split.train, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
      for (size_t i = 0; i < split.train.size(); ++i) {
        for (int s = 0; s < 5; ++s) {
          Rng rng(DeriveSeed(relu ? 0x3e10 : 0x3e11, i * 16 + s));
          const auto w0 = Uniform(rng, oracle.dim(), -1, 1);
          const auto u = Uniform(rng, oracle.dim(), -1, 1);
          auto cost = [&oracle, i](std::span<const double> w) { return oracle.Sample(i, w); };
          ScanOptions opts;
          opts.grid0 = 256;
          opts.bisect_tol = 1e-7;
          opts.seed = rng.Next();
          opts.threads = p.threads;
          const SliceScan a = ScanSlice(cost, w0, u, -1, 1, opts);
          opts.grid0 = 512;
          const SliceScan b = ScanSlice(cost, w0, u, -1, 1, opts);
          ++scans;
          violations += static_cast<int>(a.violations.size() + b.violations.size());
          if (!SameStructure(a, b, opts.bisect_tol)) ++unstable;
          breakpoints += a.breakpoints.size();
          std::string values;
          for (double v : a.piece_values) values += Num(v) + ";";
          p.Record("scan." + std::string(relu ? "relu." : "linear.") + std::to_string(i) + "." +
                       std::to_string(s),
                   std::to_string(a.breakpoints.size()) + " " + values);
        }
      }
      p.Audit(oracle.audit());
    }
    line.pass = violations == 0 && unstable == 0 && scans == 200;
    line.detail = std::to_string(scans) + " slices (linear and ReLU), " +
                  std::to_string(breakpoints) + " breakpoints, " + std::to_string(violations) +
                  " structural violations, " + std::to_string(unstable) +
                  " changed under grid doubling";
  });
  p.lines.back().pass = p.lines.back().pass && p.lines.back().seconds < 300.0;
}

// ---- Criteria 4, 6 and 10 --------------------------------------------------

struct CensusFixture {
  std::string name;
  OutputCensus census;
  BoundInputs in;
};

CensusFixture RunCensus(Pipeline& p, const std::string& name, int n, int samples, uint64_t seed) {
  ExperimentConfig cfg = PresetConfig("root-cuts");
  cfg.n_train = n;
  cfg.n_test = 0;
  const InstanceSplit split = MakeInstances(cfg);
  const CostOracle oracle(split.train, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  ParameterSampler sampler;
  sampler.seed = seed;
  sampler.count = samples;
  CensusFixture f{name, CensusOutputVectors(oracle, sampler, p.threads),
                  BoundInputsFor(cfg, split.train, n)};
  p.Audit(oracle.audit());
  for (int k = 0; k < kNumActionTypes; ++k) f.in.types[k].q_sum = std::max(f.census.q_sums[k], 1.0);
  Hasher h;
  for (const auto& v : f.census.outputs) h.Add(std::span<const double>(v));
  p.Record("census." + name,
           std::to_string(f.census.count) + " distinct, outputs " + HexDigest(h.digest()));
  return f;
}

// ---- Criterion 7 -----------------------------------------------------------

struct GapFixture {
  GapResult gap;
  std::vector<std::vector<double>> train_outputs;
  BoundInputs in;
};

GapFixture RunGap(Pipeline& p) {
  ExperimentConfig cfg = PresetConfig("root-cuts");
  cfg.generator.family = Family::kKnapsack;
  cfg.generator.n1 = 10;
  cfg.generator.m = 3;
  cfg.generator.coeff_lo = 1;
  cfg.generator.coeff_hi = 20;
  cfg.generator.seed = 11;
  cfg.n_train = 20;
  cfg.n_test = 20;
  cfg.budget = 200;
  cfg.threads = p.threads;
  const InstanceSplit split = MakeInstances(cfg);
  std::vector<std::vector<double>> ws;
  for (int j = 0; j < cfg.budget; ++j) ws.push_back(DrawParameters(cfg, j));
  GapFixture f;
  f.gap = MeasureGap(cfg, split.train, split.test, ws);
  f.in = BoundInputsFor(cfg, split.train, cfg.n_train);
  const CostOracle oracle(split.train, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  for (const auto& w : ws) f.train_outputs.push_back(oracle.Costs(w));
  p.Audit(oracle.audit());
  return f;
}

}  // namespace

Pipeline RunPipeline(int threads) {
  Pipeline p;
  p.threads = threads;

  OracleAndCuts(p);
  Piecewise(p);

  CensusFixture c5, c12;
  Timed(p, 4, "census dominance", [&](Line& line) {
    c5 = RunCensus(p, "n5", 5, 10000, 0xc4);
    const double log_r = RBound(c5.in).log;
    line.pass = std::log(static_cast<double>(c5.census.count)) <= log_r;
    line.detail = std::to_string(c5.census.count) +
                  " distinct vectors over 10000 samples, ln r_bound " + Num(log_r);
  });
  c12 = RunCensus(p, "n12", 12, 2000, 0xc6);

  GapFixture gap;
  Timed(p, 7, "generalization-gap dominance", [&](Line& line) {
    gap = RunGap(p);
    const GapResult& g = gap.gap;
    line.pass = gap.in.H == 3.0 * gap.in.M && g.entries.size() == 200 &&
                g.sup_gap <= g.uc_pdim_bound && g.sup_gap <= g.uc_rademacher_bound;
    line.detail = "sup-gap " + Num(g.sup_gap) + ", pdim bound " + Num(g.uc_pdim_bound) +
                  ", Rademacher bound " + Num(g.uc_rademacher_bound) + " (H = " + Num(gap.in.H) +
                  ")";
  });

  Timed(p, 6, "Rademacher chain", [&](Line& line) {
    line.pass = true;
    for (const CensusFixture* f : {&c5, &c12}) {
      const MassartResult m = MassartEstimate(f->census.distinct);
      const double rad = RademacherBoundEmpirical(f->in);
      const bool ok = m.estimate <= m.bound + 1e-9 && m.bound <= rad + 1e-9;
      line.pass = line.pass && ok;
      line.detail += "N=" + std::to_string(f->census.instances) + ": " + Num(m.estimate) +
                     " <= " + Num(m.bound) + " <= " + Num(rad) + "; ";
    }
  });

  Timed(p, 8, "MLP degree law", [&](Line& line) {
    int certified = 0;
    int max_degree[4] = {0, 0, 0, 0};
    for (int j = 0; j < 50; ++j) {
      Rng rng(DeriveSeed(0xde9, static_cast<uint64_t>(j)));
      MlpSpec spec;
      spec.hidden.assign(static_cast<size_t>(1 + j % 3), 4);
      const auto input = Uniform(rng, 4, -1, 1);
      const auto w0 = Uniform(rng, spec.W(), -1, 1);
      const auto u = Uniform(rng, spec.W(), -1, 1);
      const DegreeReport d = DegreeProbe(spec, input, w0, u, -1, 1, spec.L() + 5);
      certified += d.all_certified();
      max_degree[spec.L()] = std::max(max_degree[spec.L()], d.max_measured_degree);
    }
    line.pass = certified == 50;
    line.detail = std::to_string(certified) + "/50 fixtures certified; measured degree " +
                  std::to_string(max_degree[1]) + "/" + std::to_string(max_degree[2]) + "/" +
                  std::to_string(max_degree[3]) + " for L=1/2/3";
  });

  Timed(p, 9, "formula cross-checks", [&](Line& line) {
    bool ok = true;
    for (const auto& c : oracle::RunCrossChecks(0x9c, 100)) {
      ok = ok && c.cases >= 100 && c.max_rel <= 1e-9L;
      line.detail += c.name + " " + Num(static_cast<double>(c.max_rel)) + "; ";
    }
    const AuxReport aux = AuxInequalityFuzz(0xa0, 100000);
    ok = ok && aux.draws == 100000 && aux.violations.empty();
    line.detail += "aux violations " + std::to_string(aux.violations.size()) + "; ";
    Rng rng(0xc0);
    int mismatched = 0;
    for (int i = 0; i < 100; ++i) {
      BoundInputs in;
      in.M = static_cast<int>(rng.UniformInt(1, 200));
      const int d = static_cast<int>(rng.UniformInt(1, 3));
      for (int k = 0; k < d; ++k) {
        TypeInputs t;
        t.rho = static_cast<double>(rng.UniformInt(2, 200));
        t.mlp = MlpDims{
            static_cast<int>(rng.UniformInt(1, 4)), static_cast<int>(rng.UniformInt(1, 500)),
            static_cast<int>(rng.UniformInt(1, 64)), static_cast<int>(rng.UniformInt(1, 4)),
            static_cast<int>(rng.UniformInt(1, 3))};
        in.types.push_back(t);
      }
      const BoundInputs n = Normalize(in);
      if (MlpPdimBound(in) != PdimUpperBound(CostStructure(n), n.W())) ++mismatched;
    }
    ok = ok && mismatched == 0;
    line.detail += "composition mismatches " + std::to_string(mismatched);
    line.pass = ok;
  });

  Timed(p, 10, "shattering sandwich", [&](Line& line) {
    line.pass = true;
    auto check = [&](const std::string& name, const std::vector<std::vector<double>>& outputs,
                     const BoundInputs& in) {
      const size_t n = outputs.empty() ? 0 : outputs[0].size();
      const ShatterResult sh = ShatterSearch(outputs, std::nullopt,
                                             std::min<int>(static_cast<int>(n), kMaxShatterSubset));
      const double pdim = PdimUpperBound(CostStructure(in), in.W());
      line.pass = line.pass && static_cast<double>(sh.size()) <= pdim;
      line.detail += name + ": " + std::to_string(sh.size()) + " <= " + Num(pdim) + "; ";
    };
    check("census N=5", c5.census.outputs, c5.in);
    check("census N=12", c12.census.outputs, c12.in);
    check("gap N=20", gap.train_outputs, gap.in);
  });

  Timed(p, 5, "Q-bound assertion", [&](Line& line) {
    line.pass = p.q_violations == 0 && p.q_runs > 0;
    line.detail =
        std::to_string(p.q_runs) + " runs, " + std::to_string(p.q_violations) + " violations";
  });
  return p;
}

std::string Slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace bnclab

int main() {
  using namespace bnclab;
  const int threads = DefaultThreads();
  Pipeline first = RunPipeline(threads);
  std::vector<Line> lines = first.lines;

  {
    const auto start = std::chrono::steady_clock::now();
    const Pipeline second = RunPipeline(threads);
    // The lab report of the preset experiment, emitted twice.
    const fs::path base = fs::temp_directory_path() / "bnclab_acceptance";
    fs::remove_all(base);
    ExperimentConfig cfg = PresetConfig("root-cuts");
    cfg.threads = threads;
    std::vector<std::string> a = EmitReport(RunLab(cfg, true), (base / "a").string());
    std::vector<std::string> b = EmitReport(RunLab(cfg, true), (base / "b").string());
    size_t differing = 0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) differing += Slurp(a[i]) != Slurp(b[i]);
    fs::remove_all(base);
    Line l;
    l.id = 11;
    l.name = "determinism";
    l.pass = first.report == second.report && a.size() == b.size() && differing == 0;
    l.detail = "acceptance report " + std::to_string(first.report.size()) + " bytes " +
               (first.report == second.report ? "identical" : "DIFFERS") + ", lab report files " +
               std::to_string(a.size()) + " with " + std::to_string(differing) + " differing";
    l.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    lines.push_back(l);
  }

  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) { return x.id < y.id; });
  bool all = true;
  for (const Line& l : lines) {
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", l.id, l.pass ? "PASS" : "FAIL",
                l.name.c_str(), l.detail.c_str(), l.seconds);
    all = all && l.pass;
  }
  std::fflush(stdout);
  return all ? 0 : 1;
}
