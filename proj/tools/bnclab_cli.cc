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

// bnclab: generate instances, run branch-and-cut, probe parameter slices,
// evaluate bounds and run the verification suites.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bnclab/bnc.h"
#include "bnclab/bounds.h"
#include "bnclab/errors.h"
#include "bnclab/instance.h"
#include "bnclab/lab.h"
#include "bnclab/policy.h"
#include "bnclab/probe.h"
#include "bnclab/simd/kernels.h"
#include "bnclab/util.h"

namespace {

using namespace bnclab;

std::string ReadText(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParameterError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

struct ExperimentFlags {
  std::string config;
  std::string preset = "root-cuts";
  int threads = 0;

  void Attach(CLI::App* app) {
    app->add_option("--config", config, "experiment config (bnclab.experiment/1 JSON)");
    app->add_option("--preset", preset, "preset when no config is given: root-cuts, three-policy");
    app->add_option("--threads", threads, "worker threads (default: hardware)");
  }

  ExperimentConfig Load() const {
    ExperimentConfig cfg = config.empty() ? PresetConfig(preset) : ParseConfig(ReadText(config));
    cfg.threads = threads > 0 ? threads : DefaultThreads();
    ValidateConfig(cfg);
    return cfg;
  }
};

struct BncFlags {
  BncConfig cfg;

  void Attach(CLI::App* app) {
    app->add_option("--max-rounds", cfg.max_rounds, "round limit M")->capture_default_str();
    app->add_option("--eps-gap", cfg.eps_gap, "absolute gap for termination")
        ->capture_default_str();
    app->add_option("--root-cut-rounds", cfg.root_cut_rounds, "cut rounds at the root")
        ->capture_default_str();
    app->add_option("--kappa", cfg.kappa, "cuts taken per cut round")->capture_default_str();
    app->add_option("--cut-cap", cfg.cut_cap, "candidate cuts per round")->capture_default_str();
  }
};

int Gen(const GeneratorSpec& spec, int count, const std::string& out) {
  if (count < 1) throw ParameterError("--count must be >= 1");
  if (out.empty()) {
    if (count != 1) throw ParameterError("--out DIR is required with --count > 1");
    std::cout << SerializeInstance(GenerateInstance(spec));
    return 0;
  }
  std::filesystem::create_directories(out);
  GeneratorSpec g = spec;
  for (int i = 0; i < count; ++i) {
    g.seed = count == 1 ? spec.seed : DeriveSeed(spec.seed, static_cast<uint64_t>(i));
    const MipInstance inst = GenerateInstance(g);
    const std::string path = (std::filesystem::path(out) / (inst.name + ".mip")).string();
    WriteInstanceFile(inst, path);
    std::cout << path << "\n";
  }
  return 0;
}

int Solve(const std::string& instance, const std::string& policy, const BncConfig& cfg,
          const std::string& trace_path) {
  const MipInstance inst = ReadInstanceFile(instance);
  const PolicyBundle bundle = policy.empty() ? DefaultBundle() : ParsePolicy(ReadText(policy));
  const BncResult r = SolveBnc(inst, bundle, cfg);
  std::printf("instance %s\n", inst.name.c_str());
  std::printf("status %s (%s)\n", std::string(StatusName(r.status)).c_str(),
              std::string(TerminationName(r.termination)).c_str());
  if (r.x) {
    std::printf("value %.10g\nx", r.ub);
    for (double v : *r.x) std::printf(" %.10g", v);
    std::printf("\n");
  }
  std::printf("lb %.10g ub %.10g\n", r.lb, r.ub);
  std::printf("V %.10g rounds %d nodes %d lp_solves %d cuts %zu\n", r.v, r.trace.rounds,
              r.nodes_created, r.lp_solves, r.cuts.size());
  std::printf("Q");
  for (auto q : r.trace.q_counts) std::printf(" %llu", static_cast<unsigned long long>(q));
  std::printf("\n");
  if (!trace_path.empty()) WriteText(trace_path, ExportTrace(r.trace));
  return 0;
}

int Scan(const ExperimentConfig& cfg, int instance, int slices, const std::string& out) {
  const InstanceSplit split = MakeInstances(cfg);
  if (instance < 0 || instance >= static_cast<int>(split.train.size())) {
    throw ParameterError("--instance must index the training set");
  }
  CostOracle oracle({split.train[instance]}, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  if (oracle.dim() == 0) throw ParameterError("the configured policy has no learnable parameters");
  std::string csv = "# schema bnclab.scan/1 config " + ConfigHash(cfg) + "\nslice,t,v\n";
  int failures = 0;
  for (int s = 0; s < slices; ++s) {
    Rng rng(DeriveSeed(cfg.tuner_seed, 0x5ca7 + static_cast<uint64_t>(s)));
    std::vector<double> w0(oracle.dim()), u(oracle.dim());
    for (double& x : w0) x = rng.Uniform(-1.0, 1.0);
    for (double& x : u) x = rng.Uniform(-1.0, 1.0);
    ScanOptions opts;
    opts.grid0 = cfg.grid0;
    opts.bisect_tol = cfg.bisect_tol;
    opts.seed = DeriveSeed(cfg.tuner_seed, static_cast<uint64_t>(s));
    opts.threads = cfg.threads;
    const TracedCostFunction cost = [&](std::span<const double> w) { return oracle.Sample(0, w); };
    const SliceScan scan = ScanSlice(cost, w0, u, -1.0, 1.0, opts);
    std::printf("slice %d: %zu breakpoints, %zu evaluations, %s\n", s, scan.breakpoints.size(),
                scan.evaluations, scan.ok() ? "piecewise constant" : "STRUCTURAL VIOLATION");
    for (size_t p = 0; p < scan.piece_values.size(); ++p) {
      std::printf("  piece %zu: V = %.10g%s", p, scan.piece_values[p],
                  p < scan.breakpoints.size() ? "" : "\n");
      if (p < scan.breakpoints.size()) std::printf("  | t = %.10g\n", scan.breakpoints[p]);
    }
    for (const auto& v : scan.violations) std::printf("  violation: %s\n", v.c_str());
    failures += scan.ok() ? 0 : 1;
    for (const auto& p : scan.points) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", s, p.t, p.v);
      csv += buf;
    }
  }
  if (!out.empty()) WriteText(out, csv);
  return failures == 0 ? 0 : 1;
}

int Census(const ExperimentConfig& cfg, int instances, int samples, const std::string& out) {
  const InstanceSplit split = MakeInstances(cfg);
  if (instances < 1 || instances > static_cast<int>(split.train.size())) {
    throw ParameterError("--instances must lie in [1, n_train]");
  }
  std::vector<MipInstance> insts(split.train.begin(), split.train.begin() + instances);
  CostOracle oracle(insts, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  ParameterSampler sampler;
  sampler.seed = DeriveSeed(cfg.tuner_seed, 0xce);
  sampler.count = samples;
  const PolicyTemplate tmpl = TemplateFor(cfg);
  for (int k = 0; k < kNumActionTypes; ++k) {
    for (int j = 0; j < tmpl.ParameterCount(k); ++j) sampler.boxes.push_back(cfg.boxes[k]);
  }
  const OutputCensus census = CensusOutputVectors(oracle, sampler, cfg.threads);
  std::printf("instances %d samples %d distinct %zu\n", instances, samples, census.count);
  std::printf("Q sums %g %g %g\n", census.q_sums[0], census.q_sums[1], census.q_sums[2]);
  BoundInputs in = BoundInputsFor(cfg, insts, instances);
  for (int k = 0; k < kNumActionTypes; ++k) in.types[k].q_sum = std::max(census.q_sums[k], 1.0);
  try {
    const double log_r = RBound(in).log;
    std::printf("ln r_bound %.10g (%s)\n", log_r,
                std::log(static_cast<double>(census.count)) <= log_r ? "dominates" : "VIOLATED");
  } catch (const ParameterError& e) {
    std::printf("r_bound not applicable: %s\n", e.what());
  }
  const ShatterResult sh =
      ShatterSearch(census.outputs, std::nullopt, std::min(instances, kMaxShatterSubset));
  std::printf("shattered subset size %zu\n", sh.size());
  if (!out.empty()) WriteText(out, CensusCsv(census));
  return 0;
}

int Bounds(const std::string& input, bool csv, const std::string& out) {
  const BoundInputs in = ParseBoundInputs(ReadText(input));
  const auto rows = ComputeBoundTable(in);
  WriteText(out, csv ? BoundTableCsv(rows) : BoundTableText(rows));
  return 0;
}

int Erm(const ExperimentConfig& cfg, const std::string& out) {
  const ErmResult r = ErmTune(cfg);
  std::printf("budget %d best sample %zu train cost %.10g aborted runs %llu\nw", cfg.budget, r.best,
              r.train_cost, static_cast<unsigned long long>(r.aborted_runs));
  for (double v : r.best_w) std::printf(" %.10g", v);
  std::printf("\n");
  if (!out.empty()) {
    Report rep;
    rep.cfg = cfg;
    rep.config_hash = ConfigHash(cfg);
    rep.erm = r;
    for (const auto& p : EmitReport(rep, out)) std::printf("wrote %s\n", p.c_str());
  }
  return 0;
}

int Gap(const ExperimentConfig& cfg, int samples) {
  std::vector<std::vector<double>> w_set;
  ExperimentConfig c = cfg;
  c.budget = samples;
  for (int j = 0; j < samples; ++j) w_set.push_back(DrawParameters(c, j));
  const GapResult g = MeasureGap(cfg, w_set);
  std::printf("samples %d sup-gap %.10g\n", samples, g.sup_gap);
  std::printf("pdim bound %.10g\n", g.pdim);
  std::printf("uniform convergence (pdim) %.10g (up to the suppressed constant)\n",
              g.uc_pdim_bound);
  std::printf("Rademacher bound %.10g\n", g.rademacher);
  std::printf("uniform convergence (Rademacher) %.10g (up to the suppressed constant)\n",
              g.uc_rademacher_bound);
  std::printf("test means are held-out estimates of the expected cost\n");
  return 0;
}

int Verify(ExperimentConfig cfg, bool plant, const std::string& out) {
  cfg.verify.plant_cut_fault = cfg.verify.plant_cut_fault || plant;
  const Report rep = RunLab(cfg, true);
  for (const auto& s : rep.verification->suites) {
    std::printf("%-20s %s (%d checks)\n", s.name.c_str(), s.passed ? "PASS" : "FAIL", s.checks);
    for (const auto& f : s.failures) std::printf("    %s\n", f.c_str());
  }
  const std::string dir = out.empty() ? cfg.output_dir : out;
  for (const auto& p : EmitReport(rep, dir)) std::printf("wrote %s\n", p.c_str());
  return rep.verification->ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bnclab: learned branch-and-cut policies and their sample complexity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::string kernels;
  app.add_option("--kernels", kernels, "kernel variant: scalar, avx2, neon (default: widest)");

  GeneratorSpec gen;
  std::string family = "knapsack";
  int count = 1;
  std::string gen_out;
  auto* g = app.add_subcommand("gen", "generate random instances");
  g->add_option("--family", family, "knapsack, packing, covering")->capture_default_str();
  g->add_option("--n1", gen.n1, "integer variables")->capture_default_str();
  g->add_option("--n2", gen.n2, "continuous variables")->capture_default_str();
  g->add_option("--m", gen.m, "rows")->capture_default_str();
  g->add_option("--coeff-lo", gen.coeff_lo, "smallest coefficient")->capture_default_str();
  g->add_option("--coeff-hi", gen.coeff_hi, "largest coefficient")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("--count", count, "number of instances")->capture_default_str();
  g->add_option("--out", gen_out, "output directory (stdout when omitted and count is 1)");

  std::string instance, policy, trace_path;
  BncFlags solve_flags;
  auto* s = app.add_subcommand("solve", "run branch-and-cut on one instance");
  s->add_option("instance", instance, "instance file")->required();
  s->add_option("--policy", policy, "policy bundle (bnclab.policy/1 JSON)");
  s->add_option("--trace", trace_path, "write the decision trace as JSON lines");
  solve_flags.Attach(s);

  ExperimentFlags scan_flags;
  int scan_instance = 0;
  int slices = 1;
  std::string scan_out;
  auto* sc = app.add_subcommand("scan", "scan V along random parameter slices");
  scan_flags.Attach(sc);
  sc->add_option("--instance", scan_instance, "training instance index")->capture_default_str();
  sc->add_option("--slices", slices, "number of slices")->capture_default_str();
  sc->add_option("--out", scan_out, "CSV of every evaluation");

  ExperimentFlags census_flags;
  int census_instances = 5;
  int census_samples = 1000;
  std::string census_out;
  auto* ce = app.add_subcommand("census", "count distinct cost vectors over sampled parameters");
  census_flags.Attach(ce);
  ce->add_option("--instances", census_instances, "training instances used")->capture_default_str();
  ce->add_option("--samples", census_samples, "parameter samples")->capture_default_str();
  ce->add_option("--out", census_out, "CSV of every output vector");

  std::string bounds_in, bounds_out;
  bool bounds_csv = false;
  auto* b = app.add_subcommand("bounds", "evaluate every bound for a bnclab.bounds/1 file");
  b->add_option("input", bounds_in, "bound inputs")->required();
  b->add_flag("--csv", bounds_csv, "CSV instead of a text table");
  b->add_option("--out", bounds_out, "output file (stdout when omitted)");

  ExperimentFlags erm_flags;
  std::string erm_out;
  auto* e = app.add_subcommand("erm", "random-search tuning on the training set");
  erm_flags.Attach(e);
  e->add_option("--out", erm_out, "report directory");

  ExperimentFlags gap_flags;
  int gap_samples = 200;
  auto* gp = app.add_subcommand("gap", "train/test gap over sampled parameters");
  gap_flags.Attach(gp);
  gp->add_option("--samples", gap_samples, "parameter samples")->capture_default_str();

  ExperimentFlags verify_flags;
  bool plant = false;
  std::string verify_out;
  auto* v = app.add_subcommand("verify", "run every verification suite and write a report");
  verify_flags.Attach(v);
  v->add_flag("--plant-cut-fault", plant, "decrement every cut's rhs before checking validity");
  v->add_option("--out", verify_out, "report directory (default: config output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!kernels.empty() && !simd::SelectKernels(kernels)) {
      throw ParameterError("kernel variant \"" + kernels + "\" is not available");
    }
    if (g->parsed()) {
      gen.family = ParseFamily(family);
      return Gen(gen, count, gen_out);
    }
    if (s->parsed()) return Solve(instance, policy, solve_flags.cfg, trace_path);
    if (sc->parsed()) return Scan(scan_flags.Load(), scan_instance, slices, scan_out);
    if (ce->parsed())
      return Census(census_flags.Load(), census_instances, census_samples, census_out);
    if (b->parsed()) return Bounds(bounds_in, bounds_csv, bounds_out);
    if (e->parsed()) return Erm(erm_flags.Load(), erm_out);
    if (gp->parsed()) return Gap(gap_flags.Load(), gap_samples);
    if (v->parsed()) return Verify(verify_flags.Load(), plant, verify_out);
  } catch (const ParseError& err) {
    std::fprintf(stderr, "parse error: %s\n", err.what());
    return 2;
  } catch (const ParameterError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  } catch (const ValidationError& err) {
    std::fprintf(stderr, "invalid: %s\n", err.what());
    return 2;
  } catch (const RefusedError& err) {
    std::fprintf(stderr, "refused: %s\n", err.what());
    return 3;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "failed: %s\n", err.what());
    return 4;
  }
  return 0;
}
