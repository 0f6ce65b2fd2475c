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

#include "bnclab/lab.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "bnclab/errors.h"
#include "bnclab/util.h"
#include "json.hpp"

namespace bnclab {
namespace {

using Json = nlohmann::ordered_json;

constexpr uint64_t kTestStream = 1000003;

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json FiniteOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

ParameterSampler SamplerFor(const ExperimentConfig& cfg, uint64_t seed, int count) {
  const PolicyTemplate tmpl = TemplateFor(cfg);
  ParameterSampler s;
  s.seed = seed;
  s.count = count;
  for (int k = 0; k < kNumActionTypes; ++k) {
    for (int j = 0; j < tmpl.ParameterCount(k); ++j) s.boxes.push_back(cfg.boxes[k]);
  }
  return s;
}

}  // namespace

// ---- Configs ---------------------------------------------------------------

ExperimentConfig PresetConfig(std::string_view name) {
  ExperimentConfig cfg;
  cfg.preset = std::string(name);
  cfg.generator.family = Family::kPacking;
  cfg.generator.n1 = 10;
  cfg.generator.m = 5;
  cfg.generator.seed = 7;
  cfg.bnc.max_rounds = 200;
  cfg.bnc.root_cut_rounds = 2;
  cfg.bnc.kappa = 2;
  cfg.bnc.cut_cap = 10;
  if (name == "root-cuts") {
    cfg.bundle = DefaultBundle();
    cfg.learnable = {false, true, false};
  } else if (name == "three-policy") {
    cfg.bundle = DefaultBundle();
    cfg.bundle.at(ActionType::kNode).scorer = LinearScorer({0.0, 0.0, 0.0, 1.0});
    cfg.bundle.at(ActionType::kBranch).scorer = LinearScorer({1.0, 0.0, 0.0, 0.0});
    cfg.learnable = {true, true, true};
  } else {
    throw ParameterError("unknown preset \"" + std::string(name) +
                         "\" (expected root-cuts or three-policy)");
  }
  return cfg;
}

void ValidateConfig(const ExperimentConfig& cfg) {
  if (cfg.n_train < 1) throw ParameterError("config: the training instance set is empty");
  if (cfg.n_test < 0) throw ParameterError("config: n_test must be >= 0");
  if (cfg.budget < 1) throw ParameterError("config: tuner budget must be >= 1");
  if (cfg.grid0 < 2) throw ParameterError("config: grid0 must be >= 2");
  if (!(cfg.bisect_tol > 0.0)) throw ParameterError("config: bisect_tol must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ParameterError("config: delta must lie in (0, 1)");
  if (cfg.penalties.size() != static_cast<size_t>(kNumActionTypes)) {
    throw ParameterError("config: need three penalties");
  }
  for (double p : cfg.penalties) {
    if (!(p >= 0.0)) throw ParameterError("config: penalties must be nonnegative");
  }
  for (const auto& [lo, hi] : cfg.boxes) {
    if (!(lo <= hi)) throw ParameterError("config: parameter boxes must be nonempty");
  }
  const auto& v = cfg.verify;
  if (v.oracle_instances < 0 || v.slice_instances < 0 || v.slices_per_instance < 0 ||
      v.census_instances < 0 || v.census_samples < 1 || v.degree_fixtures < 0 || v.aux_draws < 1) {
    throw ParameterError("config: verification sizes out of range");
  }
  if (cfg.threads < 1) throw ParameterError("config: threads must be >= 1");
  ValidateBncConfig(cfg.bnc);
  ValidateBundle(cfg.bundle);
  for (int k = 0; k < kNumActionTypes; ++k) {
    if (cfg.learnable[k] && !cfg.bundle.policies[k].scorer.learnable()) {
      throw ParameterError("config: action type " + std::to_string(k + 1) +
                           " is marked learnable but uses a fixed rule");
    }
  }
  GeneratorSpec probe = cfg.generator;
  GenerateInstance(probe);
}

std::string SerializeConfig(const ExperimentConfig& cfg) {
  Json root;
  root["schema"] = "bnclab.experiment/1";
  root["preset"] = cfg.preset;
  root["instances"] = Json{{"family", std::string(FamilyName(cfg.generator.family))},
                           {"n1", cfg.generator.n1},
                           {"n2", cfg.generator.n2},
                           {"m", cfg.generator.m},
                           {"coeff_lo", cfg.generator.coeff_lo},
                           {"coeff_hi", cfg.generator.coeff_hi},
                           {"seed", cfg.generator.seed},
                           {"n_train", cfg.n_train},
                           {"n_test", cfg.n_test}};
  root["bnc"] = Json{{"max_rounds", cfg.bnc.max_rounds},
                     {"eps_gap", cfg.bnc.eps_gap},
                     {"root_cut_rounds", cfg.bnc.root_cut_rounds},
                     {"kappa", cfg.bnc.kappa},
                     {"cut_cap", cfg.bnc.cut_cap},
                     {"cut_rule", cfg.bnc.cut_rule}};
  root["penalties"] = cfg.penalties;
  root["policy"] = Json::parse(SerializePolicy(cfg.bundle));
  root["learnable"] = cfg.learnable;
  Json boxes = Json::array();
  for (const auto& [lo, hi] : cfg.boxes) boxes.push_back(Json::array({lo, hi}));
  root["boxes"] = boxes;
  root["tuner"] = Json{{"budget", cfg.budget}, {"seed", cfg.tuner_seed}};
  root["analysis"] =
      Json{{"grid0", cfg.grid0}, {"bisect_tol", cfg.bisect_tol}, {"delta", cfg.delta}};
  const auto& v = cfg.verify;
  root["verify"] = Json{{"oracle_instances", v.oracle_instances},
                        {"slice_instances", v.slice_instances},
                        {"slices_per_instance", v.slices_per_instance},
                        {"census_instances", v.census_instances},
                        {"census_samples", v.census_samples},
                        {"degree_fixtures", v.degree_fixtures},
                        {"aux_draws", v.aux_draws},
                        {"plant_cut_fault", v.plant_cut_fault}};
  root["output_dir"] = cfg.output_dir;
  root["threads"] = cfg.threads;
  return root.dump(2) + "\n";
}

ExperimentConfig ParseConfig(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("config JSON: ") + e.what());
  }
  try {
    if (root.value("schema", "") != "bnclab.experiment/1") {
      throw ParameterError("config needs schema \"bnclab.experiment/1\"");
    }
    ExperimentConfig cfg = PresetConfig(root.value("preset", "root-cuts"));
    if (root.contains("instances")) {
      const auto& j = root["instances"];
      if (j.contains("family")) cfg.generator.family = ParseFamily(j["family"].get<std::string>());
      cfg.generator.n1 = j.value("n1", cfg.generator.n1);
      cfg.generator.n2 = j.value("n2", cfg.generator.n2);
      cfg.generator.m = j.value("m", cfg.generator.m);
      cfg.generator.coeff_lo = j.value("coeff_lo", cfg.generator.coeff_lo);
      cfg.generator.coeff_hi = j.value("coeff_hi", cfg.generator.coeff_hi);
      cfg.generator.seed = j.value("seed", cfg.generator.seed);
      cfg.n_train = j.value("n_train", cfg.n_train);
      cfg.n_test = j.value("n_test", cfg.n_test);
    }
    if (root.contains("bnc")) {
      const auto& j = root["bnc"];
      cfg.bnc.max_rounds = j.value("max_rounds", cfg.bnc.max_rounds);
      cfg.bnc.eps_gap = j.value("eps_gap", cfg.bnc.eps_gap);
      cfg.bnc.root_cut_rounds = j.value("root_cut_rounds", cfg.bnc.root_cut_rounds);
      cfg.bnc.kappa = j.value("kappa", cfg.bnc.kappa);
      cfg.bnc.cut_cap = j.value("cut_cap", cfg.bnc.cut_cap);
      cfg.bnc.cut_rule = j.value("cut_rule", cfg.bnc.cut_rule);
    }
    if (root.contains("penalties")) cfg.penalties = root["penalties"].get<std::vector<double>>();
    if (root.contains("policy")) cfg.bundle = ParsePolicy(root["policy"].dump());
    if (root.contains("learnable")) {
      const auto l = root["learnable"].get<std::vector<bool>>();
      if (l.size() != static_cast<size_t>(kNumActionTypes)) {
        throw ParameterError("learnable needs three flags");
      }
      for (int k = 0; k < kNumActionTypes; ++k) cfg.learnable[k] = l[k];
    }
    if (root.contains("boxes")) {
      const auto& b = root["boxes"];
      if (b.size() != static_cast<size_t>(kNumActionTypes)) {
        throw ParameterError("boxes needs three [lo, hi] pairs");
      }
      for (int k = 0; k < kNumActionTypes; ++k) {
        cfg.boxes[k] = {b[k].at(0).get<double>(), b[k].at(1).get<double>()};
      }
    }
    if (root.contains("tuner")) {
      cfg.budget = root["tuner"].value("budget", cfg.budget);
      cfg.tuner_seed = root["tuner"].value("seed", cfg.tuner_seed);
    }
    if (root.contains("analysis")) {
      const auto& j = root["analysis"];
      cfg.grid0 = j.value("grid0", cfg.grid0);
      cfg.bisect_tol = j.value("bisect_tol", cfg.bisect_tol);
      cfg.delta = j.value("delta", cfg.delta);
    }
    if (root.contains("verify")) {
      const auto& j = root["verify"];
      auto& v = cfg.verify;
      v.oracle_instances = j.value("oracle_instances", v.oracle_instances);
      v.slice_instances = j.value("slice_instances", v.slice_instances);
      v.slices_per_instance = j.value("slices_per_instance", v.slices_per_instance);
      v.census_instances = j.value("census_instances", v.census_instances);
      v.census_samples = j.value("census_samples", v.census_samples);
      v.degree_fixtures = j.value("degree_fixtures", v.degree_fixtures);
      v.aux_draws = j.value("aux_draws", v.aux_draws);
      v.plant_cut_fault = j.value("plant_cut_fault", v.plant_cut_fault);
    }
    cfg.output_dir = root.value("output_dir", cfg.output_dir);
    cfg.threads = root.value("threads", cfg.threads);
    ValidateConfig(cfg);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config JSON: ") + e.what());
  }
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  // Output location and thread count do not change any result.
  ExperimentConfig canon = cfg;
  canon.output_dir.clear();
  canon.threads = 1;
  return HexDigest(Hasher().Add(SerializeConfig(canon)).digest());
}

InstanceSplit MakeInstances(const ExperimentConfig& cfg) {
  InstanceSplit split;
  GeneratorSpec g = cfg.generator;
  for (int i = 0; i < cfg.n_train; ++i) {
    g.seed = DeriveSeed(cfg.generator.seed, static_cast<uint64_t>(i));
    split.train.push_back(GenerateInstance(g));
  }
  for (int i = 0; i < cfg.n_test; ++i) {
    g.seed = DeriveSeed(cfg.generator.seed, kTestStream + static_cast<uint64_t>(i));
    split.test.push_back(GenerateInstance(g));
  }
  return split;
}

PolicyTemplate TemplateFor(const ExperimentConfig& cfg) {
  PolicyTemplate t;
  t.base = cfg.bundle;
  t.learnable = cfg.learnable;
  return t;
}

PenaltySpec PenaltiesFor(const ExperimentConfig& cfg) {
  PenaltySpec p;
  p.constant = cfg.penalties;
  return p;
}

std::vector<double> DrawParameters(const ExperimentConfig& cfg, int j) {
  const ParameterSampler s = SamplerFor(cfg, cfg.tuner_seed, cfg.budget);
  return s.Draw(j, static_cast<int>(s.boxes.size()));
}

BoundInputs BoundInputsFor(const ExperimentConfig& cfg, const std::vector<MipInstance>& insts,
                           int n) {
  BoundInputs in;
  in.M = cfg.bnc.max_rounds;
  in.H = BncPenaltyBound(cfg.bnc, PenaltiesFor(cfg));
  in.N = std::max(n, 1);
  in.delta = cfg.delta;
  std::array<double, kNumActionTypes> rho{2.0, 2.0, 2.0};
  for (const auto& inst : insts) {
    const auto r = BncRho(cfg.bnc, inst);
    for (int k = 0; k < kNumActionTypes; ++k) rho[k] = std::max(rho[k], r[k]);
  }
  for (int k = 0; k < kNumActionTypes; ++k) {
    TypeInputs t;
    t.rho = rho[k];
    const Scorer& s = cfg.bundle.policies[k].scorer;
    if (cfg.learnable[k] && s.kind == ScorerKind::kLinear) {
      t.linear = true;
      t.W = s.ParameterCount();
    } else if (cfg.learnable[k] && s.kind == ScorerKind::kMlp) {
      t.mlp =
          MlpDims{s.mlp.L(), s.mlp.W(), s.mlp.U(), s.mlp.activation.p(), s.mlp.activation.alpha()};
    } else {
      t.structure = {0.0, 0.0, 1.0};
      t.W = 0;
    }
    in.types.push_back(t);
  }
  return Normalize(in);
}

// ---- Tuning and gaps -------------------------------------------------------

ErmResult ErmTune(const ExperimentConfig& cfg) {
  ValidateConfig(cfg);
  InstanceSplit split = MakeInstances(cfg);
  CostOracle oracle(std::move(split.train), TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  const ParameterSampler sampler = SamplerFor(cfg, cfg.tuner_seed, cfg.budget);
  const int dim = oracle.dim();

  ErmResult out;
  out.samples.resize(static_cast<size_t>(cfg.budget));
  std::vector<std::string> errors(static_cast<size_t>(cfg.budget));
  std::vector<uint64_t> aborted(static_cast<size_t>(cfg.budget), 0);
  ParallelFor(static_cast<size_t>(cfg.budget), cfg.threads, [&](size_t j) {
    ParamSample& s = out.samples[j];
    s.w = sampler.Draw(static_cast<int>(j), dim);
    double total = 0.0;
    for (size_t i = 0; i < oracle.size(); ++i) {
      try {
        total += oracle.Cost(i, s.w);
      } catch (const Error& e) {
        s.valid = false;
        ++aborted[j];
        if (errors[j].empty()) errors[j] = e.what();
      }
    }
    s.train_mean = s.valid ? total / static_cast<double>(oracle.size()) : NAN;
  });
  bool any = false;
  for (size_t j = 0; j < out.samples.size(); ++j) {
    out.aborted_runs += aborted[j];
    const ParamSample& s = out.samples[j];
    if (!s.valid) continue;
    if (!any || s.train_mean < out.samples[out.best].train_mean) out.best = j;
    any = true;
  }
  if (!any) {
    throw Error("every tuning sample had an aborted run; first failure: " + errors.front());
  }
  out.best_w = out.samples[out.best].w;
  out.train_cost = out.samples[out.best].train_mean;
  return out;
}

GapResult MeasureGap(const ExperimentConfig& cfg, const std::vector<MipInstance>& train,
                     const std::vector<MipInstance>& test,
                     const std::vector<std::vector<double>>& w_set) {
  if (train.empty() || test.empty()) throw ParameterError("gap needs train and test instances");
  CostOracle tr(train, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));
  CostOracle te(test, TemplateFor(cfg), cfg.bnc, PenaltiesFor(cfg));

  GapResult out;
  out.entries.resize(w_set.size());
  std::vector<std::vector<std::vector<std::vector<uint64_t>>>> keys(w_set.size());
  ParallelFor(w_set.size(), cfg.threads, [&](size_t j) {
    GapEntry& e = out.entries[j];
    e.w = w_set[j];
    keys[j].resize(train.size());
    double s = 0.0;
    for (size_t i = 0; i < train.size(); ++i) {
      const BncResult r = tr.Run(i, e.w);
      s += r.v;
      keys[j][i] = StateActionKeys(r.trace, kNumActionTypes);
    }
    e.train_mean = s / static_cast<double>(train.size());
    s = 0.0;
    for (size_t i = 0; i < test.size(); ++i) s += te.Cost(i, e.w);
    e.test_mean = s / static_cast<double>(test.size());
    e.gap = std::abs(e.train_mean - e.test_mean);
  });
  for (const auto& e : out.entries) out.sup_gap = std::max(out.sup_gap, e.gap);

  out.train_q_sums.assign(kNumActionTypes, 0.0);
  for (size_t i = 0; i < train.size(); ++i) {
    for (int k = 0; k < kNumActionTypes; ++k) {
      std::unordered_set<uint64_t> all;
      for (const auto& kj : keys) all.insert(kj[i][k].begin(), kj[i][k].end());
      out.train_q_sums[k] += static_cast<double>(all.size());
    }
  }

  BoundInputs in = BoundInputsFor(cfg, train, static_cast<int>(train.size()));
  out.pdim = PdimUpperBound(CostStructure(in), in.W());
  out.uc_pdim_bound = UniformConvergencePdim(in.H, out.pdim, in.N, in.delta);
  for (int k = 0; k < kNumActionTypes; ++k) in.types[k].q_sum = std::max(out.train_q_sums[k], 1.0);
  try {
    out.rademacher = RademacherBoundEmpirical(in);
    out.uc_rademacher_bound = UniformConvergenceRademacher(in.H, out.rademacher, in.N, in.delta);
  } catch (const ParameterError&) {
    out.rademacher = NAN;
    out.uc_rademacher_bound = NAN;
  }
  return out;
}

GapResult MeasureGap(const ExperimentConfig& cfg, const std::vector<std::vector<double>>& w_set) {
  ValidateConfig(cfg);
  const InstanceSplit split = MakeInstances(cfg);
  return MeasureGap(cfg, split.train, split.test, w_set);
}

// ---- Verification ----------------------------------------------------------

bool VerificationReport::ok() const {
  for (const auto& s : suites) {
    if (!s.passed) return false;
  }
  return true;
}

namespace {

SuiteResult Suite(std::string name) {
  SuiteResult s;
  s.name = std::move(name);
  return s;
}

void Fail(SuiteResult* s, std::string msg) {
  s->passed = false;
  s->failures.push_back(std::move(msg));
}

struct QTally {
  uint64_t runs = 0;
  uint64_t violations = 0;
  void Add(const QAudit& a) {
    runs += a.runs;
    violations += a.violations;
  }
};

std::vector<double> RandomVector(Rng& rng, size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.Uniform(lo, hi);
  return v;
}

SuiteResult BoundMonotonicity(uint64_t seed) {
  SuiteResult s = Suite("bound-monotonicity");
  Rng rng(seed);
  for (int it = 0; it < 100; ++it) {
    StructureTriple t{rng.Uniform(0.0, 50.0), static_cast<double>(rng.UniformInt(0, 40)),
                      static_cast<double>(rng.UniformInt(0, 6))};
    const int W = static_cast<int>(rng.UniformInt(0, 60));
    const double base = PdimUpperBound(t, W);
    StructureTriple a = t, b = t, c = t;
    a.log_gamma += rng.Uniform(0.0, 5.0);
    b.gamma += 1.0;
    c.beta += 1.0;
    const bool mono = PdimUpperBound(a, W) >= base && PdimUpperBound(b, W) >= base &&
                      PdimUpperBound(c, W) >= base && PdimUpperBound(t, W + 1) >= base;
    ++s.checks;
    if (!mono) Fail(&s, "pdim_upper_bound decreased at draw " + std::to_string(it));

    BoundInputs in;
    in.M = static_cast<int>(rng.UniformInt(1, 20));
    in.N = 1000;
    for (int k = 0; k < 3; ++k) {
      TypeInputs ti;
      ti.rho = static_cast<double>(rng.UniformInt(2, 30));
      ti.W = static_cast<int>(rng.UniformInt(1, 20));
      ti.structure = {rng.Uniform(0.0, 10.0), static_cast<double>(rng.UniformInt(0, 10)),
                      static_cast<double>(rng.UniformInt(1, 4))};
      ti.q_sum = rng.Uniform(1.0, 1e4);
      in.types.push_back(ti);
    }
    const double r0 = RBound(in).log;
    BoundInputs up = in;
    const int k = static_cast<int>(rng.UniformInt(0, 2));
    *up.types[k].q_sum *= rng.Uniform(1.0, 3.0);
    ++s.checks;
    if (!(RBound(up).log >= r0)) Fail(&s, "r_bound decreased in Q at draw " + std::to_string(it));

    const double H = rng.Uniform(1.0, 100.0);
    const double pdim = rng.Uniform(0.0, 500.0);
    const double rad = rng.Uniform(0.0, 10.0);
    const int N = static_cast<int>(rng.UniformInt(1, 10000));
    const double d1 = rng.Uniform(0.01, 0.5);
    const double d2 = d1 * rng.Uniform(0.1, 0.99);
    ++s.checks;
    if (!(UniformConvergencePdim(H, pdim, N, d2) >= UniformConvergencePdim(H, pdim, N, d1)) ||
        !(UniformConvergenceRademacher(H, rad, N, d2) >=
          UniformConvergenceRademacher(H, rad, N, d1))) {
      Fail(&s, "uniform convergence bound not monotone in delta at draw " + std::to_string(it));
    }
    ++s.checks;
    const double q1 = UniformConvergencePdim(H, pdim, N, d1);
    const double q4 = UniformConvergencePdim(H, pdim, 4 * N, d1);
    if (std::abs(q1 - 2.0 * q4) > 1e-12 * q1) {
      Fail(&s, "pdim uniform-convergence bound does not halve under N -> 4N at draw " +
                   std::to_string(it));
    }
  }
  return s;
}

}  // namespace

VerificationReport RunVerification(const ExperimentConfig& cfg) {
  ValidateConfig(cfg);
  const InstanceSplit split = MakeInstances(cfg);
  const PolicyTemplate tmpl = TemplateFor(cfg);
  const PenaltySpec pen = PenaltiesFor(cfg);
  const std::vector<double> w_first = DrawParameters(cfg, 0);
  const PolicyBundle bundle = tmpl.Instantiate(w_first);
  VerificationReport report;
  QTally q;

  // Oracle equivalence and the cuts it produced.
  SuiteResult oracle = Suite("oracle-equivalence");
  SuiteResult cuts = Suite("cut-validity");
  std::vector<const MipInstance*> pool;
  for (const auto& inst : split.train) pool.push_back(&inst);
  for (const auto& inst : split.test) pool.push_back(&inst);
  pool.resize(std::min<size_t>(pool.size(), static_cast<size_t>(cfg.verify.oracle_instances)));
  for (const MipInstance* inst : pool) {
    const BncResult r = SolveBnc(*inst, bundle, cfg.bnc, pen);
    ++q.runs;
    q.violations += r.trace.q_violations.size();
    if (r.status == BncResult::Status::kLimit) {
      oracle.notes.push_back(inst->name + ": hit the round limit, skipped");
      continue;
    }
    IntegerOptimum truth;
    try {
      truth = EnumerateIntegerOptimum(*inst);
    } catch (const RefusedError& e) {
      oracle.notes.push_back(inst->name + ": enumeration refused (" + e.what() + ")");
      continue;
    }
    ++oracle.checks;
    const bool infeasible = truth.status == IntegerOptimum::Status::kInfeasible;
    if (infeasible != (r.status == BncResult::Status::kInfeasible)) {
      Fail(&oracle, inst->name + ": feasibility status disagrees with enumeration");
    } else if (!infeasible && std::abs(r.ub - truth.value) > 1e-6) {
      Fail(&oracle, inst->name + ": value " + Fmt(r.ub) + " vs enumeration " + Fmt(truth.value));
    }
    for (Cut c : r.cuts) {
      if (cfg.verify.plant_cut_fault) c.beta -= 1.0;
      ++cuts.checks;
      if (!CheckCutValidity(c, *inst)) {
        Fail(&cuts, inst->name + ": cut " + std::to_string(c.id) + " cuts off a feasible point");
      }
    }
  }
  report.suites.push_back(std::move(oracle));
  report.suites.push_back(std::move(cuts));

  // Slice scans on single instances, each re-run at doubled resolution.
  SuiteResult slice = Suite("slice");
  {
    const size_t n = std::min<size_t>(split.train.size(), cfg.verify.slice_instances);
    std::vector<MipInstance> insts(split.train.begin(), split.train.begin() + n);
    CostOracle so(insts, tmpl, cfg.bnc, pen);
    const ParameterSampler box = SamplerFor(cfg, DeriveSeed(cfg.tuner_seed, 0x51ce), 1);
    for (size_t i = 0; i < n && so.dim() > 0; ++i) {
      for (int s = 0; s < cfg.verify.slices_per_instance; ++s) {
        const int idx = static_cast<int>(i) * 1000 + s;
        const std::vector<double> w0 = box.Draw(idx, so.dim());
        Rng rng(DeriveSeed(cfg.tuner_seed, 0xd1 + static_cast<uint64_t>(idx)));
        const std::vector<double> u = RandomVector(rng, w0.size(), -1.0, 1.0);
        ScanOptions opts;
        opts.grid0 = cfg.grid0;
        opts.bisect_tol = cfg.bisect_tol;
        opts.seed = DeriveSeed(cfg.tuner_seed, static_cast<uint64_t>(idx));
        opts.threads = cfg.threads;
        auto cost = [&so, i](std::span<const double> w) { return so.Sample(i, w); };
        SliceScan a = ScanSlice(cost, w0, u, -1.0, 1.0, opts);
        opts.grid0 = 2 * cfg.grid0;
        const SliceScan b = ScanSlice(cost, w0, u, -1.0, 1.0, opts);
        ++slice.checks;
        const std::string tag = "instance " + std::to_string(i) + " slice " + std::to_string(s);
        for (const auto& v : a.violations) Fail(&slice, tag + ": " + v);
        for (const auto& v : b.violations) Fail(&slice, tag + " (doubled grid): " + v);
        if (!SameStructure(a, b, cfg.bisect_tol)) {
          Fail(&slice, tag + ": doubling the grid changed the pieces");
        }
        slice.notes.push_back(tag + ": " + std::to_string(a.breakpoints.size()) + " breakpoints");
        report.scans.push_back(std::move(a));
      }
    }
    q.Add(so.audit());
    if (so.dim() == 0) slice.notes.push_back("no learnable parameters, nothing to scan");
  }
  report.suites.push_back(std::move(slice));

  // Census, Rademacher chain and shattering on a few training instances.
  SuiteResult census_suite = Suite("census");
  SuiteResult qsuite = Suite("Q-assertion");
  {
    const size_t n = std::min<size_t>(split.train.size(), cfg.verify.census_instances);
    std::vector<MipInstance> insts(split.train.begin(), split.train.begin() + n);
    if (n > 0) {
      CostOracle co(insts, tmpl, cfg.bnc, pen);
      const ParameterSampler sampler =
          SamplerFor(cfg, DeriveSeed(cfg.tuner_seed, 0xce), cfg.verify.census_samples);
      OutputCensus census = CensusOutputVectors(co, sampler, cfg.threads);
      q.Add(co.audit());
      BoundInputs in = BoundInputsFor(cfg, insts, static_cast<int>(n));
      for (int k = 0; k < kNumActionTypes; ++k) in.types[k].q_sum = std::max(census.q_sums[k], 1.0);
      ++census_suite.checks;
      try {
        const double log_r = RBound(in).log;
        if (!(std::log(static_cast<double>(census.count)) <= log_r + 1e-9)) {
          Fail(&census_suite, "distinct outputs " + std::to_string(census.count) + " exceed exp(" +
                                  Fmt(log_r) + ")");
        }
        census_suite.notes.push_back("distinct " + std::to_string(census.count) + ", ln r_bound " +
                                     Fmt(log_r));
      } catch (const ParameterError& e) {
        census_suite.notes.push_back(std::string("r_bound not applicable: ") + e.what());
      }
      if (n <= 12) {
        ++census_suite.checks;
        const MassartResult m = MassartEstimate(census.distinct);
        if (!(m.estimate <= m.bound + 1e-9))
          Fail(&census_suite, "Massart estimate exceeds its bound");
        try {
          const double rad = RademacherBoundEmpirical(in);
          if (!(m.bound <= rad + 1e-9)) {
            Fail(&census_suite,
                 "Massart bound " + Fmt(m.bound) + " exceeds Rademacher bound " + Fmt(rad));
          }
        } catch (const ParameterError& e) {
          census_suite.notes.push_back(std::string("Rademacher bound not applicable: ") + e.what());
        }
      }
      ++census_suite.checks;
      const ShatterResult sh = ShatterSearch(census.outputs, std::nullopt,
                                             std::min<int>(static_cast<int>(n), kMaxShatterSubset));
      const double pdim = PdimUpperBound(CostStructure(in), in.W());
      if (!(static_cast<double>(sh.size()) <= pdim)) {
        Fail(&census_suite, "shattered subset exceeds the pseudo-dimension bound");
      }
      census_suite.notes.push_back("shattered " + std::to_string(sh.size()) + " of " +
                                   std::to_string(n));
      std::vector<double> rho;
      for (const auto& t : in.types) rho.push_back(t.rho);
      for (int k = 0; k < kNumActionTypes; ++k) {
        ++qsuite.checks;
        const QBound qb = QWorstCase(rho, in.M, k);
        if (!(std::log(static_cast<double>(std::max<uint64_t>(census.q_max[k], 1))) <=
              qb.log_value.log + 1e-12)) {
          Fail(&qsuite, "observed Q exceeds the worst case for type " + std::to_string(k + 1));
        }
      }
      report.census = std::move(census);
    }
  }
  report.suites.push_back(std::move(census_suite));

  // Degree probe on seeded ReLU networks.
  SuiteResult degree = Suite("degree-probe");
  for (int j = 0; j < cfg.verify.degree_fixtures; ++j) {
    Rng rng(DeriveSeed(cfg.tuner_seed, 0xde9000 + static_cast<uint64_t>(j)));
    MlpSpec spec;
    spec.hidden.assign(static_cast<size_t>(1 + j % 3), 3);
    const int W = spec.W();
    const std::vector<double> input = RandomVector(rng, 4, -1.0, 1.0);
    const std::vector<double> w0 = RandomVector(rng, W, -1.0, 1.0);
    const std::vector<double> u = RandomVector(rng, W, -1.0, 1.0);
    const DegreeReport d = DegreeProbe(spec, input, w0, u, -1.0, 1.0, spec.L() + 5);
    ++degree.checks;
    if (!d.all_certified()) {
      Fail(&degree, "fixture " + std::to_string(j) + " (L=" + std::to_string(spec.L()) +
                        "): measured degree " + std::to_string(d.max_measured_degree) +
                        " exceeds beta " + std::to_string(d.beta));
    }
  }
  report.suites.push_back(std::move(degree));

  // Gap dominance over the tuning samples.
  SuiteResult gap_suite = Suite("gap-dominance");
  if (!split.test.empty()) {
    std::vector<std::vector<double>> w_set;
    for (int j = 0; j < cfg.budget; ++j) w_set.push_back(DrawParameters(cfg, j));
    const GapResult g = MeasureGap(cfg, split.train, split.test, w_set);
    ++gap_suite.checks;
    if (!(g.sup_gap <= g.uc_pdim_bound)) {
      Fail(&gap_suite, "sup-gap exceeds the pdim uniform-convergence bound");
    }
    if (std::isfinite(g.uc_rademacher_bound)) {
      ++gap_suite.checks;
      if (!(g.sup_gap <= g.uc_rademacher_bound)) {
        Fail(&gap_suite, "sup-gap exceeds the Rademacher uniform-convergence bound");
      }
    } else {
      gap_suite.notes.push_back("Rademacher bound not applicable at this N");
    }
    gap_suite.notes.push_back("sup-gap " + Fmt(g.sup_gap));
  } else {
    gap_suite.notes.push_back("no test instances");
  }
  report.suites.push_back(std::move(gap_suite));

  ++qsuite.checks;
  if (q.violations != 0) {
    Fail(&qsuite, std::to_string(q.violations) + " live Q assertion failures over " +
                      std::to_string(q.runs) + " runs");
  }
  qsuite.notes.push_back(std::to_string(q.runs) + " audited runs");
  report.suites.push_back(std::move(qsuite));

  report.suites.push_back(BoundMonotonicity(DeriveSeed(cfg.tuner_seed, 0xb0)));

  SuiteResult aux = Suite("aux-inequality");
  {
    const AuxReport a = AuxInequalityFuzz(DeriveSeed(cfg.tuner_seed, 0xa0), cfg.verify.aux_draws);
    aux.checks = a.draws;
    for (const auto& v : a.violations) {
      Fail(&aux,
           "inequality " + std::to_string(v.inequality) + ": " + Fmt(v.lhs) + " > " + Fmt(v.rhs));
    }
  }
  report.suites.push_back(std::move(aux));
  return report;
}

// ---- Reports ---------------------------------------------------------------

Report RunLab(const ExperimentConfig& cfg, bool with_verification) {
  ValidateConfig(cfg);
  Report r;
  r.cfg = cfg;
  r.config_hash = ConfigHash(cfg);
  r.erm = ErmTune(cfg);
  const InstanceSplit split = MakeInstances(cfg);
  std::vector<std::vector<double>> w_set;
  for (const auto& s : r.erm->samples) w_set.push_back(s.w);
  BoundInputs in = BoundInputsFor(cfg, split.train, cfg.n_train);
  if (!split.test.empty()) {
    r.gap = MeasureGap(cfg, split.train, split.test, w_set);
    for (int k = 0; k < kNumActionTypes; ++k) {
      const double qs = std::max(r.gap->train_q_sums[k], 1.0);
      in.types[k].q_sum = qs;
      in.types[k].mu = qs / cfg.n_train;
    }
  }
  r.bounds = ComputeBoundTable(in);
  if (with_verification) r.verification = RunVerification(cfg);
  return r;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw Error("failed writing " + path.string());
}

std::string Header(std::string_view schema, const Report& r) {
  return "# schema " + std::string(schema) + " config " + r.config_hash + " " + kVersion + "\n";
}

std::string JoinW(const std::vector<double>& w) {
  std::string out;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) out += ";";
    out += Fmt(w[i]);
  }
  return out;
}

}  // namespace

std::vector<std::string> EmitReport(const Report& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    const fs::path p = fs::path(dir) / name;
    WriteFile(p, text);
    written.push_back(p.string());
  };

  std::string costs = Header("bnclab.costs/1", r) + "sample,train_mean,test_mean,gap,w\n";
  if (r.gap) {
    for (size_t j = 0; j < r.gap->entries.size(); ++j) {
      const auto& e = r.gap->entries[j];
      costs += std::to_string(j) + "," + Fmt(e.train_mean) + "," + Fmt(e.test_mean) + "," +
               Fmt(e.gap) + "," + JoinW(e.w) + "\n";
    }
  } else if (r.erm) {
    for (size_t j = 0; j < r.erm->samples.size(); ++j) {
      const auto& s = r.erm->samples[j];
      costs += std::to_string(j) + "," + Fmt(s.train_mean) + ",,," + JoinW(s.w) + "\n";
    }
  }
  emit("costs.csv", costs);

  std::string scan = Header("bnclab.scan/1", r) + "slice,t,v\n";
  std::string census = Header("bnclab.census/1", r);
  if (r.verification) {
    for (size_t s = 0; s < r.verification->scans.size(); ++s) {
      for (const auto& p : r.verification->scans[s].points) {
        scan += std::to_string(s) + "," + Fmt(p.t) + "," + Fmt(p.v) + "\n";
      }
    }
    if (r.verification->census) {
      const std::string body = CensusCsv(*r.verification->census);
      census += body.substr(body.find('\n') + 1);
    }
  }
  if (census.back() == '\n' && census.find("sample") == std::string::npos) census += "sample\n";
  emit("scan.csv", scan);
  emit("census.csv", census);

  emit("bounds.txt", Header("bnclab.bounds-report/1", r) +
                         "# uniform convergence rows hold up to the suppressed constant\n" +
                         BoundTableText(r.bounds));

  Json j;
  j["schema"] = "bnclab.summary/1";
  j["version"] = kVersion;
  j["config_hash"] = r.config_hash;
  j["config"] = Json::parse(SerializeConfig(r.cfg));
  // Execution settings do not change results; keep the report independent of them.
  j["config"].erase("output_dir");
  j["config"].erase("threads");
  j["seeds"] = Json{{"instances", r.cfg.generator.seed}, {"tuner", r.cfg.tuner_seed}};
  if (r.erm) {
    j["erm"] = Json{{"best_index", r.erm->best},
                    {"best_w", r.erm->best_w},
                    {"train_cost", r.erm->train_cost},
                    {"aborted_runs", r.erm->aborted_runs}};
  }
  if (r.gap) {
    j["gap"] = Json{{"sup_gap", r.gap->sup_gap},
                    {"test_mean_is", "held-out estimate of the expected cost"},
                    {"pdim_upper_bound", FiniteOrNull(r.gap->pdim)},
                    {"uniform_convergence_pdim", FiniteOrNull(r.gap->uc_pdim_bound)},
                    {"rademacher_bound_empirical", FiniteOrNull(r.gap->rademacher)},
                    {"uniform_convergence_rademacher", FiniteOrNull(r.gap->uc_rademacher_bound)},
                    {"constants", "up to the suppressed constant"},
                    {"train_q_sums", r.gap->train_q_sums}};
  }
  Json bounds = Json::array();
  for (const auto& b : r.bounds) {
    bounds.push_back(Json{{"name", b.name},
                          {"value", FiniteOrNull(b.value)},
                          {"ln_value", FiniteOrNull(b.log_value.log)},
                          {"note", b.note}});
  }
  j["bounds"] = bounds;
  if (r.verification) {
    Json suites = Json::array();
    for (const auto& s : r.verification->suites) {
      suites.push_back(Json{{"suite", s.name},
                            {"passed", s.passed},
                            {"checks", s.checks},
                            {"failures", s.failures},
                            {"notes", s.notes}});
    }
    j["verification"] = Json{{"passed", r.verification->ok()}, {"suites", suites}};
  }
  emit("summary.json", j.dump(2) + "\n");
  return written;
}

}  // namespace bnclab
