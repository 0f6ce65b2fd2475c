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

#include "bnclab/bounds.h"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "bnclab/errors.h"
#include "bnclab/simd/kernels.h"
#include "bnclab/util.h"
#include "json.hpp"

namespace bnclab {
namespace {

constexpr double kE = std::numbers::e;
constexpr double kLn2 = std::numbers::ln2;

double SumLogRho(const BoundInputs& in) {
  double s = 0.0;
  for (const auto& t : in.types) s += std::log(t.rho);
  return s;
}

double SumLogGamma(const BoundInputs& in) {
  double s = 0.0;
  for (const auto& t : in.types) s += t.structure.log_gamma;
  return s;
}

double GammaTilde(const BoundInputs& in) {
  double s = 0.0;
  for (const auto& t : in.types) s += t.structure.gamma;
  return s;
}

void RequireTypes(const BoundInputs& in) {
  if (in.types.empty()) throw ParameterError("bound inputs need at least one action type");
}

}  // namespace

std::optional<double> LogMagnitude::Materialize() const {
  if (std::isnan(log)) return std::nullopt;
  if (log == -INFINITY) return 0.0;
  if (log >= std::log(DBL_MAX)) return std::nullopt;
  return std::exp(log);
}

LogMagnitude LogMagnitude::FromValue(double v) {
  if (v < 0.0) throw ParameterError("log magnitude of a negative value");
  return {std::log(v)};
}

void ValidateTriple(const StructureTriple& t) {
  if (!(t.log_gamma >= 0.0)) throw ParameterError("structure needs Gamma >= 1");
  if (!(t.gamma >= 0.0) || !(t.beta >= 0.0)) {
    throw ParameterError("structure needs gamma, beta >= 0");
  }
}

int BoundInputs::W() const {
  int w = 0;
  for (const auto& t : types) w += t.W;
  return w;
}

BoundInputs Normalize(BoundInputs in) {
  RequireTypes(in);
  if (in.M < 1) throw ParameterError("M must be >= 1");
  if (in.N < 1) throw ParameterError("N must be >= 1");
  if (!(in.H > 0.0)) throw ParameterError("H must be positive");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  for (auto& t : in.types) {
    if (t.mlp) {
      t.structure = MlpStructure(*t.mlp);
      t.W = t.mlp->W;
    } else if (t.linear) {
      t.structure = {0.0, 0.0, 1.0};
    }
    if (t.W < 0) throw ParameterError("W_k must be >= 0");
    if (!(t.rho > 0.0)) throw ParameterError("rho_k must be positive");
    ValidateTriple(t.structure);
  }
  return in;
}

double PdimUpperBound(const StructureTriple& t, int W) {
  ValidateTriple(t);
  if (W < 0) throw ParameterError("W must be >= 0");
  return 4.0 * (t.gamma * std::log(2.0 * t.gamma + 1.0) + W * std::log(4.0 * kE * t.beta + 1.0) +
                kLn2 + t.log_gamma);
}

StructureTriple CostStructure(const BoundInputs& in) {
  RequireTypes(in);
  const int W = in.W();
  if (W < 1) throw ParameterError("cost structure needs W >= 1");
  double weighted = 0.0;
  for (const auto& t : in.types) {
    ValidateTriple(t.structure);
    if (t.structure.beta < 1.0) {
      throw ParameterError("cost structure assumes every beta_k >= 1 (positive integer degree)");
    }
    weighted += t.rho * t.rho * t.structure.beta;
  }
  const double gt = GammaTilde(in);
  StructureTriple out;
  out.gamma = gt + W;
  out.beta = 0.0;
  out.log_gamma = in.d() * kLn2 + (gt + W) * (in.M + 1) * SumLogRho(in) + SumLogGamma(in) +
                  W * std::log(kE * weighted / W);
  return out;
}

double LinearPdimBound(const BoundInputs& in) {
  RequireTypes(in);
  for (const auto& t : in.types) {
    const auto& s = t.structure;
    if (!t.linear && !(s.log_gamma == 0.0 && s.gamma == 0.0 && s.beta == 1.0)) {
      throw ParameterError("linear bound needs (1, 0, 1) structures on every type");
    }
  }
  const double W = in.W();
  const double slr = SumLogRho(in);
  return 4.0 *
         (W * std::log(3.0 * kE) + 2.0 * W * slr + (in.d() + 1) * kLn2 + W * (in.M + 1) * slr);
}

StructureTriple MlpStructure(const MlpDims& m) {
  if (m.L < 1 || m.W < 1 || m.U < 1 || m.p < 1) {
    throw ParameterError("MLP structure needs L, W, U, p >= 1");
  }
  if (m.alpha < 0) throw ParameterError("MLP structure needs alpha >= 0");
  const double L = m.L;
  const double W = m.W;
  StructureTriple t;
  t.log_gamma = L * kLn2 + L * L * W * std::log(std::max(m.alpha, 1)) +
                L * W * std::log(2.0 * kE * m.p * m.U / W);
  t.log_gamma = std::max(t.log_gamma, 0.0);
  t.gamma = L * W;
  t.beta = L * std::pow(static_cast<double>(m.alpha), L);
  return t;
}

double MlpPdimBound(const BoundInputs& raw) {
  BoundInputs in = raw;
  for (auto& t : in.types) {
    if (!t.mlp) throw ParameterError("MLP bound needs an MLP spec on every type");
    t.structure = MlpStructure(*t.mlp);
    t.W = t.mlp->W;
  }
  return PdimUpperBound(CostStructure(in), in.W());
}

QBound QWorstCase(std::span<const double> rho, int M, int k) {
  if (M < 1) throw ParameterError("M must be >= 1");
  if (k < 0 || k >= static_cast<int>(rho.size())) throw ParameterError("action type out of range");
  for (double r : rho) {
    if (!(r >= 2.0)) throw ParameterError("worst-case Q assumes rho_j >= 2 for all j");
  }
  double bar = 1.0;
  for (double r : rho) bar *= r;
  double value = rho[k];
  for (int i = 0; i < M; ++i) value *= bar;
  double log_bar = 0.0;
  for (double r : rho) log_bar += std::log(r);
  return {{std::log(rho[k]) + M * log_bar}, value};
}

LogMagnitude RBound(const BoundInputs& in) {
  RequireTypes(in);
  const int W = in.W();
  if (W < 1) throw ParameterError("r bound needs W >= 1");
  double need = 0.0;
  for (const auto& t : in.types) need += t.structure.gamma + t.W;
  if (in.N < need) throw ParameterError("r bound needs N >= sum(gamma_k + W_k)");
  double log_r = in.d() * kLn2 + SumLogGamma(in);
  double weighted = 0.0;
  for (const auto& t : in.types) {
    if (!t.q_sum || *t.q_sum < 1.0) throw ParameterError("r bound needs Q sums >= 1");
    log_r += t.structure.gamma * std::log(*t.q_sum);
    weighted += *t.q_sum * t.rho * t.structure.beta;
  }
  if (!(weighted > 0.0)) throw ParameterError("r bound needs some beta_k > 0");
  log_r += W * std::log(kE * weighted / W);
  return {log_r};
}

MassartResult MassartEstimate(const std::vector<std::vector<double>>& vectors, MassartMode mode) {
  if (vectors.empty()) throw ParameterError("Massart estimate needs at least one vector");
  const size_t n = vectors.front().size();
  if (n == 0) throw ParameterError("Massart vectors must be nonempty");
  for (const auto& v : vectors) {
    if (v.size() != n) throw ParameterError("Massart vectors differ in length");
  }
  std::set<std::vector<double>> unique(vectors.begin(), vectors.end());
  std::vector<std::vector<double>> set(unique.begin(), unique.end());

  MassartResult out;
  out.distinct = set.size();
  const double N = static_cast<double>(n);
  std::vector<double> sigma(n);
  auto sup = [&]() {
    double best = -INFINITY;
    for (const auto& v : set) best = std::max(best, simd::Dot(sigma, v));
    return best / N;
  };
  if (mode.exact) {
    if (n > static_cast<size_t>(kMaxExactMassartN)) {
      throw RefusedError("exact Massart enumeration refused for N > 20");
    }
    const uint64_t total = uint64_t{1} << n;
    double acc = 0.0;
    for (uint64_t mask = 0; mask < total; ++mask) {
      for (size_t i = 0; i < n; ++i) sigma[i] = (mask >> i) & 1 ? 1.0 : -1.0;
      acc += sup();
    }
    out.estimate = acc / static_cast<double>(total);
  } else {
    if (mode.draws < 1) throw ParameterError("Monte Carlo Massart needs draws >= 1");
    Rng rng(mode.seed);
    double acc = 0.0;
    for (int d = 0; d < mode.draws; ++d) {
      for (size_t i = 0; i < n; ++i) sigma[i] = rng.Next() >> 63 ? 1.0 : -1.0;
      acc += sup();
    }
    out.estimate = acc / mode.draws;
  }

  std::vector<double> mean(n, 0.0);
  for (const auto& v : set) {
    for (size_t i = 0; i < n; ++i) mean[i] += v[i];
  }
  for (double& m : mean) m /= static_cast<double>(set.size());
  double radius = 0.0;
  for (const auto& v : set) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += (v[i] - mean[i]) * (v[i] - mean[i]);
    radius = std::max(radius, std::sqrt(s));
  }
  out.bound = radius * std::sqrt(2.0 * std::log(static_cast<double>(set.size()))) / N;
  return out;
}

double RademacherBoundEmpirical(const BoundInputs& in) {
  RequireTypes(in);
  const int W = in.W();
  if (W < 1) throw ParameterError("Rademacher bound needs W >= 1");
  const double gt = GammaTilde(in);
  if (in.N < gt + W) throw ParameterError("Rademacher bound needs N >= gamma~ + W");
  double q = 0.0;
  double weighted = 0.0;
  for (const auto& t : in.types) {
    if (!t.q_sum) throw ParameterError("Rademacher bound needs observed Q sums");
    q += *t.q_sum;
    weighted += t.rho * t.structure.beta;
  }
  if (!(q >= 1.0)) throw ParameterError("Rademacher bound needs a positive Q sum");
  if (!(weighted > 0.0)) throw ParameterError("Rademacher bound needs some beta_k > 0");
  const double inner =
      in.d() + SumLogGamma(in) + (gt + W) * std::log(q) + W * std::log(kE * weighted / W);
  return in.H * std::sqrt(2.0 / in.N * std::max(inner, 0.0));
}

double UniformConvergencePdim(double H, double pdim, int N, double delta) {
  if (N < 1) throw ParameterError("N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  return H * std::sqrt((pdim + std::log(1.0 / delta)) / N);
}

double UniformConvergenceRademacher(double H, double rad, int N, double delta) {
  if (N < 1) throw ParameterError("N must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  return rad + H * std::sqrt(std::log(1.0 / delta) / N);
}

double ExpectedRademacherBound(const BoundInputs& in) {
  RequireTypes(in);
  double lambda = 0.0;
  double l_sum = 0.0;
  double mu = 0.0;
  double rho = 0.0;
  int W = 0;
  for (const auto& t : in.types) {
    if (!t.mlp || !t.mlp->is_relu()) {
      throw ParameterError("expected Rademacher bound is stated for ReLU MLPs (p = 2, alpha = 1)");
    }
    if (!t.mu) throw ParameterError("expected Rademacher bound needs mean Q values mu_k");
    lambda += static_cast<double>(t.mlp->L) * t.mlp->W;
    l_sum += t.mlp->L;
    mu += *t.mu;
    rho += t.rho;
    W += t.mlp->W;
  }
  if (!(in.N * mu >= 1.0)) throw ParameterError("expected Rademacher bound needs N sum mu >= 1");
  const double inner = in.d() + l_sum + (lambda + W) * std::log(in.N * mu) + W * std::log(kE * rho);
  return in.H * std::sqrt(2.0 / in.N * inner);
}

LogMagnitude SignPatternBound(int N, double beta, int W) {
  if (beta < 0.0) throw ParameterError("beta must be >= 0");
  if (beta == 0.0) return {0.0};
  if (W < 1 || N < W) throw ParameterError("sign pattern bound needs N >= W >= 1");
  return {kLn2 + W * std::log(2.0 * kE * N * beta / W)};
}

AuxReport AuxInequalityFuzz(uint64_t seed, int draws) {
  if (draws < 1) throw ParameterError("draws must be >= 1");
  Rng rng(seed);
  const double lo = std::log(1e-3);
  const double hi = std::log(1e3);
  auto draw = [&]() { return std::exp(rng.Uniform(lo, hi)); };
  auto slack = [](double a, double b) { return 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
  AuxReport report;
  report.draws = draws;
  for (int i = 0; i < draws; ++i) {
    {
      const double a = draw();
      const double b = draw();
      const double lhs = std::log(a);
      const double rhs = a / b + std::log(b / kE);
      if (lhs > rhs + slack(lhs, rhs)) report.violations.push_back({1, {a, b}, lhs, rhs});
    }
    {
      const int k = static_cast<int>(rng.UniformInt(1, 5));
      std::vector<double> a(k), b(k);
      double lhs = 0.0;
      double wsum = 0.0;
      double bsum = 0.0;
      for (int j = 0; j < k; ++j) {
        a[j] = draw();
        b[j] = draw();
        lhs += b[j] * std::log(a[j]);
        wsum += a[j] * b[j];
        bsum += b[j];
      }
      const double rhs = bsum * std::log(wsum / bsum);
      if (lhs > rhs + slack(lhs, rhs)) {
        std::vector<double> inputs = a;
        inputs.insert(inputs.end(), b.begin(), b.end());
        report.violations.push_back({2, inputs, lhs, rhs});
      }
    }
    {
      double v[3];
      do {
        for (double& x : v) x = draw();
        std::sort(v, v + 3);
      } while (!(v[0] < v[1]));
      const double b1 = v[0];
      const double b2 = v[1];
      const double a = v[2];
      const double lhs = b1 * std::log(kE * a / b1);
      const double rhs = b2 * std::log(kE * a / b2);
      if (!(lhs < rhs + slack(lhs, rhs))) report.violations.push_back({3, {a, b1, b2}, lhs, rhs});
    }
  }
  return report;
}

// ---- Tables ----------------------------------------------------------------

std::vector<BoundRow> ComputeBoundTable(const BoundInputs& raw) {
  const BoundInputs in = Normalize(raw);
  std::vector<BoundRow> rows;
  // Astronomical quantities arrive as logs, the rest as plain values.
  auto add_log = [&](std::string name, double log_value, std::string note = "") {
    const LogMagnitude m{log_value};
    rows.push_back({std::move(name), m, m.Materialize().value_or(NAN), std::move(note)});
  };
  auto add = [&](std::string name, double value, std::string note = "") {
    rows.push_back({std::move(name), {std::log(value)}, value, std::move(note)});
  };
  auto try_add = [&](const std::string& name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      rows.push_back({name, {NAN}, NAN, std::string("n/a: ") + e.what()});
    }
  };

  const int W = in.W();
  std::vector<double> rho;
  for (const auto& t : in.types) rho.push_back(t.rho);
  for (int k = 0; k < in.d(); ++k) {
    const auto& s = in.types[k].structure;
    const std::string tag = "type" + std::to_string(k + 1);
    add(tag + ".log_Gamma", s.log_gamma, "value is ln Gamma_k");
    try_add(tag + ".q_worst_case",
            [&] { add_log(tag + ".q_worst_case", QWorstCase(rho, in.M, k).log_value.log); });
  }
  double pdim = NAN;
  try_add("cost_structure.log_Gamma", [&] {
    const StructureTriple cs = CostStructure(in);
    add("cost_structure.log_Gamma", cs.log_gamma, "value is ln Gamma'");
    add("cost_structure.gamma", cs.gamma);
    pdim = PdimUpperBound(cs, W);
    add("pdim_upper_bound", pdim);
  });
  bool all_linear = true;
  bool all_mlp = true;
  bool all_relu = true;
  for (const auto& t : in.types) {
    all_linear = all_linear && t.linear;
    all_mlp = all_mlp && t.mlp.has_value();
    all_relu = all_relu && t.mlp && t.mlp->is_relu();
  }
  if (all_linear) add("linear_pdim_bound", LinearPdimBound(in));
  if (all_mlp) try_add("mlp_pdim_bound", [&] { add("mlp_pdim_bound", MlpPdimBound(in)); });
  if (std::isfinite(pdim)) {
    add("uniform_convergence_pdim", UniformConvergencePdim(in.H, pdim, in.N, in.delta),
        "up to the suppressed constant");
  }
  bool have_q = true;
  for (const auto& t : in.types) have_q = have_q && t.q_sum.has_value();
  if (have_q) {
    try_add("r_bound", [&] { add_log("r_bound", RBound(in).log); });
    try_add("rademacher_bound_empirical", [&] {
      const double rad = RademacherBoundEmpirical(in);
      add("rademacher_bound_empirical", rad);
      add("uniform_convergence_rademacher", UniformConvergenceRademacher(in.H, rad, in.N, in.delta),
          "up to the suppressed constant");
    });
  }
  bool have_mu = true;
  for (const auto& t : in.types) have_mu = have_mu && t.mu.has_value();
  if (all_relu && have_mu) {
    try_add("expected_rademacher_bound",
            [&] { add("expected_rademacher_bound", ExpectedRademacherBound(in)); });
  }
  double beta = 0.0;
  for (const auto& t : in.types) beta = std::max(beta, t.structure.beta);
  try_add("sign_pattern_bound",
          [&] { add_log("sign_pattern_bound", SignPatternBound(in.N, beta, W).log); });
  return rows;
}

namespace {

std::string FormatValue(const BoundRow& r) {
  const LogMagnitude& m = r.log_value;
  char buf[64];
  if (std::isfinite(r.value)) {
    std::snprintf(buf, sizeof(buf), "%.12g", r.value);
  } else if (std::isnan(m.log)) {
    std::snprintf(buf, sizeof(buf), "n/a");
  } else {
    std::snprintf(buf, sizeof(buf), "exp(%.12g)", m.log);
  }
  return buf;
}

std::string FormatLog(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string BoundTableCsv(const std::vector<BoundRow>& rows) {
  std::string out = "# schema bnclab.boundtable/1\nname,ln_value,value,note\n";
  for (const auto& r : rows) {
    out +=
        r.name + "," + FormatLog(r.log_value.log) + "," + FormatValue(r) + ",\"" + r.note + "\"\n";
  }
  return out;
}

std::string BoundTableText(const std::vector<BoundRow>& rows) {
  size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::string out = "# schema bnclab.boundtable/1\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-*s  %24s  %s\n", static_cast<int>(width), r.name.c_str(),
                  FormatValue(r).c_str(), r.note.c_str());
    out += buf;
  }
  return out;
}

namespace {
using Json = nlohmann::ordered_json;
}

BoundInputs ParseBoundInputs(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("bounds JSON: ") + e.what());
  }
  try {
    if (root.value("schema", "") != "bnclab.bounds/1") {
      throw ParameterError("bounds file needs schema \"bnclab.bounds/1\"");
    }
    BoundInputs in;
    in.M = root.at("M").get<int>();
    in.H = root.value("H", 3.0 * in.M);
    in.N = root.at("N").get<int>();
    in.delta = root.value("delta", 0.1);
    for (const auto& jt : root.at("types")) {
      TypeInputs t;
      t.rho = jt.at("rho").get<double>();
      t.W = jt.value("W", 0);
      if (jt.contains("structure")) {
        const auto& s = jt.at("structure");
        t.structure = {s.at("log_Gamma").get<double>(), s.at("gamma").get<double>(),
                       s.at("beta").get<double>()};
      }
      t.linear = jt.value("linear", false);
      if (jt.contains("mlp")) {
        const auto& m = jt.at("mlp");
        t.mlp = MlpDims{m.at("L").get<int>(), m.at("W").get<int>(), m.at("U").get<int>(),
                        m.value("p", 2), m.value("alpha", 1)};
      }
      if (jt.contains("Q_sum")) t.q_sum = jt.at("Q_sum").get<double>();
      if (jt.contains("mu")) t.mu = jt.at("mu").get<double>();
      in.types.push_back(t);
    }
    return Normalize(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bounds JSON: ") + e.what());
  }
}

std::string SerializeBoundInputs(const BoundInputs& in) {
  Json root;
  root["schema"] = "bnclab.bounds/1";
  root["M"] = in.M;
  root["H"] = in.H;
  root["N"] = in.N;
  root["delta"] = in.delta;
  Json types = Json::array();
  for (const auto& t : in.types) {
    Json jt;
    jt["rho"] = t.rho;
    if (!t.mlp) jt["W"] = t.W;  // an MLP entry carries its own W
    if (t.mlp) {
      jt["mlp"] = Json{{"L", t.mlp->L},
                       {"W", t.mlp->W},
                       {"U", t.mlp->U},
                       {"p", t.mlp->p},
                       {"alpha", t.mlp->alpha}};
    } else if (t.linear) {
      jt["linear"] = true;
    } else {
      jt["structure"] = Json{{"log_Gamma", t.structure.log_gamma},
                             {"gamma", t.structure.gamma},
                             {"beta", t.structure.beta}};
    }
    if (t.q_sum) jt["Q_sum"] = *t.q_sum;
    if (t.mu) jt["mu"] = *t.mu;
    types.push_back(jt);
  }
  root["types"] = types;
  return root.dump(2) + "\n";
}

}  // namespace bnclab
