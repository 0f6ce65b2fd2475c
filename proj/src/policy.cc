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

#include "bnclab/policy.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bnclab/errors.h"
#include "bnclab/simd/kernels.h"
#include "json.hpp"

namespace bnclab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNonzero = 1e-12;
constexpr double kDcdTol = 1e-12;

double Norm2(std::span<const double> v) { return std::sqrt(simd::Dot(v, v)); }

void RequireNonzero(const Cut& cut) {
  for (double a : cut.alpha) {
    if (a != 0.0) return;
  }
  throw ParameterError("cut has an all-zero normal");
}

}  // namespace

std::string_view ActionTypeName(ActionType k) {
  switch (k) {
    case ActionType::kNode:
      return "node";
    case ActionType::kCut:
      return "cut";
    case ActionType::kBranch:
      return "branch";
  }
  return "?";
}

ActionType ParseActionType(std::string_view name) {
  if (name == "node") return ActionType::kNode;
  if (name == "cut") return ActionType::kCut;
  if (name == "branch") return ActionType::kBranch;
  throw ParameterError("unknown action type '" + std::string(name) + "'");
}

double Efficacy(std::span<const double> x_lp, const Cut& cut) {
  RequireNonzero(cut);
  return (simd::Dot(cut.alpha, x_lp) - cut.beta) / Norm2(cut.alpha);
}

double ObjectiveParallelism(std::span<const double> c, const Cut& cut) {
  RequireNonzero(cut);
  const double cn = Norm2(c);
  if (cn == 0.0) throw ParameterError("objective vector is zero");
  return std::abs(simd::Dot(cut.alpha, c)) / (Norm2(cut.alpha) * cn);
}

DirectedCutoff DirectedCutoffDistance(std::span<const double> x_lp,
                                      const std::vector<double>* incumbent, const Cut& cut) {
  RequireNonzero(cut);
  if (incumbent == nullptr) return {0.0, true};
  std::vector<double> dir(*incumbent);
  simd::Axpy(-1.0, x_lp, dir);
  const double dist = Norm2(dir);
  if (dist <= kDcdTol) return {0.0, true};
  const double along = std::abs(simd::Dot(cut.alpha, dir)) / dist;
  if (along <= kDcdTol) return {0.0, true};
  return {(simd::Dot(cut.alpha, x_lp) - cut.beta) / along, false};
}

double IntegralSupport(const Cut& cut, int n1) {
  int total = 0;
  int integral = 0;
  for (size_t j = 0; j < cut.alpha.size(); ++j) {
    if (std::abs(cut.alpha[j]) <= kNonzero) continue;
    ++total;
    if (static_cast<int>(j) < n1) ++integral;
  }
  if (total == 0) throw ParameterError("cut has an all-zero normal");
  return static_cast<double>(integral) / total;
}

FeatureVector NodeFeatures(const NodeContext& ctx, size_t action) {
  const NodeView& node = ctx.nodes[action];
  const double root_scale = std::isfinite(ctx.z_root) ? std::abs(ctx.z_root) + 1.0 : 1.0;
  const double z = std::isfinite(node.z) ? node.z / root_scale : 0.0;
  const double depth = static_cast<double>(node.depth) / std::max(ctx.max_rounds, 1);
  double gap = 1.0;
  if (std::isfinite(ctx.upper_bound) && std::isfinite(node.z)) {
    gap = (ctx.upper_bound - node.z) / (std::abs(ctx.upper_bound) + 1.0);
  }
  const double order = static_cast<double>(node.id) / (ctx.created + 1.0);
  return {z, depth, gap, order};
}

FeatureVector CutFeatures(const CutContext& ctx, size_t action, bool* dcd_fallback) {
  const Cut& cut = ctx.cuts[action];
  const DirectedCutoff dcd = DirectedCutoffDistance(ctx.x_lp, ctx.incumbent, cut);
  if (dcd_fallback != nullptr) *dcd_fallback = dcd.fallback;
  return {Efficacy(ctx.x_lp, cut), ObjectiveParallelism(ctx.c, cut), dcd.value,
          IntegralSupport(cut, ctx.n1)};
}

FeatureVector BranchFeatures(const BranchContext& ctx, size_t action) {
  const MipInstance& inst = *ctx.inst;
  const int j = ctx.vars[action];
  const double v = ctx.x_lp[j];
  const double f = v - std::floor(v);
  double cmax = 0.0;
  for (double cj : inst.c) cmax = std::max(cmax, std::abs(cj));
  const double cost = cmax > 0.0 ? std::abs(inst.c[j]) / cmax : 0.0;
  int nnz = 0;
  for (int i = 0; i < inst.m; ++i) {
    if (inst.row(i)[j] != 0.0) ++nnz;
  }
  return {std::min(f, 1.0 - f), cost, static_cast<double>(nnz) / inst.m, f};
}

int ExtractorDim(std::string_view extractor) {
  if (extractor == kNodeExtractor || extractor == kCutExtractor || extractor == kBranchExtractor) {
    return 4;
  }
  throw ParameterError("unknown feature extractor '" + std::string(extractor) + "'");
}

std::string_view DefaultExtractor(ActionType k) {
  switch (k) {
    case ActionType::kNode:
      return kNodeExtractor;
    case ActionType::kCut:
      return kCutExtractor;
    case ActionType::kBranch:
      return kBranchExtractor;
  }
  return "";
}

FeatureVector ExtractFeatures(std::string_view extractor, const FeatureContext& ctx,
                              size_t action) {
  ExtractorDim(extractor);
  if (extractor == kNodeExtractor) {
    if (const auto* c = std::get_if<NodeContext>(&ctx)) return NodeFeatures(*c, action);
  } else if (extractor == kCutExtractor) {
    if (const auto* c = std::get_if<CutContext>(&ctx)) return CutFeatures(*c, action);
  } else if (const auto* c = std::get_if<BranchContext>(&ctx)) {
    return BranchFeatures(*c, action);
  }
  throw ParameterError("extractor '" + std::string(extractor) +
                       "' does not apply to this decision");
}

// ---- Activations -----------------------------------------------------------

int Activation::alpha() const {
  int a = 0;
  for (const auto& piece : pieces) a = std::max(a, static_cast<int>(piece.coeffs.size()) - 1);
  return a;
}

int Activation::Piece(double v) const {
  const int last = p() - 1;
  for (int k = 0; k < last; ++k) {
    if (v <= pieces[k].hi) return k;
  }
  return last;
}

double Activation::Eval(double v) const {
  const auto& coeffs = pieces[Piece(v)].coeffs;
  double out = 0.0;
  for (size_t k = coeffs.size(); k-- > 0;) out = out * v + coeffs[k];
  return out;
}

Activation ReluActivation() { return {"relu", {{-kInf, 0.0, {0.0}}, {0.0, kInf, {0.0, 1.0}}}}; }

Activation ActivationPreset(std::string_view name) {
  if (name == "relu") return ReluActivation();
  if (name == "identity") return {"identity", {{-kInf, kInf, {0.0, 1.0}}}};
  if (name == "hardtanh") {
    return {"hardtanh", {{-kInf, -1.0, {-1.0}}, {-1.0, 1.0, {0.0, 1.0}}, {1.0, kInf, {1.0}}}};
  }
  if (name == "square-relu") {
    return {"square-relu", {{-kInf, 0.0, {0.0}}, {0.0, kInf, {0.0, 0.0, 1.0}}}};
  }
  throw ParameterError("unknown activation preset '" + std::string(name) + "'");
}

void ValidateActivation(const Activation& act) {
  if (act.pieces.empty()) throw ParameterError("activation needs at least one piece");
  if (act.pieces.front().lo != -kInf || act.pieces.back().hi != kInf) {
    throw ParameterError("activation pieces must cover the whole line");
  }
  for (size_t k = 0; k < act.pieces.size(); ++k) {
    const auto& piece = act.pieces[k];
    if (piece.coeffs.empty()) throw ParameterError("activation piece without coefficients");
    if (!(piece.lo < piece.hi)) throw ParameterError("activation piece is empty");
    if (k > 0 && act.pieces[k - 1].hi != piece.lo) {
      throw ParameterError("activation pieces must be contiguous");
    }
  }
}

// ---- MLP -------------------------------------------------------------------

int MlpSpec::U() const {
  int u = 0;
  for (int h : hidden) u += h;
  return u;
}

int MlpSpec::W() const {
  int w = 0;
  int in = input_dim;
  for (int h : hidden) {
    w += in * h + h;
    in = h;
  }
  return w + in + 1;
}

void ValidateMlpSpec(const MlpSpec& spec) {
  if (spec.input_dim < 1) throw ParameterError("MLP input dimension must be >= 1");
  if (spec.hidden.empty()) throw ParameterError("MLP needs at least one hidden layer");
  for (int h : spec.hidden) {
    if (h < 1) throw ParameterError("MLP layer widths must be >= 1");
  }
  ValidateActivation(spec.activation);
}

double MlpForward(const MlpSpec& spec, std::span<const double> w, std::span<const double> input,
                  std::vector<int>* pattern) {
  if (static_cast<int>(input.size()) != spec.input_dim) {
    throw ParameterError("MLP input has " + std::to_string(input.size()) + " entries, expected " +
                         std::to_string(spec.input_dim));
  }
  if (static_cast<int>(w.size()) != spec.W()) {
    throw ParameterError("MLP parameter vector has " + std::to_string(w.size()) +
                         " entries, expected " + std::to_string(spec.W()));
  }
  if (pattern != nullptr) pattern->clear();
  const bool relu = spec.activation.is_relu();
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  size_t off = 0;
  for (int h : spec.hidden) {
    const size_t in = cur.size();
    next.assign(static_cast<size_t>(h), 0.0);
    for (int o = 0; o < h; ++o) next[o] = simd::Dot(w.subspan(off + o * in, in), cur);
    off += static_cast<size_t>(h) * in;
    for (int o = 0; o < h; ++o) next[o] += w[off + o];
    off += static_cast<size_t>(h);
    if (pattern != nullptr) {
      for (double v : next) pattern->push_back(spec.activation.Piece(v));
    }
    if (relu) {
      simd::Relu(next);
    } else {
      for (double& v : next) v = spec.activation.Eval(v);
    }
    cur.swap(next);
  }
  const double out = simd::Dot(w.subspan(off, cur.size()), cur);
  return out + w[off + cur.size()];
}

// ---- Scorers ---------------------------------------------------------------

std::string_view ScorerKindName(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kLinear:
      return "linear";
    case ScorerKind::kMlp:
      return "mlp";
    case ScorerKind::kFixedDfs:
      return "fixed-dfs";
    case ScorerKind::kFixedProduct:
      return "fixed-product";
  }
  return "?";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "linear") return ScorerKind::kLinear;
  if (name == "mlp") return ScorerKind::kMlp;
  if (name == "fixed-dfs") return ScorerKind::kFixedDfs;
  if (name == "fixed-product") return ScorerKind::kFixedProduct;
  throw ParameterError("unknown scorer kind '" + std::string(name) + "'");
}

int Scorer::ParameterCount() const {
  switch (kind) {
    case ScorerKind::kLinear:
      return static_cast<int>(w.size());
    case ScorerKind::kMlp:
      return mlp.W();
    default:
      return 0;
  }
}

Scorer LinearScorer(std::vector<double> w) {
  Scorer s;
  s.kind = ScorerKind::kLinear;
  s.w = std::move(w);
  return s;
}

Scorer MlpScorer(MlpSpec spec, std::vector<double> w) {
  ValidateMlpSpec(spec);
  if (static_cast<int>(w.size()) != spec.W()) {
    throw ParameterError("MLP parameter vector has " + std::to_string(w.size()) +
                         " entries, expected " + std::to_string(spec.W()));
  }
  Scorer s;
  s.kind = ScorerKind::kMlp;
  s.mlp = std::move(spec);
  s.w = std::move(w);
  return s;
}

Scorer FixedScorer(ScorerKind kind) {
  if (kind != ScorerKind::kFixedDfs && kind != ScorerKind::kFixedProduct) {
    throw ParameterError("not a fixed rule");
  }
  Scorer s;
  s.kind = kind;
  return s;
}

double Score(const Scorer& scorer, std::span<const double> phi) {
  switch (scorer.kind) {
    case ScorerKind::kLinear:
      if (scorer.w.size() != phi.size()) {
        throw ParameterError("linear scorer has " + std::to_string(scorer.w.size()) +
                             " weights for " + std::to_string(phi.size()) + " features");
      }
      return simd::Dot(scorer.w, phi);
    case ScorerKind::kMlp:
      return MlpForward(scorer.mlp, scorer.w, phi);
    case ScorerKind::kFixedDfs:
      if (phi.size() != 4) throw ParameterError("DFS rule expects node features");
      return phi[3];
    case ScorerKind::kFixedProduct:
      if (phi.size() != 4) throw ParameterError("product rule expects branch features");
      return std::max(phi[3], kProductEps) * std::max(1.0 - phi[3], kProductEps);
  }
  return 0.0;
}

std::optional<size_t> SelectAction(std::span<const double> scores) {
  if (scores.empty()) return std::nullopt;
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (std::isnan(scores[best]) && !std::isnan(scores[i]))) {
      best = i;
    }
  }
  return best;
}

// ---- Bundles ---------------------------------------------------------------

void ValidateBundle(const PolicyBundle& bundle) {
  for (int k = 0; k < kNumActionTypes; ++k) {
    const ActionType type = static_cast<ActionType>(k);
    const Policy& p = bundle.policies[k];
    const int dim = ExtractorDim(p.extractor);
    if (p.extractor != DefaultExtractor(type)) {
      throw ParameterError("extractor '" + p.extractor + "' cannot serve " +
                           std::string(ActionTypeName(type)) + " decisions");
    }
    const Scorer& s = p.scorer;
    switch (s.kind) {
      case ScorerKind::kLinear:
        if (static_cast<int>(s.w.size()) != dim) {
          throw ParameterError(std::string(ActionTypeName(type)) + " linear scorer needs " +
                               std::to_string(dim) + " weights");
        }
        break;
      case ScorerKind::kMlp:
        ValidateMlpSpec(s.mlp);
        if (s.mlp.input_dim != dim) {
          throw ParameterError(std::string(ActionTypeName(type)) + " MLP input must be " +
                               std::to_string(dim));
        }
        if (static_cast<int>(s.w.size()) != s.mlp.W()) {
          throw ParameterError(std::string(ActionTypeName(type)) + " MLP needs " +
                               std::to_string(s.mlp.W()) + " parameters");
        }
        break;
      case ScorerKind::kFixedDfs:
        if (type != ActionType::kNode) throw ParameterError("DFS rule only selects nodes");
        break;
      case ScorerKind::kFixedProduct:
        if (type != ActionType::kBranch) {
          throw ParameterError("product rule only selects branching variables");
        }
        break;
    }
  }
}

PolicyBundle DefaultBundle(std::vector<double> cut_w) {
  PolicyBundle b;
  b.at(ActionType::kNode) = {kNodeExtractor, FixedScorer(ScorerKind::kFixedDfs)};
  b.at(ActionType::kCut) = {kCutExtractor, LinearScorer(std::move(cut_w))};
  b.at(ActionType::kBranch) = {kBranchExtractor, FixedScorer(ScorerKind::kFixedProduct)};
  return b;
}

namespace {

using Json = nlohmann::ordered_json;

Json BoundToJson(double v) { return std::isinf(v) ? Json(nullptr) : Json(v); }

double BoundFromJson(const Json& j, double if_null) {
  return j.is_null() ? if_null : j.get<double>();
}

Json ActivationToJson(const Activation& act) {
  if (act.name != "custom") return act.name;
  Json pieces = Json::array();
  for (const auto& piece : act.pieces) {
    pieces.push_back(Json{
        {"lo", BoundToJson(piece.lo)}, {"hi", BoundToJson(piece.hi)}, {"coeffs", piece.coeffs}});
  }
  return Json{{"pieces", pieces}};
}

Activation ActivationFromJson(const Json& j) {
  if (j.is_string()) return ActivationPreset(j.get<std::string>());
  Activation act;
  act.name = "custom";
  for (const auto& piece : j.at("pieces")) {
    act.pieces.push_back({BoundFromJson(piece.at("lo"), -kInf), BoundFromJson(piece.at("hi"), kInf),
                          piece.at("coeffs").get<std::vector<double>>()});
  }
  ValidateActivation(act);
  return act;
}

}  // namespace

std::string SerializePolicy(const PolicyBundle& bundle) {
  ValidateBundle(bundle);
  Json root;
  root["schema"] = "bnclab.policy/1";
  Json policies = Json::object();
  for (int k = 0; k < kNumActionTypes; ++k) {
    const Policy& p = bundle.policies[k];
    Json entry;
    entry["extractor"] = p.extractor;
    entry["scorer"] = ScorerKindName(p.scorer.kind);
    if (p.scorer.kind == ScorerKind::kMlp) {
      entry["mlp"] = Json{{"input_dim", p.scorer.mlp.input_dim},
                          {"hidden", p.scorer.mlp.hidden},
                          {"activation", ActivationToJson(p.scorer.mlp.activation)}};
    }
    if (p.scorer.learnable()) entry["w"] = p.scorer.w;
    policies[std::string(ActionTypeName(static_cast<ActionType>(k)))] = entry;
  }
  root["policies"] = policies;
  return root.dump(2) + "\n";
}

PolicyBundle ParsePolicy(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, std::string("policy JSON: ") + e.what());
  }
  try {
    if (root.value("schema", "") != "bnclab.policy/1") {
      throw ParameterError("policy file needs schema \"bnclab.policy/1\"");
    }
    PolicyBundle bundle = DefaultBundle();
    for (const auto& [name, entry] : root.at("policies").items()) {
      const ActionType type = ParseActionType(name);
      Policy p;
      p.extractor = entry.value("extractor", std::string(DefaultExtractor(type)));
      p.scorer.kind = ParseScorerKind(entry.at("scorer").get<std::string>());
      if (p.scorer.kind == ScorerKind::kMlp) {
        const Json& m = entry.at("mlp");
        p.scorer.mlp.input_dim = m.at("input_dim").get<int>();
        p.scorer.mlp.hidden = m.at("hidden").get<std::vector<int>>();
        p.scorer.mlp.activation = ActivationFromJson(m.at("activation"));
      }
      if (p.scorer.learnable()) p.scorer.w = entry.at("w").get<std::vector<double>>();
      bundle.at(type) = std::move(p);
    }
    ValidateBundle(bundle);
    return bundle;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("policy JSON: ") + e.what());
  }
}

}  // namespace bnclab
