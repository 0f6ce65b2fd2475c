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

// Feature extractors, scorers and argmax selection.

#ifndef BNCLAB_POLICY_H_
#define BNCLAB_POLICY_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bnclab/cuts.h"
#include "bnclab/instance.h"

namespace bnclab {

using FeatureVector = std::vector<double>;

enum class ActionType { kNode = 0, kCut = 1, kBranch = 2 };
inline constexpr int kNumActionTypes = 3;

std::string_view ActionTypeName(ActionType k);
ActionType ParseActionType(std::string_view name);

// ---- Cut features ----------------------------------------------------------

double Efficacy(std::span<const double> x_lp, const Cut& cut);
double ObjectiveParallelism(std::span<const double> c, const Cut& cut);

struct DirectedCutoff {
  double value = 0.0;
  bool fallback = false;  // no incumbent, coincident points or orthogonal direction
};
DirectedCutoff DirectedCutoffDistance(std::span<const double> x_lp,
                                      const std::vector<double>* incumbent, const Cut& cut);

double IntegralSupport(const Cut& cut, int n1);

// ---- Extractors ------------------------------------------------------------

inline constexpr char kNodeExtractor[] = "node.v1";
inline constexpr char kCutExtractor[] = "cut.v1";
inline constexpr char kBranchExtractor[] = "branch.v1";

struct NodeView {
  int id = 0;
  int depth = 0;
  double z = 0.0;  // parent LP bound, -inf before the root is solved
};

struct NodeContext {
  double z_root = 0.0;  // root LP value, or -inf/nan when unknown
  int max_rounds = 1;
  double upper_bound = 0.0;  // +inf without incumbent
  int created = 1;           // nodes created so far
  std::span<const NodeView> nodes;
};

struct CutContext {
  std::span<const double> x_lp;
  std::span<const double> c;
  const std::vector<double>* incumbent = nullptr;
  int n1 = 0;
  std::span<const Cut> cuts;
};

struct BranchContext {
  std::span<const double> x_lp;
  const MipInstance* inst = nullptr;
  std::span<const int> vars;
};

using FeatureContext = std::variant<NodeContext, CutContext, BranchContext>;

// (z / (|z_root| + 1), depth / M, gap to UB, id / (created + 1)).
FeatureVector NodeFeatures(const NodeContext& ctx, size_t action);
// (efficacy, parallelism, directed cutoff, integral support).
FeatureVector CutFeatures(const CutContext& ctx, size_t action, bool* dcd_fallback = nullptr);
// (min(f, 1-f), |c_j| / max|c|, nnz(A_.j) / m, f).
FeatureVector BranchFeatures(const BranchContext& ctx, size_t action);

// Throws ParameterError for unknown ids or a context of the wrong kind.
int ExtractorDim(std::string_view extractor);
FeatureVector ExtractFeatures(std::string_view extractor, const FeatureContext& ctx, size_t action);
std::string_view DefaultExtractor(ActionType k);

// ---- Scorers ---------------------------------------------------------------

// sigma(v) = poly_k(v) on piece k, pieces (lo_k, hi_k] tiling the line; the
// first piece is open to -inf, the last to +inf.
struct ActivationPiece {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> coeffs;  // ascending powers
};

struct Activation {
  std::string name;  // preset name, or "custom"
  std::vector<ActivationPiece> pieces;

  int p() const { return static_cast<int>(pieces.size()); }
  int alpha() const;  // max polynomial degree
  int Piece(double v) const;
  double Eval(double v) const;
  bool is_relu() const { return name == "relu"; }
};

Activation ReluActivation();
Activation ActivationPreset(std::string_view name);  // relu, identity, hardtanh, square-relu
void ValidateActivation(const Activation& act);

// Parameter layout, per affine layer from input to output:
// weights row-major [out][in], then biases [out].
struct MlpSpec {
  int input_dim = 4;
  std::vector<int> hidden;
  Activation activation = ReluActivation();

  int L() const { return static_cast<int>(hidden.size()); }
  int U() const;
  int W() const;
};

void ValidateMlpSpec(const MlpSpec& spec);

enum class ScorerKind { kLinear, kMlp, kFixedDfs, kFixedProduct };

std::string_view ScorerKindName(ScorerKind kind);
ScorerKind ParseScorerKind(std::string_view name);

struct Scorer {
  ScorerKind kind = ScorerKind::kLinear;
  MlpSpec mlp;            // used when kind == kMlp
  std::vector<double> w;  // empty for fixed rules

  int ParameterCount() const;
  bool learnable() const { return kind == ScorerKind::kLinear || kind == ScorerKind::kMlp; }
};

Scorer LinearScorer(std::vector<double> w);
Scorer MlpScorer(MlpSpec spec, std::vector<double> w);
Scorer FixedScorer(ScorerKind kind);

inline constexpr double kProductEps = 1e-6;

// Throws ParameterError on dimension mismatch.
double Score(const Scorer& scorer, std::span<const double> phi);

// MLP forward pass; `pattern`, when given, receives the activation piece of
// every hidden unit in layer order.
double MlpForward(const MlpSpec& spec, std::span<const double> w, std::span<const double> input,
                  std::vector<int>* pattern = nullptr);

// Smallest index among the maximizers; nullopt for an empty list.
std::optional<size_t> SelectAction(std::span<const double> scores);

// ---- Bundles ---------------------------------------------------------------

struct Policy {
  std::string extractor;
  Scorer scorer;
};

// Index k holds the policy for ActionType k.
struct PolicyBundle {
  std::array<Policy, kNumActionTypes> policies;

  const Policy& at(ActionType k) const { return policies[static_cast<int>(k)]; }
  Policy& at(ActionType k) { return policies[static_cast<int>(k)]; }
};

void ValidateBundle(const PolicyBundle& bundle);

// DFS nodes, linear cut scorer with the given weights, product branching.
PolicyBundle DefaultBundle(std::vector<double> cut_w = {1.0, 0.0, 0.0, 0.0});

std::string SerializePolicy(const PolicyBundle& bundle);
PolicyBundle ParsePolicy(std::string_view json_text);

}  // namespace bnclab

#endif  // BNCLAB_POLICY_H_
