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

#include "bnclab/bnc.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bnclab/errors.h"
#include "bnclab/util.h"

namespace bnclab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::vector<ExtraRow> rows;
  uint64_t rows_hash = 0;
  double z = -kInf;
  int cut_rounds = 0;
};

uint64_t HashRows(const std::vector<ExtraRow>& rows) {
  Hasher h;
  h.Add(rows.size());
  for (const ExtraRow& r : rows) h.Add(std::span<const double>(r.coeffs)).Add(r.rhs);
  return h.digest();
}

class BncProcess : public DecisionProcess {
 public:
  enum class Phase { kNone, kCut, kBranch };

  BncProcess(const MipInstance& inst, const BncConfig& cfg, const PolicyBundle& bundle,
             LpCache* cache)
      : inst_(inst), cfg_(cfg), bundle_(bundle), cache_(cache) {
    Node root;
    root.rows_hash = HashRows(root.rows);
    open_.push_back(std::move(root));
    created_ = 1;
  }

  int num_types() const override { return kNumActionTypes; }

  bool IsTerminal() const override {
    if (current_) return false;
    return open_.empty() || ub_ - lb_ <= cfg_.eps_gap;
  }

  void Available(int k, std::vector<uint64_t>* ids, std::vector<FeatureVector>* features) override {
    const Policy& policy = bundle_.policies[k];
    switch (static_cast<ActionType>(k)) {
      case ActionType::kNode: {
        if (current_) return;
        views_.clear();
        for (const Node& n : open_) views_.push_back({n.id, n.depth, n.z});
        NodeContext ctx{z_root_, cfg_.max_rounds, ub_, created_, views_};
        for (size_t a = 0; a < views_.size(); ++a) {
          ids->push_back(static_cast<uint64_t>(views_[a].id));
          features->push_back(ExtractFeatures(policy.extractor, ctx, a));
        }
        break;
      }
      case ActionType::kCut: {
        if (phase_ != Phase::kCut) return;
        RemainingCuts();
        CutContext ctx{sol_->x, inst_.c, incumbent_ ? &*incumbent_ : nullptr, inst_.n1, remaining_};
        for (size_t a = 0; a < remaining_.size(); ++a) {
          ids->push_back(static_cast<uint64_t>(remaining_[a].id));
          features->push_back(ExtractFeatures(policy.extractor, ctx, a));
        }
        break;
      }
      case ActionType::kBranch: {
        if (phase_ != Phase::kBranch) return;
        BranchContext ctx{sol_->x, &inst_, fractional_};
        for (size_t a = 0; a < fractional_.size(); ++a) {
          ids->push_back(static_cast<uint64_t>(fractional_[a]));
          features->push_back(ExtractFeatures(policy.extractor, ctx, a));
        }
        break;
      }
    }
  }

  void Apply(int k, size_t index) override {
    switch (static_cast<ActionType>(k)) {
      case ActionType::kNode:
        ProcessNode(index);
        break;
      case ActionType::kCut:
        RemainingCuts();
        picked_.push_back(remaining_[index].id);
        break;
      case ActionType::kBranch:
        Branch(fractional_[index]);
        break;
    }
  }

  bool Repeat(int k) const override {
    if (static_cast<ActionType>(k) != ActionType::kCut || phase_ != Phase::kCut) return false;
    return static_cast<int>(picked_.size()) < cfg_.kappa && picked_.size() < pool_.size();
  }

  void EndRound(int round) override {
    if (phase_ == Phase::kCut) {
      Node node = std::move(*current_);
      current_.reset();
      for (int64_t id : picked_) {
        for (const Cut& c : pool_) {
          if (c.id == id) node.rows.push_back(c.AsRow());
        }
      }
      node.rows_hash = HashRows(node.rows);
      ++node.cut_rounds;
      InsertOpen(std::move(node));
      UpdateLb();
    } else if (phase_ == Phase::kBranch) {
      UpdateLb();
    }
    current_.reset();
    phase_ = Phase::kNone;
    pool_.clear();
    picked_.clear();
    fractional_.clear();
    round_ = round + 1;
  }

  uint64_t StateDigest() const override {
    Hasher h;
    std::vector<uint64_t> open_hashes;
    for (const Node& n : open_) open_hashes.push_back(n.rows_hash);
    std::sort(open_hashes.begin(), open_hashes.end());
    h.Add(open_hashes.size());
    for (uint64_t v : open_hashes) h.Add(v);
    if (std::isfinite(ub_)) {
      h.Add(int64_t{1}).Add(static_cast<int64_t>(std::llround(ub_ / 1e-6)));
    } else {
      h.Add(int64_t{0});
    }
    h.Add(round_);
    if (current_) {
      h.Add(current_->id).Add(current_->rows_hash);
    } else {
      h.Add(-1);
    }
    h.Add(static_cast<int>(phase_));
    for (int64_t id : picked_) h.Add(id);
    return h.digest();
  }

  void Annotate(Step* step) const override {
    step->lb = lb_;
    step->ub = ub_;
  }

  void Finish(BncResult* out) const {
    if (open_.empty() && !current_) {
      out->termination = BncResult::Termination::kEmpty;
    } else if (!current_ && ub_ - lb_ <= cfg_.eps_gap) {
      out->termination = BncResult::Termination::kGap;
    } else {
      out->termination = BncResult::Termination::kMaxRounds;
    }
    out->ub = ub_;
    out->lb = out->termination == BncResult::Termination::kEmpty ? ub_ : lb_;
    if (out->termination == BncResult::Termination::kMaxRounds) {
      out->status = BncResult::Status::kLimit;
    } else {
      out->status =
          std::isfinite(ub_) ? BncResult::Status::kOptimal : BncResult::Status::kInfeasible;
    }
    out->x = incumbent_;
    out->cuts = all_cuts_;
    out->nodes_created = created_;
    out->lp_solves = lp_solves_;
  }

 private:
  void RemainingCuts() {
    remaining_.clear();
    for (const Cut& c : pool_) {
      if (std::find(picked_.begin(), picked_.end(), c.id) == picked_.end()) {
        remaining_.push_back(c);
      }
    }
  }

  void InsertOpen(Node node) {
    auto it = std::lower_bound(open_.begin(), open_.end(), node.id,
                               [](const Node& n, int id) { return n.id < id; });
    open_.insert(it, std::move(node));
  }

  void UpdateLb() {
    if (open_.empty()) return;
    double lb = kInf;
    for (const Node& n : open_) lb = std::min(lb, n.z);
    lb_ = lb;
  }

  void ProcessNode(size_t index) {
    current_ = std::move(open_[index]);
    open_.erase(open_.begin() + static_cast<std::ptrdiff_t>(index));
    phase_ = Phase::kNone;

    LpProblem problem{&inst_, current_->rows};
    try {
      if (cache_ != nullptr) {
        sol_ = cache_->Solve(problem);
      } else {
        sol_ = std::make_shared<const LpSolution>(SolveLp(problem));
      }
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at node " + std::to_string(current_->id),
                        e.problem_digest());
    }
    ++lp_solves_;
    const LpSolution& sol = *sol_;
    if (sol.status == LpSolution::Status::kUnbounded) {
      throw Error("LP relaxation unbounded at node " + std::to_string(current_->id));
    }
    if (sol.status == LpSolution::Status::kInfeasible ||
        sol.value >= ub_ - 1e-9 * (1.0 + std::abs(ub_))) {
      current_.reset();
      return;
    }
    current_->z = sol.value;
    if (current_->id == 0 && current_->rows.empty()) z_root_ = sol.value;

    fractional_.clear();
    for (int j = 0; j < inst_.n1; ++j) {
      const double f = sol.x[j] - std::floor(sol.x[j]);
      if (std::min(f, 1.0 - f) > kIntTol) fractional_.push_back(j);
    }
    if (fractional_.empty()) {
      ub_ = sol.value;
      std::vector<double> x = sol.x;
      for (int j = 0; j < inst_.n1; ++j) x[j] = std::round(x[j]);
      incumbent_ = std::move(x);
      std::erase_if(open_, [&](const Node& n) { return n.z >= ub_; });
      current_.reset();
      return;
    }

    if (current_->id == 0 && current_->cut_rounds < cfg_.root_cut_rounds && cfg_.kappa > 0) {
      const CutOrigin origin{current_->id, round_, -1};
      pool_ = GenerateCandidateCuts(sol, inst_, cfg_.cut_cap, origin, &next_cut_id_);
      all_cuts_.insert(all_cuts_.end(), pool_.begin(), pool_.end());
      if (!pool_.empty()) {
        phase_ = Phase::kCut;
        return;
      }
    }
    phase_ = Phase::kBranch;
  }

  void Branch(int j) {
    Node parent = std::move(*current_);
    current_.reset();
    const double v = sol_->x[j];
    for (int side = 0; side < 2; ++side) {
      Node child;
      child.id = created_++;
      child.parent = parent.id;
      child.depth = parent.depth + 1;
      child.z = parent.z;
      child.rows = parent.rows;
      std::vector<double> coeffs(static_cast<size_t>(inst_.n()), 0.0);
      if (side == 0) {
        coeffs[j] = 1.0;
        child.rows.push_back({std::move(coeffs), std::floor(v)});
      } else {
        coeffs[j] = -1.0;
        child.rows.push_back({std::move(coeffs), -std::ceil(v)});
      }
      child.rows_hash = HashRows(child.rows);
      InsertOpen(std::move(child));
    }
  }

  const MipInstance& inst_;
  const BncConfig& cfg_;
  const PolicyBundle& bundle_;
  LpCache* cache_;

  std::vector<Node> open_;  // ascending id
  std::optional<Node> current_;
  std::shared_ptr<const LpSolution> sol_;
  Phase phase_ = Phase::kNone;
  std::vector<Cut> pool_;
  std::vector<int64_t> picked_;
  std::vector<int> fractional_;
  std::optional<std::vector<double>> incumbent_;
  double ub_ = kInf;
  double lb_ = -kInf;
  double z_root_ = -kInf;
  int created_ = 0;
  int round_ = 0;
  int lp_solves_ = 0;
  int64_t next_cut_id_ = 0;
  std::vector<Cut> all_cuts_;

  std::vector<NodeView> views_;
  std::vector<Cut> remaining_;
};

}  // namespace

void ValidateBncConfig(const BncConfig& cfg) {
  if (cfg.max_rounds < 1) throw ParameterError("M must be >= 1");
  if (cfg.kappa < 0) throw ParameterError("kappa must be >= 0");
  if (cfg.root_cut_rounds < 0) throw ParameterError("R must be >= 0");
  if (cfg.cut_cap < 0) throw ParameterError("cut cap must be >= 0");
  if (!(cfg.eps_gap >= 0.0)) throw ParameterError("eps_gap must be >= 0");
  if (cfg.cut_rule != "root-rounds") {
    throw ParameterError("unknown cut-vs-branch rule '" + cfg.cut_rule + "'");
  }
}

std::array<double, 3> BncRho(const BncConfig& cfg, const MipInstance& inst) {
  return {static_cast<double>(std::max(cfg.max_rounds, 2)),
          static_cast<double>(std::max(cfg.cut_cap, 2)),
          static_cast<double>(std::max(inst.n(), 2))};
}

double BncPenaltyBound(const BncConfig& cfg, const PenaltySpec& penalties) {
  const auto& p = penalties.constant;
  if (penalties.fn || p.size() != 3) {
    throw ParameterError("penalty bound needs three constant penalties");
  }
  return cfg.max_rounds * (p[0] + std::max(p[1] + p[2], cfg.kappa * p[1]));
}

std::shared_ptr<const LpSolution> LpCache::Solve(const LpProblem& p) {
  const uint64_t key = Hasher().Add(reinterpret_cast<uintptr_t>(p.base)).Add(Digest(p)).digest();
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      for (const Entry& e : it->second) {
        if (e.base == p.base && e.rows == p.extra_rows) {
          ++hits_;
          return e.sol;
        }
      }
    }
    ++misses_;
  }
  auto sol = std::make_shared<const LpSolution>(SolveLp(p));
  std::lock_guard<std::mutex> lock(mu_);
  if (size_ >= max_entries_) {
    map_.clear();
    size_ = 0;
  }
  map_[key].push_back({p.base, p.extra_rows, sol});
  ++size_;
  return sol;
}

size_t LpCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

size_t LpCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

std::string_view StatusName(BncResult::Status s) {
  switch (s) {
    case BncResult::Status::kOptimal:
      return "optimal";
    case BncResult::Status::kInfeasible:
      return "infeasible";
    case BncResult::Status::kLimit:
      return "limit";
  }
  return "?";
}

std::string_view TerminationName(BncResult::Termination t) {
  switch (t) {
    case BncResult::Termination::kEmpty:
      return "empty";
    case BncResult::Termination::kGap:
      return "gap";
    case BncResult::Termination::kMaxRounds:
      return "max-rounds";
  }
  return "?";
}

BncResult SolveBnc(const MipInstance& inst, const PolicyBundle& bundle, const BncConfig& cfg,
                   const PenaltySpec& penalties, LpCache* cache) {
  Validate(inst);
  ValidateBncConfig(cfg);
  ValidateBundle(bundle);
  BncProcess process(inst, cfg, bundle, cache);
  std::array<Scorer, kNumActionTypes> scorers;
  for (int k = 0; k < kNumActionTypes; ++k) scorers[k] = bundle.policies[k].scorer;
  const auto rho = BncRho(cfg, inst);
  BncResult result;
  result.trace = RunProcess(process, scorers, penalties, cfg.max_rounds, rho);
  result.v = result.trace.v;
  process.Finish(&result);
  return result;
}

}  // namespace bnclab
