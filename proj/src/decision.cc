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

#include "bnclab/decision.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "bnclab/util.h"
#include "json.hpp"

namespace bnclab {
namespace {

uint64_t PairKey(uint64_t state, uint64_t action) {
  return Hasher().Add(state).Add(action).digest();
}

}  // namespace

double PenaltySpec::Eval(int k, uint64_t state, uint64_t action, int round) const {
  double p;
  if (fn) {
    p = fn(k, state, action, round);
  } else {
    if (k < 0 || k >= static_cast<int>(constant.size())) {
      throw ParameterError("no penalty configured for action type " + std::to_string(k));
    }
    p = constant[k];
  }
  if (!(p >= 0.0)) throw ParameterError("penalties must be nonnegative");
  return p;
}

double LogQWorstCase(std::span<const double> rho, int max_rounds, int k) {
  double log_bar = 0.0;
  for (double r : rho) log_bar += std::log(r);
  return std::log(rho[k]) + max_rounds * log_bar;
}

RunTrace RunProcess(DecisionProcess& process, std::span<const Scorer> scorers,
                    const PenaltySpec& penalties, int max_rounds, std::span<const double> rho) {
  const int d = process.num_types();
  if (static_cast<int>(scorers.size()) != d) {
    throw ParameterError("need one scorer per action type");
  }
  if (!rho.empty() && static_cast<int>(rho.size()) != d) {
    throw ParameterError("need one availability cap per action type");
  }
  RunTrace trace;
  trace.q_counts.assign(static_cast<size_t>(d), 0);
  trace.rho.assign(rho.begin(), rho.end());
  trace.max_rounds = max_rounds;
  std::vector<std::unordered_set<uint64_t>> seen(static_cast<size_t>(d));
  std::vector<double> log_bound(static_cast<size_t>(d), 0.0);
  for (int k = 0; k < d && !rho.empty(); ++k) log_bound[k] = LogQWorstCase(rho, max_rounds, k);

  std::vector<uint64_t> ids;
  std::vector<FeatureVector> features;
  std::vector<double> scores;
  int i = 0;
  try {
    while (!process.IsTerminal() && i < max_rounds) {
      bool stop = false;
      for (int k = 0; k < d && !stop; ++k) {
        do {
          ids.clear();
          features.clear();
          process.Available(k, &ids, &features);
          if (ids.empty()) break;
          scores.resize(ids.size());
          for (size_t a = 0; a < ids.size(); ++a) scores[a] = Score(scorers[k], features[a]);
          const size_t pick = *SelectAction(scores);

          Step step;
          step.round = i;
          step.k = k;
          step.state = process.StateDigest();
          step.candidates = ids;
          step.chosen = ids[pick];
          step.score_hash = Hasher().Add(std::span<const double>(scores)).digest();
          step.penalty = penalties.Eval(k, step.state, step.chosen, i);
          process.Apply(k, pick);
          process.Annotate(&step);
          trace.v += step.penalty;

          for (uint64_t id : ids) seen[k].insert(PairKey(step.state, id));
          trace.q_counts[k] = seen[k].size();
          if (!rho.empty()) {
            if (static_cast<double>(ids.size()) > rho[k]) {
              trace.q_violations.push_back("round " + std::to_string(i) + " type " +
                                           std::to_string(k) + ": " + std::to_string(ids.size()) +
                                           " actions exceed cap");
            }
            if (std::log(static_cast<double>(trace.q_counts[k])) > log_bound[k] + 1e-12) {
              trace.q_violations.push_back("round " + std::to_string(i) + " type " +
                                           std::to_string(k) + ": Q exceeds worst case");
            }
          }
          trace.steps.push_back(std::move(step));
          if (process.IsTerminal()) {
            stop = true;
            break;
          }
        } while (process.Repeat(k));
      }
      process.EndRound(i);
      ++i;
    }
  } catch (const RunAbortedError&) {
    throw;
  } catch (const std::exception& e) {
    trace.rounds = i;
    throw RunAbortedError(e.what(), std::move(trace));
  }
  trace.rounds = i;
  return trace;
}

double TreeSizeCost(const RunTrace& trace, const PenaltySpec& penalties) {
  double v = 0.0;
  for (const Step& s : trace.steps) v += penalties.Eval(s.k, s.state, s.chosen, s.round);
  return v;
}

std::vector<std::vector<uint64_t>> StateActionKeys(const RunTrace& trace, int num_types) {
  std::vector<std::vector<uint64_t>> keys(static_cast<size_t>(num_types));
  for (const Step& s : trace.steps) {
    for (uint64_t id : s.candidates) keys[s.k].push_back(PairKey(s.state, id));
  }
  for (auto& v : keys) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return keys;
}

std::vector<uint64_t> CountStateActionPairs(const RunTrace& trace, int num_types) {
  std::vector<uint64_t> counts;
  for (const auto& v : StateActionKeys(trace, num_types)) counts.push_back(v.size());
  return counts;
}

std::string ExportTrace(const RunTrace& trace) {
  using Json = nlohmann::ordered_json;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  std::string out;
  for (const Step& s : trace.steps) {
    Json j;
    j["round"] = s.round;
    j["k"] = s.k + 1;
    j["state"] = HexDigest(s.state);
    j["candidates"] = s.candidates.size();
    j["candidate_ids"] = s.candidates;
    j["chosen"] = s.chosen;
    j["score_hash"] = HexDigest(s.score_hash);
    j["penalty"] = s.penalty;
    j["lb"] = finite_or_null(s.lb);
    j["ub"] = finite_or_null(s.ub);
    out += j.dump() + "\n";
  }
  Json summary;
  summary["summary"] = true;
  summary["steps"] = trace.steps.size();
  summary["rounds"] = trace.rounds;
  summary["V"] = trace.v;
  summary["q_counts"] = trace.q_counts;
  summary["q_violations"] = trace.q_violations.size();
  out += summary.dump() + "\n";
  return out;
}

}  // namespace bnclab
