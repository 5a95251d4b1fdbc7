// Copyright 2026 The RocketEval Authors.
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

// From per-item judgments to final scores.
//
//   unsupervised:  s_unsup = lo + (hi - lo) * mean(normalized)
//   supervised:    s_sup   = (1 - alpha) * s_unsup + alpha * f(p)
//
// where f is an extra-trees regressor fitted per session on the training
// models' annotations, and alpha measures how close that session's
// annotation histogram is to uniform:
//
//   alpha = clamp((eps - KL(P_r || U)) / eps, 0, 1),  eps = ln(bins).

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rocketeval/error.hpp"
#include "rocketeval/extra_trees.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

// Normalized judgments for one (session, model), one per checklist item.
struct FeatureVector {
  std::string session_id;
  std::string model_id;
  std::vector<double> values;

  bool operator==(const FeatureVector&) const = default;
};

inline ScoreRecord UnsupervisedScore(std::span<const JudgmentRecord> judgments,
                                     const ScoreRange& range) {
  range.Validate();
  if (judgments.empty()) throw ValidationError("unsupervised score: no judgments");
  const auto& first = judgments.front();
  double sum = 0.0;
  for (const auto& j : judgments) {
    if (j.session_id != first.session_id || j.model_id != first.model_id) {
      throw ValidationError("unsupervised score: judgments span several (session, model) pairs");
    }
    sum += j.normalized;
  }
  const double mean = sum / static_cast<double>(judgments.size());
  return {first.session_id, first.model_id, ScoreMode::kChecklistUnsup,
          range.lo + (range.hi - range.lo) * mean, {}};
}

struct WeightFactor {
  double alpha = 0.0;
  double kl = 0.0;
  double epsilon = 1.0;

  bool operator==(const WeightFactor&) const = default;
};

inline constexpr double kDefaultSmoothing = 1e-3;

// Equal-width bins over [lo, hi]; half-open except the top bin, which is
// closed.
inline int BinIndex(double score, const ScoreRange& range) {
  const double t = (score - range.lo) / (range.hi - range.lo);
  const int b = static_cast<int>(std::floor(t * range.bins));
  return std::clamp(b, 0, range.bins - 1);
}

inline WeightFactor ComputeWeightFactor(std::span<const double> annotations,
                                        const ScoreRange& range,
                                        double smoothing = kDefaultSmoothing) {
  range.Validate();
  if (annotations.empty()) throw ValidationError("weight factor: no annotations");
  if (!(smoothing >= 0.0)) throw ValidationError("weight factor: smoothing must be >= 0");
  std::vector<double> counts(static_cast<std::size_t>(range.bins), 0.0);
  for (double s : annotations) {
    if (!range.contains(s)) {
      throw ValidationError("weight factor: annotation " + std::to_string(s) +
                            " outside score range");
    }
    counts[static_cast<std::size_t>(BinIndex(s, range))] += 1.0;
  }
  const double n = static_cast<double>(annotations.size());
  const double bins = static_cast<double>(range.bins);
  const double denom = n + bins * smoothing;
  double kl = 0.0;
  for (double c : counts) {
    const double p = (c + smoothing) / denom;
    if (p > 0.0) kl += p * std::log(p * bins);
  }
  kl = std::max(0.0, kl);
  const double eps = std::log(bins);
  return {std::clamp((eps - kl) / eps, 0.0, 1.0), kl, eps};
}

// Blend of the unsupervised score and the predictor output, kept inside the
// closed interval between the two.
inline double BlendScores(double s_unsup, double predicted, double alpha) {
  const double s = (1.0 - alpha) * s_unsup + alpha * predicted;
  return std::clamp(s, std::min(s_unsup, predicted), std::max(s_unsup, predicted));
}

inline ScoreRecord SupervisedScore(const FeatureVector& p, const TreeEnsemble& ensemble,
                                   const WeightFactor& wf, double s_unsup) {
  return {p.session_id, p.model_id, ScoreMode::kChecklistSup,
          BlendScores(s_unsup, ensemble.Predict(p.values), wf.alpha), {}};
}

// ---- pipeline ----------------------------------------------------------------

using ResponseKey = std::pair<std::string, std::string>;  // (session, model)

// Groups judgments by (session, model).
inline std::map<ResponseKey, std::vector<JudgmentRecord>> GroupJudgments(
    std::span<const JudgmentRecord> judgments) {
  std::map<ResponseKey, std::vector<JudgmentRecord>> out;
  for (const auto& j : judgments) out[{j.session_id, j.model_id}].push_back(j);
  for (auto& [key, v] : out) {
    std::sort(v.begin(), v.end(), [](const JudgmentRecord& a, const JudgmentRecord& b) {
      return a.item_index < b.item_index;
    });
  }
  return out;
}

// One value per checklist item. Items without a judgment (failed requests)
// take the neutral 0.5, the same value an unreadable answer gets.
inline FeatureVector BuildFeatureVector(const std::vector<JudgmentRecord>& judgments,
                                        std::size_t checklist_size) {
  if (judgments.empty()) throw ValidationError("feature vector: no judgments");
  FeatureVector f{judgments.front().session_id, judgments.front().model_id,
                  std::vector<double>(checklist_size, 0.5)};
  for (const auto& j : judgments) {
    if (j.item_index < 1 || static_cast<std::size_t>(j.item_index) > checklist_size) {
      throw ValidationError("judgment item " + std::to_string(j.item_index) + " outside checklist of " +
                            std::to_string(checklist_size) + " for " + j.session_id);
    }
    f.values[static_cast<std::size_t>(j.item_index - 1)] = j.normalized;
  }
  return f;
}

struct SessionPredictor {
  std::string session_id;
  WeightFactor weight;
  std::optional<TreeEnsemble> ensemble;  // empty when the session had no training rows
};

struct SupervisedSetup {
  std::set<std::string> train_models;
  ExtraTreesParams params;  // params.seed is the master seed
  double smoothing = kDefaultSmoothing;
};

// Hard error when a model is both trained on and evaluated.
inline void CheckDisjoint(const std::set<std::string>& train, const std::set<std::string>& eval,
                          bool allow_overlap) {
  std::vector<std::string> both;
  std::set_intersection(train.begin(), train.end(), eval.begin(), eval.end(),
                        std::back_inserter(both));
  if (!both.empty() && !allow_overlap) {
    std::string names;
    for (const auto& m : both) names += (names.empty() ? "" : ", ") + m;
    throw ValidationError("train and eval model sets overlap: " + names);
  }
}

// One predictor and weight factor per session, fitted on the training
// models' feature vectors against their annotations.
inline std::map<std::string, SessionPredictor> FitSessionPredictors(
    const std::map<ResponseKey, FeatureVector>& features,
    std::span<const Annotation> annotations, const ScoreRange& range,
    const SupervisedSetup& setup) {
  std::map<std::string, std::vector<std::pair<const FeatureVector*, double>>> rows;
  for (const auto& a : annotations) {
    if (!setup.train_models.contains(a.model_id)) continue;
    if (!range.contains(a.score)) {
      throw ValidationError("annotation " + std::to_string(a.score) + " for (" + a.session_id +
                            ", " + a.model_id + ") outside score range");
    }
    auto it = features.find({a.session_id, a.model_id});
    if (it == features.end()) continue;
    rows[a.session_id].emplace_back(&it->second, a.score);
  }
  std::map<std::string, SessionPredictor> out;
  for (const auto& [session, pairs] : rows) {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& [f, label] : pairs) {
      x.push_back(f->values);
      y.push_back(label);
    }
    ExtraTreesParams params = setup.params;
    params.seed = DeriveKey(setup.params.seed, StableHash64({session}));
    out[session] = {session, ComputeWeightFactor(y, range, setup.smoothing),
                    TreeEnsemble::Fit(x, y, params)};
  }
  return out;
}

// Scores for `eval_models` (all models when empty). Sessions without a
// predictor fall back to alpha = 0, i.e. the unsupervised score.
inline std::vector<ScoreRecord> ScoreResponses(
    std::span<const JudgmentRecord> judgments, const std::map<std::string, std::size_t>& checklist_sizes,
    const ScoreRange& range, const std::set<std::string>& eval_models,
    const std::map<std::string, SessionPredictor>* predictors = nullptr) {
  std::vector<ScoreRecord> out;
  for (const auto& [key, js] : GroupJudgments(judgments)) {
    if (!eval_models.empty() && !eval_models.contains(key.second)) continue;
    const ScoreRecord unsup = UnsupervisedScore(js, range);
    if (predictors == nullptr) {
      out.push_back(unsup);
      continue;
    }
    auto size_it = checklist_sizes.find(key.first);
    if (size_it == checklist_sizes.end()) {
      throw ValidationError("no checklist for session " + key.first);
    }
    auto pred = predictors->find(key.first);
    if (pred == predictors->end() || !pred->second.ensemble) {
      out.push_back({key.first, key.second, ScoreMode::kChecklistSup, unsup.score, {}});
      continue;
    }
    out.push_back(SupervisedScore(BuildFeatureVector(js, size_it->second),
                                  *pred->second.ensemble, pred->second.weight, unsup.score));
  }
  return out;
}

// Versioned predictor file: one line per session with the weight factor,
// item weights and the serialized ensemble.
inline void WritePredictors(const std::filesystem::path& path,
                            const std::map<std::string, SessionPredictor>& predictors) {
  std::vector<Json> rows;
  for (const auto& [session, p] : predictors) {
    Json j = {{"session_id", session},
              {"version", TreeEnsemble::kFormatVersion},
              {"alpha", p.weight.alpha},
              {"kl", p.weight.kl},
              {"epsilon", p.weight.epsilon}};
    if (p.ensemble) {
      j["item_weights"] = p.ensemble->ItemWeights();
      j["ensemble"] = p.ensemble->ToJson();
    }
    rows.push_back(std::move(j));
  }
  jsonl::Write(path, rows);
}

inline std::map<std::string, SessionPredictor> LoadPredictors(const std::filesystem::path& path) {
  std::map<std::string, SessionPredictor> out;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t) {
    SessionPredictor p;
    p.session_id = jsonl::RequireString(j, "session_id");
    p.weight = {jsonl::RequireNumber(j, "alpha"), jsonl::RequireNumber(j, "kl"),
                jsonl::RequireNumber(j, "epsilon")};
    if (auto it = j.find("ensemble"); it != j.end()) p.ensemble = TreeEnsemble::FromJson(*it);
    out[p.session_id] = std::move(p);
  });
  return out;
}

}  // namespace rocketeval
