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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "rocketeval/extra_trees.hpp"
#include "rocketeval/scoring.hpp"
#include "support.hpp"

namespace rocketeval {
namespace {

using testing::TempDir;

// Smoothed KL to uniform from explicit bin edges, written independently of
// the library's bin arithmetic.
double OracleKl(const std::vector<double>& xs, double lo, double hi, int bins, double lambda) {
  std::vector<double> edges;
  for (int b = 0; b <= bins; ++b) edges.push_back(lo + (hi - lo) * b / bins);
  std::vector<long double> counts(bins, 0.0L);
  for (double x : xs) {
    int b = 0;
    while (b < bins - 1 && x >= edges[b + 1]) ++b;
    counts[b] += 1.0L;
  }
  long double kl = 0.0L;
  const long double n = xs.size();
  for (int b = 0; b < bins; ++b) {
    const long double p = (counts[b] + lambda) / (n + bins * lambda);
    if (p > 0) kl += p * std::log(p / (1.0L / bins));
  }
  return static_cast<double>(kl);
}

JudgmentRecord J(std::string session, std::string model, int item, double normalized) {
  JudgmentRecord r;
  r.judge_id = "j";
  r.session_id = std::move(session);
  r.model_id = std::move(model);
  r.item_index = item;
  r.p_yes = normalized * 0.5;
  r.p_no = (1 - normalized) * 0.5;
  r.normalized = normalized;
  r.extraction_status = ExtractionStatus::kBothFound;
  r.prompt_hash = "h";
  return r;
}

TEST(UnsupervisedScore, MapsMeanOntoRange) {
  const std::vector<JudgmentRecord> js = {J("s", "m", 1, 1.0), J("s", "m", 2, 0.0),
                                          J("s", "m", 3, 0.5)};
  EXPECT_DOUBLE_EQ(UnsupervisedScore(js, {1, 10, 10}).score, 5.5);
  const std::vector<JudgmentRecord> all_yes = {J("s", "m", 1, 1.0), J("s", "m", 2, 1.0)};
  EXPECT_DOUBLE_EQ(UnsupervisedScore(all_yes, {1, 10, 10}).score, 10.0);
  EXPECT_THROW(UnsupervisedScore({}, {1, 10, 10}), ValidationError);
}

TEST(UnsupervisedScore, RejectsMixedResponses) {
  const std::vector<JudgmentRecord> js = {J("s", "m", 1, 1.0), J("s", "n", 2, 0.0)};
  EXPECT_THROW(UnsupervisedScore(js, {1, 10, 10}), ValidationError);
}

TEST(BinIndex, HalfOpenWithClosedTopBin) {
  const ScoreRange r{1, 10, 10};
  EXPECT_EQ(BinIndex(1.0, r), 0);
  EXPECT_EQ(BinIndex(1.95, r), 1);
  EXPECT_EQ(BinIndex(1.85, r), 0);
  EXPECT_EQ(BinIndex(10.0, r), 9);
  EXPECT_EQ(BinIndex(9.99, r), 9);
}

TEST(WeightFactor, UniformAnnotationsGiveAlphaOne) {
  std::vector<double> xs;
  for (int b = 0; b < 10; ++b) xs.push_back(1.0 + 0.9 * b + 0.45);
  EXPECT_NEAR(ComputeWeightFactor(xs, {1, 10, 10}).alpha, 1.0, 1e-9);
}

TEST(WeightFactor, PointMassWithoutSmoothingGivesAlphaZero) {
  const std::vector<double> xs(7, 6.0);
  EXPECT_EQ(ComputeWeightFactor(xs, {1, 10, 10}, 0.0).alpha, 0.0);
}

TEST(WeightFactor, TenIdenticalAnnotationsMatchOracle) {
  const std::vector<double> xs(10, 8.0);
  const auto wf = ComputeWeightFactor(xs, {1, 10, 10}, 1e-3);
  const double kl = OracleKl(xs, 1, 10, 10, 1e-3);
  EXPECT_NEAR(wf.kl, kl, 1e-12);
  EXPECT_NEAR(wf.alpha, (std::log(10.0) - kl) / std::log(10.0), 1e-12);
  EXPECT_NEAR(wf.alpha, 0.003987092844364092, 1e-12);
  EXPECT_LT(wf.alpha, 0.02);
}

TEST(WeightFactor, MatchesOracleOnRandomHistograms) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> xs(1 + rng() % 40);
    for (double& x : xs) x = u(rng);
    const double lambda = (trial % 3) * 1e-3;
    const auto wf = ComputeWeightFactor(xs, {1, 10, 10}, lambda);
    EXPECT_NEAR(wf.kl, OracleKl(xs, 1, 10, 10, lambda), 1e-12);
    EXPECT_GE(wf.alpha, 0.0);
    EXPECT_LE(wf.alpha, 1.0);
  }
}

TEST(WeightFactor, NonIncreasingAsMassConcentrates) {
  // Step k moves k of 10 annotations from their own bin onto bin 5.
  double previous = 2.0;
  for (int k = 0; k <= 9; ++k) {
    std::vector<double> xs;
    for (int b = 0; b < 10; ++b) xs.push_back(1.0 + 0.9 * (b < k ? 5 : b) + 0.45);
    const double alpha = ComputeWeightFactor(xs, {1, 10, 10}).alpha;
    EXPECT_LE(alpha, previous + 1e-15) << "step " << k;
    previous = alpha;
  }
}

TEST(WeightFactor, OutOfRangeAnnotationIsError) {
  const std::vector<double> xs = {0.5};
  EXPECT_THROW(ComputeWeightFactor(xs, {1, 10, 10}), ValidationError);
}

TEST(BlendScores, StaysBetweenInputsAndHitsEndpoints) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> s(1, 10), a(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double u = s(rng), p = s(rng), alpha = a(rng);
    const double b = BlendScores(u, p, alpha);
    EXPECT_GE(b, std::min(u, p));
    EXPECT_LE(b, std::max(u, p));
    EXPECT_EQ(BlendScores(u, p, 0.0), u);
    EXPECT_EQ(BlendScores(u, p, 1.0), p);
  }
}

// ---- extra trees --------------------------------------------------------------

std::vector<std::vector<double>> RandomRows(std::mt19937_64& rng, int n, int d) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (double& v : r) v = u(rng);
  }
  return rows;
}

ExtraTreesParams Params(std::uint64_t seed, int n_trees = 50) {
  ExtraTreesParams p;
  p.n_trees = n_trees;
  p.seed = seed;
  return p;
}

TEST(ExtraTrees, ConstantLabelsPredictConstant) {
  std::mt19937_64 rng(1);
  const auto rows = RandomRows(rng, 15, 4);
  const std::vector<double> y(15, 6.25);
  const auto e = TreeEnsemble::Fit(rows, y, Params(3));
  for (const auto& q : RandomRows(rng, 50, 4)) EXPECT_EQ(e.Predict(q), 6.25);
  EXPECT_EQ(e.ItemWeights(), std::vector<double>(4, 0.25));
}

TEST(ExtraTrees, SingleRowPredictsItsLabel) {
  const std::vector<std::vector<double>> rows = {{0.2, 0.9, 0.4}};
  const std::vector<double> y = {7.5};
  const auto e = TreeEnsemble::Fit(rows, y, Params(9));
  EXPECT_EQ(e.Predict(std::vector<double>{0.9, 0.1, 0.0}), 7.5);
}

TEST(ExtraTrees, PredictionsStayInLabelRange) {
  std::mt19937_64 rng(2);
  const auto rows = RandomRows(rng, 30, 6);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1 + 9 * r[0] * r[1]);
  const auto e = TreeEnsemble::Fit(rows, y, Params(4));
  const double lo = *std::min_element(y.begin(), y.end());
  const double hi = *std::max_element(y.begin(), y.end());
  std::uniform_real_distribution<double> wide(-5, 5);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> q(6);
    for (double& v : q) v = wide(rng);
    const double p = e.Predict(q);
    ASSERT_GE(p, lo);
    ASSERT_LE(p, hi);
  }
}

TEST(ExtraTrees, SameSeedSameModel) {
  std::mt19937_64 rng(5);
  const auto rows = RandomRows(rng, 25, 5);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(r[2] * 9 + 1);
  const auto a = TreeEnsemble::Fit(rows, y, Params(77));
  const auto b = TreeEnsemble::Fit(rows, y, Params(77));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, TreeEnsemble::Fit(rows, y, Params(78)));
}

TEST(ExtraTrees, BeatsConstantBaselineOnTrainingSet) {
  std::mt19937_64 rng(8);
  const auto rows = RandomRows(rng, 20, 6);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(std::accumulate(r.begin(), r.end(), 0.0) / 6 * 9 + 1);
  const auto e = TreeEnsemble::Fit(rows, y, Params(42, 100));
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  double mae_trees = 0, mae_const = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    mae_trees += std::abs(e.Predict(rows[i]) - y[i]);
    mae_const += std::abs(mean - y[i]);
  }
  EXPECT_LT(mae_trees, mae_const);
}

TEST(ExtraTrees, InformativeFeatureGetsLargestWeight) {
  std::mt19937_64 rng(12);
  const auto rows = RandomRows(rng, 40, 6);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1 + 9 * r[3]);
  const auto w = TreeEnsemble::Fit(rows, y, Params(5, 100)).ItemWeights();
  EXPECT_EQ(std::max_element(w.begin(), w.end()) - w.begin(), 3);
  EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
}

TEST(ExtraTrees, ColumnPermutationWithKeysGivesSamePredictions) {
  std::mt19937_64 rng(31);
  const auto rows = RandomRows(rng, 20, 5);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1 + 4 * r[0] + 5 * r[4] * r[1]);
  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  std::vector<std::uint64_t> keys, keys_perm;
  for (std::size_t j = 0; j < 5; ++j) keys.push_back(1000 + j);
  for (std::size_t j : perm) keys_perm.push_back(keys[j]);
  std::vector<std::vector<double>> permuted;
  for (const auto& r : rows) {
    std::vector<double> p;
    for (std::size_t j : perm) p.push_back(r[j]);
    permuted.push_back(p);
  }
  const auto a = TreeEnsemble::Fit(rows, y, Params(6), keys);
  const auto b = TreeEnsemble::Fit(permuted, y, Params(6), keys_perm);
  for (const auto& q : RandomRows(rng, 200, 5)) {
    std::vector<double> qp;
    for (std::size_t j : perm) qp.push_back(q[j]);
    EXPECT_EQ(a.Predict(q), b.Predict(qp));
  }
  const auto wa = a.ItemWeights(), wb = b.ItemWeights();
  for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_DOUBLE_EQ(wb[k], wa[perm[k]]);
}

TEST(ExtraTrees, SerializationRoundTrips) {
  std::mt19937_64 rng(13);
  const auto rows = RandomRows(rng, 12, 3);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1 + 9 * r[1]);
  const auto e = TreeEnsemble::Fit(rows, y, Params(2, 10));
  const auto back = TreeEnsemble::FromJson(Json::parse(e.ToJson().dump()));
  EXPECT_EQ(back, e);
  auto j = e.ToJson();
  j["version"] = TreeEnsemble::kFormatVersion + 1;
  EXPECT_THROW(TreeEnsemble::FromJson(j), ValidationError);
}

TEST(ExtraTrees, InputValidation) {
  const std::vector<std::vector<double>> rows = {{1, 2}, {1}};
  const std::vector<double> y = {1, 2};
  EXPECT_THROW(TreeEnsemble::Fit(rows, y, Params(1)), ValidationError);
  EXPECT_THROW(TreeEnsemble::Fit({}, {}, Params(1)), ValidationError);
}

// ---- per-session pipeline -----------------------------------------------------

TEST(BuildFeatureVector, MissingItemsAreNeutral) {
  const std::vector<JudgmentRecord> js = {J("s", "m", 1, 0.9), J("s", "m", 3, 0.1)};
  EXPECT_EQ(BuildFeatureVector(js, 4).values, (std::vector<double>{0.9, 0.5, 0.1, 0.5}));
  EXPECT_THROW(BuildFeatureVector(js, 2), ValidationError);
}

TEST(CheckDisjoint, OverlapNamesModels) {
  try {
    CheckDisjoint({"a", "b"}, {"b", "c"}, false);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  EXPECT_NO_THROW(CheckDisjoint({"a", "b"}, {"b", "c"}, true));
  EXPECT_NO_THROW(CheckDisjoint({"a"}, {"c"}, false));
}

TEST(SupervisedPipeline, FallsBackToUnsupervisedWithoutPredictor) {
  std::vector<JudgmentRecord> js;
  std::vector<Annotation> ann;
  std::map<ResponseKey, FeatureVector> features;
  for (int m = 0; m < 6; ++m) {
    const std::string model = "m" + std::to_string(m);
    for (int i = 1; i <= 3; ++i) js.push_back(J("s1", model, i, (m + 1) / 7.0));
    js.push_back(J("s2", model, 1, 0.5));
    ann.push_back({"s1", model, 1 + 9 * (m + 1) / 7.0});
  }
  for (const auto& [key, group] : GroupJudgments(js)) {
    features.emplace(key, BuildFeatureVector(group, key.first == "s1" ? 3 : 1));
  }
  SupervisedSetup setup{{"m0", "m1", "m2", "m3"}, Params(1, 20), kDefaultSmoothing};
  const auto preds = FitSessionPredictors(features, ann, {1, 10, 10}, setup);
  ASSERT_EQ(preds.size(), 1u);
  EXPECT_TRUE(preds.at("s1").ensemble.has_value());
  const std::map<std::string, std::size_t> sizes = {{"s1", 3}, {"s2", 1}};
  const auto scores = ScoreResponses(js, sizes, {1, 10, 10}, {"m4", "m5"}, &preds);
  ASSERT_EQ(scores.size(), 4u);
  for (const auto& s : scores) {
    EXPECT_EQ(s.mode, ScoreMode::kChecklistSup);
    if (s.session_id == "s2") EXPECT_DOUBLE_EQ(s.score, 5.5);
  }
}

TEST(SupervisedPipeline, PredictorsRoundTripThroughFile) {
  TempDir dir;
  std::mt19937_64 rng(3);
  const auto rows = RandomRows(rng, 8, 3);
  std::vector<double> y;
  for (const auto& r : rows) y.push_back(1 + 9 * r[0]);
  std::map<std::string, SessionPredictor> preds;
  preds["s1"] = {"s1", ComputeWeightFactor(y, {1, 10, 10}), TreeEnsemble::Fit(rows, y, Params(1, 5))};
  preds["s2"] = {"s2", WeightFactor{}, std::nullopt};
  WritePredictors(dir / "p.jsonl", preds);
  const auto back = LoadPredictors(dir / "p.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("s1").ensemble, preds.at("s1").ensemble);
  EXPECT_EQ(back.at("s1").weight, preds.at("s1").weight);
  EXPECT_FALSE(back.at("s2").ensemble.has_value());
  const auto rows_out = testing::ReadJsonl(dir / "p.jsonl");
  EXPECT_EQ(rows_out[0]["item_weights"].size(), 3u);
}

}  // namespace
}  // namespace rocketeval
