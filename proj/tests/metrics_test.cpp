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
#include <cstdint>
#include <random>

#include "rocketeval/elo.hpp"
#include "rocketeval/metrics.hpp"
#include "support.hpp"

namespace rocketeval {
namespace {

using testing::TempDir;
using testing::WriteText;

// ---- pairwise ---------------------------------------------------------------

TEST(PairwiseFromScores, Examples) {
  EXPECT_EQ(PairwiseFromScores(7.0, 7.05), MatchResult::kTie);
  EXPECT_EQ(PairwiseFromScores(8.2, 6.0), MatchResult::kAWins);
  EXPECT_EQ(PairwiseFromScores(5.0, 5.1), MatchResult::kBWins);
}

TEST(PairwiseFromScores, GridBoundaryIsNeverATie) {
  // Scores on a 0.01 grid: differences of exactly 10 steps decide, 9 steps tie.
  for (int a = 0; a <= 1000; a += 7) {
    const double x = a / 100.0;
    EXPECT_EQ(PairwiseFromScores(x, (a + 10) / 100.0), MatchResult::kBWins) << x;
    EXPECT_EQ(PairwiseFromScores((a + 10) / 100.0, x), MatchResult::kAWins) << x;
    EXPECT_EQ(PairwiseFromScores(x, (a + 9) / 100.0), MatchResult::kTie) << x;
  }
}

TEST(PairwiseFromScores, Antisymmetric) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  const auto flip = [](MatchResult r) {
    return r == MatchResult::kAWins ? MatchResult::kBWins
           : r == MatchResult::kBWins ? MatchResult::kAWins
                                      : MatchResult::kTie;
  };
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = i % 3 == 0 ? a + 0.05 : u(rng);
    EXPECT_EQ(PairwiseFromScores(b, a), flip(PairwiseFromScores(a, b)));
  }
}

TEST(PairwiseFromScores, NonFiniteIsError) {
  EXPECT_THROW(PairwiseFromScores(NAN, 1.0), ValidationError);
  EXPECT_THROW(PairwiseFromScores(1.0, INFINITY), ValidationError);
}

// ---- scores_to_matches ------------------------------------------------------

ScoreRecord Score(std::string session, std::string model, double s) {
  return {std::move(session), std::move(model), ScoreMode::kChecklistUnsup, s, {}};
}

TEST(ScoresToMatches, PairCounts) {
  EXPECT_EQ(ScoresToMatches(std::vector{Score("s", "a", 1), Score("s", "b", 2),
                                        Score("s", "c", 3)})
                .size(),
            3u);
  EXPECT_EQ(ScoresToMatches(std::vector{Score("s1", "a", 1), Score("s1", "b", 2),
                                        Score("s2", "a", 1), Score("s2", "b", 2)})
                .size(),
            2u);
  const auto ms = ScoresToMatches(std::vector{Score("s1", "a", 1), Score("s1", "b", 2),
                                              Score("s2", "a", 1), Score("s1", "c", 1.02)});
  EXPECT_EQ(ms.size(), 3u);
  for (const auto& m : ms) {
    EXPECT_EQ(m.session_id, "s1");
    EXPECT_LT(m.model_a, m.model_b);
  }
}

TEST(ScoresToMatches, DuplicateAndEmptyAreErrors) {
  EXPECT_THROW(ScoresToMatches(std::vector{Score("s", "a", 1), Score("s", "a", 2)}),
               ValidationError);
  EXPECT_THROW(ScoresToMatches(std::vector<ScoreRecord>{}), ValidationError);
}

// ---- agreement --------------------------------------------------------------

TEST(Agreement, IdenticalIsOne) {
  const std::vector<MatchOutcome> ms = {{"s", "a", "b", MatchResult::kAWins},
                                        {"s", "a", "c", MatchResult::kTie}};
  EXPECT_EQ(Agreement(ms, ms), 1.0);
}

TEST(Agreement, SwappedOrientationIsAligned) {
  const std::vector<MatchOutcome> p = {{"s", "b", "a", MatchResult::kBWins}};
  const std::vector<MatchOutcome> g = {{"s", "a", "b", MatchResult::kAWins}};
  EXPECT_EQ(Agreement(p, g), 1.0);
}

TEST(Agreement, UniformRandomClassesNearOneThird) {
  std::mt19937_64 rng(5);
  std::vector<MatchOutcome> p, g;
  for (int i = 0; i < 30000; ++i) {
    const std::string s = "s" + std::to_string(i);
    p.push_back({s, "a", "b", static_cast<MatchResult>(rng() % 3)});
    g.push_back({s, "a", "b", static_cast<MatchResult>(rng() % 3)});
  }
  EXPECT_NEAR(Agreement(p, g), 1.0 / 3.0, 0.01);
}

TEST(Agreement, EmptyAndUnmatchedAreErrors) {
  const std::vector<MatchOutcome> none;
  const std::vector<MatchOutcome> g = {{"s", "a", "b", MatchResult::kTie}};
  EXPECT_THROW(Agreement(none, none), ValidationError);
  EXPECT_THROW(Agreement(none, g), ValidationError);
}

// ---- rank correlation ---------------------------------------------------------

// Exhaustive-definition oracles. Ranks are doubled so everything stays integral.
double OracleSpearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rank2 = [](const std::vector<double>& v) {
    std::vector<std::int64_t> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::int64_t less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = 2 * less + equal + 1;
    }
    return r;
  };
  const auto rx = rank2(x), ry = rank2(y);
  const auto n = static_cast<std::int64_t>(x.size());
  std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  const double cov = static_cast<double>(n * sxy - sx * sy) / 4.0;
  const double vx = static_cast<double>(n * sxx - sx * sx) / 4.0;
  const double vy = static_cast<double>(n * syy - sy * sy) / 4.0;
  return cov / std::sqrt(vx * vy);
}

double OracleKendall(const std::vector<double>& x, const std::vector<double>& y) {
  std::int64_t c = 0, d = 0, tx = 0, ty = 0, total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      ++total;
      if (x[i] == x[j]) ++tx;
      if (y[i] == y[j]) ++ty;
      if (x[i] == x[j] || y[i] == y[j]) continue;
      ((x[i] < x[j]) == (y[i] < y[j]) ? c : d)++;
    }
  }
  return static_cast<double>(c - d) /
         std::sqrt(static_cast<double>(total - tx) * static_cast<double>(total - ty));
}

TEST(Spearman, Examples) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(Spearman(x, x), 1.0);
  EXPECT_EQ(Spearman(x, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(Spearman(x, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(KendallTau, Examples) {
  const std::vector<double> x = {1, 2, 3, 4};
  EXPECT_EQ(KendallTau(x, x), 1.0);
  EXPECT_NEAR(KendallTau(x, std::vector<double>{1, 3, 2, 4}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(KendallTau(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}),
               ValidationError);
  EXPECT_THROW(Spearman(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}),
               ValidationError);
  EXPECT_THROW(KendallTau(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}),
               ValidationError);
  EXPECT_THROW(Spearman(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}

TEST(RankCorrelation, MatchesExhaustiveOracleExactly) {
  std::mt19937_64 rng(2026);
  int checked = 0;
  while (checked < 500) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<double> x(n), y(n);
    // Few distinct values so ties are common.
    for (auto& v : x) v = static_cast<double>(rng() % 4);
    for (auto& v : y) v = static_cast<double>(rng() % 4);
    const auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double w) { return w == v[0]; });
    };
    if (constant(x) || constant(y)) continue;
    EXPECT_EQ(Spearman(x, y), OracleSpearman(x, y));
    EXPECT_EQ(KendallTau(x, y), OracleKendall(x, y));
    ++checked;
  }
}

TEST(RankCorrelation, InvariantUnderIncreasingTransforms) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng() % 30;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = std::round(z(rng) * 3.0);
    for (auto& v : y) v = z(rng);
    std::vector<double> fx(n), fy(n);
    for (std::size_t i = 0; i < n; ++i) {
      fx[i] = std::exp(x[i]) + 5.0;
      fy[i] = y[i] * y[i] * y[i] - 2.0;
    }
    double s, k;
    try {
      s = Spearman(x, y);
      k = KendallTau(x, y);
    } catch (const ValidationError&) {
      continue;
    }
    EXPECT_NEAR(Spearman(fx, fy), s, 1e-12);
    EXPECT_NEAR(KendallTau(fx, fy), k, 1e-12);
  }
}

TEST(KendallTau, LargeInputMatchesOracle) {
  std::mt19937_64 rng(4);
  std::vector<double> x(300), y(300);
  for (auto& v : x) v = static_cast<double>(rng() % 40);
  for (auto& v : y) v = static_cast<double>(rng() % 40);
  EXPECT_NEAR(KendallTau(x, y), OracleKendall(x, y), 1e-14);
}

// ---- summaries and ground truth ---------------------------------------------

TEST(SummarizeModels, RanksByMeanWithSharedTies) {
  const auto out = SummarizeModels(std::vector{Score("s1", "a", 2), Score("s2", "a", 4),
                                               Score("s1", "b", 3), Score("s1", "c", 5)});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].model_id, "c");
  EXPECT_EQ(out[0].rank, 1);
  EXPECT_EQ(out[1].rank, 2);
  EXPECT_EQ(out[2].rank, 2);
  EXPECT_EQ(out[1].model_id, "a");
  EXPECT_EQ(out[1].n_sessions, 2);
}

TEST(LoadGroundTruth, HeaderIsOptional) {
  TempDir dir;
  WriteText(dir / "a.csv", "model_id,rating\nx,1200\ny,1100.5\n");
  WriteText(dir / "b.csv", "x,1200\ny,1100.5\n");
  EXPECT_EQ(LoadGroundTruth(dir / "a.csv"), LoadGroundTruth(dir / "b.csv"));
  EXPECT_DOUBLE_EQ(LoadGroundTruth(dir / "a.csv").at("y"), 1100.5);
  WriteText(dir / "c.csv", "x,1\nx,2\n");
  EXPECT_THROW(LoadGroundTruth(dir / "c.csv"), ParseError);
  WriteText(dir / "d.csv", "x,1\ny,abc\n");
  EXPECT_THROW(LoadGroundTruth(dir / "d.csv"), ParseError);
}

TEST(CorrelateWithGroundTruth, UsesSharedModels) {
  const auto models = SummarizeModels(
      std::vector{Score("s", "a", 1), Score("s", "b", 2), Score("s", "c", 3), Score("s", "d", 4)});
  const std::map<std::string, double> truth = {{"a", 10}, {"b", 20}, {"c", 30}, {"z", 0}};
  const auto c = CorrelateWithGroundTruth(models, truth);
  EXPECT_EQ(c.n_models, 3);
  EXPECT_EQ(c.kendall_tau, 1.0);
  EXPECT_EQ(c.spearman, 1.0);
  EXPECT_THROW(CorrelateWithGroundTruth(models, {{"a", 1}}), ValidationError);
}

// ---- Bradley-Terry Elo ------------------------------------------------------

std::vector<MatchOutcome> Repeat(const std::string& a, const std::string& b, MatchResult r,
                                 int n) {
  return std::vector<MatchOutcome>(static_cast<std::size_t>(n), MatchOutcome{"s", a, b, r});
}

std::vector<MatchOutcome> Concat(std::vector<std::vector<MatchOutcome>> parts) {
  std::vector<MatchOutcome> out;
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double RatingOf(const std::vector<EloRating>& rs, const std::string& m) {
  for (const auto& r : rs) {
    if (r.model_id == m) return r.rating;
  }
  ADD_FAILURE() << "no rating for " << m;
  return NAN;
}

TEST(FitBtElo, EvenRecordGivesEqualRatings) {
  const auto rs = FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 10),
                                   Repeat("a", "b", MatchResult::kBWins, 10)}));
  EXPECT_NEAR(RatingOf(rs, "a"), RatingOf(rs, "b"), 1e-6);
  EXPECT_NEAR(RatingOf(rs, "a"), 1000.0, 1e-6);
}

// Two-player penalized log-likelihood in the gap d = theta_a - theta_b, maximized
// by a coarse-to-fine grid scan.
double GridSearchGap(double wins, double losses, double l2) {
  const auto f = [&](double d) {
    const double ls_pos = -std::log1p(std::exp(-d));
    const double ls_neg = -std::log1p(std::exp(d));
    return wins * ls_pos + losses * ls_neg - l2 * d * d / 2.0;
  };
  double lo = -10.0, hi = 10.0;
  for (int level = 0; level < 8; ++level) {
    double best = lo, best_f = f(lo);
    const double step = (hi - lo) / 1000.0;
    for (int i = 0; i <= 1000; ++i) {
      const double d = lo + step * i;
      if (f(d) > best_f) {
        best_f = f(d);
        best = d;
      }
    }
    lo = best - step;
    hi = best + step;
  }
  return (lo + hi) / 2.0;
}

TEST(FitBtElo, NineToOneMatchesGridOracle) {
  const EloOptions opt;
  const auto rs = FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 9),
                                   Repeat("a", "b", MatchResult::kBWins, 1)}),
                           opt);
  const double gap = RatingOf(rs, "a") - RatingOf(rs, "b");
  EXPECT_NEAR(gap, opt.scale * GridSearchGap(9, 1, opt.l2), 1e-4);
  EXPECT_NEAR(gap, 400.0 * std::log10(9.0), 0.5);
}

TEST(FitBtElo, SymmetricCycleGivesEqualRatings) {
  const auto rs = FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 5),
                                   Repeat("b", "c", MatchResult::kAWins, 5),
                                   Repeat("c", "a", MatchResult::kAWins, 5)}));
  EXPECT_NEAR(RatingOf(rs, "a"), RatingOf(rs, "b"), 1e-6);
  EXPECT_NEAR(RatingOf(rs, "b"), RatingOf(rs, "c"), 1e-6);
}

TEST(FitBtElo, TiesCountHalf) {
  // Two ties equal one win plus one loss.
  const auto tied = FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 3),
                                     Repeat("a", "b", MatchResult::kTie, 2)}));
  const auto split = FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 4),
                                      Repeat("a", "b", MatchResult::kBWins, 1)}));
  EXPECT_NEAR(RatingOf(tied, "a"), RatingOf(split, "a"), 1e-6);
}

TEST(FitBtElo, AllWinsStaysFinite) {
  const auto rs = FitBtElo(Repeat("a", "b", MatchResult::kAWins, 5));
  EXPECT_TRUE(std::isfinite(RatingOf(rs, "a")));
  EXPECT_GT(RatingOf(rs, "a"), RatingOf(rs, "b"));
}

TEST(FitBtElo, Errors) {
  EXPECT_THROW(FitBtElo(std::vector<MatchOutcome>{}), ValidationError);
  EXPECT_THROW(FitBtElo(Repeat("a", "a", MatchResult::kTie, 1)), ValidationError);
  EXPECT_THROW(FitBtElo(Repeat("a", "b", MatchResult::kTie, 1),
                        std::vector<std::string>{"a", "b", "c"}),
               ValidationError);
  EloOptions opt;
  opt.max_iterations = 1;
  try {
    FitBtElo(Concat({Repeat("a", "b", MatchResult::kAWins, 9),
                     Repeat("b", "c", MatchResult::kAWins, 2),
                     Repeat("a", "b", MatchResult::kBWins, 1)}),
             opt);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("gradient"), std::string::npos) << e.what();
  }
}

TEST(FitBtElo, ShiftingAllScoresLeavesRatingsUnchanged) {
  std::mt19937_64 rng(12);
  std::vector<ScoreRecord> base, shifted;
  for (int s = 0; s < 30; ++s) {
    for (int m = 0; m < 5; ++m) {
      const double v = static_cast<double>(rng() % 1000) / 100.0;
      base.push_back(Score("s" + std::to_string(s), "m" + std::to_string(m), v));
      shifted.push_back(Score("s" + std::to_string(s), "m" + std::to_string(m), v + 3.25));
    }
  }
  const auto ma = ScoresToMatches(base);
  EXPECT_EQ(ma, ScoresToMatches(shifted));
  const auto a = FitBtElo(ma);
  const auto b = FitBtElo(ScoresToMatches(shifted));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i].rating, b[i].rating, 1e-9);
}

std::vector<MatchOutcome> Mixed() {
  return Concat({Repeat("a", "b", MatchResult::kAWins, 6), Repeat("a", "b", MatchResult::kBWins, 3),
                 Repeat("b", "c", MatchResult::kAWins, 5), Repeat("b", "c", MatchResult::kTie, 2),
                 Repeat("a", "c", MatchResult::kAWins, 4),
                 Repeat("a", "c", MatchResult::kBWins, 1)});
}

TEST(BootstrapElo, SameSeedIsBitIdenticalAcrossWorkerCounts) {
  const auto ms = Mixed();
  const auto one = BootstrapElo(ms, 60, 99, {}, 1);
  EXPECT_EQ(one, BootstrapElo(ms, 60, 99, {}, 4));
  EXPECT_NE(one, BootstrapElo(ms, 60, 100, {}, 1));
}

TEST(BootstrapElo, PointEstimateIsFullDataFit) {
  const auto ms = Mixed();
  const auto boot = BootstrapElo(ms, 40, 1);
  const auto point = FitBtElo(ms);
  for (std::size_t i = 0; i < boot.size(); ++i) {
    EXPECT_EQ(boot[i].rating, point[i].rating);
    EXPECT_LE(boot[i].ci_low, boot[i].ci_high);
  }
}

TEST(BootstrapElo, OneRoundCollapsesInterval) {
  const auto rs = BootstrapElo(Mixed(), 1, 3);
  for (const auto& r : rs) EXPECT_EQ(r.ci_low, r.ci_high);
}

TEST(BootstrapElo, SymmetricPairMirrorsAboutAnchor) {
  const auto rs = BootstrapElo(Concat({Repeat("a", "b", MatchResult::kAWins, 10),
                                       Repeat("a", "b", MatchResult::kBWins, 10)}),
                               200, 17);
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_NEAR(rs[0].ci_low - 1000.0, 1000.0 - rs[1].ci_high, 1e-6);
  EXPECT_NEAR(rs[0].ci_high - 1000.0, 1000.0 - rs[1].ci_low, 1e-6);
  EXPECT_LT(rs[0].ci_low, 1000.0);
  EXPECT_GT(rs[0].ci_high, 1000.0);
}

TEST(BootstrapElo, ZeroRoundsIsError) {
  EXPECT_THROW(BootstrapElo(Mixed(), 0, 1), ValidationError);
}

}  // namespace
}  // namespace rocketeval
