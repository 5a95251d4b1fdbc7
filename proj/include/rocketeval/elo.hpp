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

// Bradley-Terry maximum-likelihood Elo with percentile bootstrap intervals.
//
//   P(a beats b) = 1 / (1 + exp(-(theta_a - theta_b)))
//   rating       = anchor + scale * (theta - mean(theta))
//
// A tie counts as half a win for each side. The objective carries a small
// l2 penalty so an undefeated model still has a finite maximum.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rocketeval/error.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/parallel.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

struct EloOptions {
  double scale = 400.0 / std::numbers::ln10;
  double anchor = 1000.0;
  double l2 = 1e-6;
  double tolerance = 1e-9;  // gradient max-norm
  int max_iterations = 10'000;
};

namespace detail {

// Wins (ties as halves) between indexed models.
struct WinTable {
  std::vector<std::string> models;
  Eigen::MatrixXd wins;  // wins(i, j): games i won against j
  std::vector<double> games_played;
};

inline WinTable Tabulate(std::span<const MatchOutcome> matches,
                         const std::vector<std::string>& models,
                         std::span<const std::size_t> picks) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < models.size(); ++i) {
    index.emplace(models[i], static_cast<Eigen::Index>(i));
  }
  const auto n = static_cast<Eigen::Index>(models.size());
  WinTable t{models, Eigen::MatrixXd::Zero(n, n), std::vector<double>(models.size(), 0.0)};
  for (std::size_t pick : picks) {
    const auto& m = matches[pick];
    const Eigen::Index a = index.at(m.model_a);
    const Eigen::Index b = index.at(m.model_b);
    switch (m.result) {
      case MatchResult::kAWins: t.wins(a, b) += 1.0; break;
      case MatchResult::kBWins: t.wins(b, a) += 1.0; break;
      case MatchResult::kTie:
        t.wins(a, b) += 0.5;
        t.wins(b, a) += 0.5;
        break;
    }
    t.games_played[static_cast<std::size_t>(a)] += 1.0;
    t.games_played[static_cast<std::size_t>(b)] += 1.0;
  }
  return t;
}

inline double LogSigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double Objective(const Eigen::MatrixXd& wins, const Eigen::VectorXd& theta, double l2) {
  double f = -l2 * theta.squaredNorm();
  for (Eigen::Index i = 0; i < wins.rows(); ++i) {
    for (Eigen::Index j = 0; j < wins.cols(); ++j) {
      if (wins(i, j) > 0.0) f += wins(i, j) * LogSigmoid(theta(i) - theta(j));
    }
  }
  return f;
}

// Damped Newton ascent. Returns theta; throws ConvergenceError.
inline Eigen::VectorXd SolveTheta(const Eigen::MatrixXd& wins, const EloOptions& opt) {
  const Eigen::Index n = wins.rows();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  double grad_norm = 0.0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    Eigen::VectorXd grad = -2.0 * opt.l2 * theta;
    Eigen::MatrixXd hess = 2.0 * opt.l2 * Eigen::MatrixXd::Identity(n, n);  // negated Hessian
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double games = wins(i, j) + wins(j, i);
        if (games == 0.0) continue;
        const double p = Sigmoid(theta(i) - theta(j));
        const double g = wins(i, j) - games * p;
        const double h = games * p * (1.0 - p);
        grad(i) += g;
        grad(j) -= g;
        hess(i, i) += h;
        hess(j, j) += h;
        hess(i, j) -= h;
        hess(j, i) -= h;
      }
    }
    grad_norm = grad.cwiseAbs().maxCoeff();
    if (grad_norm < opt.tolerance) return theta;

    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    const double f0 = Objective(wins, theta, opt.l2);
    double t = 1.0;
    Eigen::VectorXd next = theta + step;
    for (int halvings = 0; halvings < 40; ++halvings) {
      const double f1 = Objective(wins, next, opt.l2);
      if (f1 >= f0 - 1e-12 * std::max(1.0, std::abs(f0))) break;
      t *= 0.5;
      next = theta + t * step;
    }
    theta = next;
  }
  std::ostringstream msg;
  msg << "bradley-terry fit did not converge in " << opt.max_iterations
      << " iterations (gradient max-norm " << grad_norm << ")";
  throw ConvergenceError(msg.str());
}

inline std::vector<std::string> ModelsOf(std::span<const MatchOutcome> matches) {
  std::vector<std::string> models;
  for (const auto& m : matches) {
    if (m.model_a == m.model_b) {
      throw ValidationError("match of model '" + m.model_a + "' against itself");
    }
    models.push_back(m.model_a);
    models.push_back(m.model_b);
  }
  std::sort(models.begin(), models.end());
  models.erase(std::unique(models.begin(), models.end()), models.end());
  return models;
}

// Ratings for models that played at least once; others stay NaN.
inline std::vector<double> FitRatings(std::span<const MatchOutcome> matches,
                                      const std::vector<std::string>& models,
                                      std::span<const std::size_t> picks, const EloOptions& opt) {
  const WinTable all = Tabulate(matches, models, picks);
  std::vector<Eigen::Index> present;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (all.games_played[i] > 0.0) present.push_back(static_cast<Eigen::Index>(i));
  }
  const auto k = static_cast<Eigen::Index>(present.size());
  Eigen::MatrixXd wins(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) wins(r, c) = all.wins(present[r], present[c]);
  }
  const Eigen::VectorXd theta = SolveTheta(wins, opt);
  const double mean = theta.mean();
  std::vector<double> out(models.size(), std::nan(""));
  for (Eigen::Index r = 0; r < k; ++r) {
    out[static_cast<std::size_t>(present[r])] = opt.anchor + opt.scale * (theta(r) - mean);
  }
  return out;
}

// Linear interpolation between closest ranks; `sorted` is non-empty.
inline double Percentile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

// Point ratings, sorted by model id; ci_low = ci_high = rating.
inline std::vector<EloRating> FitBtElo(std::span<const MatchOutcome> matches,
                                       const EloOptions& opt = {}) {
  if (matches.empty()) throw ValidationError("elo: no matches");
  const auto models = detail::ModelsOf(matches);
  std::vector<std::size_t> all(matches.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto ratings = detail::FitRatings(matches, models, all, opt);
  std::vector<EloRating> out;
  for (std::size_t i = 0; i < models.size(); ++i) {
    out.push_back({models[i], ratings[i], ratings[i], ratings[i]});
  }
  return out;
}

// Same as FitBtElo over an explicit model list; a listed model with no
// matches is an error.
inline std::vector<EloRating> FitBtElo(std::span<const MatchOutcome> matches,
                                       const std::vector<std::string>& models,
                                       const EloOptions& opt = {}) {
  const auto played = detail::ModelsOf(matches);
  for (const auto& m : models) {
    if (!std::binary_search(played.begin(), played.end(), m)) {
      throw ValidationError("elo: model '" + m + "' has no matches");
    }
  }
  for (const auto& m : played) {
    if (std::find(models.begin(), models.end(), m) == models.end()) {
      throw ValidationError("elo: match involves unlisted model '" + m + "'");
    }
  }
  return FitBtElo(matches, opt);
}

inline constexpr int kDefaultBootstrapRounds = 200;

// Full-data point estimate with 2.5/97.5 percentile bounds over `rounds`
// resamples of the matches. Round r draws from DeriveKey(seed, r), so the
// result does not depend on thread scheduling. A model absent from a
// resample is left out of that round's percentiles.
inline std::vector<EloRating> BootstrapElo(std::span<const MatchOutcome> matches, int rounds,
                                           std::uint64_t seed, const EloOptions& opt = {},
                                           std::size_t workers = 0) {
  if (rounds < 1) throw ValidationError("bootstrap: rounds must be >= 1");
  auto out = FitBtElo(matches, opt);
  const auto models = detail::ModelsOf(matches);
  std::vector<std::vector<double>> per_round(static_cast<std::size_t>(rounds));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  ParallelFor(per_round.size(), workers, [&](std::size_t r) {
    KeyedRng rng(DeriveKey(seed, static_cast<std::uint64_t>(r)));
    std::vector<std::size_t> picks(matches.size());
    for (auto& p : picks) p = static_cast<std::size_t>(rng.NextBelow(matches.size()));
    per_round[r] = detail::FitRatings(matches, models, picks, opt);
  });
  for (std::size_t i = 0; i < models.size(); ++i) {
    std::vector<double> samples;
    for (const auto& round : per_round) {
      if (!std::isnan(round[i])) samples.push_back(round[i]);
    }
    if (samples.empty()) continue;
    std::sort(samples.begin(), samples.end());
    out[i].ci_low = detail::Percentile(samples, 0.025);
    out[i].ci_high = detail::Percentile(samples, 0.975);
  }
  return out;
}

}  // namespace rocketeval
