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

// Pairwise outcomes from scores, agreement with gold preferences and rank
// correlations (average-rank Spearman, Kendall tau-b).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rocketeval/error.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

inline constexpr double kDefaultTieEps = 0.1;

// Score differences within this many units of rounding of the tie margin
// count as exactly the margin. Without it 5.1 - 5.0 evaluates to
// 0.09999999999999964 and a difference of exactly 0.1 would become a tie.
inline constexpr double kTieSlack = 1e-9;

// Tie when |a - b| is strictly below tie_eps; otherwise the higher score wins.
inline MatchResult PairwiseFromScores(double score_a, double score_b,
                                      double tie_eps = kDefaultTieEps) {
  if (!std::isfinite(score_a) || !std::isfinite(score_b)) {
    throw ValidationError("pairwise comparison of non-finite scores");
  }
  const double diff = std::abs(score_a - score_b);
  const double scale = std::max({1.0, std::abs(score_a), std::abs(score_b)});
  if (diff < tie_eps - kTieSlack * scale) return MatchResult::kTie;
  return score_a > score_b ? MatchResult::kAWins : MatchResult::kBWins;
}

// One outcome per session and unordered model pair with both scores present.
// Pairs are emitted with model_a < model_b.
inline std::vector<MatchOutcome> ScoresToMatches(std::span<const ScoreRecord> scores,
                                                 double tie_eps = kDefaultTieEps) {
  if (scores.empty()) throw ValidationError("scores_to_matches: empty score table");
  std::map<std::string, std::map<std::string, double>> table;
  for (const auto& s : scores) {
    if (!table[s.session_id].emplace(s.model_id, s.score).second) {
      throw ValidationError("duplicate score for (" + s.session_id + ", " + s.model_id + ")");
    }
  }
  std::vector<MatchOutcome> out;
  for (const auto& [session, models] : table) {
    for (auto a = models.begin(); a != models.end(); ++a) {
      for (auto b = std::next(a); b != models.end(); ++b) {
        out.push_back({session, a->first, b->first,
                       PairwiseFromScores(a->second, b->second, tie_eps)});
      }
    }
  }
  return out;
}

// Fraction of gold outcomes whose predicted counterpart has the same result
// (tie is its own class). Pairs align on (session, {model_a, model_b}); a
// predicted pair stored in the other orientation is mirrored. Every gold
// pair must have a prediction.
inline double Agreement(std::span<const MatchOutcome> predicted,
                        std::span<const MatchOutcome> gold) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, MatchResult> pred;
  for (const auto& m : predicted) {
    const bool swap = m.model_b < m.model_a;
    Key k{m.session_id, swap ? m.model_b : m.model_a, swap ? m.model_a : m.model_b};
    if (!pred.emplace(k, swap ? Mirror(m.result) : m.result).second) {
      throw ValidationError("duplicate predicted pair (" + m.session_id + ", " + m.model_a + ", " +
                            m.model_b + ")");
    }
  }
  if (gold.empty()) throw ValidationError("agreement: no gold pairs");
  std::size_t same = 0;
  for (const auto& g : gold) {
    const bool swap = g.model_b < g.model_a;
    Key k{g.session_id, swap ? g.model_b : g.model_a, swap ? g.model_a : g.model_b};
    auto it = pred.find(k);
    if (it == pred.end()) {
      throw ValidationError("agreement: no prediction for (" + g.session_id + ", " + g.model_a +
                            ", " + g.model_b + ")");
    }
    if (it->second == (swap ? Mirror(g.result) : g.result)) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(gold.size());
}

// 1-based ranks, tied values sharing the mean of their positions.
inline std::vector<double> AverageRanks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace detail {

inline void CheckPaired(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ValidationError("rank correlation: length mismatch (" + std::to_string(xs.size()) +
                          " vs " + std::to_string(ys.size()) + ")");
  }
  if (xs.size() < 2) throw ValidationError("rank correlation: need at least 2 pairs");
}

}  // namespace detail

// Pearson correlation of average ranks.
inline double Spearman(std::span<const double> xs, std::span<const double> ys) {
  detail::CheckPaired(xs, ys);
  const auto rx = AverageRanks(xs);
  const auto ry = AverageRanks(ys);
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  // Ranks are multiples of 1/2, so these sums are exact for any realistic n.
  const double cov = n * sxy - sx * sy;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  if (vx <= 0.0 || vy <= 0.0) throw ValidationError("spearman: zero rank variance");
  return cov / std::sqrt(vx * vy);
}

// Kendall tau-b, O(n log n) (Knight 1966).
inline double KendallTau(std::span<const double> xs, std::span<const double> ys) {
  detail::CheckPaired(xs, ys);
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
  });

  const auto pairs = [](std::int64_t m) { return m * (m - 1) / 2; };
  std::int64_t tied_x = 0, tied_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    tied_x += pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t k = i; k < j;) {
      std::size_t l = k;
      while (l < j && ys[order[l]] == ys[order[k]]) ++l;
      tied_xy += pairs(static_cast<std::int64_t>(l - k));
      k = l;
    }
    i = j;
  }

  // Merge sort on y counting inversions (discordant pairs).
  std::vector<double> y(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = ys[order[i]];
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, k = lo;
      while (a < mid && b < hi) {
        if (y[b] < y[a]) {
          buf[k++] = y[b++];
          swaps += static_cast<std::int64_t>(mid - a);
        } else {
          buf[k++] = y[a++];
        }
      }
      while (a < mid) buf[k++] = y[a++];
      while (b < hi) buf[k++] = y[b++];
    }
    std::swap(y, buf);
  }

  std::int64_t tied_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && y[j] == y[i]) ++j;
    tied_y += pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  const std::int64_t total = pairs(static_cast<std::int64_t>(n));
  if (total == tied_x || total == tied_y) throw ValidationError("kendall tau: zero variance");
  const std::int64_t concordant_minus_discordant = total - tied_x - tied_y + tied_xy - 2 * swaps;
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(total - tied_x) * static_cast<double>(total - tied_y));
}

// ---- per-model aggregation -------------------------------------------------

struct ModelSummary {
  std::string model_id;
  double mean_score = 0.0;
  std::size_t n_sessions = 0;
  int rank = 0;  // 1 = best; equal means share the better rank
};

// Mean score per model, sorted best first.
inline std::vector<ModelSummary> SummarizeModels(std::span<const ScoreRecord> scores) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : scores) {
    auto& [sum, n] = acc[s.model_id];
    sum += s.score;
    ++n;
  }
  std::vector<ModelSummary> out;
  for (const auto& [m, v] : acc) {
    out.push_back({m, v.first / static_cast<double>(v.second), v.second, 0});
  }
  std::stable_sort(out.begin(), out.end(), [](const ModelSummary& a, const ModelSummary& b) {
    return a.mean_score > b.mean_score;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = (i > 0 && out[i].mean_score == out[i - 1].mean_score)
                      ? out[i - 1].rank
                      : static_cast<int>(i + 1);
  }
  return out;
}

// `model_id,rating` lines; a first line whose rating is not numeric is
// taken as a header.
inline std::map<std::string, double> LoadGroundTruth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ParseError(path.string(), line_no, "expected model_id,rating");
    }
    const std::string model = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    double rating = 0.0;
    try {
      std::size_t used = 0;
      rating = std::stod(value, &used);
      if (value.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      if (out.empty() && line_no == 1) continue;  // header
      throw ParseError(path.string(), line_no, "rating '" + value + "' is not a number");
    }
    if (!out.emplace(model, rating).second) {
      throw ParseError(path.string(), line_no, "duplicate model '" + model + "'");
    }
  }
  return out;
}

struct CorrelationSummary {
  double kendall_tau = 0.0;
  double spearman = 0.0;
  std::size_t n_models = 0;
};

// Correlates per-model mean scores with a ground-truth rating over the
// models present in both.
inline CorrelationSummary CorrelateWithGroundTruth(std::span<const ModelSummary> models,
                                                   const std::map<std::string, double>& truth) {
  std::vector<double> xs, ys;
  for (const auto& m : models) {
    if (auto it = truth.find(m.model_id); it != truth.end()) {
      xs.push_back(m.mean_score);
      ys.push_back(it->second);
    }
  }
  if (xs.size() < 2) {
    throw ValidationError("ground truth shares fewer than 2 models with the scores");
  }
  return {KendallTau(xs, ys), Spearman(xs, ys), xs.size()};
}

}  // namespace rocketeval
