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

// Extremely randomized trees for regression (Geurts, Ernst & Wehenkel 2006).
//
// Every tree sees the full sample; no bootstrap. At each node up to K
// features that vary within the node are drawn, each gets one threshold
// drawn uniformly inside its node-local range, and the candidate with the
// largest squared-error reduction wins. Growth stops when a node is too
// small to give both children min_samples_leaf rows, when its labels are
// constant, or when no feature varies.
//
// Randomness is keyed, not streamed: the draws at a node are functions of
// (seed, tree index, node path, feature key). Trees therefore do not depend
// on build order or thread count, and relabelling features together with
// their keys reproduces the same trees.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/parallel.hpp"

namespace rocketeval {

struct ExtraTreesParams {
  int n_trees = 100;
  int min_samples_leaf = 1;
  // 0 selects ceil(sqrt(n_features)).
  int k_candidate_splits = 0;
  std::uint64_t seed = 0;

  bool operator==(const ExtraTreesParams&) const = default;

  int ResolvedK(std::size_t n_features) const {
    if (k_candidate_splits > 0) return k_candidate_splits;
    return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features)))));
  }
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean label of the node's rows
  std::size_t n_samples = 0;
  // Squared-error reduction achieved by this node's split (0 for leaves).
  double impurity_decrease = 0.0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  bool operator==(const RegressionTree&) const = default;

  const TreeNode& Leaf(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const TreeNode& n = nodes[i];
      i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  bool has_split() const { return nodes.size() > 1; }
};

class TreeEnsemble {
 public:
  static constexpr int kFormatVersion = 1;

  TreeEnsemble() = default;

  // Fits on `rows` (all the same length) against `labels`. `feature_keys`,
  // when given, replaces feature indices in RNG keys.
  static TreeEnsemble Fit(const std::vector<std::vector<double>>& rows,
                          std::span<const double> labels, const ExtraTreesParams& params,
                          std::span<const std::uint64_t> feature_keys = {}) {
    if (rows.empty() || rows.size() != labels.size()) {
      throw ValidationError("extra trees: need as many labels as rows (got " +
                            std::to_string(rows.size()) + " rows, " +
                            std::to_string(labels.size()) + " labels)");
    }
    const std::size_t d = rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != d) throw ValidationError("extra trees: rows differ in length");
    }
    if (params.n_trees < 1 || params.min_samples_leaf < 1 || params.k_candidate_splits < 0) {
      throw ValidationError("extra trees: invalid hyperparameters");
    }
    std::vector<std::uint64_t> keys(feature_keys.begin(), feature_keys.end());
    if (keys.empty()) {
      keys.resize(d);
      std::iota(keys.begin(), keys.end(), std::uint64_t{0});
    } else if (keys.size() != d) {
      throw ValidationError("extra trees: feature_keys length mismatch");
    }

    TreeEnsemble e;
    e.params_ = params;
    e.n_features_ = d;
    e.label_min_ = *std::min_element(labels.begin(), labels.end());
    e.label_max_ = *std::max_element(labels.begin(), labels.end());
    e.trees_.resize(static_cast<std::size_t>(params.n_trees));
    Builder builder{rows, labels, keys, params.min_samples_leaf, params.ResolvedK(d)};
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    ParallelFor(e.trees_.size(), workers, [&](std::size_t t) {
      e.trees_[t] = builder.Build(DeriveKey(params.seed, t));
    });
    return e;
  }

  // Mean over trees of the reached leaf's label mean.
  double Predict(std::span<const double> x) const {
    if (x.size() != n_features_) {
      throw ValidationError("extra trees: query has " + std::to_string(x.size()) +
                            " features, model expects " + std::to_string(n_features_));
    }
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.Leaf(x).value;
    // Each term lies in the label range; clamp only absorbs rounding.
    return std::clamp(sum / static_cast<double>(trees_.size()), label_min_, label_max_);
  }

  // Impurity-based importance per feature, summing to 1. Each split adds its
  // squared-error reduction to its feature; per-tree totals are normalised,
  // then averaged over trees that split. Uniform when nothing ever split.
  std::vector<double> ItemWeights() const {
    std::vector<double> avg(n_features_, 0.0);
    std::size_t contributing = 0;
    for (const auto& t : trees_) {
      std::vector<double> imp(n_features_, 0.0);
      double total = 0.0;
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        imp[n.feature] += n.impurity_decrease;
        total += n.impurity_decrease;
      }
      if (total <= 0.0) continue;
      for (std::size_t j = 0; j < n_features_; ++j) avg[j] += imp[j] / total;
      ++contributing;
    }
    if (contributing == 0) {
      return std::vector<double>(n_features_, 1.0 / static_cast<double>(n_features_));
    }
    const double sum = std::accumulate(avg.begin(), avg.end(), 0.0);
    for (double& w : avg) w /= sum;
    return avg;
  }

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ExtraTreesParams& params() const { return params_; }
  std::size_t n_features() const { return n_features_; }
  double label_min() const { return label_min_; }
  double label_max() const { return label_max_; }

  bool operator==(const TreeEnsemble&) const = default;

  nlohmann::json ToJson() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.n_samples,
                         n.impurity_decrease});
      }
      trees.push_back(std::move(nodes));
    }
    return {{"format", "extra_trees"},
            {"version", kFormatVersion},
            {"n_features", n_features_},
            {"label_min", label_min_},
            {"label_max", label_max_},
            {"params",
             {{"n_trees", params_.n_trees},
              {"min_samples_leaf", params_.min_samples_leaf},
              {"k_candidate_splits", params_.k_candidate_splits},
              {"seed", params_.seed}}},
            {"trees", std::move(trees)}};
  }

  static TreeEnsemble FromJson(const nlohmann::json& j) {
    if (j.value("format", "") != "extra_trees") {
      throw ValidationError("not a serialized extra-trees ensemble");
    }
    if (j.at("version").get<int>() > kFormatVersion) {
      throw ValidationError("extra-trees format version " + j.at("version").dump() +
                            " is newer than supported (" + std::to_string(kFormatVersion) + ")");
    }
    TreeEnsemble e;
    e.n_features_ = j.at("n_features").get<std::size_t>();
    e.label_min_ = j.at("label_min").get<double>();
    e.label_max_ = j.at("label_max").get<double>();
    const auto& p = j.at("params");
    e.params_ = {p.at("n_trees").get<int>(), p.at("min_samples_leaf").get<int>(),
                 p.at("k_candidate_splits").get<int>(), p.at("seed").get<std::uint64_t>()};
    for (const auto& jt : j.at("trees")) {
      RegressionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at(0).get<int>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<int>();
        n.right = jn.at(3).get<int>();
        n.value = jn.at(4).get<double>();
        n.n_samples = jn.at(5).get<std::size_t>();
        n.impurity_decrease = jn.at(6).get<double>();
        const int size = static_cast<int>(jt.size());
        if (!n.is_leaf() && (n.feature >= static_cast<int>(e.n_features_) || n.left <= 0 ||
                             n.right <= 0 || n.left >= size || n.right >= size)) {
          throw ValidationError("corrupt extra-trees node");
        }
        t.nodes.push_back(n);
      }
      if (t.nodes.empty()) throw ValidationError("empty tree in serialized ensemble");
      e.trees_.push_back(std::move(t));
    }
    if (e.trees_.empty()) throw ValidationError("serialized ensemble has no trees");
    return e;
  }

 private:
  struct Builder {
    const std::vector<std::vector<double>>& rows;
    std::span<const double> labels;
    const std::vector<std::uint64_t>& keys;
    int min_leaf;
    int k;

    static constexpr std::uint64_t kPickSalt = 0x5eed0001;
    static constexpr std::uint64_t kThresholdSalt = 0x5eed0002;

    RegressionTree Build(std::uint64_t tree_key) const {
      RegressionTree t;
      std::vector<std::size_t> idx(rows.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      Grow(t, idx, DeriveKey(tree_key, 1));
      return t;
    }

    struct Stats {
      double mean = 0.0;
      double sse = 0.0;
    };

    Stats LabelStats(const std::vector<std::size_t>& idx) const {
      double sum = 0.0;
      for (std::size_t i : idx) sum += labels[i];
      const double mean = sum / static_cast<double>(idx.size());
      double sse = 0.0;
      for (std::size_t i : idx) sse += (labels[i] - mean) * (labels[i] - mean);
      return {mean, sse};
    }

    // Returns the index of the node it created.
    int Grow(RegressionTree& t, const std::vector<std::size_t>& idx, std::uint64_t node_key) const {
      const int self = static_cast<int>(t.nodes.size());
      t.nodes.emplace_back();
      const Stats parent = LabelStats(idx);
      t.nodes[self].value = parent.mean;
      t.nodes[self].n_samples = idx.size();

      const auto [lo_it, hi_it] = std::minmax_element(
          idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
      if (idx.size() < 2 * static_cast<std::size_t>(min_leaf) || labels[*lo_it] == labels[*hi_it]) {
        return self;
      }

      struct Candidate {
        double priority;
        std::uint64_t key;
        std::size_t feature;
        double lo;
        double hi;
      };
      std::vector<Candidate> cands;
      const std::size_t d = rows.front().size();
      for (std::size_t j = 0; j < d; ++j) {
        double lo = rows[idx.front()][j];
        double hi = lo;
        for (std::size_t i : idx) {
          lo = std::min(lo, rows[i][j]);
          hi = std::max(hi, rows[i][j]);
        }
        if (lo < hi) {
          cands.push_back({UnitOpen(DeriveKey(node_key, DeriveKey(kPickSalt, keys[j]))), keys[j],
                           j, lo, hi});
        }
      }
      if (cands.empty()) return self;
      std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        return a.priority != b.priority ? a.priority < b.priority : a.key < b.key;
      });
      if (cands.size() > static_cast<std::size_t>(k)) cands.resize(static_cast<std::size_t>(k));

      bool found = false;
      double best_gain = 0.0;
      std::size_t best_feature = 0;
      double best_threshold = 0.0;
      std::vector<std::size_t> best_left, best_right;
      std::vector<std::size_t> left, right;
      for (const Candidate& c : cands) {
        const double u = UnitOpen(DeriveKey(node_key, DeriveKey(kThresholdSalt, c.key)));
        double thr = c.lo + (c.hi - c.lo) * u;
        if (!(thr > c.lo && thr < c.hi)) thr = c.lo + (c.hi - c.lo) * 0.5;
        if (!(thr > c.lo && thr < c.hi)) continue;  // adjacent doubles
        left.clear();
        right.clear();
        for (std::size_t i : idx) (rows[i][c.feature] <= thr ? left : right).push_back(i);
        if (left.size() < static_cast<std::size_t>(min_leaf) ||
            right.size() < static_cast<std::size_t>(min_leaf)) {
          continue;
        }
        const double gain = parent.sse - LabelStats(left).sse - LabelStats(right).sse;
        if (!found || gain > best_gain) {
          found = true;
          best_gain = gain;
          best_feature = c.feature;
          best_threshold = thr;
          best_left = left;
          best_right = right;
        }
      }
      if (!found) return self;

      const int l = Grow(t, best_left, DeriveKey(node_key, 0));
      const int r = Grow(t, best_right, DeriveKey(node_key, 1));
      TreeNode& n = t.nodes[self];
      n.feature = static_cast<int>(best_feature);
      n.threshold = best_threshold;
      n.left = l;
      n.right = r;
      n.impurity_decrease = std::max(0.0, best_gain);
      return self;
    }
  };

  ExtraTreesParams params_;
  std::size_t n_features_ = 0;
  double label_min_ = 0.0;
  double label_max_ = 0.0;
  std::vector<RegressionTree> trees_;
};

}  // namespace rocketeval
