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

// INI run configuration.
//
//   [run]      schema_version, seed, max_parallel, failure_threshold,
//              diag_samples, diag_temperature
//   [judge]    backend settings (see BackendKeys below)
//   [creator]  same keys; only needed by create-checklists
//   [scoring]  lo, hi, bins, smoothing, n_trees, min_samples_leaf,
//              k_candidate_splits, train_models, eval_models
//   [metrics]  tie_eps, bootstrap_rounds, elo_scale, elo_anchor, elo_l2
//
// API keys never appear here; `api_key_env` names the variable to read.

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rocketeval/diagnostics.hpp"
#include "rocketeval/elo.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/extra_trees.hpp"
#include "rocketeval/gateway.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/metrics.hpp"
#include "rocketeval/scoring.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

inline constexpr int kConfigSchemaVersion = 1;

struct Config {
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 0;
  double failure_threshold = 0.01;
  int diag_samples = kDefaultDiagnosticSamples;
  double diag_temperature = kDefaultDiagnosticTemperature;

  std::optional<BackendConfig> judge;
  std::optional<BackendConfig> creator;

  ScoreRange range;
  double smoothing = kDefaultSmoothing;
  ExtraTreesParams trees;
  std::set<std::string> train_models;
  std::set<std::string> eval_models;

  double tie_eps = kDefaultTieEps;
  int bootstrap_rounds = kDefaultBootstrapRounds;
  EloOptions elo;

  std::vector<std::string> warnings;  // unknown keys and similar

  const BackendConfig& RequireJudge() const {
    if (!judge) throw ValidationError("config: [judge] model_name is required");
    return *judge;
  }
  const BackendConfig& RequireCreator() const {
    if (!creator) throw ValidationError("config: [creator] model_name is required");
    return *creator;
  }
};

// Command-line values that win over the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tie_eps;
  std::optional<int> max_parallel;
  std::vector<std::string> train_models;
  std::vector<std::string> eval_models;
};

inline std::set<std::string> SplitList(const std::string& s) {
  std::set<std::string> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto b = part.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = part.find_last_not_of(" \t");
    out.insert(part.substr(b, e - b + 1));
  }
  return out;
}

namespace detail {

using boost::property_tree::ptree;

class Section {
 public:
  Section(std::string name, const ptree* tree, std::vector<std::string>* warnings)
      : name_(std::move(name)), tree_(tree), warnings_(warnings) {}

  template <typename T>
  std::optional<T> Get(const std::string& key) {
    seen_.insert(key);
    if (tree_ == nullptr) return std::nullopt;
    auto child = tree_->get_child_optional(key);
    if (!child) return std::nullopt;
    const std::string raw = child->data();
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes") return true;
      if (raw == "false" || raw == "0" || raw == "no") return false;
      throw ValidationError("config: [" + name_ + "] " + key + " = '" + raw + "' is not a boolean");
    } else {
      std::istringstream in(raw);
      T v{};
      in >> v;
      if (in.fail() || !(in >> std::ws).eof()) {
        throw ValidationError("config: [" + name_ + "] " + key + " = '" + raw +
                              "' is not a valid number");
      }
      return v;
    }
  }

  template <typename T>
  void Read(const std::string& key, T& target) {
    if (auto v = Get<T>(key)) target = *v;
  }

  bool present() const { return tree_ != nullptr; }

  void WarnUnknown() const {
    if (tree_ == nullptr) return;
    for (const auto& [key, _] : *tree_) {
      if (!seen_.contains(key)) warnings_->push_back("unknown key [" + name_ + "] " + key);
    }
  }

 private:
  std::string name_;
  const ptree* tree_;
  std::vector<std::string>* warnings_;
  std::set<std::string> seen_;
};

inline std::optional<BackendConfig> ReadBackend(Section& s, const std::string& name,
                                                const std::filesystem::path& base_dir) {
  BackendConfig b;
  const auto kind = s.Get<std::string>("kind").value_or("mock");
  if (kind == "mock") {
    b.kind = BackendKind::kMock;
  } else if (kind == "http" || kind == "openai") {
    b.kind = BackendKind::kHttpOpenAiCompatible;
  } else {
    throw ValidationError("config: [" + name + "] kind must be 'mock' or 'http', got '" + kind + "'");
  }
  const auto model = s.Get<std::string>("model_name");
  s.Read("endpoint_url", b.endpoint_url);
  s.Read("api_key_env", b.api_key_env);
  s.Read("max_parallel", b.max_parallel);
  s.Read("retry_max", b.retry_max);
  if (auto v = s.Get<long long>("retry_base_delay_ms")) b.retry_base_delay = std::chrono::milliseconds(*v);
  if (auto v = s.Get<long long>("request_timeout_ms")) b.request_timeout = std::chrono::milliseconds(*v);
  s.Read("top_logprobs", b.top_logprobs);
  if (auto v = s.Get<std::uint64_t>("seed")) b.seed = *v;
  if (auto v = s.Get<std::string>("fixture")) {
    std::filesystem::path p(*v);
    b.fixture_path = p.is_absolute() ? p : base_dir / p;
  }
  if (auto v = s.Get<std::string>("mock_key_mode")) {
    if (*v == "prompt") {
      b.mock_key_mode = MockKeyMode::kPrompt;
    } else if (*v == "request") {
      b.mock_key_mode = MockKeyMode::kRequest;
    } else {
      throw ValidationError("config: [" + name + "] mock_key_mode must be 'prompt' or 'request'");
    }
  }
  s.Read("mock_logprobs", b.mock_logprobs);
  if (s.Get<std::string>("api_key")) {
    throw ValidationError("config: [" + name + "] api_key is not allowed; set api_key_env to the "
                          "name of an environment variable instead");
  }
  s.WarnUnknown();
  if (!s.present()) return std::nullopt;
  if (!model || model->empty()) {
    throw ValidationError("config: [" + name + "] model_name is required");
  }
  b.model_name = *model;
  try {
    b.Validate();
  } catch (const ValidationError& e) {
    throw ValidationError("config: [" + name + "] " + e.what());
  }
  return b;
}

}  // namespace detail

inline Config ParseConfig(const boost::property_tree::ptree& tree,
                          const std::filesystem::path& base_dir = ".") {
  Config c;
  const auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(name);
    return detail::Section(name, child ? &*child : nullptr, &c.warnings);
  };
  for (const auto& [name, _] : tree) {
    static const std::set<std::string> kKnown = {"run", "judge", "creator", "scoring", "metrics"};
    if (!kKnown.contains(name)) c.warnings.push_back("unknown section [" + name + "]");
  }

  auto run = section("run");
  run.Read("schema_version", c.schema_version);
  if (c.schema_version > kConfigSchemaVersion) {
    throw ValidationError("config: schema_version " + std::to_string(c.schema_version) +
                          " is newer than supported version " +
                          std::to_string(kConfigSchemaVersion));
  }
  if (c.schema_version < 1) throw ValidationError("config: schema_version must be >= 1");
  run.Read("seed", c.seed);
  const auto max_parallel = run.Get<int>("max_parallel");
  run.Read("failure_threshold", c.failure_threshold);
  run.Read("diag_samples", c.diag_samples);
  run.Read("diag_temperature", c.diag_temperature);
  run.WarnUnknown();

  auto judge = section("judge");
  c.judge = detail::ReadBackend(judge, "judge", base_dir);
  auto creator = section("creator");
  c.creator = detail::ReadBackend(creator, "creator", base_dir);
  if (max_parallel) {
    if (c.judge) c.judge->max_parallel = *max_parallel;
    if (c.creator) c.creator->max_parallel = *max_parallel;
  }

  auto scoring = section("scoring");
  scoring.Read("lo", c.range.lo);
  scoring.Read("hi", c.range.hi);
  scoring.Read("bins", c.range.bins);
  scoring.Read("smoothing", c.smoothing);
  scoring.Read("n_trees", c.trees.n_trees);
  scoring.Read("min_samples_leaf", c.trees.min_samples_leaf);
  scoring.Read("k_candidate_splits", c.trees.k_candidate_splits);
  if (auto v = scoring.Get<std::string>("train_models")) c.train_models = SplitList(*v);
  if (auto v = scoring.Get<std::string>("eval_models")) c.eval_models = SplitList(*v);
  scoring.WarnUnknown();

  auto metrics = section("metrics");
  metrics.Read("tie_eps", c.tie_eps);
  metrics.Read("bootstrap_rounds", c.bootstrap_rounds);
  metrics.Read("elo_scale", c.elo.scale);
  metrics.Read("elo_anchor", c.elo.anchor);
  metrics.Read("elo_l2", c.elo.l2);
  metrics.WarnUnknown();
  return c;
}

inline void ApplyOverrides(Config& c, const ConfigOverrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.tie_eps) c.tie_eps = *o.tie_eps;
  if (o.max_parallel) {
    if (c.judge) c.judge->max_parallel = *o.max_parallel;
    if (c.creator) c.creator->max_parallel = *o.max_parallel;
  }
  if (!o.train_models.empty()) c.train_models = {o.train_models.begin(), o.train_models.end()};
  if (!o.eval_models.empty()) c.eval_models = {o.eval_models.begin(), o.eval_models.end()};
}

// Range and sanity checks after overrides.
inline void ValidateConfig(const Config& c) {
  c.range.Validate();
  if (!(c.tie_eps >= 0.0)) throw ValidationError("config: tie_eps must be >= 0");
  if (!(c.smoothing >= 0.0)) throw ValidationError("config: smoothing must be >= 0");
  if (c.trees.n_trees < 1) throw ValidationError("config: n_trees must be >= 1");
  if (c.trees.min_samples_leaf < 1) throw ValidationError("config: min_samples_leaf must be >= 1");
  if (c.trees.k_candidate_splits < 0) throw ValidationError("config: k_candidate_splits must be >= 0");
  if (c.bootstrap_rounds < 1) throw ValidationError("config: bootstrap_rounds must be >= 1");
  if (!(c.failure_threshold >= 0.0 && c.failure_threshold <= 1.0)) {
    throw ValidationError("config: failure_threshold must be in [0, 1]");
  }
  if (c.diag_samples < 1) throw ValidationError("config: diag_samples must be >= 1");
  if (!(c.diag_temperature >= 0.0)) throw ValidationError("config: diag_temperature must be >= 0");
  for (const auto* b : {&c.judge, &c.creator}) {
    if (*b) (*b)->Validate();
  }
}

inline Config LoadConfig(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
  if (!std::filesystem::exists(path)) throw ValidationError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("config: " + std::string(e.what()));
  }
  Config c = ParseConfig(tree, path.parent_path().empty() ? "." : path.parent_path());
  ApplyOverrides(c, overrides);
  ValidateConfig(c);
  return c;
}

// A mock backend without its own seed follows the run seed.
inline BackendConfig Seeded(BackendConfig b, std::uint64_t run_seed) {
  if (!b.seed) b.seed = run_seed;
  return b;
}

inline Json BackendToJson(const BackendConfig& b) {
  Json j = {{"kind", b.kind == BackendKind::kMock ? "mock" : "http"},
            {"model_name", b.model_name},
            {"api_key_env", b.api_key_env},
            {"max_parallel", b.max_parallel},
            {"retry_max", b.retry_max},
            {"retry_base_delay_ms", b.retry_base_delay.count()},
            {"request_timeout_ms", b.request_timeout.count()},
            {"top_logprobs", b.top_logprobs}};
  if (!b.endpoint_url.empty()) j["endpoint_url"] = b.endpoint_url;
  if (b.seed) j["seed"] = *b.seed;
  if (b.kind == BackendKind::kMock) {
    if (!b.fixture_path.empty()) j["fixture"] = b.fixture_path.string();
    j["mock_key_mode"] = b.mock_key_mode == MockKeyMode::kPrompt ? "prompt" : "request";
    j["mock_logprobs"] = b.mock_logprobs;
  }
  return j;
}

// Resolved configuration for manifests. Contains no secret values.
inline Json ConfigToJson(const Config& c) {
  Json j = {{"schema_version", c.schema_version},
            {"seed", c.seed},
            {"failure_threshold", c.failure_threshold},
            {"diag_samples", c.diag_samples},
            {"diag_temperature", c.diag_temperature},
            {"score_range", {{"lo", c.range.lo}, {"hi", c.range.hi}, {"bins", c.range.bins}}},
            {"smoothing", c.smoothing},
            {"extra_trees",
             {{"n_trees", c.trees.n_trees},
              {"min_samples_leaf", c.trees.min_samples_leaf},
              {"k_candidate_splits", c.trees.k_candidate_splits}}},
            {"train_models", c.train_models},
            {"eval_models", c.eval_models},
            {"tie_eps", c.tie_eps},
            {"bootstrap_rounds", c.bootstrap_rounds},
            {"elo", {{"scale", c.elo.scale}, {"anchor", c.elo.anchor}, {"l2", c.elo.l2}}}};
  if (c.judge) j["judge"] = BackendToJson(Seeded(*c.judge, c.seed));
  if (c.creator) j["creator"] = BackendToJson(Seeded(*c.creator, c.seed));
  return j;
}

}  // namespace rocketeval
