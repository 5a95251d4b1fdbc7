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

// Uniform access to text-generation backends: first-token candidate
// probabilities, sampling and greedy generation.
//
// A Backend answers one request at a time and knows nothing about retries
// or parallelism; the Gateway wraps it with both. Two backends ship: an
// OpenAI-compatible chat-completions client and a deterministic mock whose
// every output is a pure function of (prompt or request key, seed,
// temperature, sample index).

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <semaphore>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/templates.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"
// <resolv.h>, pulled in above, defines `_res` as a macro; it collides with
// parameter names in Eigen and other headers included after this one.
#ifdef _res
#undef _res
#endif

namespace rocketeval {

// Non-retryable rejection of a single request (bad request, context too
// long). Reported per key; does not abort a batch.
class RequestError : public Error {
 public:
  using Error::Error;
};

enum class BackendKind { kHttpOpenAiCompatible, kMock };

// Whether the mock derives its outputs from the full prompt text or from
// the request key only. Keying on the request makes the mock blind to
// everything in the prompt, including conversation history.
enum class MockKeyMode { kPrompt, kRequest };

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env = "ROCKETEVAL_API_KEY";
  int max_parallel = 4;
  int retry_max = 3;
  std::chrono::milliseconds retry_base_delay{500};
  std::chrono::milliseconds request_timeout{60000};
  int top_logprobs = 20;
  std::optional<std::uint64_t> seed;

  // Mock only.
  std::filesystem::path fixture_path;
  MockKeyMode mock_key_mode = MockKeyMode::kPrompt;
  bool mock_logprobs = true;

  // Identity recorded in judgment records.
  std::string id() const { return model_name; }

  void Validate() const {
    if (model_name.empty()) throw ValidationError("backend config: model_name is required");
    if (max_parallel < 1) throw ValidationError("backend config: max_parallel must be >= 1");
    if (retry_max < 0) throw ValidationError("backend config: retry_max must be >= 0");
    if (top_logprobs < 2) throw ValidationError("backend config: top_logprobs must be >= 2");
    if (kind == BackendKind::kHttpOpenAiCompatible && endpoint_url.empty()) {
      throw ValidationError("backend config: endpoint_url is required for http backends");
    }
  }
};

// Identifies what a request is about. item_index 0 means "the whole
// response" (direct / CoT scoring, checklist creation).
struct RequestKey {
  std::string session_id;
  std::string model_id;
  int item_index = 0;

  auto operator<=>(const RequestKey&) const = default;

  std::string str() const {
    return session_id + "/" + model_id + "/" + std::to_string(item_index);
  }
};

struct Request {
  RequestKey key;
  TemplateId purpose = TemplateId::kChecklistGrading;
  std::string prompt;
  double temperature = 0.0;
  int max_tokens = 1;
  // Distinguishes repeated samples of the same prompt.
  int sample_index = 0;
};

struct TokenProb {
  std::string token;
  double prob = 0.0;
};

// Probability mass per candidate label at the first generated position.
struct CandidateDistribution {
  std::map<std::string, double> prob;
  std::map<std::string, bool> found;

  double of(const std::string& label) const {
    auto it = prob.find(label);
    return it == prob.end() ? 0.0 : it->second;
  }
  bool was_found(const std::string& label) const {
    auto it = found.find(label);
    return it != found.end() && it->second;
  }
};

// Surface forms a tokenizer may emit for a label: exact, lowercase and their
// leading-space forms.
inline std::vector<std::string> SurfaceVariants(const std::string& label) {
  std::string lower = label;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::vector<std::string> v = {label, lower, " " + label, " " + lower};
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Sums, per candidate, the probabilities of every alternative whose token is
// one of the candidate's surface variants.
inline CandidateDistribution AggregateCandidates(std::span<const TokenProb> alternatives,
                                                 std::span<const std::string> candidates) {
  CandidateDistribution d;
  for (const auto& label : candidates) {
    const auto variants = SurfaceVariants(label);
    double mass = 0.0;
    bool found = false;
    for (const auto& alt : alternatives) {
      if (std::binary_search(variants.begin(), variants.end(), alt.token)) {
        mass += alt.prob;
        found = true;
      }
    }
    d.prob[label] = mass;
    d.found[label] = found;
  }
  return d;
}

// Keeps the first `max_tokens` whitespace-delimited tokens of `text`,
// preserving the whitespace between them.
inline std::string TruncateTokens(const std::string& text, int max_tokens) {
  std::size_t pos = 0;
  int count = 0;
  const auto is_space = [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; };
  while (pos < text.size()) {
    std::size_t start = pos;
    while (start < text.size() && is_space(text[start])) ++start;
    if (start >= text.size()) break;
    if (count == max_tokens) return text.substr(0, pos);
    std::size_t end = start;
    while (end < text.size() && !is_space(text[end])) ++end;
    ++count;
    pos = end;
  }
  return text;
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  // Top-k alternatives at the first generated position.
  virtual std::vector<TokenProb> TopAlternatives(const Request& req, int top_k) = 0;
  virtual std::string Complete(const Request& req) = 0;
};

// ---- mock ------------------------------------------------------------------

// Planted outputs for specific request keys.
struct MockFixtureEntry {
  std::vector<TokenProb> tokens;       // first-token distribution
  std::optional<std::string> completion;  // free-form text
};

using MockFixture = std::map<RequestKey, MockFixtureEntry>;

// Lines: {"session_id", "model_id", "item_index" (default 0),
//         "probs": {token: p, ...}, "completion": text (optional)}.
inline MockFixture LoadMockFixture(const std::filesystem::path& path) {
  MockFixture fx;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t) {
    RequestKey key{jsonl::RequireString(j, "session_id"), jsonl::RequireString(j, "model_id"),
                   j.value("item_index", 0)};
    MockFixtureEntry e;
    if (auto it = j.find("probs"); it != j.end()) {
      double total = 0.0;
      for (const auto& [tok, p] : it->items()) {
        const double v = p.get<double>();
        if (!(v >= 0.0)) throw ValidationError("fixture probability must be >= 0");
        total += v;
        e.tokens.push_back({tok, v});
      }
      if (total > 1.0 + 1e-9) throw ValidationError("fixture probabilities sum above 1");
    }
    e.completion = jsonl::OptionalString(j, "completion");
    fx[key] = std::move(e);
  });
  return fx;
}

class MockBackend final : public Backend {
 public:
  struct Options {
    std::string model_name = "mock";
    std::uint64_t seed = 0;
    MockKeyMode key_mode = MockKeyMode::kPrompt;
    bool supports_logprobs = true;
  };

  explicit MockBackend(Options opts, MockFixture fixture = {})
      : opts_(std::move(opts)), fixture_(std::move(fixture)) {}

  std::string name() const override { return "mock:" + opts_.model_name; }

  std::vector<TokenProb> TopAlternatives(const Request& req, int top_k) override {
    if (!opts_.supports_logprobs) {
      throw BackendCapabilityError("backend '" + name() +
                                   "' does not provide token log-probabilities");
    }
    auto dist = Distribution(req);
    if (dist.size() > static_cast<std::size_t>(top_k)) dist.resize(top_k);
    return dist;
  }

  std::string Complete(const Request& req) override {
    std::string text;
    if (auto it = fixture_.find(req.key); it != fixture_.end() && it->second.completion) {
      text = *it->second.completion;
    } else if (req.purpose == TemplateId::kChecklistCreation) {
      text = CreationText(req);
    } else if (req.purpose == TemplateId::kCotScoring) {
      text = CotText(req);
    } else {
      text = SampleToken(req);
    }
    return TruncateTokens(text, req.max_tokens);
  }

  // Full first-token distribution, sorted by descending probability.
  std::vector<TokenProb> Distribution(const Request& req) const {
    std::vector<TokenProb> dist;
    if (auto it = fixture_.find(req.key); it != fixture_.end() && !it->second.tokens.empty()) {
      dist = it->second.tokens;
    } else {
      dist = HashedDistribution(req);
    }
    std::stable_sort(dist.begin(), dist.end(), [](const TokenProb& a, const TokenProb& b) {
      return a.prob != b.prob ? a.prob > b.prob : a.token < b.token;
    });
    return dist;
  }

 private:
  std::string Source(const Request& req) const {
    return opts_.key_mode == MockKeyMode::kPrompt ? req.prompt
                                                  : std::string(ToString(req.purpose)) + "|" +
                                                        req.key.str();
  }

  std::uint64_t Hash(const Request& req, std::string_view salt) const {
    const std::string seed = std::to_string(opts_.seed);
    return StableHash64({Source(req), seed, salt});
  }

  std::vector<TokenProb> HashedDistribution(const Request& req) const {
    static const std::vector<std::string> kBinary = {"Yes", " Yes", "yes", "No", " No", "no",
                                                     "Maybe"};
    static const std::vector<std::string> kDigits = {"0", "1", "2", "3", "4",
                                                     "5", "6", "7", "8", "9"};
    const auto& vocab = req.purpose == TemplateId::kDirectScoring ? kDigits : kBinary;
    std::vector<double> w(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double u = UnitOpen(Hash(req, "w:" + vocab[i]));
      w[i] = u * u * u;
      total += w[i];
    }
    const double mass = 0.85 + 0.15 * UnitOpen(Hash(req, "mass"));
    std::vector<TokenProb> dist;
    for (std::size_t i = 0; i < vocab.size(); ++i) dist.push_back({vocab[i], mass * w[i] / total});
    return dist;
  }

  std::string SampleToken(const Request& req) const {
    const auto dist = Distribution(req);
    double listed = 0.0;
    for (const auto& t : dist) listed += t.prob;
    const double residual = std::max(0.0, 1.0 - listed);
    if (req.temperature <= 0.0) {
      if (dist.empty() || (residual > dist.front().prob)) return "Unsure";
      return dist.front().token;
    }
    const double inv_t = 1.0 / req.temperature;
    std::vector<double> w;
    double total = 0.0;
    for (const auto& t : dist) {
      w.push_back(t.prob > 0.0 ? std::pow(t.prob, inv_t) : 0.0);
      total += w.back();
    }
    const double w_residual = residual > 1e-12 ? std::pow(residual, inv_t) : 0.0;
    total += w_residual;
    const std::string salt = "sample:" + std::to_string(req.sample_index) + ":" +
                             std::to_string(req.temperature);
    double u = UnitOpen(Hash(req, salt)) * total;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (u < w[i]) return dist[i].token;
      u -= w[i];
    }
    return "Unsure";
  }

  std::string CreationText(const Request& req) const {
    static const std::vector<std::string> kPool = {
        "Does the response directly address the user query?",
        "Does the response follow every explicit instruction in the query?",
        "Is the information in the response factually correct?",
        "Does the response include the key details the user asked for?",
        "Is the response free of irrelevant or repeated content?",
        "Is the response organized in a clear, readable format?",
        "Does the response avoid unsupported claims?",
        "Does the response reach a complete and correct conclusion?",
    };
    const std::uint64_t h = Hash(req, "creation");
    const std::size_t n = 5 + h % 3;
    std::string text = "```\n";
    for (std::size_t i = 0; i < n; ++i) {
      text += std::to_string(i + 1) + ". " + kPool[(h / 3 + i) % kPool.size()] + "\n";
    }
    return text + "```";
  }

  std::string CotText(const Request& req) const {
    const std::uint64_t h = Hash(req, "cot:" + std::to_string(req.sample_index));
    const int score = 1 + static_cast<int>(h % 10);
    return "The response was assessed against the query.\n```\n{\n"
           "    \"strengths\": \"addresses the query\",\n"
           "    \"weaknesses\": \"could be more specific\",\n"
           "    \"score\": \"" +
           std::to_string(score) + "\"\n}\n```";
  }

  Options opts_;
  MockFixture fixture_;
};

// ---- OpenAI-compatible HTTP -----------------------------------------------

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint_url, m, kUrl)) {
      throw ValidationError("invalid endpoint_url '" + config_.endpoint_url + "'");
    }
    origin_ = m[1].str();
    std::string base = m[2].matched ? m[2].str() : "";
    while (!base.empty() && base.back() == '/') base.pop_back();
    const std::string suffix = "/chat/completions";
    path_ = base.size() >= suffix.size() && base.ends_with(suffix) ? base : base + suffix;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) api_key_ = key;
  }

  std::string name() const override { return config_.model_name + "@" + origin_; }

  std::vector<TokenProb> TopAlternatives(const Request& req, int top_k) override {
    Json body = BaseBody(req);
    body["max_tokens"] = 1;
    body["temperature"] = 0;
    body["logprobs"] = true;
    body["top_logprobs"] = top_k;
    const Json reply = Post(body);
    const Json* first = nullptr;
    try {
      const Json& lp = reply.at("choices").at(0).at("logprobs");
      if (!lp.is_null() && lp.contains("content") && lp["content"].is_array() &&
          !lp["content"].empty()) {
        first = &lp["content"][0];
      }
    } catch (const Json::exception&) {
    }
    if (first == nullptr || !first->contains("top_logprobs") ||
        !(*first)["top_logprobs"].is_array()) {
      throw BackendCapabilityError("backend '" + name() +
                                   "' returned no token log-probabilities");
    }
    std::vector<TokenProb> out;
    for (const Json& alt : (*first)["top_logprobs"]) {
      out.push_back({alt.at("token").get<std::string>(), std::exp(alt.at("logprob").get<double>())});
    }
    return out;
  }

  std::string Complete(const Request& req) override {
    Json body = BaseBody(req);
    body["max_tokens"] = req.max_tokens;
    body["temperature"] = req.temperature;
    if (config_.seed) body["seed"] = *config_.seed + static_cast<std::uint64_t>(req.sample_index);
    const Json reply = Post(body);
    std::string text;
    try {
      const Json& content = reply.at("choices").at(0).at("message").at("content");
      if (content.is_string()) text = content.get<std::string>();
    } catch (const Json::exception& e) {
      throw TransportError("backend '" + name() + "': malformed completion: " + e.what());
    }
    return text;
  }

 private:
  Json BaseBody(const Request& req) const {
    Json body = {{"model", config_.model_name},
                 {"messages", Json::array({{{"role", "user"}, {"content", req.prompt}}})}};
    if (config_.seed && req.temperature <= 0.0) body["seed"] = *config_.seed;
    return body;
  }

  Json Post(const Json& body) {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        config_.request_timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      throw TransportError("backend '" + name() + "': " + httplib::to_string(res.error()));
    }
    const int status = res->status;
    const std::string snippet = res->body.substr(0, 200);
    if (status == 429 || status >= 500) {
      throw TransportError("backend '" + name() + "': HTTP " + std::to_string(status) + ": " +
                           snippet);
    }
    if (status == 401 || status == 403 || status == 404) {
      throw BackendCapabilityError("backend '" + name() + "': HTTP " + std::to_string(status) +
                                   ": " + snippet);
    }
    if (status < 200 || status >= 300) {
      throw RequestError("backend '" + name() + "': HTTP " + std::to_string(status) + ": " +
                         snippet);
    }
    try {
      return Json::parse(res->body);
    } catch (const Json::parse_error& e) {
      throw TransportError("backend '" + name() + "': invalid JSON reply: " + e.what());
    }
  }

  BackendConfig config_;
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

// ---- gateway ---------------------------------------------------------------

// Bounded-concurrency, retrying front end over one backend. Shareable across
// threads; at most config.max_parallel backend requests are in flight.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(BackendConfig config, std::unique_ptr<Backend> backend)
      : config_(std::move(config)),
        backend_(std::move(backend)),
        slots_(std::clamp<std::ptrdiff_t>(config_.max_parallel, 1, kMaxSlots)),
        sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    config_.Validate();
  }

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  static std::unique_ptr<Gateway> FromConfig(const BackendConfig& config) {
    config.Validate();
    std::unique_ptr<Backend> backend;
    if (config.kind == BackendKind::kMock) {
      MockFixture fx;
      if (!config.fixture_path.empty()) fx = LoadMockFixture(config.fixture_path);
      backend = std::make_unique<MockBackend>(
          MockBackend::Options{config.model_name, config.seed.value_or(0), config.mock_key_mode,
                               config.mock_logprobs},
          std::move(fx));
    } else {
      backend = std::make_unique<HttpBackend>(config);
    }
    return std::make_unique<Gateway>(config, std::move(backend));
  }

  const BackendConfig& config() const { return config_; }
  const Backend& backend() const { return *backend_; }
  std::string id() const { return config_.id(); }

  // Backend requests issued so far, retries included.
  std::size_t backend_calls() const { return calls_.load(); }

  void set_sleeper(Sleeper s) { sleep_ = std::move(s); }

  CandidateDistribution ScoreFirstToken(const Request& req,
                                        std::span<const std::string> candidates) {
    if (candidates.empty()) throw ValidationError("score_first_token: no candidates");
    const auto alternatives =
        WithRetry([&] { return backend_->TopAlternatives(req, config_.top_logprobs); });
    return AggregateCandidates(alternatives, candidates);
  }

  std::string Generate(const Request& req) {
    if (req.temperature < 0.0) throw ValidationError("generate: temperature must be >= 0");
    if (req.max_tokens < 1) throw ValidationError("generate: max_tokens must be >= 1");
    std::string text = WithRetry([&] { return backend_->Complete(req); });
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ExtractionError("backend '" + backend_->name() + "' returned an empty completion for " +
                            req.key.str());
    }
    return text;
  }

 private:
  template <typename F>
  auto WithRetry(F&& f) -> decltype(f()) {
    for (int attempt = 0;; ++attempt) {
      try {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<kMaxSlots>& s;
          ~Release() { s.release(); }
        } release{slots_};
        ++calls_;
        return f();
      } catch (const TransportError& e) {
        if (attempt >= config_.retry_max) {
          throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt + 1) +
                               " attempts)");
        }
      }
      sleep_(config_.retry_base_delay * (1LL << std::min(attempt, 20)));
    }
  }

  static constexpr std::ptrdiff_t kMaxSlots = 4096;

  BackendConfig config_;
  std::unique_ptr<Backend> backend_;
  std::counting_semaphore<kMaxSlots> slots_;
  std::atomic<std::size_t> calls_{0};
  Sleeper sleep_;
};

}  // namespace rocketeval
