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

// Shared test helpers: scratch directories, in-process CLI runs, and the
// planted-quality fixture used by the end-to-end tests.

#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rocketeval/cli.hpp"
#include "rocketeval/gateway.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("rocketeval-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

inline std::string ReadText(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::Run(args, out, err);
  return {code, out.str(), err.str()};
}

// A backend answering from a user-supplied function, for fault injection.
class ScriptedBackend final : public Backend {
 public:
  using AltFn = std::function<std::vector<TokenProb>(const Request&)>;
  using TextFn = std::function<std::string(const Request&)>;

  ScriptedBackend(AltFn alt, TextFn text = nullptr) : alt_(std::move(alt)), text_(std::move(text)) {}

  std::string name() const override { return "scripted"; }
  std::vector<TokenProb> TopAlternatives(const Request& req, int) override { return alt_(req); }
  std::string Complete(const Request& req) override {
    if (!text_) throw BackendCapabilityError("scripted backend has no completions");
    return text_(req);
  }

 private:
  AltFn alt_;
  TextFn text_;
};

inline BackendConfig MockConfig(std::string name = "judge", int max_parallel = 4) {
  BackendConfig b;
  b.kind = BackendKind::kMock;
  b.model_name = std::move(name);
  b.max_parallel = max_parallel;
  b.retry_base_delay = std::chrono::milliseconds(0);
  return b;
}

inline std::string ModelName(int m) {
  std::ostringstream s;
  s << "model-" << std::setw(2) << std::setfill('0') << m;
  return s.str();
}

inline std::string SessionName(int s) {
  std::ostringstream o;
  o << "s" << std::setw(3) << std::setfill('0') << s;
  return o.str();
}

// Synthetic benchmark whose judge answers are planted per (session, model,
// item). Model m has true quality q_m = (m + 1) / (n_models + 1).
struct PlantedBenchmark {
  int n_models = 6;
  int n_sessions = 20;
  int n_items = 6;
  // 0 informative items means every item carries the signal.
  int informative_items = 0;
  double signal_noise = 0.0;  // sd added to informative items
  std::uint64_t noise_seed = 0;

  double Quality(int m) const { return (m + 1.0) / (n_models + 1.0); }

  // Planted normalized judgment for one item.
  double Target(int s, int m, int i, std::mt19937_64& rng) const {
    const bool informative = informative_items == 0 || i < informative_items;
    if (!informative) return std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    // Common per-(session, item) offset keeps models in order everywhere.
    const double offset = 0.05 * std::sin(1.0 + 7.0 * s + 3.0 * i);
    double t = Quality(m) + offset;
    if (signal_noise > 0.0) t += std::normal_distribution<double>(0.0, signal_noise)(rng);
    return std::clamp(t, 0.02, 0.98);
  }

  struct Files {
    std::string dataset, responses, checklists, fixture, annotations, ground_truth, config;
  };

  Files Write(const TempDir& dir, const std::string& extra_config = "") const {
    Files f{dir / "dataset.jsonl",     dir / "responses.jsonl",   dir / "checklists.jsonl",
            dir / "fixture.jsonl",     dir / "annotations.jsonl", dir / "ground_truth.csv",
            dir / "config.ini"};
    std::vector<EvalInstance> instances;
    std::vector<ModelResponse> responses;
    std::vector<Checklist> lists;
    std::vector<Annotation> annotations;
    std::vector<Json> fixture;
    std::mt19937_64 rng(noise_seed);
    for (int s = 0; s < n_sessions; ++s) {
      const std::string sid = SessionName(s);
      instances.push_back({sid, {}, "Question number " + std::to_string(s), std::nullopt, std::nullopt});
      std::vector<std::string> q;
      for (int i = 0; i < n_items; ++i) {
        q.push_back("Does the answer satisfy requirement " + std::to_string(i + 1) + " of " + sid + "?");
      }
      lists.push_back(Checklist::FromQuestions(sid, q));
      for (int m = 0; m < n_models; ++m) {
        const std::string mid = ModelName(m);
        responses.push_back({sid, mid, "Answer of " + mid + " to " + sid});
        annotations.push_back({sid, mid, 1.0 + 9.0 * Quality(m)});
        for (int i = 0; i < n_items; ++i) {
          const double t = Target(s, m, i, rng);
          fixture.push_back({{"session_id", sid},
                             {"model_id", mid},
                             {"item_index", i + 1},
                             {"probs", {{"Yes", 0.9 * t}, {"No", 0.9 * (1.0 - t)}}}});
        }
      }
    }
    WriteDataset(f.dataset, instances);
    WriteResponses(f.responses, responses);
    WriteChecklists(f.checklists, lists);
    WriteAnnotations(f.annotations, annotations);
    jsonl::Write(f.fixture, fixture);
    std::ofstream gt(f.ground_truth);
    gt << "model_id,rating\n";
    for (int m = 0; m < n_models; ++m) gt << ModelName(m) << "," << Quality(m) << "\n";
    WriteText(f.config,
              "[run]\nschema_version = 1\nseed = 7\n\n"
              "[judge]\nkind = mock\nmodel_name = planted-judge\nfixture = fixture.jsonl\n"
              "max_parallel = 8\n\n"
              "[metrics]\nbootstrap_rounds = 50\n" +
                  extra_config);
    return f;
  }
};

// Reads a report file into typed rows.
inline std::vector<Json> ReadJsonl(const std::string& path) {
  std::vector<Json> rows;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t) { rows.push_back(j); });
  return rows;
}

inline const Json* FindRow(const std::vector<Json>& rows, const std::string& type) {
  for (const auto& r : rows) {
    if (r.value("type", "") == type) return &r;
  }
  return nullptr;
}

}  // namespace rocketeval::testing
