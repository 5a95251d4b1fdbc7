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

// Line-delimited JSON formats for datasets, responses, checklists,
// annotations, scores, matches and the append-only judgment cache.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

using Json = nlohmann::json;

namespace jsonl {

// Calls `fn(object, line_number)` for every non-blank line of `path`.
// Line numbers are 1-based. Malformed JSON or a non-object line raises
// ParseError; exceptions thrown by `fn` are rethrown as ParseError carrying
// the line number.
inline void ForEachLine(const std::filesystem::path& path,
                        const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(path.string(), line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(path.string(), line_no, "expected a JSON object");
    try {
      fn(obj, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const Json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

inline void Write(const std::filesystem::path& path, const std::vector<Json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

inline void Append(const std::filesystem::path& path, const std::vector<Json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw ValidationError("cannot append to " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
  out.flush();
  if (!out) throw Error("append failed: " + path.string());
}

inline const Json& Require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing key '") + key + "'");
  return *it;
}

inline std::string RequireString(const Json& j, const char* key) {
  const Json& v = Require(j, key);
  if (!v.is_string()) throw ValidationError(std::string("key '") + key + "' must be a string");
  return v.get<std::string>();
}

inline double RequireNumber(const Json& j, const char* key) {
  const Json& v = Require(j, key);
  if (!v.is_number()) throw ValidationError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

inline std::optional<std::string> OptionalString(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("key '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace jsonl

// ---- per-type conversions -------------------------------------------------

inline Json ToJson(const EvalInstance& x) {
  Json history = Json::array();
  for (const auto& t : x.history) {
    history.push_back({{"role", ToString(t.speaker)}, {"content", t.text}});
  }
  Json j = {{"session_id", x.session_id}, {"history", history}, {"user_query", x.user_query}};
  if (x.reference_response) j["reference_response"] = *x.reference_response;
  if (x.task_tag) j["task_tag"] = *x.task_tag;
  return j;
}

inline EvalInstance InstanceFromJson(const Json& j) {
  EvalInstance x;
  x.session_id = jsonl::RequireString(j, "session_id");
  if (auto it = j.find("history"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("'history' must be an array");
    for (const Json& t : *it) {
      x.history.push_back({ParseSpeaker(jsonl::RequireString(t, "role")),
                           jsonl::RequireString(t, "content")});
    }
  }
  x.user_query = jsonl::RequireString(j, "user_query");
  x.reference_response = jsonl::OptionalString(j, "reference_response");
  x.task_tag = jsonl::OptionalString(j, "task_tag");
  x.Validate();
  return x;
}

inline Json ToJson(const ModelResponse& r) {
  return {{"session_id", r.session_id}, {"model_id", r.model_id}, {"output", r.output}};
}

inline ModelResponse ResponseFromJson(const Json& j) {
  ModelResponse r{jsonl::RequireString(j, "session_id"), jsonl::RequireString(j, "model_id"),
                  jsonl::RequireString(j, "output")};
  if (r.session_id.empty() || r.model_id.empty()) {
    throw ValidationError("empty session_id or model_id");
  }
  return r;
}

inline Json ToJson(const Checklist& c) {
  return {{"session_id", c.session_id}, {"items", c.Questions()}};
}

inline Checklist ChecklistFromJson(const Json& j) {
  const Json& items = jsonl::Require(j, "items");
  if (!items.is_array()) throw ValidationError("'items' must be an array");
  std::vector<std::string> questions;
  for (const Json& q : items) {
    if (!q.is_string()) throw ValidationError("checklist items must be strings");
    questions.push_back(q.get<std::string>());
  }
  Checklist c = Checklist::FromQuestions(jsonl::RequireString(j, "session_id"), questions);
  c.Validate();
  return c;
}

inline Json ToJson(const JudgmentRecord& r) {
  return {{"judge_id", r.judge_id},
          {"model_id", r.model_id},
          {"session_id", r.session_id},
          {"item_index", r.item_index},
          {"p_yes", r.p_yes},
          {"p_no", r.p_no},
          {"normalized", r.normalized},
          {"extraction_status", ToString(r.extraction_status)},
          {"prompt_hash", r.prompt_hash}};
}

inline JudgmentRecord JudgmentFromJson(const Json& j) {
  JudgmentRecord r;
  r.judge_id = jsonl::RequireString(j, "judge_id");
  r.model_id = jsonl::RequireString(j, "model_id");
  r.session_id = jsonl::RequireString(j, "session_id");
  r.item_index = jsonl::Require(j, "item_index").get<int>();
  r.p_yes = jsonl::RequireNumber(j, "p_yes");
  r.p_no = jsonl::RequireNumber(j, "p_no");
  r.normalized = jsonl::RequireNumber(j, "normalized");
  r.extraction_status = ParseExtractionStatus(jsonl::RequireString(j, "extraction_status"));
  r.prompt_hash = jsonl::RequireString(j, "prompt_hash");
  r.Validate();
  return r;
}

inline Json ToJson(const Annotation& a) {
  return {{"session_id", a.session_id}, {"model_id", a.model_id}, {"score", a.score}};
}

inline Annotation AnnotationFromJson(const Json& j) {
  return {jsonl::RequireString(j, "session_id"), jsonl::RequireString(j, "model_id"),
          jsonl::RequireNumber(j, "score")};
}

inline Json ToJson(const ScoreRecord& s) {
  Json j = {{"session_id", s.session_id},
            {"model_id", s.model_id},
            {"mode", ToString(s.mode)},
            {"score", s.score}};
  if (!s.digit_probs.empty()) j["digit_probs"] = s.digit_probs;
  return j;
}

inline ScoreRecord ScoreFromJson(const Json& j) {
  ScoreRecord s;
  s.session_id = jsonl::RequireString(j, "session_id");
  s.model_id = jsonl::RequireString(j, "model_id");
  s.mode = ParseScoreMode(jsonl::RequireString(j, "mode"));
  s.score = jsonl::RequireNumber(j, "score");
  if (auto it = j.find("digit_probs"); it != j.end()) {
    s.digit_probs = it->get<std::vector<double>>();
  }
  return s;
}

inline Json ToJson(const MatchOutcome& m) {
  return {{"session_id", m.session_id},
          {"model_a", m.model_a},
          {"model_b", m.model_b},
          {"result", ToString(m.result)}};
}

inline MatchOutcome MatchFromJson(const Json& j) {
  MatchOutcome m{jsonl::RequireString(j, "session_id"), jsonl::RequireString(j, "model_a"),
                 jsonl::RequireString(j, "model_b"),
                 ParseMatchResult(jsonl::RequireString(j, "result"))};
  if (m.model_a == m.model_b) throw ValidationError("match of a model against itself");
  return m;
}

inline Json ToJson(const EloRating& e) {
  return {{"model_id", e.model_id},
          {"rating", e.rating},
          {"ci_low", e.ci_low},
          {"ci_high", e.ci_high}};
}

// ---- whole-file loaders ----------------------------------------------------

template <typename T>
std::vector<Json> ToJsonRows(const std::vector<T>& xs) {
  std::vector<Json> rows;
  rows.reserve(xs.size());
  for (const auto& x : xs) rows.push_back(ToJson(x));
  return rows;
}

// Instances in file order. Duplicate session ids are an error.
inline std::vector<EvalInstance> LoadDataset(const std::filesystem::path& path) {
  std::vector<EvalInstance> out;
  std::set<std::string> seen;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t line) {
    EvalInstance x = InstanceFromJson(j);
    if (!seen.insert(x.session_id).second) {
      throw ParseError(path.string(), line, "duplicate session_id \"" + x.session_id + "\"");
    }
    out.push_back(std::move(x));
  });
  return out;
}

inline void WriteDataset(const std::filesystem::path& path, const std::vector<EvalInstance>& xs) {
  jsonl::Write(path, ToJsonRows(xs));
}

inline std::vector<ModelResponse> LoadResponses(const std::filesystem::path& path) {
  std::vector<ModelResponse> out;
  std::set<std::pair<std::string, std::string>> seen;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t line) {
    ModelResponse r = ResponseFromJson(j);
    if (!seen.emplace(r.session_id, r.model_id).second) {
      throw ParseError(path.string(), line,
                       "duplicate response for (" + r.session_id + ", " + r.model_id + ")");
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline void WriteResponses(const std::filesystem::path& path,
                           const std::vector<ModelResponse>& xs) {
  jsonl::Write(path, ToJsonRows(xs));
}

inline std::vector<Checklist> LoadChecklists(const std::filesystem::path& path) {
  std::vector<Checklist> out;
  std::set<std::string> seen;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t line) {
    Checklist c = ChecklistFromJson(j);
    if (!seen.insert(c.session_id).second) {
      throw ParseError(path.string(), line, "duplicate checklist for \"" + c.session_id + "\"");
    }
    out.push_back(std::move(c));
  });
  return out;
}

inline void WriteChecklists(const std::filesystem::path& path, const std::vector<Checklist>& xs) {
  jsonl::Write(path, ToJsonRows(xs));
}

inline std::vector<Annotation> LoadAnnotations(const std::filesystem::path& path) {
  std::vector<Annotation> out;
  std::set<std::pair<std::string, std::string>> seen;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t line) {
    Annotation a = AnnotationFromJson(j);
    if (!seen.emplace(a.session_id, a.model_id).second) {
      throw ParseError(path.string(), line,
                       "duplicate annotation for (" + a.session_id + ", " + a.model_id + ")");
    }
    out.push_back(std::move(a));
  });
  return out;
}

inline void WriteAnnotations(const std::filesystem::path& path,
                             const std::vector<Annotation>& xs) {
  jsonl::Write(path, ToJsonRows(xs));
}

inline std::vector<ScoreRecord> LoadScores(const std::filesystem::path& path) {
  std::vector<ScoreRecord> out;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t) { out.push_back(ScoreFromJson(j)); });
  return out;
}

inline void WriteScores(const std::filesystem::path& path, const std::vector<ScoreRecord>& xs) {
  jsonl::Write(path, ToJsonRows(xs));
}

inline std::vector<MatchOutcome> LoadMatches(const std::filesystem::path& path) {
  std::vector<MatchOutcome> out;
  jsonl::ForEachLine(path, [&](const Json& j, std::size_t) { out.push_back(MatchFromJson(j)); });
  return out;
}

// ---- judgment cache --------------------------------------------------------

// Append-only judgment store. Reads deduplicate on the cache key
// (judge, model, session, item, prompt_hash); the last line written for a key
// wins. One writer at a time; readers may run concurrently with nothing else.
class JudgmentCache {
 public:
  explicit JudgmentCache(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const { return path_; }

  std::size_t Append(const std::vector<JudgmentRecord>& records) const {
    for (const auto& r : records) r.Validate();
    jsonl::Append(path_, ToJsonRows(records));
    return records.size();
  }

  // Deduplicated view, in order of each key's first appearance. A missing
  // file reads as empty.
  std::vector<JudgmentRecord> Load() const {
    std::vector<JudgmentRecord> out;
    if (!std::filesystem::exists(path_)) return out;
    std::map<JudgmentRecord::CacheKey, std::size_t> slot;
    jsonl::ForEachLine(path_, [&](const Json& j, std::size_t) {
      JudgmentRecord r = JudgmentFromJson(j);
      auto [it, inserted] = slot.emplace(r.cache_key(), out.size());
      if (inserted) {
        out.push_back(std::move(r));
      } else {
        out[it->second] = std::move(r);
      }
    });
    return out;
  }

  std::vector<JudgmentRecord> LoadForJudge(const std::string& judge_id) const {
    std::vector<JudgmentRecord> all = Load();
    std::erase_if(all, [&](const JudgmentRecord& r) { return r.judge_id != judge_id; });
    return all;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace rocketeval
