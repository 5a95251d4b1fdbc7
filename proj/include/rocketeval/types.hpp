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

// Domain model shared by every stage of the pipeline.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "rocketeval/error.hpp"

namespace rocketeval {

enum class Speaker { kUser, kAssistant };

inline std::string_view ToString(Speaker s) {
  return s == Speaker::kUser ? "user" : "assistant";
}

inline Speaker ParseSpeaker(std::string_view s) {
  if (s == "user") return Speaker::kUser;
  if (s == "assistant") return Speaker::kAssistant;
  throw ValidationError("unknown role '" + std::string(s) +
                        "' (expected user or assistant)");
}

struct Turn {
  Speaker speaker = Speaker::kUser;
  std::string text;

  bool operator==(const Turn&) const = default;
};

// One benchmark query: prior conversation, the current user turn and an
// optional reference answer.
struct EvalInstance {
  std::string session_id;
  std::vector<Turn> history;
  std::string user_query;
  std::optional<std::string> reference_response;
  std::optional<std::string> task_tag;

  bool operator==(const EvalInstance&) const = default;

  // Throws ValidationError when the instance breaks its invariants.
  void Validate() const {
    if (session_id.empty()) throw ValidationError("empty session_id");
    for (std::size_t i = 0; i < history.size(); ++i) {
      const Speaker expected = i % 2 == 0 ? Speaker::kUser : Speaker::kAssistant;
      if (history[i].speaker != expected) {
        throw ValidationError("session " + session_id + ": history turn " +
                              std::to_string(i) + " should be " +
                              std::string(ToString(expected)));
      }
    }
  }
};

struct ModelResponse {
  std::string session_id;
  std::string model_id;
  std::string output;

  bool operator==(const ModelResponse&) const = default;

  // Empty generations are kept and graded; this only flags them.
  bool empty() const { return output.empty(); }
};

struct ChecklistItem {
  int index = 1;  // 1-based, contiguous
  std::string question;

  bool operator==(const ChecklistItem&) const = default;
};

inline constexpr std::size_t kMaxChecklistItems = 20;
inline constexpr std::size_t kRecommendedMinItems = 5;
inline constexpr std::size_t kRecommendedMaxItems = 10;

struct Checklist {
  std::string session_id;
  std::vector<ChecklistItem> items;

  bool operator==(const Checklist&) const = default;

  // Builds a checklist with contiguous 1-based indices.
  static Checklist FromQuestions(std::string session_id,
                                 const std::vector<std::string>& questions) {
    Checklist c{std::move(session_id), {}};
    c.items.reserve(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) {
      c.items.push_back({static_cast<int>(i + 1), questions[i]});
    }
    return c;
  }

  std::vector<std::string> Questions() const {
    std::vector<std::string> q;
    q.reserve(items.size());
    for (const auto& it : items) q.push_back(it.question);
    return q;
  }

  // Outside the 5-10 band the creator was asked for.
  bool size_warning() const {
    return items.size() < kRecommendedMinItems || items.size() > kRecommendedMaxItems;
  }

  void Validate() const {
    if (items.empty() || items.size() > kMaxChecklistItems) {
      throw ValidationError("checklist for " + session_id + " has " +
                            std::to_string(items.size()) +
                            " items; expected 1 to " +
                            std::to_string(kMaxChecklistItems));
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].index != static_cast<int>(i + 1)) {
        throw ValidationError("checklist for " + session_id +
                              ": item indices must be contiguous from 1");
      }
      if (items[i].question.empty()) {
        throw ValidationError("checklist for " + session_id + ": empty question " +
                              std::to_string(i + 1));
      }
    }
  }
};

enum class ExtractionStatus { kBothFound, kYesOnly, kNoOnly, kNeither };

inline std::string_view ToString(ExtractionStatus s) {
  switch (s) {
    case ExtractionStatus::kBothFound: return "both_found";
    case ExtractionStatus::kYesOnly: return "yes_only";
    case ExtractionStatus::kNoOnly: return "no_only";
    case ExtractionStatus::kNeither: return "neither";
  }
  return "neither";
}

inline ExtractionStatus ParseExtractionStatus(std::string_view s) {
  if (s == "both_found") return ExtractionStatus::kBothFound;
  if (s == "yes_only") return ExtractionStatus::kYesOnly;
  if (s == "no_only") return ExtractionStatus::kNoOnly;
  if (s == "neither") return ExtractionStatus::kNeither;
  throw ValidationError("unknown extraction_status '" + std::string(s) + "'");
}

// Raw Yes/No probabilities and the normalized score for one
// (judge, model, instance, item).
struct JudgmentRecord {
  std::string judge_id;
  std::string model_id;
  std::string session_id;
  int item_index = 1;
  double p_yes = 0.0;
  double p_no = 0.0;
  double normalized = 0.5;
  ExtractionStatus extraction_status = ExtractionStatus::kNeither;
  std::string prompt_hash;

  bool operator==(const JudgmentRecord&) const = default;

  using CacheKey = std::tuple<std::string, std::string, std::string, int, std::string>;

  CacheKey cache_key() const {
    return {judge_id, model_id, session_id, item_index, prompt_hash};
  }

  void Validate() const {
    const auto fail = [&](const std::string& why) {
      throw ValidationError("judgment " + session_id + "/" + model_id + "/" +
                            std::to_string(item_index) + ": " + why);
    };
    if (!(p_yes >= 0.0) || !(p_no >= 0.0) || p_yes + p_no > 1.0 + 1e-9) {
      fail("probabilities out of range");
    }
    if (!(normalized >= 0.0 && normalized <= 1.0)) fail("normalized outside [0,1]");
    if (extraction_status == ExtractionStatus::kBothFound &&
        std::abs(normalized - p_yes / (p_yes + p_no)) > 1e-12) {
      fail("normalized != p_yes / (p_yes + p_no)");
    }
    if (extraction_status == ExtractionStatus::kNeither && normalized != 0.5) {
      fail("neither-found judgment must have normalized = 0.5");
    }
  }
};

struct ScoreRange {
  double lo = 1.0;
  double hi = 10.0;
  int bins = 10;

  bool operator==(const ScoreRange&) const = default;

  void Validate() const {
    if (!(lo < hi)) throw ValidationError("score range needs lo < hi");
    if (bins < 2) throw ValidationError("score range needs bins >= 2");
  }

  bool contains(double s) const { return s >= lo && s <= hi; }

  // Range used by digit-only direct scoring (1-10 becomes 0-9).
  ScoreRange Shifted(double by) const { return {lo + by, hi + by, bins}; }
};

struct Annotation {
  std::string session_id;
  std::string model_id;
  double score = 0.0;

  bool operator==(const Annotation&) const = default;
};

enum class ScoreMode { kChecklistUnsup, kChecklistSup, kDirect, kCot };

inline std::string_view ToString(ScoreMode m) {
  switch (m) {
    case ScoreMode::kChecklistUnsup: return "checklist_unsup";
    case ScoreMode::kChecklistSup: return "checklist_sup";
    case ScoreMode::kDirect: return "direct";
    case ScoreMode::kCot: return "cot";
  }
  return "checklist_unsup";
}

inline ScoreMode ParseScoreMode(std::string_view s) {
  if (s == "checklist_unsup") return ScoreMode::kChecklistUnsup;
  if (s == "checklist_sup") return ScoreMode::kChecklistSup;
  if (s == "direct") return ScoreMode::kDirect;
  if (s == "cot") return ScoreMode::kCot;
  throw ValidationError("unknown score mode '" + std::string(s) + "'");
}

struct ScoreRecord {
  std::string session_id;
  std::string model_id;
  ScoreMode mode = ScoreMode::kChecklistUnsup;
  double score = 0.0;
  // Direct mode: probability per digit 0-9. Empty otherwise.
  std::vector<double> digit_probs;

  bool operator==(const ScoreRecord&) const = default;
};

enum class MatchResult { kAWins, kBWins, kTie };

inline std::string_view ToString(MatchResult r) {
  switch (r) {
    case MatchResult::kAWins: return "a_wins";
    case MatchResult::kBWins: return "b_wins";
    case MatchResult::kTie: return "tie";
  }
  return "tie";
}

inline MatchResult ParseMatchResult(std::string_view s) {
  if (s == "a_wins") return MatchResult::kAWins;
  if (s == "b_wins") return MatchResult::kBWins;
  if (s == "tie") return MatchResult::kTie;
  throw ValidationError("unknown match result '" + std::string(s) + "'");
}

inline MatchResult Mirror(MatchResult r) {
  if (r == MatchResult::kAWins) return MatchResult::kBWins;
  if (r == MatchResult::kBWins) return MatchResult::kAWins;
  return MatchResult::kTie;
}

struct MatchOutcome {
  std::string session_id;
  std::string model_a;
  std::string model_b;
  MatchResult result = MatchResult::kTie;

  bool operator==(const MatchOutcome&) const = default;
};

struct EloRating {
  std::string model_id;
  double rating = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  bool operator==(const EloRating&) const = default;
};

}  // namespace rocketeval
