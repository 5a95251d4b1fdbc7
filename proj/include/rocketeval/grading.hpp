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

// Judgments: per-item checklist grading from Yes/No first-token
// probabilities, plus the Direct (digit argmax) and CoT (generated analysis)
// baselines.

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "rocketeval/checklist.hpp"
#include "rocketeval/gateway.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/parallel.hpp"
#include "rocketeval/templates.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

inline const std::vector<std::string>& YesNoLabels() {
  static const std::vector<std::string> labels = {"Yes", "No"};
  return labels;
}

inline const std::vector<std::string>& DigitLabels() {
  static const std::vector<std::string> labels = {"0", "1", "2", "3", "4",
                                                  "5", "6", "7", "8", "9"};
  return labels;
}

struct NormalizedJudgment {
  double normalized = 0.5;
  ExtractionStatus status = ExtractionStatus::kNeither;
};

// p_yes / (p_yes + p_no) when both labels surfaced. When only one surfaced
// its own mass is used directly (Yes: p_yes, No: 1 - p_no), so the certainty
// of the answer is kept instead of collapsing to exactly 0 or 1.
inline NormalizedJudgment NormalizeYesNo(double p_yes, bool yes_found, double p_no,
                                         bool no_found) {
  if (yes_found && no_found && p_yes + p_no > 0.0) {
    return {p_yes / (p_yes + p_no), ExtractionStatus::kBothFound};
  }
  if (yes_found && !no_found) {
    return {std::clamp(p_yes, 0.0, 1.0), ExtractionStatus::kYesOnly};
  }
  if (no_found && !yes_found) {
    return {std::clamp(1.0 - p_no, 0.0, 1.0), ExtractionStatus::kNoOnly};
  }
  return {0.5, ExtractionStatus::kNeither};
}

inline std::string RenderGradingPrompt(const EvalInstance& instance,
                                       const ModelResponse& response,
                                       const ChecklistItem& item) {
  return Render(TemplateId::kChecklistGrading,
                {{"history", FormatHistory(instance.history)},
                 {"user_query", instance.user_query},
                 {"model_output", response.output},
                 {"checklist_item", item.question}});
}

// Rates one checklist item from the judge's Yes/No probabilities. The
// prompt holds this item only.
inline JudgmentRecord GradeItem(const EvalInstance& instance, const ModelResponse& response,
                                const ChecklistItem& item, Gateway& judge) {
  Request req;
  req.key = {response.session_id, response.model_id, item.index};
  req.purpose = TemplateId::kChecklistGrading;
  req.prompt = RenderGradingPrompt(instance, response, item);
  CandidateDistribution dist;
  try {
    dist = judge.ScoreFirstToken(req, YesNoLabels());
  } catch (const TransportError& e) {
    throw TransportError("grading " + req.key.str() + ": " + e.what());
  } catch (const RequestError& e) {
    throw RequestError("grading " + req.key.str() + ": " + e.what());
  }
  JudgmentRecord r;
  r.judge_id = judge.id();
  r.model_id = response.model_id;
  r.session_id = response.session_id;
  r.item_index = item.index;
  r.p_yes = dist.of("Yes");
  r.p_no = dist.of("No");
  const auto n = NormalizeYesNo(r.p_yes, dist.was_found("Yes"), r.p_no, dist.was_found("No"));
  r.normalized = n.normalized;
  r.extraction_status = n.status;
  r.prompt_hash = Sha256Hex(req.prompt);
  return r;
}

struct GradingFailure {
  RequestKey key;
  std::string message;
};

struct GradeOptions {
  // Abort when failures / requests exceeds this.
  double failure_threshold = 0.01;
  // Optional cache: hits are skipped, new records appended.
  const JudgmentCache* cache = nullptr;
};

struct GradeReport {
  std::vector<JudgmentRecord> records;  // one per (response, item), failures excluded
  std::vector<GradingFailure> failures;
  std::size_t cache_hits = 0;
  std::size_t dispatched = 0;
  std::vector<std::string> prompt_hashes;
};

inline std::filesystem::path ErrorReportPath(const std::filesystem::path& cache_path) {
  return cache_path.string() + ".errors.jsonl";
}

// Grades every item of every response. Requests for one response are issued
// together in item order so servers with prefix caching can reuse the shared
// prompt head. Records come back in (response input order, item order)
// whatever the completion order. Transport and per-request failures are
// collected rather than thrown; above the failure threshold a
// FailureThresholdError is raised after successful records are cached.
inline GradeReport GradeAll(const std::vector<EvalInstance>& instances,
                            const std::vector<ModelResponse>& responses,
                            const std::vector<Checklist>& checklists, Gateway& judge,
                            const GradeOptions& options = {}) {
  std::map<std::string, const EvalInstance*> by_session;
  for (const auto& x : instances) by_session[x.session_id] = &x;
  std::map<std::string, const Checklist*> checklist_of;
  for (const auto& c : checklists) checklist_of[c.session_id] = &c;

  struct Task {
    const EvalInstance* instance;
    const ModelResponse* response;
    const ChecklistItem* item;
    std::string prompt_hash;
  };
  std::vector<Task> tasks;
  for (const auto& r : responses) {
    auto xi = by_session.find(r.session_id);
    if (xi == by_session.end()) {
      throw ValidationError("response for unknown session " + r.session_id);
    }
    auto ci = checklist_of.find(r.session_id);
    if (ci == checklist_of.end()) {
      throw ValidationError("no checklist for session " + r.session_id);
    }
    for (const auto& item : ci->second->items) {
      tasks.push_back({xi->second, &r, &item,
                       Sha256Hex(RenderGradingPrompt(*xi->second, r, item))});
    }
  }

  std::map<JudgmentRecord::CacheKey, JudgmentRecord> cached;
  if (options.cache != nullptr) {
    for (auto& rec : options.cache->Load()) cached.emplace(rec.cache_key(), std::move(rec));
  }

  const std::string judge_id = judge.id();
  std::vector<std::optional<JudgmentRecord>> slots(tasks.size());
  std::vector<std::optional<std::string>> errors(tasks.size());
  std::vector<std::size_t> pending;
  GradeReport report;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    report.prompt_hashes.push_back(t.prompt_hash);
    auto it = cached.find(
        {judge_id, t.response->model_id, t.response->session_id, t.item->index, t.prompt_hash});
    if (it != cached.end()) {
      slots[i] = it->second;
      ++report.cache_hits;
    } else {
      pending.push_back(i);
    }
  }

  ParallelFor(pending.size(), static_cast<std::size_t>(judge.config().max_parallel),
              [&](std::size_t k) {
                const std::size_t i = pending[k];
                const Task& t = tasks[i];
                try {
                  slots[i] = GradeItem(*t.instance, *t.response, *t.item, judge);
                } catch (const TransportError& e) {
                  errors[i] = e.what();
                } catch (const RequestError& e) {
                  errors[i] = e.what();
                }
              });
  report.dispatched = pending.size();

  std::vector<JudgmentRecord> fresh;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (slots[i]) {
      report.records.push_back(*slots[i]);
    } else if (errors[i]) {
      const Task& t = tasks[i];
      report.failures.push_back(
          {{t.response->session_id, t.response->model_id, t.item->index}, *errors[i]});
    }
  }
  for (std::size_t i : pending) {
    if (slots[i]) fresh.push_back(*slots[i]);
  }

  if (options.cache != nullptr) {
    if (!fresh.empty()) options.cache->Append(fresh);
    std::vector<Json> rows;
    for (const auto& f : report.failures) {
      rows.push_back({{"session_id", f.key.session_id},
                      {"model_id", f.key.model_id},
                      {"item_index", f.key.item_index},
                      {"judge_id", judge_id},
                      {"error", f.message}});
    }
    const auto err_path = ErrorReportPath(options.cache->path());
    if (!rows.empty()) {
      jsonl::Write(err_path, rows);
    } else if (std::filesystem::exists(err_path)) {
      std::filesystem::remove(err_path);
    }
  }

  if (!tasks.empty()) {
    const double rate =
        static_cast<double>(report.failures.size()) / static_cast<double>(tasks.size());
    if (rate > options.failure_threshold) {
      throw FailureThresholdError(
          std::to_string(report.failures.size()) + " of " + std::to_string(tasks.size()) +
          " grading requests failed (threshold " + std::to_string(options.failure_threshold) +
          "); first error: " + report.failures.front().message);
    }
  }
  return report;
}

// ---- Direct and CoT baselines ---------------------------------------------

// The two variable sections of the judgment prompt: either a reference
// answer to compare against, or a checklist to guide the analysis.
struct JudgeGuidance {
  std::string reference_block;
  std::string rules_block;
};

inline JudgeGuidance ReferenceGuidance(const EvalInstance& instance) {
  return {RenderFragment(prompts::kReferenceBlock,
                         {{"ref_answer", OrEmptyMarker(instance.reference_response)}}),
          std::string(prompts::kRulesReference)};
}

inline JudgeGuidance ChecklistGuidance(const Checklist& checklist) {
  std::string list = JoinNumberedList(checklist.Questions());
  if (!list.empty()) list.pop_back();
  return {"", RenderFragment(prompts::kRulesChecklist, {{"checklist", list}})};
}

inline std::string RenderJudgePrompt(TemplateId id, const EvalInstance& instance,
                                     const ModelResponse& response,
                                     const JudgeGuidance& guidance) {
  return Render(id, {{"history", FormatHistory(instance.history)},
                     {"user_query", instance.user_query},
                     {"reference_block", guidance.reference_block},
                     {"model_output", response.output},
                     {"rules_block", guidance.rules_block}});
}

// Digit with the largest first-token probability; ties go to the lower
// digit. The full distribution is kept on the record.
inline ScoreRecord DirectScore(const EvalInstance& instance, const ModelResponse& response,
                               Gateway& judge, const JudgeGuidance& guidance) {
  Request req;
  req.key = {response.session_id, response.model_id, 0};
  req.purpose = TemplateId::kDirectScoring;
  req.prompt = RenderJudgePrompt(TemplateId::kDirectScoring, instance, response, guidance);
  const CandidateDistribution dist = judge.ScoreFirstToken(req, DigitLabels());
  ScoreRecord s{response.session_id, response.model_id, ScoreMode::kDirect, 0.0, {}};
  int best = -1;
  double best_p = -1.0;
  for (int d = 0; d < 10; ++d) {
    const std::string label = DigitLabels()[d];
    const double p = dist.of(label);
    s.digit_probs.push_back(p);
    if (dist.was_found(label) && p > best_p) {
      best = d;
      best_p = p;
    }
  }
  if (best < 0) {
    throw ExtractionError("direct scoring " + req.key.str() + ": no digit among top-" +
                          std::to_string(judge.config().top_logprobs) + " alternatives");
  }
  s.score = best;
  return s;
}

// First "score" field of the completion, as an integer in 1-10. Fences and
// surrounding prose are ignored.
inline int ExtractCotScore(std::string_view completion) {
  static const std::regex kScore(R"re("score"\s*:\s*"?\s*([-+]?[0-9]+(\.[0-9]+)?)\s*"?)re");
  std::string text(completion);
  std::smatch m;
  if (!std::regex_search(text, m, kScore)) {
    throw ExtractionError("CoT completion has no \"score\" field");
  }
  if (m[2].matched) {
    throw ExtractionError("CoT score '" + m[1].str() + "' is not an integer");
  }
  const long v = std::stol(m[1].str());
  if (v < 1 || v > 10) {
    throw ExtractionError("CoT score " + m[1].str() + " outside 1-10");
  }
  return static_cast<int>(v);
}

inline constexpr int kDefaultCotMaxTokens = 1024;

inline ScoreRecord CotScore(const EvalInstance& instance, const ModelResponse& response,
                            Gateway& judge, const JudgeGuidance& guidance,
                            int max_tokens = kDefaultCotMaxTokens) {
  Request req;
  req.key = {response.session_id, response.model_id, 0};
  req.purpose = TemplateId::kCotScoring;
  req.prompt = RenderJudgePrompt(TemplateId::kCotScoring, instance, response, guidance);
  req.temperature = 0.0;
  req.max_tokens = max_tokens;
  const std::string text = judge.Generate(req);
  return {response.session_id, response.model_id, ScoreMode::kCot,
          static_cast<double>(ExtractCotScore(text)), {}};
}

}  // namespace rocketeval
