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

// Judge reliability probes: answer disagreement under repeated sampling, and
// positional bias when earlier items are judged in the same dialogue with a
// forced answer.

#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rocketeval/checklist.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/gateway.hpp"
#include "rocketeval/grading.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/templates.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

enum class BinaryAnswer { kYes, kNo, kOther };

inline std::string_view ToString(BinaryAnswer a) {
  switch (a) {
    case BinaryAnswer::kYes: return "Yes";
    case BinaryAnswer::kNo: return "No";
    case BinaryAnswer::kOther: return "other";
  }
  return "other";
}

// Trims whitespace and trailing punctuation, then matches yes/no in any case.
inline BinaryAnswer ClassifyAnswer(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto keep = [](unsigned char c) { return std::isalnum(c) != 0; };
  auto first = std::find_if(s.begin(), s.end(), keep);
  auto last = std::find_if(s.rbegin(), s.rend(), keep).base();
  if (first >= last) return BinaryAnswer::kOther;
  const std::string core(first, last);
  if (core == "yes") return BinaryAnswer::kYes;
  if (core == "no") return BinaryAnswer::kNo;
  return BinaryAnswer::kOther;
}

inline constexpr int kDefaultDiagnosticSamples = 3;
inline constexpr double kDefaultDiagnosticTemperature = 1.0;

// k single-token generations of the grading prompt, told apart by
// sample_index.
inline std::vector<BinaryAnswer> SampleBinaryJudgments(const EvalInstance& instance,
                                                       const ModelResponse& response,
                                                       const ChecklistItem& item, Gateway& judge,
                                                       int k, double temperature) {
  if (k < 1) throw ValidationError("sample_binary_judgments: k must be >= 1");
  Request req;
  req.key = {response.session_id, response.model_id, item.index};
  req.purpose = TemplateId::kChecklistGrading;
  req.prompt = RenderGradingPrompt(instance, response, item);
  req.temperature = temperature;
  req.max_tokens = 1;
  std::vector<BinaryAnswer> out;
  for (int i = 0; i < k; ++i) {
    req.sample_index = i;
    std::string text;
    try {
      text = judge.Generate(req);
    } catch (const ExtractionError&) {
      // An empty completion is an unreadable answer, not a failed request.
    }
    out.push_back(ClassifyAnswer(text));
  }
  return out;
}

inline bool Unanimous(const std::vector<BinaryAnswer>& samples) {
  if (samples.front() == BinaryAnswer::kOther) return false;
  return std::all_of(samples.begin(), samples.end(),
                     [&](BinaryAnswer a) { return a == samples.front(); });
}

// Fraction of items whose samples are not unanimous. Any `other` answer
// counts as a disagreement.
inline double DisagreementRatio(const std::vector<std::vector<BinaryAnswer>>& per_item) {
  if (per_item.empty()) throw ValidationError("disagreement ratio: no items");
  std::size_t mixed = 0;
  for (std::size_t i = 0; i < per_item.size(); ++i) {
    if (per_item[i].size() < 2) {
      throw ValidationError("disagreement ratio: item " + std::to_string(i) + " has " +
                            std::to_string(per_item[i].size()) + " sample(s), need >= 2");
    }
    if (!Unanimous(per_item[i])) ++mixed;
  }
  return static_cast<double>(mixed) / static_cast<double>(per_item.size());
}

// Prompt for judging item `position` (1-based) after items 1..position-1,
// each shown with the forced answer.
inline std::string RenderPositionPrompt(const EvalInstance& instance,
                                        const ModelResponse& response, const Checklist& checklist,
                                        int position, BinaryAnswer forced) {
  std::string previous;
  for (int i = 1; i < position; ++i) {
    previous += RenderFragment(prompts::kAnsweredTurn,
                               {{"checklist_item", checklist.items[static_cast<std::size_t>(i - 1)].question},
                                {"answer", std::string(ToString(forced))}});
  }
  return Render(TemplateId::kMultiturnGrading,
                {{"history", FormatHistory(instance.history)},
                 {"user_query", instance.user_query},
                 {"model_output", response.output},
                 {"previous_turns", previous},
                 {"checklist_item", checklist.items[static_cast<std::size_t>(position - 1)].question}});
}

// Answer to each item when every earlier item was answered `forced`.
inline std::vector<BinaryAnswer> PositionBiasProbe(const EvalInstance& instance,
                                                   const ModelResponse& response,
                                                   const Checklist& checklist, Gateway& judge,
                                                   BinaryAnswer forced) {
  if (checklist.items.size() < 2) {
    throw ValidationError("position bias probe needs a checklist of >= 2 items (" +
                          checklist.session_id + ")");
  }
  if (forced == BinaryAnswer::kOther) throw ValidationError("forced answer must be Yes or No");
  std::vector<BinaryAnswer> out;
  for (std::size_t i = 0; i < checklist.items.size(); ++i) {
    const int position = static_cast<int>(i + 1);
    Request req;
    req.key = {response.session_id, response.model_id, position};
    req.purpose = TemplateId::kMultiturnGrading;
    req.prompt = RenderPositionPrompt(instance, response, checklist, position, forced);
    req.temperature = 0.0;
    req.max_tokens = 1;
    std::string text;
    try {
      text = judge.Generate(req);
    } catch (const ExtractionError&) {
    }
    out.push_back(ClassifyAnswer(text));
  }
  return out;
}

// 1 where the two runs answered differently.
inline std::vector<int> PositionDisagreement(const std::vector<BinaryAnswer>& yes_run,
                                             const std::vector<BinaryAnswer>& no_run) {
  if (yes_run.size() != no_run.size()) {
    throw ValidationError("position disagreement: runs have " + std::to_string(yes_run.size()) +
                          " and " + std::to_string(no_run.size()) + " positions");
  }
  std::vector<int> out(yes_run.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = yes_run[i] != no_run[i] ? 1 : 0;
  return out;
}

struct PositionCurvePoint {
  int position = 0;
  double mean = 0.0;
  std::size_t n = 0;
};

// Mean indicator per position over instances; checklists may differ in
// length, so each position averages over the instances that reach it.
inline std::vector<PositionCurvePoint> AggregatePositionDisagreement(
    const std::vector<std::vector<int>>& indicators) {
  std::vector<PositionCurvePoint> out;
  for (const auto& run : indicators) {
    if (run.size() > out.size()) out.resize(run.size());
    for (std::size_t i = 0; i < run.size(); ++i) {
      out[i].mean += run[i];
      ++out[i].n;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].position = static_cast<int>(i + 1);
    out[i].mean /= static_cast<double>(out[i].n);
  }
  return out;
}

// ---- reports ---------------------------------------------------------------

struct SamplingRecord {
  RequestKey key;
  std::vector<BinaryAnswer> samples;
};

inline Json ToJson(const SamplingRecord& r) {
  Json samples = Json::array();
  for (auto a : r.samples) samples.push_back(std::string(ToString(a)));
  return {{"session_id", r.key.session_id},
          {"model_id", r.key.model_id},
          {"item_index", r.key.item_index},
          {"samples", samples},
          {"unanimous", Unanimous(r.samples)}};
}

inline void WriteSamplingReport(const std::filesystem::path& path,
                                const std::vector<SamplingRecord>& records) {
  std::vector<Json> rows;
  for (const auto& r : records) rows.push_back(ToJson(r));
  jsonl::Write(path, rows);
}

inline void WritePositionReport(const std::filesystem::path& path,
                                const std::vector<PositionCurvePoint>& curve) {
  std::vector<Json> rows;
  for (const auto& p : curve) {
    rows.push_back({{"position", p.position}, {"disagreement", p.mean}, {"n", p.n}});
  }
  jsonl::Write(path, rows);
}

}  // namespace rocketeval
