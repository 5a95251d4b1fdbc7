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

// Checklist creation with a creator backend, numbered-list parsing and the
// fixed six-question baseline.

#pragma once

#include <array>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rocketeval/gateway.hpp"
#include "rocketeval/templates.hpp"
#include "rocketeval/types.hpp"

namespace rocketeval {

// "USER: ...\n\nASSISTANT: ..." or the empty-section marker.
inline std::string FormatHistory(const std::vector<Turn>& history) {
  if (history.empty()) return std::string(prompts::kEmptySection);
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += history[i].speaker == Speaker::kUser ? "USER: " : "ASSISTANT: ";
    out += history[i].text;
  }
  return out;
}

inline std::string OrEmptyMarker(const std::optional<std::string>& s) {
  return s && !s->empty() ? *s : std::string(prompts::kEmptySection);
}

// Question texts from every line that starts with "<integer>. ", in
// document order. Preamble, prose and fence lines are skipped.
inline std::vector<std::string> ParseNumberedList(std::string_view text) {
  static const std::regex kItem(R"(^\s*\d+\.\s+(.*\S)\s*$)");
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, kItem)) out.push_back(m[1].str());
  }
  return out;
}

inline std::string JoinNumberedList(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += std::to_string(i + 1) + ". " + items[i] + "\n";
  }
  return out;
}

inline std::string RenderCreationPrompt(const EvalInstance& instance) {
  return Render(TemplateId::kChecklistCreation,
                {{"history", FormatHistory(instance.history)},
                 {"user_query", instance.user_query},
                 {"reference_response", OrEmptyMarker(instance.reference_response)}});
}

inline constexpr int kCreatorMaxTokens = 1024;

// Asks the creator for a checklist at temperature 0 and parses it. Throws
// ExtractionError when the output holds no numbered list, ValidationError
// when it holds more than kMaxChecklistItems items.
inline Checklist CreateChecklist(const EvalInstance& instance, Gateway& creator) {
  Request req;
  req.key = {instance.session_id, "", 0};
  req.purpose = TemplateId::kChecklistCreation;
  req.prompt = RenderCreationPrompt(instance);
  req.temperature = 0.0;
  req.max_tokens = kCreatorMaxTokens;
  const std::string text = creator.Generate(req);
  const auto questions = ParseNumberedList(text);
  if (questions.empty()) {
    throw ExtractionError("creator output for " + instance.session_id +
                          " contains no numbered list");
  }
  Checklist c = Checklist::FromQuestions(instance.session_id, questions);
  c.Validate();
  return c;
}

// Version of the fixed baseline phrasing below. Bump on any wording change:
// cached judgments key on the rendered prompt and would otherwise mix.
inline constexpr int kFixedChecklistVersion = 1;

// One question per dimension: helpfulness, relevance, accuracy, depth,
// creativity, level of detail.
inline constexpr std::array<std::string_view, 6> kFixedQuestions = {
    "Is the response helpful in addressing the user's needs?",
    "Is the response relevant to the user query?",
    "Is the information in the response accurate?",
    "Does the response cover the topic with sufficient depth?",
    "Does the response show creativity where the query allows it?",
    "Does the response provide an appropriate level of detail?",
};

inline Checklist FixedChecklist(const std::string& session_id) {
  std::vector<std::string> q(kFixedQuestions.begin(), kFixedQuestions.end());
  return Checklist::FromQuestions(session_id, q);
}

}  // namespace rocketeval
