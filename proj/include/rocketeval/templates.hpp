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

// Prompt bodies and placeholder substitution.
//
// Placeholders are `{name}` with a lowercase identifier. Only the names a
// template declares are substituted, so literal braces in a body (`{{}}`,
// JSON examples) pass through untouched. Substitution is a single pass:
// bound text is never re-scanned.

#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rocketeval/error.hpp"

namespace rocketeval {

enum class TemplateId {
  kChecklistCreation,
  kChecklistGrading,
  kCotScoring,
  kDirectScoring,
  kMultiturnGrading,
};

inline std::string_view ToString(TemplateId id) {
  switch (id) {
    case TemplateId::kChecklistCreation: return "checklist_creation";
    case TemplateId::kChecklistGrading: return "checklist_grading";
    case TemplateId::kCotScoring: return "cot_scoring";
    case TemplateId::kDirectScoring: return "direct_scoring";
    case TemplateId::kMultiturnGrading: return "multiturn_grading";
  }
  return "checklist_grading";
}

inline constexpr std::array<TemplateId, 5> kAllTemplates = {
    TemplateId::kChecklistCreation, TemplateId::kChecklistGrading, TemplateId::kCotScoring,
    TemplateId::kDirectScoring, TemplateId::kMultiturnGrading};

using Bindings = std::map<std::string, std::string, std::less<>>;

namespace prompts {

inline constexpr std::string_view kCreationBody = R"PROMPT(# Instruction
You are an helpful assistant who identifies and summarizes key factors in large language models (LLMs) evaluation to help humans evaluate LLMs efficiently.

Feed any query into different LLMs, I will get various responses. I need to know in quick whether these responses follows the instructions and answers the question in the user query better.

I'll provide you with a user query. Your task is to identify those key factors that will affect my judgment and summarize them into a list to improve the efficiency of my evaluation.

# Conversation between User and AI
<|begin_of_history|>

{history}

<|end_of_history|> 

## Current User Query
<|begin_of_query|>

{user_query}

<|end_of_query|>

## Reference Response
<|begin_of_reference_response|>

{reference_response}

<|end_of_reference_response|>

# Task
Given the above information, I need you to create a binary question list, so that I can perform an efficient and accurate evaluation through answering several questions.

Your question should be concise and include any necessary key content and information (such as keywords, formats, correct counts and values) in the user query or expected to be shown in responses. Your questions should not only consider evaluating the reference response, but all possible responses. Avoid creating duplicate, cumbersome or vague questions. For example, you should ask "Is this response contain the correct answer ..." instead of "Is this response's answer correct?". Ask fewer questions by aggregating questions with repeated contexts into one question.

## Output Format
Please provide your outputs in the following markdown format by filling in the placeholders in {{}}:
```
1. {{question1}}
2. {{question2}}
...
``` )PROMPT";

inline constexpr std::string_view kGradingBody = R"PROMPT(# Instruction 

You are an expert evaluator. Your task is to evaluate the quality of the responses generated by AI models. 
We will provide you with the user query and an AI-generated responses.
You should first read the user query and the conversation history carefully for analyzing the task, and then evaluate the quality of the responses by answer the question provided below.

# Conversation between User and AI

## History
<|begin_of_history|>

{history}

<|end_of_history|> 

## Current User Query
<|begin_of_query|>

{user_query}

<|end_of_query|>

## AI Response
<|begin_of_response|>

{model_output}

<|end_of_response|>
 

# Evaluation   

## Question
<|begin_of_question|>

{checklist_item}

<|end_of_question|>

Please answer the given question based on the conversation history and the AI response. You can only answer 'Yes' or 'No'.

Your answer (Yes/No): )PROMPT";

inline constexpr std::string_view kJudgeHead = R"PROMPT(# Instruction 
You are an expert evaluator. Your task is to evaluate the quality of the responses generated by AI models. 
We will provide you with the user query and an AI-generated responses.
You should first read the user query and the conversation history carefully for analyzing the task, and then evaluate the quality of the responses based on and rules provided below.

# Conversation between User and AI
## History
<|begin_of_history|>
{history}
<|end_of_history|> 
## Current User Query
<|begin_of_query|>
{user_query}
<|end_of_query|>
)PROMPT";

inline constexpr std::string_view kReferenceBlock = R"PROMPT(## Reference Response
<|begin_of_reference_response|>
{ref_answer}
<|end_of_reference_response|>
)PROMPT";

inline constexpr std::string_view kJudgeResponseBlock = R"PROMPT(## AI Response
<|begin_of_response|>
{model_output}
<|end_of_response|>

# Evaluation
)PROMPT";

inline constexpr std::string_view kRulesReference = R"PROMPT(## Rules 
You should first compare the AI response and reference response based on your analysis of the user queries and the conversation history, and then provide your assessment by scoring the AI response.
)PROMPT";

inline constexpr std::string_view kRulesChecklist = R"PROMPT(## Checklist 
<|begin_of_checklist|>
{checklist}
<|end_of_checklist|>
Please use this checklist to guide your evaluation, but do not limit your assessment to the checklist.
## Rules 
You should compare the above response based on your analysis of the user queries and the conversation history.
You should first write down your analysis and the checklist that you used for the evaluation, and then provide your assessment according to the checklist.
)PROMPT";

inline constexpr std::string_view kCotTail = R"PROMPT(The scores are in the range of 1~10, where 1 means the response is very poor and 10 means the response is perfect.
Here are more detailed criteria for the scores:

- Score 1~2: The response is very poor and does not make sense at all.
- Score 3~4: The response is poor and does help user solve the problem in a meaningful way.
- Score 5~6: The response is fair but has some issues (e.g., factual errors, hallucinations, missing key information).
- Score 7~8: The response is good enough but could be improved in some ways.
- Score 9~10: The response is perfect and provides helpful information that can help user solve the problem.

## Output Format 
First, please output your analysis for the model response, and then summarize your assessment to two aspects: "strengths" and "weaknesses"; Finally, please write down your rating for the assessment.

Please provide your evaluation results in the following json format by filling in the placeholders in []:
```
{
    "strengths": "[analysis for the strengths of the response]",
    "weaknesses": "[analysis for the weaknesses of the response]",
    "score": "[1~10]"
}
```)PROMPT";

inline constexpr std::string_view kDirectTail = R"PROMPT(The scores are in the range of 0~9, where 0 means the response is very poor and 9 means the response is perfect.
Here are more detailed criteria for the scores:

- Score 0~1: The response is very poor and does not make sense at all.
- Score 2~3: The response is poor and does help user solve the problem in a meaningful way.
- Score 4~5: The response is fair but has some issues (e.g., factual errors, hallucinations, missing key information).
- Score 6~7: The response is good enough but could be improved in some ways.
- Score 8~9: The response is perfect and provides helpful information that can help user solve the problem.

## Output Format 
Please output the score directly as a digit from 0-9. Do not output other text.
Your score: )PROMPT";

// Grading turns already answered in a multi-turn probe. Bound into the
// `previous_turns` slot of the multi-turn body once per earlier item.
inline constexpr std::string_view kAnsweredTurn = R"PROMPT(## Question
<|begin_of_question|>

{checklist_item}

<|end_of_question|>

Please answer the given question based on the conversation history and the AI response. You can only answer 'Yes' or 'No'.

Your answer (Yes/No): {answer}

)PROMPT";

// Marker used for sections with nothing to show (no history, no reference).
inline constexpr std::string_view kEmptySection = "N/A";

}  // namespace prompts

namespace detail {

inline bool IsPlaceholderChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Names of the `{name}` markers in `body`, in first-appearance order.
inline std::vector<std::string> ScanPlaceholders(std::string_view body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < body.size() && IsPlaceholderChar(body[j])) ++j;
    if (j > i + 1 && j < body.size() && body[j] == '}') {
      std::string name(body.substr(i + 1, j - i - 1));
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  return names;
}

}  // namespace detail

struct PromptTemplate {
  TemplateId id;
  std::string body;
  std::vector<std::string> placeholders;

  // Substitutes every declared placeholder. Throws ValidationError naming the
  // first unbound placeholder.
  std::string Render(const Bindings& bindings) const {
    for (const auto& name : placeholders) {
      if (!bindings.contains(name)) {
        throw ValidationError("template " + std::string(ToString(id)) +
                              ": missing binding for {" + name + "}");
      }
    }
    std::string out;
    out.reserve(body.size() + 256);
    std::size_t i = 0;
    while (i < body.size()) {
      if (body[i] == '{') {
        std::size_t j = i + 1;
        while (j < body.size() && detail::IsPlaceholderChar(body[j])) ++j;
        if (j > i + 1 && j < body.size() && body[j] == '}') {
          const std::string_view name(body.data() + i + 1, j - i - 1);
          if (std::find(placeholders.begin(), placeholders.end(), name) != placeholders.end()) {
            out += bindings.find(name)->second;
            i = j + 1;
            continue;
          }
        }
      }
      out.push_back(body[i]);
      ++i;
    }
    return out;
  }
};

namespace detail {

inline PromptTemplate MakeTemplate(TemplateId id, std::string body,
                                   std::vector<std::string> declared) {
  // Every declared name must actually appear; anything else in braces is
  // literal text.
  const auto found = ScanPlaceholders(body);
  for (const auto& name : declared) {
    if (std::find(found.begin(), found.end(), name) == found.end()) {
      throw Error("template " + std::string(ToString(id)) + " lacks {" + name + "}");
    }
  }
  return {id, std::move(body), std::move(declared)};
}

inline std::string MultiturnBody() {
  std::string body(prompts::kGradingBody);
  const std::string_view anchor = "## Question\n";
  const auto pos = body.find(anchor);
  body.insert(pos, "{previous_turns}");
  return body;
}

}  // namespace detail

// The template registry. Direct and CoT scoring share the judgment layout
// and take two pre-rendered blocks: `reference_block` (empty, or the
// reference-response section) and `rules_block` (reference rules or the
// checklist section with its rules); see JudgeGuidance in grading.hpp.
inline const PromptTemplate& GetTemplate(TemplateId id) {
  static const std::array<PromptTemplate, 5> registry = [] {
    using prompts::kJudgeHead;
    using prompts::kJudgeResponseBlock;
    const std::string judge_prefix = std::string(kJudgeHead) + "{reference_block}" +
                                     std::string(kJudgeResponseBlock) + "{rules_block}";
    const std::vector<std::string> judge_slots = {"history", "user_query", "reference_block",
                                                  "model_output", "rules_block"};
    return std::array<PromptTemplate, 5>{
        detail::MakeTemplate(TemplateId::kChecklistCreation, std::string(prompts::kCreationBody),
                             {"history", "user_query", "reference_response"}),
        detail::MakeTemplate(TemplateId::kChecklistGrading, std::string(prompts::kGradingBody),
                             {"history", "user_query", "model_output", "checklist_item"}),
        detail::MakeTemplate(TemplateId::kCotScoring,
                             judge_prefix + std::string(prompts::kCotTail), judge_slots),
        detail::MakeTemplate(TemplateId::kDirectScoring,
                             judge_prefix + std::string(prompts::kDirectTail), judge_slots),
        detail::MakeTemplate(TemplateId::kMultiturnGrading, detail::MultiturnBody(),
                             {"history", "user_query", "model_output", "previous_turns",
                              "checklist_item"}),
    };
  }();
  return registry[static_cast<std::size_t>(id)];
}

inline std::string Render(TemplateId id, const Bindings& bindings) {
  return GetTemplate(id).Render(bindings);
}

// Renders a fragment whose placeholders are all the `{name}` markers it
// contains.
inline std::string RenderFragment(std::string_view fragment, const Bindings& bindings) {
  PromptTemplate t{TemplateId::kChecklistGrading, std::string(fragment),
                   detail::ScanPlaceholders(fragment)};
  return t.Render(bindings);
}

}  // namespace rocketeval
