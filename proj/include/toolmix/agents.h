// Copyright 2026 The toolmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Agent strategies, the built-in pool of fifteen, pool files, and the
// prompt builders for first-round and refinement-round messages.

#ifndef TOOLMIX_AGENTS_H_
#define TOOLMIX_AGENTS_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toolmix/core.h"

namespace toolmix {

enum class SearchVariant { kNone, kGoogle, kLlm, kCombined };

// "none", "gs", "llm", "com".
std::string_view ToString(SearchVariant variant);
SearchVariant SearchVariantFromString(std::string_view s);

// How an agent's final answer is read out of its response.
enum class AnswerMode {
  // The last <<<...>>> span.
  kSpan,
  // The last python block; its output is the answer value. Used by the
  // CoT-code agent, whose code is run by the engine rather than the agent.
  kCode,
};

inline constexpr int kDefaultToolBudget = 5;
inline constexpr double kDefaultTemperature = 0.7;

struct AgentSpec {
  std::string agent_id;
  std::string display_name;
  // May contain a "{hint}" slot, filled from `hint`.
  std::string head_prompt;
  // Non-empty for guided agents: a steering pass that produces guidance
  // before the tool loop starts. Also honours "{hint}".
  std::string guide_prompt;
  // User-supplied extra priors for hinted agents. Empty removes the slot.
  std::string hint;
  ToolSet tools;
  SearchVariant search_variant = SearchVariant::kNone;
  int tool_budget = kDefaultToolBudget;
  int samples_per_round = 1;
  double temperature = kDefaultTemperature;
  AnswerMode answer_mode = AnswerMode::kSpan;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

// Throws ConfigError when a spec breaks its invariants.
void ValidateSpec(const AgentSpec& spec);

// Head prompt with the hint slot resolved.
std::string RenderHeadPrompt(const AgentSpec& spec);
std::string RenderGuidePrompt(const AgentSpec& spec);

// Ordered, non-empty, id-unique collection of agents. Order is stable and
// drives tie-breaking and report column order.
class AgentPool {
 public:
  AgentPool() = default;
  // Throws ConfigError on an empty pool, duplicate ids or an invalid spec.
  explicit AgentPool(std::vector<AgentSpec> specs);

  std::span<const AgentSpec> specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }
  bool empty() const { return specs_.empty(); }
  const AgentSpec& at(std::size_t i) const { return specs_.at(i); }
  // Throws ConfigError when absent.
  const AgentSpec& Find(std::string_view agent_id) const;

  friend bool operator==(const AgentPool&, const AgentPool&) = default;

 private:
  std::vector<AgentSpec> specs_;
};

namespace prompts {

// Refinement template: {question}, {joined_answers}.
extern const std::string_view kRefinement;
// Termination judge: {round_num}, {question}, {joined_answers}.
extern const std::string_view kJudge;
extern const std::string_view kBase;
extern const std::string_view kCot;
extern const std::string_view kCotCode;
extern const std::string_view kSearch;
extern const std::string_view kCode;
extern const std::string_view kDualTool;
extern const std::string_view kGuided;

}  // namespace prompts

// Base, CoT, CoT_code, S, C, C+, CS_{gs,llm,com}, CSG_{gs,llm,com},
// CSG+_{gs,llm,com}.
AgentPool DefaultPool();

// Replace every "{name}" occurrence. Unknown placeholders are left alone.
std::string FillTemplate(
    std::string_view tmpl,
    std::span<const std::pair<std::string_view, std::string_view>> values);

// "Answer 1:\n<raw>\n\nAnswer 2:\n<raw>..." in the given order. Labels are
// positional; agent names never appear.
std::string JoinAnswers(std::span<const AgentAnswer> answers);

// Round 1 (empty `prior`): head prompt, blank line, question body.
// Later rounds: the refinement template with the previous round's raw
// answers, then the head prompt as method instruction. Throws
// std::invalid_argument if `prior` spans more than one round.
std::string BuildRoundPrompt(const AgentSpec& spec, const Question& question,
                             std::span<const AgentAnswer> prior);

std::string BuildJudgePrompt(const Question& question, int round_num,
                             std::span<const AgentAnswer> answers);

// Pool files are JSON:
//   {"schema_version": 1, "agents": [{"agent_id": ..., ...}, ...]}
// Fields mirror AgentSpec; unknown fields are rejected.
AgentPool LoadPool(std::string_view document);
AgentPool LoadPoolFile(const std::string& path);
std::string DumpPool(const AgentPool& pool);

}  // namespace toolmix

#endif  // TOOLMIX_AGENTS_H_
