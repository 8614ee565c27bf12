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

// The round loop: every agent answers, answers are shared, agents refine,
// until a termination policy stops the run; then one answer is selected.

#ifndef TOOLMIX_ORCHESTRATOR_H_
#define TOOLMIX_ORCHESTRATOR_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toolmix/agents.h"
#include "toolmix/backend.h"
#include "toolmix/core.h"
#include "toolmix/runtime.h"
#include "toolmix/tools.h"

namespace toolmix {

enum class TerminationPolicy { kLlmJudge, kRuleStabilization, kFixed };
// "llm_judge", "rule_stabilization", "fixed".
std::string_view ToString(TerminationPolicy policy);
TerminationPolicy TerminationPolicyFromString(std::string_view s);

enum class SelectionStrategy { kMajority, kRandom, kLlmSelector };
// "majority", "random", "llm_selector".
std::string_view ToString(SelectionStrategy strategy);
SelectionStrategy SelectionStrategyFromString(std::string_view s);

// Request identities of the non-agent calls.
inline constexpr std::string_view kJudgeId = "judge";
inline constexpr std::string_view kSelectorId = "selector";

struct RunConfig {
  AgentPool pool;
  int r_min = 2;
  int r_max = 6;
  TerminationPolicy termination = TerminationPolicy::kLlmJudge;
  SelectionStrategy selection = SelectionStrategy::kMajority;
  // Random selection; mixed with the question id per question.
  std::uint64_t seed = 0;
  // Cost weight for the objective report. Never affects control flow.
  double lambda = 0.0;
  // Round r runs every agent samples_schedule[r-1] times (times its own
  // samples_per_round). Rounds past the end use 1.
  std::vector<int> samples_schedule;
  // When a round runs an agent more than once, sample k uses
  // sample_temperatures[k] if present, else the agent's temperature.
  std::vector<double> sample_temperatures;
  // Round r uses pool_schedule[r-1] when present, else `pool`.
  std::vector<AgentPool> pool_schedule;
  // Concurrent agent calls within a round.
  int parallelism = 16;
  double judge_temperature = 0.0;
  RuntimeOptions runtime;
};

// Throws ConfigError. With `tools`, also checks every search variant the
// pools use can be served.
void ValidateConfig(const RunConfig& config, const ToolSuite* tools = nullptr);

// Pool and per-agent sample count for round r.
const AgentPool& PoolForRound(const RunConfig& config, int round);
int SamplesFor(const RunConfig& config, const AgentSpec& spec, int round);

struct TerminationSignals {
  // False when the round has no non-empty answer; the values are then 0.
  bool defined = false;
  double margin = 0.0;
  // Bits.
  double entropy = 0.0;
  double agreement = 0.0;
  int votes = 0;
};

TerminationSignals ComputeSignals(std::span<const AgentAnswer> answers);

enum class Decision { kContinue, kStop };
std::string_view ToString(Decision decision);

struct RoundRecord {
  int round = 1;
  // Pool order, each agent repeated for its samples.
  std::vector<AgentTrace> traces;
  std::vector<AgentAnswer> answers;
  Decision decision = Decision::kContinue;
  std::string reason;
  // Raw judge output, when the judge was consulted.
  std::optional<std::string> judge_response;
  TerminationSignals signals;
  // Agents of this round plus its judge calls.
  CostLedger ledger;
};

struct Transcript {
  std::string question_id;
  std::vector<RoundRecord> rounds;
  // Empty when no answer of the last round could be used.
  std::optional<CanonicalAnswer> final;
  std::string selection_note;
  std::optional<std::string> selector_response;
  CostLedger ledger;
  int stop_round = 0;
};

// Every agent of the round failed at the backend.
class RunAbortedError : public Error {
 public:
  using Error::Error;
};

// Mode of the non-empty canonical answers; ties go to the value seen first.
std::optional<CanonicalAnswer> MajorityVote(std::span<const AgentAnswer> answers);

// Uniform over the non-empty answers, drawn from `seed`.
std::optional<CanonicalAnswer> RandomSelect(std::span<const AgentAnswer> answers,
                                            std::uint64_t seed);

struct TerminationOutcome {
  Decision decision = Decision::kContinue;
  std::string reason;
  std::optional<std::string> judge_response;
  CostLedger ledger;
};

// `rounds` holds rounds 1..r, the last being the one just completed.
TerminationOutcome DecideTermination(const RunConfig& config,
                                     const Question& question,
                                     std::span<const RoundRecord> rounds,
                                     ModelBackend& backend);

struct SelectionOutcome {
  std::optional<CanonicalAnswer> answer;
  std::string note;
  std::optional<std::string> selector_response;
  CostLedger ledger;
};

SelectionOutcome SelectFinal(const RunConfig& config, const Question& question,
                             const RoundRecord& last, ModelBackend& backend);

// Runs one question. Throws ConfigError before any model call if the
// config is invalid, RunAbortedError if a whole round fails, and lets
// FixtureMissError and ReplayError through.
Transcript RunQuestion(const Question& question, const RunConfig& config,
                       ModelBackend& backend, ToolSuite& tools);

}  // namespace toolmix

#endif  // TOOLMIX_ORCHESTRATOR_H_
