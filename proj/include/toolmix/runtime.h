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

// The per-agent tool loop: generate, run the requested tool, feed the
// result back, until the agent commits to an answer or the tool budget is
// spent.

#ifndef TOOLMIX_RUNTIME_H_
#define TOOLMIX_RUNTIME_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolmix/agents.h"
#include "toolmix/backend.h"
#include "toolmix/core.h"
#include "toolmix/tools.h"

namespace toolmix {

inline constexpr std::string_view kCodeResultLabel = "Code result:";
inline constexpr std::string_view kRuntimeErrorLabel = "Runtime error:";
inline constexpr std::string_view kEvidenceLabel = "Retrieved evidence:";
inline constexpr std::string_view kGuidanceLabel = "Guidance:";
inline constexpr std::string_view kNudgeLine =
    "Continue reasoning with current context.";

enum class StepKind { kGuidance, kGeneration, kCodeResult, kSearchResult, kNudge };
std::string_view ToString(StepKind kind);
StepKind StepKindFromString(std::string_view s);

struct Step {
  StepKind kind = StepKind::kGeneration;
  // Text as appended to the context (tool payloads after truncation).
  std::string payload;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  // Code results only: rendered with the runtime-error label.
  bool failed = false;

  friend bool operator==(const Step&, const Step&) = default;
};

struct AgentTrace {
  std::string agent_id;
  int round = 1;
  int sample = 0;
  AnswerMode answer_mode = AnswerMode::kSpan;
  std::vector<Step> steps;
  AgentAnswer final;
  int budget_used = 0;
  Millis elapsed{0};
  // Set when the backend failed; the final answer is then empty.
  std::optional<std::string> error;
  // Code-answer agents: the engine-side execution of the final code block.
  std::optional<ExecutionResult> answer_execution;
  CostLedger ledger;
};

struct RuntimeOptions {
  // Per tool payload.
  std::size_t context_cap = 64 * 1024;
  // Consecutive nudges allowed before the loop is treated as exhausted.
  int nudge_cap = 2;
  int transport_retries = 2;
  // Base delay; attempt k waits base * 2^k plus up to 50% jitter.
  Millis retry_backoff{200};
  Millis code_limit = kDefaultCodeLimit;
};

struct AgentCallOptions {
  std::string question_id;
  int round = 1;
  int sample = 0;
  // Overrides spec.temperature when set.
  std::optional<double> temperature;
  AnswerKind answer_kind = AnswerKind::kFreeForm;
  RuntimeOptions runtime;
};

// Head of `payload` within `cap` bytes, followed by a marker stating how
// many bytes were dropped. Unchanged when it fits.
std::string TruncatePayload(std::string_view payload, std::size_t cap);

// Context after appending `step`:
//   generation    "\n\n" + text
//   code_result   "\n\nCode result: " / "\n\nRuntime error: " + payload
//   search_result "\n\nRetrieved evidence: " + payload
//   nudge         "\n\nContinue reasoning with current context."
//   guidance      "\n\nGuidance: " + payload
// Tool payloads are truncated to `cap` first.
std::string AppendContext(std::string context, const Step& step,
                          std::size_t cap);

// One agent's tool-augmented turn. Transport failures that survive the
// retries yield a trace with `error` set and no answer; they never throw.
// FixtureMissError and ReplayError propagate.
AgentTrace AgentCall(const AgentSpec& spec, const std::string& prompt,
                     ModelBackend& backend, ToolSuite& tools,
                     const AgentCallOptions& options);

// For code-answer agents whose final response carries a python block and
// no answer span: runs the block and takes the last non-empty stdout line
// as the answer. A timeout or error leaves the answer empty. No-op for
// other traces.
void ResolveCodeAnswer(AgentTrace& trace, const AgentSpec& spec,
                       ToolSuite& tools, Millis limit, AnswerKind kind);

// Same rule applied to a bare response, for scoring stored results.
std::optional<CanonicalAnswer> AnswerFromCodeResponse(
    std::string_view response, ToolSuite& tools, Millis limit,
    AnswerKind kind, ExecutionResult* execution = nullptr);

}  // namespace toolmix

#endif  // TOOLMIX_RUNTIME_H_
