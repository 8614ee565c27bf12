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

#include "toolmix/runtime.h"

#include <random>
#include <stdexcept>
#include <thread>

namespace toolmix {
namespace {

using Clock = std::chrono::steady_clock;

std::string TrimRight(std::string_view s) {
  const auto last = s.find_last_not_of(" \t\r\n");
  return last == std::string_view::npos ? std::string()
                                        : std::string(s.substr(0, last + 1));
}

std::string TrimBoth(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  return TrimRight(s.substr(first));
}

std::string DescribeLimit(Millis limit) {
  if (limit.count() % 1000 == 0) {
    return std::to_string(limit.count() / 1000) + " s";
  }
  return std::to_string(limit.count()) + " ms";
}

std::string CodePayload(const ExecutionResult& r, Millis limit) {
  switch (r.status) {
    case ExecStatus::kOk:
      return TrimRight(r.stdout_text);
    case ExecStatus::kTimeout: {
      std::string out = "execution exceeded the time limit of " +
                        DescribeLimit(limit) + " and was killed";
      const std::string partial = TrimRight(r.stdout_text);
      if (!partial.empty()) out += "\npartial stdout:\n" + partial;
      return out;
    }
    case ExecStatus::kRuntimeError: {
      std::string err = TrimRight(r.stderr_text);
      if (err.empty()) err = TrimRight(r.stdout_text);
      if (err.empty()) err = "process exited with code " + std::to_string(r.exit_code);
      return err;
    }
  }
  return {};
}

Millis Backoff(Millis base, int attempt) {
  if (base <= Millis::zero()) return Millis::zero();
  thread_local std::mt19937 rng{std::random_device{}()};
  const auto scaled = base.count() << std::min(attempt, 10);
  std::uniform_int_distribution<long long> jitter(0, scaled / 2);
  return Millis(scaled + jitter(rng));
}

std::string LastNonEmptyLine(std::string_view text) {
  std::string last;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line = TrimBoth(
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                      : nl - pos));
    if (!line.empty()) last = line;
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return last;
}

}  // namespace

std::string_view ToString(StepKind kind) {
  switch (kind) {
    case StepKind::kGuidance:
      return "guidance";
    case StepKind::kGeneration:
      return "generation";
    case StepKind::kCodeResult:
      return "code_result";
    case StepKind::kSearchResult:
      return "search_result";
    case StepKind::kNudge:
      return "nudge";
  }
  return "generation";
}

StepKind StepKindFromString(std::string_view s) {
  if (s == "guidance") return StepKind::kGuidance;
  if (s == "generation") return StepKind::kGeneration;
  if (s == "code_result") return StepKind::kCodeResult;
  if (s == "search_result") return StepKind::kSearchResult;
  if (s == "nudge") return StepKind::kNudge;
  throw ConfigError("unknown step kind: " + std::string(s));
}

std::string TruncatePayload(std::string_view payload, std::size_t cap) {
  if (payload.size() <= cap) return std::string(payload);
  // Size the marker for the worst case so head + marker never exceeds cap,
  // which also makes truncation idempotent.
  auto marker = [](std::size_t dropped) {
    return "\n[output truncated: " + std::to_string(dropped) +
           " bytes omitted]";
  };
  const std::size_t reserve = marker(payload.size()).size();
  std::size_t keep = cap > reserve ? cap - reserve : 0;
  while (keep > 0 &&
         (static_cast<unsigned char>(payload[keep]) & 0xC0) == 0x80) {
    --keep;
  }
  return std::string(payload.substr(0, keep)) + marker(payload.size() - keep);
}

std::string AppendContext(std::string context, const Step& step,
                          std::size_t cap) {
  context += "\n\n";
  switch (step.kind) {
    case StepKind::kGeneration:
      context += step.payload;
      break;
    case StepKind::kCodeResult:
      context += step.failed ? kRuntimeErrorLabel : kCodeResultLabel;
      context += ' ';
      context += TruncatePayload(step.payload, cap);
      break;
    case StepKind::kSearchResult:
      context += kEvidenceLabel;
      context += ' ';
      context += TruncatePayload(step.payload, cap);
      break;
    case StepKind::kNudge:
      context += kNudgeLine;
      break;
    case StepKind::kGuidance:
      context += kGuidanceLabel;
      context += ' ';
      context += step.payload;
      break;
  }
  return context;
}

AgentTrace AgentCall(const AgentSpec& spec, const std::string& prompt,
                     ModelBackend& backend, ToolSuite& tools,
                     const AgentCallOptions& options) {
  if (prompt.empty()) throw std::invalid_argument("empty agent prompt");
  const auto start = Clock::now();
  const RuntimeOptions& rt = options.runtime;

  AgentTrace trace;
  trace.agent_id = spec.agent_id;
  trace.round = options.round;
  trace.sample = options.sample;
  trace.answer_mode = spec.answer_mode;
  trace.final.agent_id = spec.agent_id;
  trace.final.round = options.round;
  trace.final.sample = options.sample;
  trace.final.trace_ref = spec.agent_id + "/r" + std::to_string(options.round) +
                          "/s" + std::to_string(options.sample);
  trace.ledger.agent_inferences = 1;

  GenerationRequest request;
  request.temperature = options.temperature.value_or(spec.temperature);
  request.question_id = options.question_id;
  request.agent_id = spec.agent_id;
  request.round = options.round;
  request.sample = options.sample;
  request.purpose = Purpose::kAgent;

  auto generate = [&](std::string context) -> std::optional<GenerationResponse> {
    request.context = std::move(context);
    std::string last_error;
    for (int attempt = 0; attempt <= rt.transport_retries; ++attempt) {
      ++trace.ledger.agent_generations;
      try {
        GenerationResponse response = backend.Generate(request);
        trace.ledger.input_tokens += response.tokens_in;
        trace.ledger.output_tokens += response.tokens_out;
        return response;
      } catch (const TransportError& e) {
        last_error = e.what();
      }
      if (attempt < rt.transport_retries) {
        std::this_thread::sleep_for(Backoff(rt.retry_backoff, attempt));
      }
    }
    trace.error = "backend transport failure after " +
                  std::to_string(rt.transport_retries + 1) +
                  " attempts: " + last_error;
    return std::nullopt;
  };
  auto finish = [&](const std::string& final_text) {
    trace.final.raw_response = final_text;
    trace.final.answer = ExtractFinalAnswer(final_text, options.answer_kind);
    trace.elapsed = std::chrono::duration_cast<Millis>(Clock::now() - start);
    return trace;
  };
  auto push = [&](std::string& context, Step step) {
    context = AppendContext(std::move(context), step, rt.context_cap);
    if (step.kind == StepKind::kCodeResult ||
        step.kind == StepKind::kSearchResult) {
      step.payload = TruncatePayload(step.payload, rt.context_cap);
    }
    trace.steps.push_back(std::move(step));
  };
  auto is_final = [&](std::string_view text) {
    return ExtractFinalAnswer(text).has_value() ||
           (spec.answer_mode == AnswerMode::kCode &&
            ExtractCodeBlock(text).has_value());
  };

  std::string context = prompt;

  if (!spec.guide_prompt.empty()) {
    auto guide = generate(RenderGuidePrompt(spec) + "\n\n" + prompt);
    if (!guide) return finish("");
    std::string guidance;
    const auto spans = FindAnswerSpans(guide->text);
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
      guidance = TrimBoth(*it);
      if (!guidance.empty()) break;
    }
    Step step{StepKind::kGuidance, guidance, guide->tokens_in,
              guide->tokens_out};
    if (guidance.empty()) {
      trace.steps.push_back(std::move(step));
    } else {
      push(context, std::move(step));
    }
  }

  int consecutive_nudges = 0;
  while (trace.budget_used < spec.tool_budget) {
    auto out = generate(context);
    if (!out) return finish("");
    push(context, {StepKind::kGeneration, out->text, out->tokens_in,
                   out->tokens_out});
    if (is_final(out->text)) return finish(out->text);

    const Action action = ClassifyAction(out->text, spec.tools);
    if (action.kind == ActionKind::kCode) {
      const ExecutionResult result =
          tools.ExecuteCode(action.payload, rt.code_limit);
      Step step{StepKind::kCodeResult, CodePayload(result, rt.code_limit)};
      step.failed = result.status != ExecStatus::kOk;
      push(context, std::move(step));
      ++trace.budget_used;
      ++trace.ledger.tool_calls;
      consecutive_nudges = 0;
    } else if (action.kind == ActionKind::kSearch) {
      const Evidence evidence = tools.Search(action.payload, spec.search_variant);
      push(context, {StepKind::kSearchResult, RenderEvidence(evidence)});
      ++trace.budget_used;
      ++trace.ledger.tool_calls;
      consecutive_nudges = 0;
    } else {
      // Nudges do not consume budget, so the cap is what guarantees
      // termination.
      if (consecutive_nudges >= rt.nudge_cap) break;
      push(context, {StepKind::kNudge, std::string(kNudgeLine)});
      ++consecutive_nudges;
    }
  }

  // Budget exhausted: one forced decision.
  auto forced = generate(context);
  if (!forced) return finish("");
  push(context, {StepKind::kGeneration, forced->text, forced->tokens_in,
                 forced->tokens_out});
  return finish(forced->text);
}

std::optional<CanonicalAnswer> AnswerFromCodeResponse(
    std::string_view response, ToolSuite& tools, Millis limit,
    AnswerKind kind, ExecutionResult* execution) {
  const auto code = ExtractCodeBlock(response);
  if (!code) return std::nullopt;
  ExecutionResult result = tools.ExecuteCode(*code, limit);
  std::optional<CanonicalAnswer> answer;
  if (result.status == ExecStatus::kOk) {
    const std::string line = LastNonEmptyLine(result.stdout_text);
    if (!line.empty()) answer = Canonicalize(line, kind);
  }
  if (execution) *execution = std::move(result);
  return answer;
}

void ResolveCodeAnswer(AgentTrace& trace, const AgentSpec& spec,
                       ToolSuite& tools, Millis limit, AnswerKind kind) {
  if (spec.answer_mode != AnswerMode::kCode || trace.error ||
      trace.final.answer || !ExtractCodeBlock(trace.final.raw_response)) {
    return;
  }
  ExecutionResult execution;
  trace.final.answer = AnswerFromCodeResponse(trace.final.raw_response, tools,
                                              limit, kind, &execution);
  trace.answer_execution = std::move(execution);
  ++trace.ledger.tool_calls;
}

}  // namespace toolmix
