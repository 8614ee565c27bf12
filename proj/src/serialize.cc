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

#include "toolmix/harness.h"

namespace toolmix {
namespace {

using nlohmann::json;

json OptionalString(const std::optional<std::string>& s) {
  return s ? json(*s) : json(nullptr);
}

std::optional<std::string> OptionalStringFrom(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

json AnswerOrNull(const std::optional<CanonicalAnswer>& answer) {
  return answer ? ToJson(*answer) : json(nullptr);
}

std::optional<CanonicalAnswer> AnswerFromJson(const json& j) {
  if (j.is_null()) return std::nullopt;
  CanonicalAnswer a;
  a.value = j.at("value").get<std::string>();
  a.kind = AnswerKindFromString(j.at("kind").get<std::string>());
  a.numeric_fallback = j.value("numeric_fallback", false);
  return a;
}

json ToJson(const Step& step) {
  return {{"kind", ToString(step.kind)},
          {"payload", step.payload},
          {"tokens_in", step.tokens_in},
          {"tokens_out", step.tokens_out},
          {"failed", step.failed}};
}

json ToJson(const ExecutionResult& r) {
  return {{"status", ToString(r.status)},
          {"stdout", r.stdout_text},
          {"stderr", r.stderr_text},
          {"exit_code", r.exit_code},
          {"sandbox_failure", r.sandbox_failure},
          {"output_truncated", r.output_truncated}};
}

json ToJson(const AgentTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps) steps.push_back(ToJson(s));
  json j = {{"agent_id", t.agent_id},
            {"round", t.round},
            {"sample", t.sample},
            {"answer_mode", t.answer_mode == AnswerMode::kCode ? "code" : "span"},
            {"steps", std::move(steps)},
            {"raw_response", t.final.raw_response},
            {"answer", AnswerOrNull(t.final.answer)},
            {"trace_ref", t.final.trace_ref},
            {"budget_used", t.budget_used},
            {"error", OptionalString(t.error)},
            {"ledger", ToJson(t.ledger)}};
  j["answer_execution"] =
      t.answer_execution ? ToJson(*t.answer_execution) : json(nullptr);
  return j;
}

AgentTrace TraceFromJson(const json& j) {
  AgentTrace t;
  t.agent_id = j.at("agent_id").get<std::string>();
  t.round = j.at("round").get<int>();
  t.sample = j.at("sample").get<int>();
  t.answer_mode = j.value("answer_mode", "span") == "code" ? AnswerMode::kCode
                                                           : AnswerMode::kSpan;
  for (const auto& s : j.at("steps")) {
    Step step;
    step.kind = StepKindFromString(s.at("kind").get<std::string>());
    step.payload = s.at("payload").get<std::string>();
    step.tokens_in = s.value("tokens_in", std::int64_t{0});
    step.tokens_out = s.value("tokens_out", std::int64_t{0});
    step.failed = s.value("failed", false);
    t.steps.push_back(std::move(step));
  }
  t.final.agent_id = t.agent_id;
  t.final.round = t.round;
  t.final.sample = t.sample;
  t.final.raw_response = j.at("raw_response").get<std::string>();
  t.final.answer = AnswerFromJson(j.at("answer"));
  t.final.trace_ref = j.value("trace_ref", "");
  t.budget_used = j.value("budget_used", 0);
  t.error = OptionalStringFrom(j, "error");
  if (j.contains("answer_execution") && !j["answer_execution"].is_null()) {
    const json& e = j["answer_execution"];
    ExecutionResult r;
    r.status = ExecStatusFromString(e.at("status").get<std::string>());
    r.stdout_text = e.value("stdout", "");
    r.stderr_text = e.value("stderr", "");
    r.exit_code = e.value("exit_code", 0);
    r.sandbox_failure = e.value("sandbox_failure", false);
    r.output_truncated = e.value("output_truncated", false);
    t.answer_execution = std::move(r);
  }
  t.ledger = LedgerFromJson(j.at("ledger"));
  return t;
}

}  // namespace

json ToJson(const CanonicalAnswer& answer) {
  return {{"value", answer.value},
          {"kind", ToString(answer.kind)},
          {"numeric_fallback", answer.numeric_fallback}};
}

json ToJson(const CostLedger& l) {
  return {{"agent_inferences", l.agent_inferences},
          {"agent_generations", l.agent_generations},
          {"judge_inferences", l.judge_inferences},
          {"selector_inferences", l.selector_inferences},
          {"input_tokens", l.input_tokens},
          {"output_tokens", l.output_tokens},
          {"tool_calls", l.tool_calls}};
}

CostLedger LedgerFromJson(const json& j) {
  CostLedger l;
  l.agent_inferences = j.value("agent_inferences", std::int64_t{0});
  l.agent_generations = j.value("agent_generations", std::int64_t{0});
  l.judge_inferences = j.value("judge_inferences", std::int64_t{0});
  l.selector_inferences = j.value("selector_inferences", std::int64_t{0});
  l.input_tokens = j.value("input_tokens", std::int64_t{0});
  l.output_tokens = j.value("output_tokens", std::int64_t{0});
  l.tool_calls = j.value("tool_calls", std::int64_t{0});
  return l;
}

json ToJson(const Transcript& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    json traces = json::array();
    for (const auto& trace : r.traces) traces.push_back(ToJson(trace));
    rounds.push_back({{"round", r.round},
                      {"decision", ToString(r.decision)},
                      {"reason", r.reason},
                      {"judge_response", OptionalString(r.judge_response)},
                      {"signals",
                       {{"defined", r.signals.defined},
                        {"margin", r.signals.margin},
                        {"entropy", r.signals.entropy},
                        {"agreement", r.signals.agreement},
                        {"votes", r.signals.votes}}},
                      {"ledger", ToJson(r.ledger)},
                      {"traces", std::move(traces)}});
  }
  return {{"question_id", t.question_id},
          {"stop_round", t.stop_round},
          {"final", AnswerOrNull(t.final)},
          {"selection_note", t.selection_note},
          {"selector_response", OptionalString(t.selector_response)},
          {"ledger", ToJson(t.ledger)},
          {"rounds", std::move(rounds)}};
}

Transcript TranscriptFromJson(const json& j) {
  Transcript t;
  t.question_id = j.at("question_id").get<std::string>();
  t.stop_round = j.at("stop_round").get<int>();
  t.final = AnswerFromJson(j.at("final"));
  t.selection_note = j.value("selection_note", "");
  t.selector_response = OptionalStringFrom(j, "selector_response");
  t.ledger = LedgerFromJson(j.at("ledger"));
  for (const auto& r : j.at("rounds")) {
    RoundRecord record;
    record.round = r.at("round").get<int>();
    record.decision =
        r.at("decision").get<std::string>() == "stop" ? Decision::kStop
                                                      : Decision::kContinue;
    record.reason = r.value("reason", "");
    record.judge_response = OptionalStringFrom(r, "judge_response");
    if (r.contains("signals")) {
      const json& s = r["signals"];
      record.signals.defined = s.value("defined", false);
      record.signals.margin = s.value("margin", 0.0);
      record.signals.entropy = s.value("entropy", 0.0);
      record.signals.agreement = s.value("agreement", 0.0);
      record.signals.votes = s.value("votes", 0);
    }
    record.ledger = LedgerFromJson(r.at("ledger"));
    for (const auto& trace : r.at("traces")) {
      record.traces.push_back(TraceFromJson(trace));
      record.answers.push_back(record.traces.back().final);
    }
    t.rounds.push_back(std::move(record));
  }
  return t;
}

}  // namespace toolmix
