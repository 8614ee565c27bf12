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

#include "toolmix/orchestrator.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>

namespace toolmix {
namespace {

struct Generated {
  std::optional<GenerationResponse> response;
  std::string error;
};

// One judge or selector consultation. Each attempt is billed to `counter`.
Generated GenerateWithRetries(ModelBackend& backend,
                              const GenerationRequest& request,
                              const RuntimeOptions& rt, CostLedger& ledger,
                              std::int64_t CostLedger::*counter) {
  Generated out;
  for (int attempt = 0; attempt <= rt.transport_retries; ++attempt) {
    ++(ledger.*counter);
    try {
      out.response = backend.Generate(request);
      ledger.input_tokens += out.response->tokens_in;
      ledger.output_tokens += out.response->tokens_out;
      return out;
    } catch (const TransportError& e) {
      out.error = e.what();
    }
    if (attempt < rt.transport_retries && rt.retry_backoff > Millis::zero()) {
      std::this_thread::sleep_for(rt.retry_backoff * (1 << attempt));
    }
  }
  return out;
}

std::string Lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string LastSpan(std::string_view text) {
  const auto spans = FindAnswerSpans(text);
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    const std::string value = CollapseWhitespace(*it);
    if (!value.empty()) return value;
  }
  return {};
}

struct Task {
  const AgentSpec* spec;
  int sample;
  int samples;
};

}  // namespace

std::string_view ToString(TerminationPolicy policy) {
  switch (policy) {
    case TerminationPolicy::kLlmJudge:
      return "llm_judge";
    case TerminationPolicy::kRuleStabilization:
      return "rule_stabilization";
    case TerminationPolicy::kFixed:
      return "fixed";
  }
  return "llm_judge";
}

TerminationPolicy TerminationPolicyFromString(std::string_view s) {
  if (s == "llm_judge") return TerminationPolicy::kLlmJudge;
  if (s == "rule_stabilization") return TerminationPolicy::kRuleStabilization;
  if (s == "fixed") return TerminationPolicy::kFixed;
  throw ConfigError("unknown termination policy: " + std::string(s));
}

std::string_view ToString(SelectionStrategy strategy) {
  switch (strategy) {
    case SelectionStrategy::kMajority:
      return "majority";
    case SelectionStrategy::kRandom:
      return "random";
    case SelectionStrategy::kLlmSelector:
      return "llm_selector";
  }
  return "majority";
}

SelectionStrategy SelectionStrategyFromString(std::string_view s) {
  if (s == "majority") return SelectionStrategy::kMajority;
  if (s == "random") return SelectionStrategy::kRandom;
  if (s == "llm_selector") return SelectionStrategy::kLlmSelector;
  throw ConfigError("unknown selection strategy: " + std::string(s));
}

std::string_view ToString(Decision decision) {
  return decision == Decision::kStop ? "stop" : "continue";
}

void ValidateConfig(const RunConfig& config, const ToolSuite* tools) {
  if (config.r_min < 1) throw ConfigError("r_min must be >= 1");
  if (config.r_max < config.r_min) throw ConfigError("r_max must be >= r_min");
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (config.lambda < 0) throw ConfigError("lambda must be >= 0");
  if (config.judge_temperature < 0) {
    throw ConfigError("judge temperature must be >= 0");
  }
  if (config.runtime.code_limit <= Millis::zero()) {
    throw ConfigError("code limit must be positive");
  }
  if (config.runtime.nudge_cap < 0 || config.runtime.transport_retries < 0) {
    throw ConfigError("nudge cap and retries must be >= 0");
  }
  for (int m : config.samples_schedule) {
    if (m < 1) throw ConfigError("samples schedule entries must be >= 1");
  }
  for (double t : config.sample_temperatures) {
    if (t < 0) throw ConfigError("sample temperatures must be >= 0");
  }
  for (int r = 1; r <= config.r_max; ++r) {
    const AgentPool& pool = PoolForRound(config, r);
    if (pool.empty()) {
      throw ConfigError("round " + std::to_string(r) + " has an empty pool");
    }
    for (const auto& spec : pool.specs()) {
      ValidateSpec(spec);
      if (tools && spec.tools.search()) tools->RequireVariant(spec.search_variant);
    }
  }
}

const AgentPool& PoolForRound(const RunConfig& config, int round) {
  const auto i = static_cast<std::size_t>(round - 1);
  if (round >= 1 && i < config.pool_schedule.size()) {
    return config.pool_schedule[i];
  }
  return config.pool;
}

int SamplesFor(const RunConfig& config, const AgentSpec& spec, int round) {
  const auto i = static_cast<std::size_t>(round - 1);
  const int m = round >= 1 && i < config.samples_schedule.size()
                    ? config.samples_schedule[i]
                    : 1;
  return m * spec.samples_per_round;
}

TerminationSignals ComputeSignals(std::span<const AgentAnswer> answers) {
  std::map<std::string, int> counts;
  TerminationSignals s;
  for (const auto& a : answers) {
    if (!a.answer) continue;
    ++counts[a.answer->value];
    ++s.votes;
  }
  if (s.votes == 0) return s;
  s.defined = true;
  std::vector<int> sorted;
  for (const auto& [_, n] : counts) sorted.push_back(n);
  std::sort(sorted.rbegin(), sorted.rend());
  const double votes = s.votes;
  const int runner_up = sorted.size() > 1 ? sorted[1] : 0;
  s.margin = (sorted[0] - runner_up) / votes;
  s.agreement = sorted[0] / votes;
  for (int n : sorted) {
    const double p = n / votes;
    s.entropy -= p * std::log2(p);
  }
  if (s.entropy < 0) s.entropy = 0;
  return s;
}

std::optional<CanonicalAnswer> MajorityVote(
    std::span<const AgentAnswer> answers) {
  // value -> (count, first index)
  std::map<std::string, std::pair<int, std::size_t>> tally;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (!answers[i].answer) continue;
    auto [it, inserted] =
        tally.try_emplace(answers[i].answer->value, std::make_pair(0, i));
    ++it->second.first;
  }
  if (tally.empty()) return std::nullopt;
  auto best = tally.begin();
  for (auto it = tally.begin(); it != tally.end(); ++it) {
    if (it->second.first > best->second.first ||
        (it->second.first == best->second.first &&
         it->second.second < best->second.second)) {
      best = it;
    }
  }
  return answers[best->second.second].answer;
}

std::optional<CanonicalAnswer> RandomSelect(std::span<const AgentAnswer> answers,
                                            std::uint64_t seed) {
  std::vector<const CanonicalAnswer*> votes;
  for (const auto& a : answers) {
    if (a.answer) votes.push_back(&*a.answer);
  }
  if (votes.empty()) return std::nullopt;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, votes.size() - 1);
  return *votes[pick(rng)];
}

TerminationOutcome DecideTermination(const RunConfig& config,
                                     const Question& question,
                                     std::span<const RoundRecord> rounds,
                                     ModelBackend& backend) {
  TerminationOutcome out;
  const int r = static_cast<int>(rounds.size());
  if (r >= config.r_max) {
    out.decision = Decision::kStop;
    out.reason = "reached maximum round " + std::to_string(config.r_max);
    return out;
  }
  if (r < config.r_min) {
    out.reason = "below minimum round " + std::to_string(config.r_min);
    return out;
  }
  switch (config.termination) {
    case TerminationPolicy::kFixed:
      out.reason = "fixed schedule runs to round " + std::to_string(config.r_max);
      return out;
    case TerminationPolicy::kRuleStabilization: {
      if (r < 2) {
        out.reason = "no previous round to compare";
        return out;
      }
      const auto now = MajorityVote(rounds[r - 1].answers);
      const auto before = MajorityVote(rounds[r - 2].answers);
      if (now && before && now->value == before->value) {
        out.decision = Decision::kStop;
        out.reason = "majority '" + now->value + "' stable over rounds " +
                     std::to_string(r - 1) + " and " + std::to_string(r);
      } else if (!now || !before) {
        out.reason = "no majority to compare";
      } else {
        out.reason = "majority changed";
      }
      return out;
    }
    case TerminationPolicy::kLlmJudge: {
      GenerationRequest request;
      request.context = BuildJudgePrompt(question, r, rounds[r - 1].answers);
      request.temperature = config.judge_temperature;
      request.question_id = question.id;
      request.agent_id = std::string(kJudgeId);
      request.round = r;
      request.sample = 0;
      request.purpose = Purpose::kJudge;
      const Generated g = GenerateWithRetries(
          backend, request, config.runtime, out.ledger,
          &CostLedger::judge_inferences);
      if (!g.response) {
        out.reason = "judge unavailable (" + g.error + "), continuing";
        return out;
      }
      out.judge_response = g.response->text;
      const std::string verdict = Lower(LastSpan(g.response->text));
      if (verdict == "yes") {
        out.decision = Decision::kStop;
        out.reason = "judge: consensus";
      } else if (verdict == "no") {
        out.reason = "judge: refine";
      } else if (verdict.empty()) {
        out.reason = "judge gave no verdict, continuing";
      } else {
        out.reason = "judge verdict '" + verdict + "' unrecognized, continuing";
      }
      return out;
    }
  }
  return out;
}

SelectionOutcome SelectFinal(const RunConfig& config, const Question& question,
                             const RoundRecord& last, ModelBackend& backend) {
  SelectionOutcome out;
  switch (config.selection) {
    case SelectionStrategy::kMajority:
      out.answer = MajorityVote(last.answers);
      out.note = "majority";
      break;
    case SelectionStrategy::kRandom:
      out.answer =
          RandomSelect(last.answers, config.seed ^ Fnv1a64(question.id));
      out.note = "random";
      break;
    case SelectionStrategy::kLlmSelector: {
      const std::string joined = JoinAnswers(last.answers);
      const std::pair<std::string_view, std::string_view> values[] = {
          {"question", question.body}, {"joined_answers", joined}};
      GenerationRequest request;
      request.context = FillTemplate(prompts::kRefinement, values);
      request.temperature = config.judge_temperature;
      request.question_id = question.id;
      request.agent_id = std::string(kSelectorId);
      request.round = last.round;
      request.sample = 0;
      request.purpose = Purpose::kSelector;
      const Generated g = GenerateWithRetries(
          backend, request, config.runtime, out.ledger,
          &CostLedger::selector_inferences);
      if (g.response) {
        out.selector_response = g.response->text;
        out.answer = ExtractFinalAnswer(g.response->text, question.kind);
      }
      if (out.answer) {
        out.note = "llm_selector";
      } else {
        out.answer = MajorityVote(last.answers);
        out.note = g.response ? "llm_selector gave no answer, majority fallback"
                              : "llm_selector unavailable (" + g.error +
                                    "), majority fallback";
      }
      break;
    }
  }
  if (!out.answer) out.note += "; no usable answer in the final round";
  return out;
}

Transcript RunQuestion(const Question& question, const RunConfig& config,
                       ModelBackend& backend, ToolSuite& tools) {
  ValidateConfig(config, &tools);
  Transcript transcript;
  transcript.question_id = question.id;

  for (int r = 1; r <= config.r_max; ++r) {
    const AgentPool& pool = PoolForRound(config, r);
    std::vector<Task> tasks;
    for (const auto& spec : pool.specs()) {
      const int samples = SamplesFor(config, spec, r);
      for (int k = 0; k < samples; ++k) tasks.push_back({&spec, k, samples});
    }

    // Prompts are built from the previous round only, before any worker
    // starts, so no round-r answer can leak into a round-r prompt.
    std::span<const AgentAnswer> prior;
    if (r > 1) prior = transcript.rounds.back().answers;
    std::vector<std::string> prompts;
    prompts.reserve(tasks.size());
    for (const auto& task : tasks) {
      prompts.push_back(BuildRoundPrompt(*task.spec, question, prior));
    }

    std::vector<AgentTrace> traces(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) {
        try {
          const Task& task = tasks[i];
          AgentCallOptions options;
          options.question_id = question.id;
          options.round = r;
          options.sample = task.sample;
          options.answer_kind = question.kind;
          options.runtime = config.runtime;
          if (task.samples > 1 &&
              static_cast<std::size_t>(task.sample) <
                  config.sample_temperatures.size()) {
            options.temperature = config.sample_temperatures[task.sample];
          }
          traces[i] = AgentCall(*task.spec, prompts[i], backend, tools, options);
          ResolveCodeAnswer(traces[i], *task.spec, tools,
                            config.runtime.code_limit, question.kind);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = tasks.size();
        }
      }
    };
    const std::size_t workers = std::min<std::size_t>(
        tasks.size(), static_cast<std::size_t>(config.parallelism));
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    RoundRecord record;
    record.round = r;
    std::string errors;
    std::size_t failed = 0;
    for (auto& trace : traces) {
      record.ledger += trace.ledger;
      record.answers.push_back(trace.final);
      if (trace.error) {
        ++failed;
        errors += "\n  " + trace.final.trace_ref + ": " + *trace.error;
      }
    }
    record.traces = std::move(traces);
    if (failed == record.traces.size()) {
      throw RunAbortedError("question " + question.id + ": all " +
                            std::to_string(failed) + " agent calls of round " +
                            std::to_string(r) + " failed:" + errors);
    }
    record.signals = ComputeSignals(record.answers);
    transcript.rounds.push_back(std::move(record));

    TerminationOutcome outcome =
        DecideTermination(config, question, transcript.rounds, backend);
    RoundRecord& current = transcript.rounds.back();
    current.decision = outcome.decision;
    current.reason = std::move(outcome.reason);
    current.judge_response = std::move(outcome.judge_response);
    current.ledger += outcome.ledger;
    transcript.ledger += current.ledger;
    if (outcome.decision == Decision::kStop) break;
  }

  SelectionOutcome selection =
      SelectFinal(config, question, transcript.rounds.back(), backend);
  transcript.final = std::move(selection.answer);
  transcript.selection_note = std::move(selection.note);
  transcript.selector_response = std::move(selection.selector_response);
  transcript.ledger += selection.ledger;
  transcript.stop_round = static_cast<int>(transcript.rounds.size());
  return transcript;
}

}  // namespace toolmix
