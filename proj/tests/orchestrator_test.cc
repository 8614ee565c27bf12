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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "scenarios.h"

namespace toolmix {
namespace {

using testing::PlainPool;
using testing::RoundScript;
using testing::RunScripted;

std::vector<AgentAnswer> Answers(const std::vector<std::string>& values) {
  std::vector<AgentAnswer> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    AgentAnswer a;
    a.agent_id = "A" + std::to_string(i + 1);
    a.raw_response = values[i];
    if (!values[i].empty()) {
      a.answer = CanonicalAnswer{values[i], AnswerKind::kFreeForm};
    }
    out.push_back(a);
  }
  return out;
}

// Frequency count, then the value whose first occurrence is earliest.
std::optional<std::string> OracleMajority(const std::vector<std::string>& v) {
  std::map<std::string, int> count;
  for (const auto& s : v) {
    if (!s.empty()) ++count[s];
  }
  int best = 0;
  for (const auto& [_, n] : count) best = std::max(best, n);
  for (const auto& s : v) {
    if (!s.empty() && count[s] == best) return s;
  }
  return std::nullopt;
}

TEST(Majority, Examples) {
  EXPECT_EQ(MajorityVote(Answers({"A", "A", "B"}))->value, "A");
  EXPECT_EQ(MajorityVote(Answers({"A", "B"}))->value, "A");
  EXPECT_EQ(MajorityVote(Answers({"B", "A"}))->value, "B");
  EXPECT_EQ(MajorityVote(Answers({"A", "B", "C"}))->value, "A");
  EXPECT_EQ(MajorityVote(Answers({"", "", "C"}))->value, "C");
  EXPECT_FALSE(MajorityVote(Answers({"", ""})));
}

TEST(Majority, ExhaustiveAgainstFrequencyOracle) {
  const std::string alphabet[] = {"A", "B", "C", ""};
  for (int len = 1; len <= 5; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 4;
    for (int code = 0; code < total; ++code) {
      std::vector<std::string> v;
      for (int i = 0, c = code; i < len; ++i, c /= 4) v.push_back(alphabet[c % 4]);
      const auto got = MajorityVote(Answers(v));
      const auto want = OracleMajority(v);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (want) {
        ASSERT_EQ(got->value, *want);
      }
    }
  }
}

TEST(RandomSelection, DeterministicAndAmongVotes) {
  const auto answers = Answers({"A", "", "B", "C"});
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto pick = RandomSelect(answers, seed);
    ASSERT_TRUE(pick);
    EXPECT_EQ(pick->value, RandomSelect(answers, seed)->value);
    seen.insert(pick->value);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"A", "B", "C"}));
  EXPECT_FALSE(RandomSelect(Answers({"", ""}), 1));
}

TEST(Signals, Examples) {
  const auto s1 = ComputeSignals(Answers({"A", "A", "B"}));
  EXPECT_NEAR(s1.margin, 1.0 / 3, 1e-12);
  EXPECT_NEAR(s1.agreement, 2.0 / 3, 1e-12);
  const auto s2 = ComputeSignals(Answers({"A", "A", "A"}));
  EXPECT_EQ(s2.entropy, 0.0);
  EXPECT_EQ(s2.margin, 1.0);
  EXPECT_NEAR(ComputeSignals(Answers({"A", "B"})).entropy, 1.0, 1e-12);
  EXPECT_FALSE(ComputeSignals(Answers({"", ""})).defined);
}

TEST(Signals, BoundsOverRandomRounds) {
  std::mt19937 rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::string> v;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) v.push_back(std::string(1, 'A' + rng() % 4));
    const auto s = ComputeSignals(Answers(v));
    EXPECT_GE(s.margin, 0.0);
    EXPECT_LE(s.margin, 1.0);
    EXPECT_GE(s.entropy, 0.0);
    EXPECT_LE(s.entropy, std::log2(4.0) + 1e-12);
    EXPECT_EQ(s.votes, n);
  }
}

TEST(RunQuestion, RoundLoopFixture) {
  EXPECT_EQ(testing::CheckRoundLoopFixture(), "");
}

TEST(RunQuestion, JudgeStopsAtRoundTwo) {
  RunConfig config;
  config.pool = PlainPool(3);
  const auto out = RunScripted(config, RoundScript(3, {"a", "a"}, {"", "YES"}));
  EXPECT_EQ(out.transcript.stop_round, 2);
  EXPECT_EQ(out.transcript.ledger.agent_inferences, 6);
  EXPECT_EQ(out.transcript.ledger.judge_inferences, 1);
  EXPECT_EQ(out.transcript.rounds[0].reason, "below minimum round 2");
  EXPECT_EQ(out.transcript.rounds[1].judge_response, "Assessment. <<<YES>>>");
}

TEST(RunQuestion, JudgeNotConsultedBeforeMinimumRound) {
  RunConfig config;
  config.pool = PlainPool(2);
  const auto out =
      RunScripted(config, RoundScript(2, {"a", "a"}, {"YES", "YES"}));
  EXPECT_EQ(out.transcript.stop_round, 2);
  for (const auto& req : out.requests) {
    if (req.purpose == Purpose::kJudge) EXPECT_EQ(req.round, 2);
  }
}

TEST(RunQuestion, JudgeAlwaysNoRunsToMaximum) {
  RunConfig config;
  config.pool = PlainPool(2);
  config.r_max = 4;
  const auto out = RunScripted(
      config, RoundScript(2, {"a", "a", "a", "a"}, {"", "NO", "no", "NO"}));
  EXPECT_EQ(out.transcript.stop_round, 4);
  // The judge is not asked once the maximum is reached.
  EXPECT_EQ(out.transcript.ledger.judge_inferences, 2);
  EXPECT_EQ(out.transcript.rounds.back().reason, "reached maximum round 4");
}

TEST(RunQuestion, JudgeVerdictParsing) {
  RunConfig config;
  config.pool = PlainPool(1);
  config.r_max = 3;
  // Lower-case yes in the last span stops; a response without a span
  // continues.
  auto out = RunScripted(config, RoundScript(1, {"a", "a", "a"}, {"", "<<<yes>>> ok"}));
  EXPECT_EQ(out.transcript.stop_round, 2);
  out = RunScripted(config, R"({"responses": [{"agent": "A1", "text": "<<<a>>>"},
      {"agent": "judge", "purpose": "judge", "text": "no verdict"}]})");
  EXPECT_EQ(out.transcript.stop_round, 3);
  EXPECT_EQ(out.transcript.rounds[1].reason, "judge gave no verdict, continuing");
}

TEST(RunQuestion, JudgeTransportFailureContinues) {
  RunConfig config;
  config.pool = PlainPool(1);
  config.r_max = 3;
  config.runtime.retry_backoff = std::chrono::milliseconds(1);
  const auto out = RunScripted(config, R"({"responses": [
      {"agent": "A1", "text": "<<<a>>>"},
      {"agent": "judge", "purpose": "judge", "transport_error": "down"}]})");
  EXPECT_EQ(out.transcript.stop_round, 3);
  // Each attempt is an inference: 3 attempts at round 2.
  EXPECT_EQ(out.transcript.ledger.judge_inferences, 3);
}

// Rule stabilization reference: the first r >= max(r_min, 2) whose majority
// equals that of r-1, else r_max.
int ReferenceRuleStop(const std::vector<std::string>& majorities, int r_min,
                      int r_max) {
  for (int r = 1; r <= r_max; ++r) {
    if (r >= r_max) return r;
    if (r >= r_min && r >= 2 && majorities[r - 1] == majorities[r - 2]) return r;
  }
  return r_max;
}

TEST(RuleStabilization, ExhaustiveAgainstReference) {
  for (int len = 1; len <= 4; ++len) {
    for (int code = 0; code < (1 << len); ++code) {
      std::vector<std::string> seq;
      for (int i = 0; i < len; ++i) seq.push_back((code >> i) & 1 ? "B" : "A");
      for (int r_min = 1; r_min <= len; ++r_min) {
        RunConfig config;
        config.pool = PlainPool(3);
        config.termination = TerminationPolicy::kRuleStabilization;
        config.r_min = r_min;
        config.r_max = len;
        const auto out = RunScripted(config, RoundScript(3, seq));
        ASSERT_EQ(out.transcript.stop_round, ReferenceRuleStop(seq, r_min, len))
            << "sequence code " << code << " len " << len << " r_min " << r_min;
        ASSERT_EQ(out.transcript.ledger.judge_inferences, 0);
      }
    }
  }
}

TEST(RuleStabilization, Examples) {
  RunConfig config;
  config.pool = PlainPool(3);
  config.termination = TerminationPolicy::kRuleStabilization;
  config.r_max = 4;
  EXPECT_EQ(RunScripted(config, RoundScript(3, {"A", "A", "A", "A"}))
                .transcript.stop_round,
            2);
  EXPECT_EQ(RunScripted(config, RoundScript(3, {"A", "B", "B", "B"}))
                .transcript.stop_round,
            3);
}

TEST(FixedPolicy, FifteenAgentsFiveRounds) {
  RunConfig config;
  config.pool = DefaultPool();
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 5;
  const auto out = RunScripted(config, testing::DefaultPoolScript({}),
                               testing::kAllVariantsTools);
  EXPECT_EQ(out.transcript.stop_round, 5);
  EXPECT_EQ(out.transcript.ledger.agent_inferences, 75);
  EXPECT_EQ(out.transcript.ledger.judge_inferences, 0);
  EXPECT_EQ(out.transcript.final->value, "17");
}

TEST(Barrier, NoRoundPromptContainsItsOwnRoundAnswers) {
  RunConfig config;
  config.pool = PlainPool(4);
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 4;
  const auto out = RunScripted(config, RoundScript(4, {"p", "q", "r", "s"}));
  for (const auto& req : out.requests) {
    for (const auto& round : out.transcript.rounds) {
      if (round.round < req.round - 1 || round.round >= req.round) {
        for (const auto& a : round.answers) {
          EXPECT_EQ(req.context.find(a.raw_response), std::string::npos)
              << "round " << req.round << " prompt contains a round "
              << round.round << " answer";
        }
      }
    }
  }
}

TEST(Properties, StopRoundBoundsAndLedgerOverRandomRuns) {
  std::mt19937 rng(31);
  const TerminationPolicy policies[] = {TerminationPolicy::kLlmJudge,
                                        TerminationPolicy::kRuleStabilization,
                                        TerminationPolicy::kFixed};
  for (int t = 0; t < 60; ++t) {
    RunConfig config;
    const int n = 1 + static_cast<int>(rng() % 4);
    config.pool = PlainPool(n);
    config.termination = policies[rng() % 3];
    config.r_max = 1 + static_cast<int>(rng() % 5);
    config.r_min = 1 + static_cast<int>(rng() % config.r_max);
    config.samples_schedule = {1 + static_cast<int>(rng() % 3), 1};
    std::vector<std::string> values, verdicts;
    for (int r = 0; r < config.r_max; ++r) {
      values.push_back(rng() % 2 ? "A" : "B");
      verdicts.push_back(rng() % 2 ? "YES" : "NO");
    }
    const auto out = RunScripted(config, RoundScript(n, values, verdicts));
    const Transcript& tr = out.transcript;
    EXPECT_GE(tr.stop_round, config.r_min);
    EXPECT_LE(tr.stop_round, config.r_max);
    EXPECT_EQ(tr.stop_round, static_cast<int>(tr.rounds.size()));
    std::int64_t want_agents = 0;
    for (int r = 1; r <= tr.stop_round; ++r) {
      const int mult = r <= 2 ? config.samples_schedule[r - 1] : 1;
      want_agents += n * mult;
      EXPECT_EQ(tr.rounds[r - 1].answers.size(), static_cast<std::size_t>(n * mult));
    }
    EXPECT_EQ(tr.ledger.agent_inferences, want_agents);
    std::int64_t judge_requests = 0;
    for (const auto& req : out.requests) {
      judge_requests += req.purpose == Purpose::kJudge;
    }
    EXPECT_EQ(tr.ledger.judge_inferences, judge_requests);
    EXPECT_EQ(tr.ledger.TotalInferences() - tr.ledger.agent_inferences +
                  tr.ledger.agent_generations,
              static_cast<std::int64_t>(out.requests.size()));
    EXPECT_EQ(tr.final->value, MajorityVote(tr.rounds.back().answers)->value);
  }
}

TEST(Samples, ScheduleAndTemperatures) {
  RunConfig config;
  config.pool = PlainPool(2);
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 3;
  config.samples_schedule = {4, 4};
  config.sample_temperatures = {0.25, 0.5, 0.75, 1.0};
  const auto out = RunScripted(config, RoundScript(2, {"a", "a", "a"}));
  ASSERT_EQ(out.transcript.rounds[0].answers.size(), 8u);
  ASSERT_EQ(out.transcript.rounds[2].answers.size(), 2u);
  EXPECT_EQ(out.transcript.ledger.agent_inferences, 18);
  for (const auto& req : out.requests) {
    if (req.round <= 2) {
      EXPECT_DOUBLE_EQ(req.temperature, config.sample_temperatures[req.sample]);
    } else {
      EXPECT_EQ(req.sample, 0);
      EXPECT_DOUBLE_EQ(req.temperature, kDefaultTemperature);
    }
  }
  // Pool order, each agent repeated for its samples.
  const auto& answers = out.transcript.rounds[0].answers;
  EXPECT_EQ(answers[3].agent_id, "A1");
  EXPECT_EQ(answers[3].sample, 3);
  EXPECT_EQ(answers[4].agent_id, "A2");
}

TEST(Selection, LlmSelectorAndFallback) {
  RunConfig config;
  config.pool = PlainPool(3);
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 1;
  config.r_min = 1;
  config.selection = SelectionStrategy::kLlmSelector;
  std::string script = RoundScript(3, {"a"});
  script.insert(script.size() - 2,
                R"(, {"agent": "selector", "purpose": "selector", "text": "<<<b>>>"})");
  auto out = RunScripted(config, script);
  EXPECT_EQ(out.transcript.final->value, "b");
  EXPECT_EQ(out.transcript.ledger.selector_inferences, 1);
  EXPECT_EQ(out.transcript.selection_note, "llm_selector");
  const auto& sel = out.requests.back();
  EXPECT_EQ(sel.purpose, Purpose::kSelector);
  EXPECT_NE(sel.context.find("Candidate answers from several methods"),
            std::string::npos);

  script = RoundScript(3, {"a"});
  script.insert(script.size() - 2,
                R"(, {"agent": "selector", "purpose": "selector", "text": "unsure"})");
  out = RunScripted(config, script);
  EXPECT_EQ(out.transcript.final->value, "a");
  EXPECT_EQ(out.transcript.selection_note,
            "llm_selector gave no answer, majority fallback");
}

TEST(Selection, RandomUsesSeedAndQuestion) {
  RunConfig config;
  config.pool = PlainPool(3);
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 1;
  config.r_min = 1;
  config.selection = SelectionStrategy::kRandom;
  config.seed = 99;
  const std::string script = R"({"responses": [
      {"agent": "A1", "text": "<<<x>>>"}, {"agent": "A2", "text": "<<<y>>>"},
      {"agent": "A3", "text": "<<<z>>>"}]})";
  const auto a = RunScripted(config, script);
  const auto b = RunScripted(config, script);
  EXPECT_EQ(a.transcript.final->value, b.transcript.final->value);
  EXPECT_EQ(a.transcript.final->value,
            RandomSelect(a.transcript.rounds[0].answers, 99 ^ Fnv1a64("q1"))->value);
}

TEST(Failures, OneAgentFailingDoesNotAbortTheRound) {
  RunConfig config;
  config.pool = PlainPool(2);
  config.termination = TerminationPolicy::kFixed;
  config.r_max = 1;
  config.r_min = 1;
  config.runtime.retry_backoff = std::chrono::milliseconds(1);
  auto out = RunScripted(config, R"({"responses": [
      {"agent": "A1", "transport_error": "down"},
      {"agent": "A2", "text": "<<<b>>>"}]})");
  EXPECT_EQ(out.transcript.final->value, "b");
  EXPECT_TRUE(out.transcript.rounds[0].traces[0].error);

  EXPECT_THROW(RunScripted(config, R"({"responses": [
      {"transport_error": "down"}]})"),
               RunAbortedError);
  EXPECT_THROW(RunScripted(config, R"({"responses": []})"), FixtureMissError);
}

TEST(Config, Validation) {
  RunConfig config;
  config.pool = PlainPool(1);
  EXPECT_NO_THROW(ValidateConfig(config));
  RunConfig bad = config;
  bad.r_min = 0;
  EXPECT_THROW(ValidateConfig(bad), ConfigError);
  bad = config;
  bad.r_min = 7;
  EXPECT_THROW(ValidateConfig(bad), ConfigError);
  bad = config;
  bad.samples_schedule = {0};
  EXPECT_THROW(ValidateConfig(bad), ConfigError);
  bad = config;
  bad.parallelism = 0;
  EXPECT_THROW(ValidateConfig(bad), ConfigError);
  bad = config;
  bad.pool = AgentPool();
  EXPECT_THROW(ValidateConfig(bad), ConfigError);
  // Unservable search variants fail before any model call.
  RunConfig search = config;
  search.pool = DefaultPool();
  auto tools = ScriptedToolSuite::FromJson(R"({"search": {"gs": {}}})");
  EXPECT_THROW(ValidateConfig(search, tools.get()), ConfigError);
}

TEST(Determinism, IdenticalTranscriptsAcrossRuns) {
  RunConfig config;
  config.pool = PlainPool(5);
  config.parallelism = 4;
  const std::string script = RoundScript(5, {"a", "b", "b"}, {"", "NO", "YES"});
  const auto a = RunScripted(config, script);
  const auto b = RunScripted(config, script);
  ASSERT_EQ(a.transcript.rounds.size(), b.transcript.rounds.size());
  for (std::size_t r = 0; r < a.transcript.rounds.size(); ++r) {
    for (std::size_t i = 0; i < a.transcript.rounds[r].traces.size(); ++i) {
      EXPECT_EQ(a.transcript.rounds[r].traces[i].steps,
                b.transcript.rounds[r].traces[i].steps);
    }
  }
  EXPECT_EQ(a.transcript.ledger, b.transcript.ledger);
}

TEST(EnumNames, RoundTrip) {
  for (auto p : {TerminationPolicy::kLlmJudge,
                 TerminationPolicy::kRuleStabilization,
                 TerminationPolicy::kFixed}) {
    EXPECT_EQ(TerminationPolicyFromString(ToString(p)), p);
  }
  for (auto s : {SelectionStrategy::kMajority, SelectionStrategy::kRandom,
                 SelectionStrategy::kLlmSelector}) {
    EXPECT_EQ(SelectionStrategyFromString(ToString(s)), s);
  }
  EXPECT_THROW(TerminationPolicyFromString("never"), ConfigError);
}

}  // namespace
}  // namespace toolmix
