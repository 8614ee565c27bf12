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

#include "toolmix/agents.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

namespace toolmix {
namespace {

std::size_t CountOccurrences(const std::string& haystack,
                             const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

AgentAnswer Answer(std::string raw, int round = 1) {
  AgentAnswer a;
  a.raw_response = std::move(raw);
  a.round = round;
  return a;
}

TEST(DefaultPool, HasFifteenAgentsInTableOrder) {
  const AgentPool pool = DefaultPool();
  ASSERT_EQ(pool.size(), 15u);
  const std::vector<std::string> want = {
      "Base",    "CoT",     "CoT_code", "S",       "C",
      "C+",      "CS_gs",   "CS_llm",   "CS_com",  "CSG_gs",
      "CSG_llm", "CSG_com", "CSG+_gs",  "CSG+_llm", "CSG+_com"};
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(pool.at(i).agent_id, want[i]);
  }
}

TEST(DefaultPool, PermissionPartition) {
  int none = 0, search_only = 0, code_only = 0, both = 0;
  for (const auto& spec : DefaultPool().specs()) {
    if (spec.tools == ToolSet::None()) ++none;
    if (spec.tools == ToolSet::SearchOnly()) ++search_only;
    if (spec.tools == ToolSet::CodeOnly()) ++code_only;
    if (spec.tools == ToolSet::Both()) ++both;
    EXPECT_EQ(spec.tool_budget, 5) << spec.agent_id;
    EXPECT_EQ(spec.samples_per_round, 1);
  }
  EXPECT_EQ(none, 3);
  EXPECT_EQ(search_only, 1);
  EXPECT_EQ(code_only, 2);
  EXPECT_EQ(both, 9);
  EXPECT_TRUE(DefaultPool().Find("CoT").tools.empty());
}

TEST(DefaultPool, FamiliesHaveThreeSearchVariants) {
  const AgentPool pool = DefaultPool();
  for (std::string family : {"CS_", "CSG_", "CSG+_"}) {
    std::set<SearchVariant> variants;
    for (const auto& spec : pool.specs()) {
      if (spec.agent_id.rfind(family, 0) == 0) variants.insert(spec.search_variant);
    }
    EXPECT_EQ(variants, (std::set<SearchVariant>{SearchVariant::kGoogle,
                                                 SearchVariant::kLlm,
                                                 SearchVariant::kCombined}))
        << family;
  }
}

TEST(DefaultPool, PromptsAndModes) {
  const AgentPool pool = DefaultPool();
  EXPECT_EQ(pool.Find("Base").head_prompt, prompts::kBase);
  EXPECT_EQ(pool.Find("CoT").head_prompt, prompts::kCot);
  EXPECT_EQ(pool.Find("CoT_code").head_prompt, prompts::kCotCode);
  EXPECT_EQ(pool.Find("CoT_code").answer_mode, AnswerMode::kCode);
  EXPECT_EQ(pool.Find("S").head_prompt, prompts::kSearch);
  EXPECT_EQ(pool.Find("C").head_prompt, prompts::kCode);
  EXPECT_EQ(pool.Find("CS_llm").head_prompt, prompts::kDualTool);
  EXPECT_EQ(pool.Find("CSG_gs").guide_prompt, prompts::kGuided);
  EXPECT_TRUE(pool.Find("CS_gs").guide_prompt.empty());
  // Hinted agents render without a dangling slot when no hint is supplied.
  EXPECT_EQ(RenderHeadPrompt(pool.Find("C+")), prompts::kCode);
  EXPECT_EQ(RenderGuidePrompt(pool.Find("CSG+_com")), prompts::kGuided);
}

TEST(Templates, PlaceholdersPresent) {
  const std::string refine(prompts::kRefinement);
  EXPECT_EQ(CountOccurrences(refine, "{question}"), 1u);
  EXPECT_EQ(CountOccurrences(refine, "{joined_answers}"), 1u);
  const std::string judge(prompts::kJudge);
  EXPECT_EQ(CountOccurrences(judge, "{round_num}"), 1u);
  EXPECT_EQ(CountOccurrences(judge, "{question}"), 1u);
  EXPECT_EQ(CountOccurrences(judge, "{joined_answers}"), 1u);
  EXPECT_NE(judge.find("<<<YES>>>"), std::string::npos);
  EXPECT_NE(judge.find("<<<NO>>>"), std::string::npos);
}

TEST(Hints, FilledWhenSupplied) {
  AgentSpec spec = DefaultPool().Find("C+");
  spec.hint = "Prefer exact arithmetic.";
  EXPECT_EQ(RenderHeadPrompt(spec),
            std::string(prompts::kCode) + "\n\nPrefer exact arithmetic.");
}

TEST(FillTemplate, LeavesUnknownPlaceholders) {
  const std::pair<std::string_view, std::string_view> values[] = {{"a", "1"}};
  EXPECT_EQ(FillTemplate("{a}{b}{a", values), "1{b}{a");
  // Substituted text is not rescanned.
  const std::pair<std::string_view, std::string_view> nested[] = {
      {"a", "{b}"}, {"b", "x"}};
  EXPECT_EQ(FillTemplate("{a}", nested), "{b}");
}

TEST(RoundPrompt, FirstRoundIsHeadThenQuestion) {
  const AgentPool pool = DefaultPool();
  const AgentSpec& cot = pool.Find("CoT");
  Question q{"q1", "What is 6*7?", AnswerKind::kNumeric};
  EXPECT_EQ(BuildRoundPrompt(cot, q, {}),
            std::string(prompts::kCot) + "\n\n" + q.body);
}

TEST(RoundPrompt, RefinementEmbedsEveryAnswerOnceInOrder) {
  const AgentPool pool = DefaultPool();
  const AgentSpec& cot = pool.Find("CoT");
  Question q{"q1", "What is 6*7?", AnswerKind::kNumeric};
  const std::vector<AgentAnswer> prior = {Answer("first says <<<41>>>"),
                                          Answer("second says <<<42>>>")};
  const std::string prompt = BuildRoundPrompt(cot, q, prior);
  EXPECT_EQ(CountOccurrences(prompt, q.body), 1u);
  const auto a = prompt.find(prior[0].raw_response);
  const auto b = prompt.find(prior[1].raw_response);
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_NE(prompt.find("Answer 1:\nfirst says"), std::string::npos);
  EXPECT_NE(prompt.find("Answer 2:\nsecond says"), std::string::npos);
  EXPECT_TRUE(prompt.ends_with(prompts::kCot));
}

TEST(RoundPrompt, RejectsMixedRounds) {
  const AgentPool pool = DefaultPool();
  const AgentSpec& cot = pool.Find("CoT");
  Question q{"q1", "x", AnswerKind::kFreeForm};
  const std::vector<AgentAnswer> prior = {Answer("a", 1), Answer("b", 2)};
  EXPECT_THROW(BuildRoundPrompt(cot, q, prior), std::invalid_argument);
}

TEST(RoundPrompt, AnonymousAndDeterministicForRandomPools) {
  const AgentPool pool = DefaultPool();
  std::mt19937 rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng() % 15;
    std::vector<AgentAnswer> prior;
    for (std::size_t i = 0; i < n; ++i) {
      AgentAnswer a = Answer("reply #" + std::to_string(rng()) + " <<<" +
                             std::to_string(rng() % 5) + ">>>", 2);
      a.agent_id = pool.at(i).agent_id;
      prior.push_back(a);
    }
    const AgentSpec& spec = pool.at(rng() % pool.size());
    Question q{"q", "Question body " + std::to_string(t), AnswerKind::kFreeForm};
    const std::string prompt = BuildRoundPrompt(spec, q, prior);
    EXPECT_EQ(prompt, BuildRoundPrompt(spec, q, prior));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(CountOccurrences(prompt, prior[i].raw_response), 1u);
      EXPECT_NE(prompt.find("Answer " + std::to_string(i + 1) + ":\n"),
                std::string::npos);
    }
    // No agent id appears as a label. Head prompts never contain "Answer <id>:".
    for (const auto& s : pool.specs()) {
      EXPECT_EQ(prompt.find("Answer " + s.agent_id + ":"), std::string::npos);
    }
  }
}

TEST(JudgePrompt, SubstitutesRound) {
  Question q{"q", "Body", AnswerKind::kFreeForm};
  const std::vector<AgentAnswer> answers = {Answer("<<<x>>>")};
  const std::string prompt = BuildJudgePrompt(q, 2, answers);
  EXPECT_NE(prompt.find("The current round number is 2."), std::string::npos);
  EXPECT_NE(prompt.find("Answer 1:\n<<<x>>>"), std::string::npos);
  EXPECT_EQ(prompt.find("{round_num}"), std::string::npos);
}

TEST(SpecValidation, Invariants) {
  AgentSpec spec = DefaultPool().Find("S");
  EXPECT_NO_THROW(ValidateSpec(spec));
  AgentSpec bad = spec;
  bad.tools = ToolSet::CodeOnly();
  EXPECT_THROW(ValidateSpec(bad), ConfigError);
  bad = spec;
  bad.tool_budget = 0;
  EXPECT_THROW(ValidateSpec(bad), ConfigError);
  bad = spec;
  bad.temperature = -0.1;
  EXPECT_THROW(ValidateSpec(bad), ConfigError);
  bad = spec;
  bad.samples_per_round = 0;
  EXPECT_THROW(ValidateSpec(bad), ConfigError);
  EXPECT_THROW(AgentPool(std::vector<AgentSpec>{}), ConfigError);
  EXPECT_THROW(AgentPool(std::vector<AgentSpec>{spec, spec}), ConfigError);
}

TEST(PoolFile, RoundTripsDefaultPool) {
  const AgentPool pool = DefaultPool();
  EXPECT_EQ(LoadPool(DumpPool(pool)), pool);
}

TEST(PoolFile, RejectsBadDocuments) {
  EXPECT_THROW(LoadPool("not json"), ConfigError);
  EXPECT_THROW(LoadPool(R"({"schema_version":1,"agents":[]})"), ConfigError);
  EXPECT_THROW(LoadPool(R"({"schema_version":2,"agents":[]})"), ConfigError);
  EXPECT_THROW(
      LoadPool(R"({"schema_version":1,"agents":[{"agent_id":"a","head_prompt":"h"},{"agent_id":"a","head_prompt":"h"}]})"),
      ConfigError);
  EXPECT_THROW(
      LoadPool(R"({"schema_version":1,"agents":[{"agent_id":"a","head_prompt":"h","colour":"red"}]})"),
      ConfigError);
  EXPECT_THROW(
      LoadPool(R"({"schema_version":1,"agents":[{"agent_id":"a","head_prompt":"h","search_variant":"gs"}]})"),
      ConfigError);
  EXPECT_THROW(LoadPool(R"({"schema_version":1,"extra":0,"agents":[]})"),
               ConfigError);
}

TEST(PoolFile, ThirtyAgentPool) {
  const AgentPool defaults = DefaultPool();
  std::vector<AgentSpec> specs(defaults.specs().begin(),
                               defaults.specs().end());
  for (int i = 0; i < 15; ++i) {
    AgentSpec spec;
    spec.agent_id = "authored_" + std::to_string(i);
    spec.head_prompt = "Strategy " + std::to_string(i);
    spec.tools = i % 2 ? ToolSet::CodeOnly() : ToolSet::None();
    specs.push_back(spec);
  }
  const AgentPool pool(specs);
  const AgentPool loaded = LoadPool(DumpPool(pool));
  EXPECT_EQ(loaded.size(), 30u);
  EXPECT_EQ(loaded, pool);
}

TEST(PoolFile, FixtureLoads) {
  const AgentPool pool =
      LoadPoolFile(std::string(TOOLMIX_DATA_DIR) + "/pool_three.json");
  EXPECT_EQ(pool.size(), 3u);
  EXPECT_THROW(LoadPoolFile("/nonexistent/pool.json"), ConfigError);
}

}  // namespace
}  // namespace toolmix
