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

#include "toolmix/metrics.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace toolmix {
namespace {

std::vector<std::string> Ids(std::size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

CorrectnessMatrix RandomMatrix(std::mt19937_64& rng, std::size_t q,
                               std::size_t a, int rounds, double p = 0.4) {
  CorrectnessMatrix m(Ids(q, "q"), Ids(a, "a"), rounds);
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < a; ++j) {
      for (int r = 1; r <= rounds; ++r) m.Set(i, j, r, coin(rng));
    }
  }
  return m;
}

TEST(Coverage, AtLeastOneCorrect) {
  CorrectnessMatrix m({"q"}, {"a", "b", "c"}, 1);
  m.Set(0, 0, 1, true);
  m.Set(0, 1, 1, false);
  m.Set(0, 2, 1, false);
  EXPECT_EQ(Coverage(m, 1), 1.0);
  const std::size_t only_b[] = {1};
  EXPECT_EQ(Coverage(m, only_b, 1), 0.0);
  EXPECT_THROW(Coverage(m, std::span<const std::size_t>(), 1),
               std::invalid_argument);
  const std::size_t bad[] = {7};
  EXPECT_THROW(Coverage(m, bad, 1), std::invalid_argument);
}

TEST(Coverage, IndependenceMonteCarlo) {
  const double p[] = {0.3, 0.5, 0.7};
  const double analytic = 1.0 - (1 - p[0]) * (1 - p[1]) * (1 - p[2]);
  EXPECT_NEAR(analytic, 0.895, 1e-12);
  std::mt19937_64 rng(17);
  const std::size_t n = 100000;
  CorrectnessMatrix m(Ids(n, "q"), {"a", "b", "c"}, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      m.Set(i, j, 1, std::bernoulli_distribution(p[j])(rng));
    }
  }
  EXPECT_NEAR(Coverage(m, 1), analytic, 0.01);
}

TEST(Coverage, MonotoneOverRandomSubsetPairs) {
  std::mt19937_64 rng(4);
  const CorrectnessMatrix m = RandomMatrix(rng, 200, 15, 2, 0.1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::size_t> big;
    for (std::size_t j = 0; j < 15; ++j) {
      if (rng() % 2) big.push_back(j);
    }
    if (big.empty()) big.push_back(rng() % 15);
    std::vector<std::size_t> small;
    for (std::size_t j : big) {
      if (rng() % 2) small.push_back(j);
    }
    if (small.empty()) small.push_back(big.front());
    const int r = 1 + static_cast<int>(rng() % 2);
    EXPECT_LE(Coverage(m, small, r), Coverage(m, big, r));
  }
}

TEST(RoundStatistics, Counting) {
  CorrectnessMatrix m({"q1", "q2"}, {"a", "b"}, 1);
  m.Set(0, 0, 1, true);
  m.Set(0, 1, 1, false);
  m.Set(1, 0, 1, false);
  m.Set(1, 1, 1, false);
  const auto stats = ComputeRoundStatistics(m);
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].coverage, 0.5);
  EXPECT_EQ(stats[0].average, 0.25);
  EXPECT_EQ(stats[0].per_agent, (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(stats[0].missing, 0u);
  EXPECT_THROW(ComputeRoundStatistics(CorrectnessMatrix()), std::invalid_argument);
}

TEST(RoundStatistics, SaturationAndMissing) {
  CorrectnessMatrix m({"q1", "q2"}, {"a", "b"}, 2);
  for (std::size_t q = 0; q < 2; ++q) {
    for (std::size_t a = 0; a < 2; ++a) m.Set(q, a, 1, true);
  }
  const auto stats = ComputeRoundStatistics(m);
  EXPECT_EQ(stats[0].coverage, 1.0);
  EXPECT_EQ(stats[0].average, 1.0);
  // Round 2 was never filled: absent counts as incorrect and is flagged.
  EXPECT_EQ(stats[1].coverage, 0.0);
  EXPECT_EQ(stats[1].missing, 4u);
  EXPECT_FALSE(m.present(0, 0, 2));
  EXPECT_FALSE(m.correct(0, 0, 2));
}

TEST(RoundStatistics, CoverageDominatesBestAgentDominatesAverage) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const auto m = RandomMatrix(rng, 1 + rng() % 40, 1 + rng() % 15, 3,
                                std::uniform_real_distribution<>(0, 1)(rng));
    for (const auto& s : ComputeRoundStatistics(m)) {
      const double best = *std::max_element(s.per_agent.begin(), s.per_agent.end());
      EXPECT_GE(s.coverage + 1e-12, best);
      EXPECT_GE(best + 1e-12, s.average);
    }
  }
}

TEST(Categories, FifteenAgentBins) {
  const Category want[16] = {
      Category::kAllWrong, Category::kFew,      Category::kFew,
      Category::kFew,      Category::kModerate, Category::kModerate,
      Category::kModerate, Category::kModerate, Category::kModerate,
      Category::kModerate, Category::kModerate, Category::kModerate,
      Category::kHigh,     Category::kHigh,     Category::kHigh,
      Category::kAllCorrect};
  for (int c = 0; c <= 15; ++c) EXPECT_EQ(Categorize(c), want[c]) << c;
  EXPECT_THROW(Categorize(-1), std::out_of_range);
  EXPECT_THROW(Categorize(16), std::out_of_range);
  EXPECT_EQ(ToString(Category::kModerate), "moderate");
}

TEST(Categories, OtherPoolSizesPartition) {
  for (int n = 1; n <= 40; ++n) {
    EXPECT_EQ(Categorize(0, n), Category::kAllWrong);
    EXPECT_EQ(Categorize(n, n), Category::kAllCorrect);
    // Monotone in count.
    for (int c = 1; c <= n; ++c) {
      EXPECT_LE(static_cast<int>(Categorize(c - 1, n)),
                static_cast<int>(Categorize(c, n)));
    }
  }
}

TEST(Transitions, FlowsConserveQuestions) {
  std::mt19937_64 rng(12);
  std::vector<std::vector<int>> counts(300, std::vector<int>(5));
  for (auto& row : counts) {
    for (int& c : row) c = static_cast<int>(rng() % 16);
  }
  const auto report = TransitionCategories(counts);
  ASSERT_EQ(report.per_round.size(), 5u);
  for (const auto& tally : report.per_round) {
    EXPECT_EQ(std::accumulate(tally.begin(), tally.end(), 0), 300);
  }
  ASSERT_EQ(report.flows.size(), 4u);
  for (std::size_t t = 0; t < report.flows.size(); ++t) {
    std::array<int, kCategoryCount> out{}, in{};
    int total = 0;
    for (const auto& [edge, n] : report.flows[t]) {
      out[static_cast<int>(edge.first)] += n;
      in[static_cast<int>(edge.second)] += n;
      total += n;
    }
    EXPECT_EQ(total, 300);
    EXPECT_EQ(out, report.per_round[t]);
    EXPECT_EQ(in, report.per_round[t + 1]);
  }
  EXPECT_THROW(TransitionCategories({{1, 2}, {1}}), std::invalid_argument);
  EXPECT_THROW(TransitionCategories({{16}}), std::out_of_range);
}

TEST(Transitions, CountsFromMatrix) {
  CorrectnessMatrix m({"q"}, {"a", "b", "c"}, 2);
  m.Set(0, 0, 1, true);
  m.Set(0, 1, 2, true);
  m.Set(0, 2, 2, true);
  EXPECT_EQ(CorrectCounts(m), (std::vector<std::vector<int>>{{1, 2}}));
}

TEST(CombinedScore, Arithmetic) {
  EXPECT_DOUBLE_EQ(CombinedScore(0.5, 0.3, 0.5, 0.3), 2.0);
  EXPECT_NEAR(CombinedScore(0.6, 0.3, 0.5, 0.3), 2.2, 1e-12);
  EXPECT_THROW(CombinedScore(0.5, 0.3, 0.0, 0.3), std::invalid_argument);
  EXPECT_THROW(CombinedScore(0.5, 0.3, 0.5, -1.0), std::invalid_argument);
}

std::vector<std::vector<std::size_t>> TopMembers(const std::vector<GroupScore>& g) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& s : g) out.push_back(s.members);
  return out;
}

TEST(RankGroups, InvariantUnderUniformScaling) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<> unit(0.01, 1.0);
  std::uniform_real_distribution<> scale(0.01, 100.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<GroupScore> groups(50);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      groups[i].members = {i};
      groups[i].coverage = unit(rng);
      groups[i].average = unit(rng);
    }
    const auto base = TopMembers(RankGroups(groups, 3));
    auto cov = groups;
    const double c = scale(rng);
    for (auto& g : cov) g.coverage *= c;
    EXPECT_EQ(TopMembers(RankGroups(cov, 3)), base);
    auto avg = groups;
    const double a = scale(rng);
    for (auto& g : avg) g.average *= a;
    EXPECT_EQ(TopMembers(RankGroups(avg, 3)), base);
  }
}

TEST(SampleTopGroups, ThirtyPoolFifteenGroups) {
  std::mt19937_64 rng(5);
  const auto m = RandomMatrix(rng, 60, 30, 1, 0.3);
  GroupSampling options;
  options.samples = 25000;
  options.seed = 42;
  const auto top = SampleTopGroups(m, options);
  ASSERT_EQ(top.size(), 3u);
  for (const auto& g : top) {
    EXPECT_EQ(g.members.size(), 15u);
    EXPECT_TRUE(std::is_sorted(g.members.begin(), g.members.end()));
    EXPECT_EQ(std::adjacent_find(g.members.begin(), g.members.end()),
              g.members.end());
    EXPECT_EQ(g.agent_ids.size(), 15u);
    EXPECT_DOUBLE_EQ(g.coverage, Coverage(m, g.members, 1));
  }
  EXPECT_GE(top[0].combined, top[1].combined);
  EXPECT_GE(top[1].combined, top[2].combined);
  EXPECT_NE(top[0].members, top[1].members);
  const auto again = SampleTopGroups(m, options);
  EXPECT_EQ(TopMembers(again), TopMembers(top));
}

TEST(SampleTopGroups, DegenerateAndErrors) {
  std::mt19937_64 rng(6);
  const auto m = RandomMatrix(rng, 10, 15, 1);
  GroupSampling options;
  options.samples = 50;
  const auto top = SampleTopGroups(m, options);
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0].members.size(), 15u);
  EXPECT_DOUBLE_EQ(top[0].combined, 2.0);
  options.group_size = 16;
  EXPECT_THROW(SampleTopGroups(m, options), std::invalid_argument);
}

TEST(SampleTopGroups, AllWrongMatrixHasZeroScores) {
  CorrectnessMatrix m(Ids(5, "q"), Ids(6, "a"), 1);
  for (std::size_t q = 0; q < 5; ++q) {
    for (std::size_t a = 0; a < 6; ++a) m.Set(q, a, 1, false);
  }
  GroupSampling options;
  options.group_size = 3;
  options.samples = 100;
  for (const auto& g : SampleTopGroups(m, options)) EXPECT_EQ(g.combined, 0.0);
}

TEST(Objective, Arithmetic) {
  CostLedger ledger;
  ledger.agent_inferences = 30;
  ledger.judge_inferences = 1;
  ledger.input_tokens = 1000;
  ledger.output_tokens = 500;
  EXPECT_EQ(ObjectiveReport(0.3, ledger, 0.0, CostUnit::kInferences), 0.3);
  EXPECT_NEAR(ObjectiveReport(0.3, ledger, 0.001, CostUnit::kInferences), 0.269,
              1e-12);
  EXPECT_NEAR(ObjectiveReport(0.3, ledger, 1e-4, CostUnit::kTokens), 0.15, 1e-12);
  EXPECT_THROW(ObjectiveReport(0.3, 1.0, -0.1), std::invalid_argument);
  EXPECT_EQ(CostUnitFromString(ToString(CostUnit::kTokens)), CostUnit::kTokens);
}

}  // namespace
}  // namespace toolmix
