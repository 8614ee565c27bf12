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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace toolmix {

CorrectnessMatrix::CorrectnessMatrix(std::vector<std::string> question_ids,
                                     std::vector<std::string> agent_ids,
                                     int rounds)
    : question_ids_(std::move(question_ids)),
      agent_ids_(std::move(agent_ids)),
      rounds_(rounds) {
  if (rounds < 0) throw std::invalid_argument("negative round count");
  const std::size_t n =
      question_ids_.size() * agent_ids_.size() * static_cast<std::size_t>(rounds);
  correct_.assign(n, 0);
  present_.assign(n, 0);
}

std::size_t CorrectnessMatrix::Index(std::size_t q, std::size_t a, int r) const {
  if (q >= questions() || a >= agents() || r < 1 || r > rounds_) {
    throw std::out_of_range("correctness matrix index out of range");
  }
  return (q * agents() + a) * static_cast<std::size_t>(rounds_) +
         static_cast<std::size_t>(r - 1);
}

void CorrectnessMatrix::Set(std::size_t question, std::size_t agent, int round,
                            bool correct) {
  const std::size_t i = Index(question, agent, round);
  correct_[i] = correct;
  present_[i] = 1;
}

bool CorrectnessMatrix::correct(std::size_t question, std::size_t agent,
                                int round) const {
  return correct_[Index(question, agent, round)];
}

bool CorrectnessMatrix::present(std::size_t question, std::size_t agent,
                                int round) const {
  return present_[Index(question, agent, round)];
}

std::size_t CorrectnessMatrix::missing(int round) const {
  std::size_t n = 0;
  for (std::size_t q = 0; q < questions(); ++q) {
    for (std::size_t a = 0; a < agents(); ++a) n += !present(q, a, round);
  }
  return n;
}

double Coverage(const CorrectnessMatrix& m, std::span<const std::size_t> agents,
                int round) {
  if (agents.empty()) throw std::invalid_argument("coverage of an empty subset");
  if (m.questions() == 0) throw std::invalid_argument("matrix has no questions");
  for (std::size_t a : agents) {
    if (a >= m.agents()) {
      throw std::invalid_argument("agent index " + std::to_string(a) +
                                  " out of range");
    }
  }
  std::size_t covered = 0;
  for (std::size_t q = 0; q < m.questions(); ++q) {
    for (std::size_t a : agents) {
      if (m.correct(q, a, round)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(m.questions());
}

double Coverage(const CorrectnessMatrix& m, int round) {
  std::vector<std::size_t> all(m.agents());
  std::iota(all.begin(), all.end(), 0);
  return Coverage(m, all, round);
}

double Accuracy(const CorrectnessMatrix& m, std::size_t agent, int round) {
  if (m.questions() == 0) throw std::invalid_argument("matrix has no questions");
  std::size_t n = 0;
  for (std::size_t q = 0; q < m.questions(); ++q) n += m.correct(q, agent, round);
  return static_cast<double>(n) / static_cast<double>(m.questions());
}

std::vector<RoundStatistics> ComputeRoundStatistics(const CorrectnessMatrix& m) {
  if (m.empty()) throw std::invalid_argument("empty correctness matrix");
  std::vector<RoundStatistics> out;
  for (int r = 1; r <= m.rounds(); ++r) {
    RoundStatistics s;
    s.round = r;
    s.coverage = Coverage(m, r);
    for (std::size_t a = 0; a < m.agents(); ++a) {
      s.per_agent.push_back(Accuracy(m, a, r));
    }
    s.average = std::accumulate(s.per_agent.begin(), s.per_agent.end(), 0.0) /
                static_cast<double>(m.agents());
    s.missing = m.missing(r);
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view ToString(Category c) {
  switch (c) {
    case Category::kAllWrong:
      return "all_wrong";
    case Category::kFew:
      return "few";
    case Category::kModerate:
      return "moderate";
    case Category::kHigh:
      return "high";
    case Category::kAllCorrect:
      return "all_correct";
  }
  return "all_wrong";
}

Category Categorize(int count, int pool_size) {
  if (pool_size < 1) throw std::out_of_range("pool size must be >= 1");
  if (count < 0 || count > pool_size) {
    throw std::out_of_range("correct count " + std::to_string(count) +
                            " outside [0, " + std::to_string(pool_size) + "]");
  }
  if (count == 0) return Category::kAllWrong;
  if (count == pool_size) return Category::kAllCorrect;
  const int k = static_cast<int>(std::lround(pool_size / 5.0));
  if (count <= k) return Category::kFew;
  if (count >= pool_size - k) return Category::kHigh;
  return Category::kModerate;
}

TransitionReport TransitionCategories(const std::vector<std::vector<int>>& counts,
                                      int pool_size) {
  TransitionReport report;
  if (counts.empty()) return report;
  const std::size_t rounds = counts.front().size();
  for (const auto& row : counts) {
    if (row.size() != rounds) {
      throw std::invalid_argument("transition counts are not rectangular");
    }
  }
  report.per_round.assign(rounds, {});
  report.flows.assign(rounds > 0 ? rounds - 1 : 0, {});
  for (const auto& row : counts) {
    std::vector<Category> seq;
    for (std::size_t r = 0; r < rounds; ++r) {
      seq.push_back(Categorize(row[r], pool_size));
      ++report.per_round[r][static_cast<std::size_t>(seq.back())];
      if (r > 0) ++report.flows[r - 1][{seq[r - 1], seq[r]}];
    }
    report.sequences.push_back(std::move(seq));
  }
  return report;
}

std::vector<std::vector<int>> CorrectCounts(const CorrectnessMatrix& m) {
  std::vector<std::vector<int>> counts(m.questions(),
                                       std::vector<int>(m.rounds(), 0));
  for (std::size_t q = 0; q < m.questions(); ++q) {
    for (int r = 1; r <= m.rounds(); ++r) {
      for (std::size_t a = 0; a < m.agents(); ++a) {
        counts[q][r - 1] += m.correct(q, a, r);
      }
    }
  }
  return counts;
}

double CombinedScore(double coverage, double average, double mean_coverage,
                     double mean_average) {
  if (!(mean_coverage > 0) || !(mean_average > 0)) {
    throw std::invalid_argument("combined score needs positive means");
  }
  return coverage / mean_coverage + average / mean_average;
}

std::vector<GroupScore> RankGroups(std::vector<GroupScore> groups,
                                   std::size_t top_k) {
  if (groups.empty()) return groups;
  double mean_cov = 0, mean_avg = 0;
  for (const auto& g : groups) {
    mean_cov += g.coverage;
    mean_avg += g.average;
  }
  mean_cov /= static_cast<double>(groups.size());
  mean_avg /= static_cast<double>(groups.size());
  for (auto& g : groups) {
    g.combined = (mean_cov > 0 ? g.coverage / mean_cov : 0.0) +
                 (mean_avg > 0 ? g.average / mean_avg : 0.0);
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const GroupScore& a, const GroupScore& b) {
                     return a.combined > b.combined;
                   });
  std::vector<GroupScore> top;
  std::set<std::vector<std::size_t>> seen;
  for (auto& g : groups) {
    if (top.size() >= top_k) break;
    if (seen.insert(g.members).second) top.push_back(std::move(g));
  }
  return top;
}

std::vector<GroupScore> SampleTopGroups(const CorrectnessMatrix& m,
                                        const GroupSampling& options) {
  if (options.group_size == 0) throw std::invalid_argument("empty group size");
  if (m.agents() < options.group_size) {
    throw std::invalid_argument("pool of " + std::to_string(m.agents()) +
                                " is smaller than group size " +
                                std::to_string(options.group_size));
  }
  if (m.questions() == 0) throw std::invalid_argument("matrix has no questions");
  std::vector<double> accuracy;
  for (std::size_t a = 0; a < m.agents(); ++a) {
    accuracy.push_back(Accuracy(m, a, options.round));
  }
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> deck(m.agents());
  std::vector<GroupScore> groups;
  groups.reserve(options.samples);
  for (std::size_t s = 0; s < options.samples; ++s) {
    std::iota(deck.begin(), deck.end(), 0);
    // Partial Fisher-Yates: the first group_size slots are a uniform subset.
    for (std::size_t i = 0; i < options.group_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, deck.size() - 1);
      std::swap(deck[i], deck[pick(rng)]);
    }
    GroupScore g;
    g.members.assign(deck.begin(), deck.begin() + options.group_size);
    std::sort(g.members.begin(), g.members.end());
    g.coverage = Coverage(m, g.members, options.round);
    for (std::size_t a : g.members) g.average += accuracy[a];
    g.average /= static_cast<double>(g.members.size());
    groups.push_back(std::move(g));
  }
  auto top = RankGroups(std::move(groups), options.top_k);
  for (auto& g : top) {
    for (std::size_t a : g.members) g.agent_ids.push_back(m.agent_ids()[a]);
  }
  return top;
}

std::string_view ToString(CostUnit unit) {
  return unit == CostUnit::kTokens ? "tokens" : "inferences";
}

CostUnit CostUnitFromString(std::string_view s) {
  if (s == "inferences") return CostUnit::kInferences;
  if (s == "tokens") return CostUnit::kTokens;
  throw ConfigError("unknown cost unit: " + std::string(s));
}

double ObjectiveReport(double accuracy, double cost, double lambda) {
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  return accuracy - lambda * cost;
}

double ObjectiveReport(double accuracy, const CostLedger& ledger, double lambda,
                       CostUnit unit) {
  const double cost = unit == CostUnit::kTokens
                          ? static_cast<double>(ledger.TotalTokens())
                          : static_cast<double>(ledger.TotalInferences());
  return ObjectiveReport(accuracy, cost, lambda);
}

}  // namespace toolmix
