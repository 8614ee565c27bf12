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

// Coverage, accuracy, transition and group-selection analyses over a
// questions x agents x rounds correctness matrix. Everything here is a pure
// function of its inputs.

#ifndef TOOLMIX_METRICS_H_
#define TOOLMIX_METRICS_H_

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "toolmix/core.h"

namespace toolmix {

class CorrectnessMatrix {
 public:
  CorrectnessMatrix() = default;
  // Every entry starts absent (and therefore incorrect).
  CorrectnessMatrix(std::vector<std::string> question_ids,
                    std::vector<std::string> agent_ids, int rounds);

  // Rounds are 1-based.
  void Set(std::size_t question, std::size_t agent, int round, bool correct);
  bool correct(std::size_t question, std::size_t agent, int round) const;
  bool present(std::size_t question, std::size_t agent, int round) const;

  std::size_t questions() const { return question_ids_.size(); }
  std::size_t agents() const { return agent_ids_.size(); }
  int rounds() const { return rounds_; }
  bool empty() const { return questions() == 0 || agents() == 0 || rounds_ == 0; }
  const std::vector<std::string>& question_ids() const { return question_ids_; }
  const std::vector<std::string>& agent_ids() const { return agent_ids_; }

  // Entries with no answer.
  std::size_t missing(int round) const;

 private:
  std::size_t Index(std::size_t q, std::size_t a, int r) const;

  std::vector<std::string> question_ids_;
  std::vector<std::string> agent_ids_;
  int rounds_ = 0;
  std::vector<std::uint8_t> correct_;
  std::vector<std::uint8_t> present_;
};

// Fraction of questions where some agent in `agents` is correct at
// `round`. Throws std::invalid_argument for an empty subset or a bad index.
double Coverage(const CorrectnessMatrix& m, std::span<const std::size_t> agents,
                int round);
double Coverage(const CorrectnessMatrix& m, int round);
double Accuracy(const CorrectnessMatrix& m, std::size_t agent, int round);

struct RoundStatistics {
  int round = 1;
  double coverage = 0.0;
  // Mean of the per-agent accuracies.
  double average = 0.0;
  std::vector<double> per_agent;
  std::size_t missing = 0;
};

// Throws std::invalid_argument on an empty matrix.
std::vector<RoundStatistics> ComputeRoundStatistics(const CorrectnessMatrix& m);

enum class Category { kAllWrong, kFew, kModerate, kHigh, kAllCorrect };
inline constexpr std::size_t kCategoryCount = 5;
// "all_wrong", "few", "moderate", "high", "all_correct".
std::string_view ToString(Category c);

// For a pool of 15: 0, 1-3, 4-11, 12-14, 15. Other pool sizes keep the
// shape with k = round(n / 5): 0, 1..k, k+1..n-k-1, n-k..n-1, n.
// Throws std::out_of_range when count is outside [0, pool_size].
Category Categorize(int count, int pool_size = 15);

struct TransitionReport {
  // [question][round]
  std::vector<std::vector<Category>> sequences;
  // [round] -> questions per category.
  std::vector<std::array<int, kCategoryCount>> per_round;
  // [t] -> (from category of round t+1, to category of round t+2) -> count.
  std::vector<std::map<std::pair<Category, Category>, int>> flows;
};

// `counts[q][r]` is the number of correct agents for question q at round
// r+1. All rows must have the same length.
TransitionReport TransitionCategories(
    const std::vector<std::vector<int>>& counts, int pool_size = 15);

// Correct-agent counts from a matrix, in the layout TransitionCategories
// takes.
std::vector<std::vector<int>> CorrectCounts(const CorrectnessMatrix& m);

// coverage / mean_coverage + average / mean_average. Throws
// std::invalid_argument when a mean is not positive.
double CombinedScore(double coverage, double average, double mean_coverage,
                     double mean_average);

struct GroupScore {
  // Sorted agent indices into the matrix.
  std::vector<std::size_t> members;
  std::vector<std::string> agent_ids;
  double coverage = 0.0;
  double average = 0.0;
  double combined = 0.0;
};

struct GroupSampling {
  std::size_t group_size = 15;
  std::size_t samples = 25000;
  std::size_t top_k = 3;
  std::uint64_t seed = 0;
  int round = 1;
};

// Scores `samples` uniformly drawn groups at `round`, normalizes by the
// means over all draws and returns the top_k distinct groups by combined
// score (ties keep draw order). A mean of zero contributes a zero term.
// Throws std::invalid_argument when the pool is smaller than the group.
std::vector<GroupScore> SampleTopGroups(const CorrectnessMatrix& m,
                                        const GroupSampling& options);

// Ranks already-scored groups by combined score against their own means.
// Exposed for the invariance checks.
std::vector<GroupScore> RankGroups(std::vector<GroupScore> groups,
                                   std::size_t top_k);

enum class CostUnit { kInferences, kTokens };
std::string_view ToString(CostUnit unit);
CostUnit CostUnitFromString(std::string_view s);

// accuracy - lambda * cost. Throws std::invalid_argument for lambda < 0.
double ObjectiveReport(double accuracy, const CostLedger& ledger, double lambda,
                       CostUnit unit);
double ObjectiveReport(double accuracy, double cost, double lambda);

}  // namespace toolmix

#endif  // TOOLMIX_METRICS_H_
