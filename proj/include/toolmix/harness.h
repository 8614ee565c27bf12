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

// Batch plumbing: datasets, variant presets, the results file, scoring and
// report files.

#ifndef TOOLMIX_HARNESS_H_
#define TOOLMIX_HARNESS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolmix/agents.h"
#include "toolmix/backend.h"
#include "toolmix/core.h"
#include "toolmix/metrics.h"
#include "toolmix/orchestrator.h"
#include "toolmix/tools.h"

namespace toolmix {

inline constexpr int kResultsSchemaVersion = 1;

// One JSON object per line:
//   {"id": "q1", "question": "...", "kind": "numeric", "answer": "42"}
// "kind" defaults to free_form; "answer" is optional. Errors name the line.
std::vector<Question> LoadDataset(std::string_view ndjson);
std::vector<Question> LoadDatasetFile(const std::string& path);

inline constexpr std::array<std::string_view, 9> kPresetNames = {
    "tumix",        "tumix_rule",   "tumix_fixed",
    "tumix_fixedR", "tumix_single", "tumix_three",
    "tumix_evolve", "tumix_evolveD", "tumix_plus"};

struct PresetOptions {
  // tumix_evolve uses pools[0] in place of the built-in pool; tumix_evolveD
  // draws each round's pool from all of them.
  std::vector<AgentPool> pools;
  std::uint64_t seed = 0;
  // Agent repeated by tumix_single.
  std::string single_agent = "CS_gs";
};

// Pure: the same name and options always give the same config. Throws
// ConfigError for unknown names or missing pools.
RunConfig ExpandPreset(std::string_view name, const PresetOptions& options = {});

// Overrides from a config document:
//   {"schema_version": 1, "r_min": 2, "r_max": 6,
//    "termination": "llm_judge", "selection": "majority", "seed": 0,
//    "lambda": 0.0, "samples_schedule": [4, 4],
//    "sample_temperatures": [0.25, 0.5, 0.75, 1.0], "parallelism": 16,
//    "code_limit_ms": 60000, "judge_temperature": 0.0,
//    "context_cap": 65536, "nudge_cap": 2, "transport_retries": 2,
//    "retry_backoff_ms": 200}
// Every field is optional; unknown fields are rejected.
void ApplyConfigJson(RunConfig& config, std::string_view document);
nlohmann::json ConfigToJson(const RunConfig& config);

nlohmann::json ToJson(const CanonicalAnswer& answer);
nlohmann::json ToJson(const CostLedger& ledger);
CostLedger LedgerFromJson(const nlohmann::json& j);
// Everything except wall-clock timings, so identical runs serialize
// identically.
nlohmann::json ToJson(const Transcript& transcript);
Transcript TranscriptFromJson(const nlohmann::json& j);

struct RunSummary {
  int run = 0;
  std::uint64_t seed = 0;
  std::size_t questions = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  // Completed questions that carry a ground truth.
  std::size_t scored = 0;
  std::optional<double> accuracy;
  CostLedger ledger;
  // Objective on the per-question mean cost.
  std::optional<double> objective;
};

nlohmann::json ToJson(const RunSummary& summary, const RunConfig& config,
                      CostUnit unit);

struct BatchOptions {
  std::string out_path;
  std::uint64_t seed = 0;
  int repeat = 1;
  // Questions in flight.
  int parallelism = 1;
  CostUnit cost_unit = CostUnit::kInferences;
  // Recorded in summaries.
  std::string label;
  // Skip (run, question) pairs already in the results file.
  bool resume = true;
  // Run k uses config_for_seed(seed + k).
  std::function<RunConfig(std::uint64_t)> config_for_seed;
};

struct BatchReport {
  std::vector<RunSummary> runs;
  std::optional<double> mean_accuracy;
};

// Results file lines, all with "schema_version":
//   {"type": "transcript", "run", "seed", ...transcript}
//   {"type": "failure", "run", "seed", "question_id", "error"}
//   {"type": "summary", "run", "seed", ...}
//   {"type": "mean", "runs", "accuracy"}
// Transcripts are written in dataset order as soon as every earlier
// question is done. An invalid config throws ConfigError before any model
// call. Per-question failures are recorded and the batch goes on, except
// replay errors, which abort.
BatchReport RunBatch(const std::vector<Question>& dataset, ModelBackend& backend,
                     ToolSuite& tools, const BatchOptions& options);

struct ResultRecord {
  int run = 0;
  std::uint64_t seed = 0;
  Transcript transcript;
};

struct ResultsFile {
  std::vector<ResultRecord> transcripts;
  std::vector<nlohmann::json> failures;
  std::vector<nlohmann::json> summaries;
};

// Ignores a trailing partial line left by a crash.
ResultsFile ReadResults(const std::string& path);

bool AnswersMatch(const CanonicalAnswer& answer, const Question& question);

struct QuestionScore {
  std::string question_id;
  std::optional<std::string> final;
  std::string ground_truth;
  bool correct = false;
  bool adjudicated = false;
  int stop_round = 0;
  // Majority of round r correct, for r = 1..matrix rounds, holding the
  // last round's answers after the run stopped.
  std::vector<bool> round_majority_correct;
  // Per-round costs including judge calls; selector cost is in the last.
  std::vector<CostLedger> round_ledgers;
};

struct Adjudication {
  std::string question_id;
  std::string answer;
  std::string ground_truth;
  bool equivalent = false;
  std::string response;
};

struct ScoreOptions {
  // Run to score; -1 takes the first run in the file.
  int run = -1;
  Millis code_limit = kDefaultCodeLimit;
  // Fill the rounds after a question stopped with its last round.
  bool carry_forward = true;
  // Adjudicates mismatches when set.
  ModelBackend* judge = nullptr;
  // Read before and appended after adjudication, NDJSON.
  std::string adjudications_path;
};

struct ScoreReport {
  CorrectnessMatrix matrix;
  std::vector<QuestionScore> questions;
  // No ground truth.
  std::vector<std::string> excluded;
  std::vector<Adjudication> adjudications;
  double accuracy = 0.0;
};

// Exact canonical match. Code-answer traces whose code never ran are
// executed with `tools` first. Throws ConfigError when a result id is not
// in the dataset.
ScoreReport ScoreResults(const std::vector<Transcript>& transcripts,
                         const std::vector<Question>& dataset, ToolSuite* tools,
                         const ScoreOptions& options);

// Tab-separated files in `out_dir`:
//   agent_rounds.tsv  row, round_1..round_R (percent); Coverage, Average,
//                     then one row per agent
//   transitions.tsv   from_round, to_round, from, to, count
//   scaling.tsv       round, cumulative_inferences, cumulative_tokens,
//                     accuracy (per-question means of cost)
//   matrix.tsv        question_id, agent_id, round, correct, present
void EmitReports(const ScoreReport& report, const std::string& out_dir);

std::string AgentRoundsTsv(const ScoreReport& report);
std::string TransitionsTsv(const ScoreReport& report);
std::string ScalingTsv(const ScoreReport& report);
std::string MatrixTsv(const ScoreReport& report);

}  // namespace toolmix

#endif  // TOOLMIX_HARNESS_H_
