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

// toolmix: run, score, report, sample-groups, replay.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toolmix/harness.h"
#include "toolmix/remote.h"

namespace {

using namespace toolmix;
using nlohmann::json;

struct RunFlags {
  std::string dataset;
  std::string preset = "tumix";
  std::string config;
  std::vector<std::string> pools;
  std::string single_agent = "CS_gs";
  std::string out;
  std::uint64_t seed = 0;
  int parallelism = 1;
  int agent_parallelism = 16;
  int repeat = 1;
  int min_rounds = 0;
  int max_rounds = 0;
  double code_limit = 0;
  double lambda = -1;
  std::string cost_unit = "inferences";
  std::string backend = "openai";
  std::string record;
  std::string tools = "local";
  std::string network = "deny";
  bool no_resume = false;
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// "scripted:PATH" -> PATH.
bool SplitSpec(const std::string& spec, const std::string& kind,
               std::string* path) {
  const std::string prefix = kind + ":";
  if (spec.rfind(prefix, 0) != 0) return false;
  *path = spec.substr(prefix.size());
  if (path->empty()) throw ConfigError("'" + spec + "' is missing a path");
  return true;
}

std::shared_ptr<ModelBackend> MakeBackend(const std::string& spec) {
  std::string path;
  if (SplitSpec(spec, "scripted", &path)) return ScriptedBackend::FromFile(path);
  if (SplitSpec(spec, "replay", &path)) {
    return std::make_shared<ReplayBackend>(path);
  }
  if (spec == "openai") {
    return std::make_shared<OpenAiCompatibleBackend>(ChatEndpointFromEnv());
  }
  throw ConfigError("unknown backend '" + spec +
                    "' (expected openai, scripted:PATH or replay:PATH)");
}

NetworkPolicy ParseNetwork(const std::string& s) {
  if (s == "deny") return NetworkPolicy::kDeny;
  if (s == "best-effort") return NetworkPolicy::kBestEffort;
  if (s == "allow") return NetworkPolicy::kAllow;
  throw ConfigError("unknown network policy '" + s + "'");
}

std::unique_ptr<ToolSuite> MakeTools(const std::string& spec,
                                     const std::string& network,
                                     int parallelism) {
  std::string path;
  if (SplitSpec(spec, "scripted", &path)) return ScriptedToolSuite::FromFile(path);
  if (spec != "local") {
    throw ConfigError("unknown tools '" + spec +
                      "' (expected local or scripted:PATH)");
  }
  SandboxOptions sandbox;
  sandbox.network = ParseNetwork(network);
  // Providers are attached only when their credentials exist; a pool that
  // needs a missing one is rejected before the first model call.
  std::shared_ptr<SearchProvider> google, llm;
  if (std::getenv("TOOLMIX_GOOGLE_API_KEY") && std::getenv("TOOLMIX_GOOGLE_CSE_ID")) {
    google = std::make_shared<GoogleSearchProvider>(GoogleSearchEndpointFromEnv());
  }
  if (std::getenv("TOOLMIX_API_KEY") && std::getenv("TOOLMIX_MODEL")) {
    ChatEndpoint endpoint = ChatEndpointFromEnv();
    if (const char* m = std::getenv("TOOLMIX_SEARCH_MODEL"); m && *m) {
      endpoint.model = m;
    }
    llm = std::make_shared<LlmSearchProvider>(
        std::make_shared<OpenAiCompatibleBackend>(endpoint));
  }
  return std::make_unique<LocalToolSuite>(CodeSandbox(sandbox),
                                          SearchProviders(google, llm),
                                          parallelism);
}

void AddRunFlags(CLI::App* app, RunFlags& f, bool replay) {
  app->add_option("--dataset", f.dataset, "NDJSON dataset")->required();
  app->add_option("--preset", f.preset, "variant preset")
      ->check(CLI::IsMember(std::vector<std::string>(kPresetNames.begin(),
                                                     kPresetNames.end())));
  app->add_option("--config", f.config, "JSON run-config overrides");
  app->add_option("--pool", f.pools,
                  "pool file; repeat for the evolved variants");
  app->add_option("--single-agent", f.single_agent,
                  "agent repeated by tumix_single");
  app->add_option("--out", f.out, "results file")->required();
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--parallelism", f.parallelism, "questions in flight")
      ->check(CLI::PositiveNumber);
  app->add_option("--agent-parallelism", f.agent_parallelism,
                  "concurrent agent calls per round")
      ->check(CLI::PositiveNumber);
  app->add_option("--repeat", f.repeat, "independent runs")
      ->check(CLI::PositiveNumber);
  app->add_option("--min-rounds", f.min_rounds, "r_min");
  app->add_option("--max-rounds", f.max_rounds, "r_max");
  app->add_option("--code-limit", f.code_limit, "code time limit, seconds");
  app->add_option("--lambda", f.lambda, "cost weight for the objective");
  app->add_option("--cost-unit", f.cost_unit, "inferences or tokens")
      ->check(CLI::IsMember({"inferences", "tokens"}));
  if (!replay) {
    app->add_option("--backend", f.backend,
                    "openai, scripted:PATH or replay:PATH");
    app->add_option("--record", f.record, "record backend traffic to PATH");
  } else {
    app->add_option("--recording", f.backend, "recording to replay")->required();
  }
  app->add_option("--tools", f.tools, "local or scripted:PATH");
  app->add_option("--network", f.network,
                  "sandbox network: deny, best-effort or allow");
  app->add_flag("--no-resume", f.no_resume, "overwrite the results file");
}

RunConfig BuildConfig(const RunFlags& f, std::uint64_t seed) {
  PresetOptions preset;
  preset.seed = seed;
  preset.single_agent = f.single_agent;
  for (const auto& p : f.pools) preset.pools.push_back(LoadPoolFile(p));
  RunConfig config = ExpandPreset(f.preset, preset);
  if (!f.pools.empty() && f.preset != "tumix_evolve" &&
      f.preset != "tumix_evolveD") {
    config.pool = preset.pools.front();
  }
  if (!f.config.empty()) ApplyConfigJson(config, ReadText(f.config));
  config.seed = seed;
  config.parallelism = f.agent_parallelism;
  if (f.min_rounds > 0) config.r_min = f.min_rounds;
  if (f.max_rounds > 0) config.r_max = f.max_rounds;
  if (f.code_limit > 0) {
    config.runtime.code_limit = Millis(static_cast<long long>(f.code_limit * 1000));
  }
  if (f.lambda >= 0) config.lambda = f.lambda;
  return config;
}

int DoRun(const RunFlags& f, bool replay) {
  const auto dataset = LoadDatasetFile(f.dataset);
  std::shared_ptr<ModelBackend> backend =
      replay ? std::make_shared<ReplayBackend>(f.backend) : MakeBackend(f.backend);
  if (!replay && !f.record.empty()) {
    backend = RecordReplayWrapper(backend, RecordMode::kRecord, f.record);
  }
  auto tools = MakeTools(f.tools, f.network, f.agent_parallelism);
  BatchOptions options;
  options.out_path = f.out;
  options.seed = f.seed;
  options.repeat = f.repeat;
  options.parallelism = f.parallelism;
  options.cost_unit = CostUnitFromString(f.cost_unit);
  options.label = f.preset;
  options.resume = !f.no_resume && !replay;
  options.config_for_seed = [&f](std::uint64_t seed) { return BuildConfig(f, seed); };
  const BatchReport report = RunBatch(dataset, *backend, *tools, options);
  for (const auto& r : report.runs) {
    std::printf("run %d seed %llu: %zu/%zu completed, %zu failed", r.run,
                static_cast<unsigned long long>(r.seed), r.completed,
                r.questions, r.failed);
    if (r.accuracy) std::printf(", accuracy %.4f", *r.accuracy);
    std::printf(", inferences %lld, tokens %lld\n",
                static_cast<long long>(r.ledger.TotalInferences()),
                static_cast<long long>(r.ledger.TotalTokens()));
  }
  if (report.runs.size() > 1 && report.mean_accuracy) {
    std::printf("mean accuracy %.4f\n", *report.mean_accuracy);
  }
  return 0;
}

struct ScoreFlags {
  std::string dataset;
  std::string results;
  std::string out;
  int run = -1;
  std::string tools = "local";
  std::string network = "deny";
  std::string judge;
  std::string adjudications;
  double code_limit = 60;
  bool no_carry_forward = false;
  // sample-groups
  std::size_t group_size = 15;
  std::size_t samples = 25000;
  std::size_t top_k = 3;
  std::uint64_t seed = 0;
  int round = 1;
};

void AddScoreFlags(CLI::App* app, ScoreFlags& f) {
  app->add_option("--dataset", f.dataset, "NDJSON dataset with answers")
      ->required();
  app->add_option("--results", f.results, "results file")->required();
  app->add_option("--run", f.run, "run to score; default the first");
  app->add_option("--tools", f.tools,
                  "local or scripted:PATH, for code answers");
  app->add_option("--network", f.network, "sandbox network policy");
  app->add_option("--code-limit", f.code_limit, "code time limit, seconds");
  app->add_flag("--no-carry-forward", f.no_carry_forward,
                "leave rounds after a stop empty");
}

ScoreReport Score(const ScoreFlags& f) {
  const auto dataset = LoadDatasetFile(f.dataset);
  const ResultsFile results = ReadResults(f.results);
  int run = f.run;
  if (run < 0 && !results.transcripts.empty()) run = results.transcripts.front().run;
  std::vector<Transcript> transcripts;
  for (const auto& r : results.transcripts) {
    if (r.run == run) transcripts.push_back(r.transcript);
  }
  auto tools = MakeTools(f.tools, f.network, 1);
  std::shared_ptr<ModelBackend> judge;
  if (!f.judge.empty()) judge = MakeBackend(f.judge);
  ScoreOptions options;
  options.run = run;
  options.code_limit = Millis(static_cast<long long>(f.code_limit * 1000));
  options.carry_forward = !f.no_carry_forward;
  options.judge = judge.get();
  options.adjudications_path = f.adjudications;
  if (judge && options.adjudications_path.empty()) {
    options.adjudications_path = f.results + ".adjudications.ndjson";
  }
  return ScoreResults(transcripts, dataset, tools.get(), options);
}

int DoScore(const ScoreFlags& f) {
  const ScoreReport report = Score(f);
  json out = {{"accuracy", report.accuracy},
              {"scored", report.questions.size()},
              {"excluded", report.excluded},
              {"adjudicated", report.adjudications.size()}};
  json questions = json::array();
  for (const auto& q : report.questions) {
    questions.push_back({{"question_id", q.question_id},
                         {"final", q.final ? json(*q.final) : json(nullptr)},
                         {"ground_truth", q.ground_truth},
                         {"correct", q.correct},
                         {"adjudicated", q.adjudicated},
                         {"stop_round", q.stop_round}});
  }
  out["questions"] = std::move(questions);
  std::printf("accuracy %.4f over %zu questions", report.accuracy,
              report.questions.size());
  if (!report.excluded.empty()) {
    std::printf(" (%zu excluded: no ground truth)", report.excluded.size());
  }
  std::printf("\n%s", AgentRoundsTsv(report).c_str());
  if (!f.out.empty()) {
    std::ofstream file(f.out, std::ios::trunc);
    if (!file) throw ConfigError("cannot write " + f.out);
    file << out.dump(2) << '\n';
  }
  return 0;
}

int DoReport(const ScoreFlags& f) {
  const ScoreReport report = Score(f);
  EmitReports(report, f.out);
  std::printf("wrote agent_rounds.tsv, transitions.tsv, scaling.tsv, matrix.tsv to %s\n",
              f.out.c_str());
  return 0;
}

int DoSampleGroups(const ScoreFlags& f) {
  const ScoreReport report = Score(f);
  GroupSampling options;
  options.group_size = f.group_size;
  options.samples = f.samples;
  options.top_k = f.top_k;
  options.seed = f.seed;
  options.round = f.round;
  const auto groups = SampleTopGroups(report.matrix, options);
  std::ostringstream tsv;
  tsv << "rank\tcoverage\taverage\tcombined\tagents\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::string ids;
    for (const auto& id : groups[i].agent_ids) ids += (ids.empty() ? "" : ",") + id;
    char line[128];
    std::snprintf(line, sizeof(line), "%zu\t%.6f\t%.6f\t%.6f\t", i + 1,
                  groups[i].coverage, groups[i].average, groups[i].combined);
    tsv << line << ids << '\n';
  }
  if (f.out.empty()) {
    std::cout << tsv.str();
  } else {
    std::ofstream file(f.out, std::ios::trunc);
    if (!file) throw ConfigError("cannot write " + f.out);
    file << tsv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent tool-augmented test-time scaling engine"};
  app.require_subcommand(1);

  RunFlags run_flags, replay_flags;
  auto* run = app.add_subcommand("run", "run a dataset through a preset");
  AddRunFlags(run, run_flags, false);
  auto* replay = app.add_subcommand("replay", "rerun a batch against a recording");
  AddRunFlags(replay, replay_flags, true);

  ScoreFlags score_flags, report_flags, groups_flags;
  auto* score = app.add_subcommand("score", "score a results file");
  AddScoreFlags(score, score_flags);
  score->add_option("--out", score_flags.out, "score JSON");
  score->add_option("--judge-backend", score_flags.judge,
                    "backend adjudicating mismatches");
  score->add_option("--adjudications", score_flags.adjudications,
                    "adjudication log (NDJSON)");
  auto* report = app.add_subcommand("report", "write TSV reports");
  AddScoreFlags(report, report_flags);
  report->add_option("--out", report_flags.out, "report directory")->required();
  auto* groups = app.add_subcommand("sample-groups", "rank sampled agent groups");
  AddScoreFlags(groups, groups_flags);
  groups->add_option("--out", groups_flags.out, "TSV output; default stdout");
  groups->add_option("--group-size", groups_flags.group_size, "agents per group");
  groups->add_option("--samples", groups_flags.samples, "groups drawn");
  groups->add_option("--top-k", groups_flags.top_k, "groups returned");
  groups->add_option("--seed", groups_flags.seed, "sampling seed");
  groups->add_option("--round", groups_flags.round, "round scored");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return DoRun(run_flags, false);
    if (*replay) return DoRun(replay_flags, true);
    if (*score) return DoScore(score_flags);
    if (*report) return DoReport(report_flags);
    if (*groups) return DoSampleGroups(groups_flags);
  } catch (const ReplayError& e) {
    std::fprintf(stderr, "replay failed: %s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
