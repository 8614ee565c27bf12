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

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "toolmix/runtime.h"

namespace toolmix {
namespace {

using nlohmann::json;

constexpr std::string_view kScorerId = "scorer";

constexpr std::string_view kEquivalencePrompt =
    "Task: Decide whether a candidate answer to the question below is "
    "equivalent to the reference answer. Differences in formatting or in "
    "the notation of an equivalent value do not matter; any difference in "
    "substance does.\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Reference answer:\n"
    "{reference}\n"
    "\n"
    "Candidate answer:\n"
    "{candidate}\n"
    "\n"
    "Explain briefly, then conclude with <<<YES>>> if the answers are "
    "equivalent or <<<NO>>> if they are not.";

std::string ReadFile(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string ColumnId(const AgentTrace& trace) {
  return trace.sample == 0 ? trace.agent_id
                           : trace.agent_id + "#" + std::to_string(trace.sample);
}

CostLedger Minus(CostLedger a, const CostLedger& b) {
  a.agent_inferences -= b.agent_inferences;
  a.agent_generations -= b.agent_generations;
  a.judge_inferences -= b.judge_inferences;
  a.selector_inferences -= b.selector_inferences;
  a.input_tokens -= b.input_tokens;
  a.output_tokens -= b.output_tokens;
  a.tool_calls -= b.tool_calls;
  return a;
}

std::string Format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

json Versioned(std::string_view type) {
  return {{"schema_version", kResultsSchemaVersion}, {"type", type}};
}

template <typename T>
T Get(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<Question> LoadDataset(std::string_view ndjson) {
  std::vector<Question> out;
  std::set<std::string> ids;
  std::istringstream in{std::string(ndjson)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw ConfigError(where + "expected an object");
    Question q;
    try {
      q.id = j.at("id").is_string() ? j["id"].get<std::string>()
                                    : j["id"].dump();
      q.body = j.at("question").get<std::string>();
      if (j.contains("kind")) {
        q.kind = AnswerKindFromString(j["kind"].get<std::string>());
      }
      if (j.contains("answer") && !j["answer"].is_null()) {
        q.ground_truth = j["answer"].is_string() ? j["answer"].get<std::string>()
                                                 : j["answer"].dump();
      }
    } catch (const json::exception& e) {
      throw ConfigError(where + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    if (q.id.empty()) throw ConfigError(where + "empty id");
    if (!ids.insert(q.id).second) {
      throw ConfigError(where + "duplicate id '" + q.id + "'");
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<Question> LoadDatasetFile(const std::string& path) {
  return LoadDataset(ReadFile(path, "dataset"));
}

RunConfig ExpandPreset(std::string_view name, const PresetOptions& options) {
  RunConfig config;
  config.pool = DefaultPool();
  config.seed = options.seed;
  auto with_samples = [](AgentSpec spec, int samples) {
    spec.samples_per_round = samples;
    return spec;
  };
  if (name == "tumix") {
  } else if (name == "tumix_rule") {
    config.termination = TerminationPolicy::kRuleStabilization;
  } else if (name == "tumix_fixed" || name == "tumix_fixedR") {
    config.termination = TerminationPolicy::kFixed;
    config.r_max = 5;
    if (name == "tumix_fixedR") config.selection = SelectionStrategy::kRandom;
  } else if (name == "tumix_single") {
    const AgentPool all = DefaultPool();
    config.pool = AgentPool({with_samples(all.Find(options.single_agent), 15)});
  } else if (name == "tumix_three") {
    const AgentPool all = DefaultPool();
    config.pool = AgentPool({with_samples(all.Find("CS_gs"), 5),
                             with_samples(all.Find("C+"), 5),
                             with_samples(all.Find("CSG_gs"), 5)});
  } else if (name == "tumix_evolve") {
    if (options.pools.empty()) {
      throw ConfigError("tumix_evolve needs an evolved pool file");
    }
    config.pool = options.pools.front();
  } else if (name == "tumix_evolveD") {
    if (options.pools.empty()) {
      throw ConfigError("tumix_evolveD needs at least one evolved pool file");
    }
    config.pool = options.pools.front();
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, options.pools.size() - 1);
    for (int r = 1; r <= config.r_max; ++r) {
      config.pool_schedule.push_back(options.pools[pick(rng)]);
    }
  } else if (name == "tumix_plus") {
    config.samples_schedule = {4, 4};
    config.sample_temperatures = {0.25, 0.5, 0.75, 1.0};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return config;
}

void ApplyConfigJson(RunConfig& config, std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "schema_version", "r_min", "r_max", "termination", "selection", "seed",
      "lambda", "samples_schedule", "sample_temperatures", "parallelism",
      "code_limit_ms", "judge_temperature", "context_cap", "nudge_cap",
      "transport_retries", "retry_backoff_ms"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  if (doc.contains("schema_version") && Get<int>(doc, "schema_version") != 1) {
    throw ConfigError("config: schema_version must be 1");
  }
  if (doc.contains("r_min")) config.r_min = Get<int>(doc, "r_min");
  if (doc.contains("r_max")) config.r_max = Get<int>(doc, "r_max");
  if (doc.contains("termination")) {
    config.termination =
        TerminationPolicyFromString(Get<std::string>(doc, "termination"));
  }
  if (doc.contains("selection")) {
    config.selection =
        SelectionStrategyFromString(Get<std::string>(doc, "selection"));
  }
  if (doc.contains("seed")) config.seed = Get<std::uint64_t>(doc, "seed");
  if (doc.contains("lambda")) config.lambda = Get<double>(doc, "lambda");
  if (doc.contains("samples_schedule")) {
    config.samples_schedule = Get<std::vector<int>>(doc, "samples_schedule");
  }
  if (doc.contains("sample_temperatures")) {
    config.sample_temperatures =
        Get<std::vector<double>>(doc, "sample_temperatures");
  }
  if (doc.contains("parallelism")) {
    config.parallelism = Get<int>(doc, "parallelism");
  }
  if (doc.contains("code_limit_ms")) {
    config.runtime.code_limit = Millis(Get<std::int64_t>(doc, "code_limit_ms"));
  }
  if (doc.contains("judge_temperature")) {
    config.judge_temperature = Get<double>(doc, "judge_temperature");
  }
  if (doc.contains("context_cap")) {
    config.runtime.context_cap = Get<std::size_t>(doc, "context_cap");
  }
  if (doc.contains("nudge_cap")) config.runtime.nudge_cap = Get<int>(doc, "nudge_cap");
  if (doc.contains("transport_retries")) {
    config.runtime.transport_retries = Get<int>(doc, "transport_retries");
  }
  if (doc.contains("retry_backoff_ms")) {
    config.runtime.retry_backoff =
        Millis(Get<std::int64_t>(doc, "retry_backoff_ms"));
  }
}

json ConfigToJson(const RunConfig& config) {
  json pools = json::array();
  for (const auto& p : config.pool_schedule) {
    json ids = json::array();
    for (const auto& s : p.specs()) ids.push_back(s.agent_id);
    pools.push_back(std::move(ids));
  }
  json agents = json::array();
  for (const auto& s : config.pool.specs()) {
    agents.push_back({{"agent_id", s.agent_id},
                      {"samples_per_round", s.samples_per_round}});
  }
  return {{"r_min", config.r_min},
          {"r_max", config.r_max},
          {"termination", ToString(config.termination)},
          {"selection", ToString(config.selection)},
          {"seed", config.seed},
          {"lambda", config.lambda},
          {"samples_schedule", config.samples_schedule},
          {"sample_temperatures", config.sample_temperatures},
          {"code_limit_ms", config.runtime.code_limit.count()},
          {"agents", std::move(agents)},
          {"pool_schedule", std::move(pools)}};
}

json ToJson(const RunSummary& s, const RunConfig& config, CostUnit unit) {
  json j = Versioned("summary");
  j["run"] = s.run;
  j["seed"] = s.seed;
  j["questions"] = s.questions;
  j["completed"] = s.completed;
  j["failed"] = s.failed;
  j["scored"] = s.scored;
  j["accuracy"] = s.accuracy ? json(*s.accuracy) : json(nullptr);
  j["ledger"] = ToJson(s.ledger);
  j["cost_unit"] = ToString(unit);
  j["lambda"] = config.lambda;
  j["objective"] = s.objective ? json(*s.objective) : json(nullptr);
  j["config"] = ConfigToJson(config);
  return j;
}

bool AnswersMatch(const CanonicalAnswer& answer, const Question& question) {
  if (!question.ground_truth) return false;
  return Canonicalize(*question.ground_truth, question.kind).value == answer.value;
}

ResultsFile ReadResults(const std::string& path) {
  const std::string text = ReadFile(path, "results file");
  ResultsFile out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    // A line without its newline is a write cut short by a crash.
    if (nl == std::string::npos) break;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.value("schema_version", 0) != kResultsSchemaVersion) {
        throw ConfigError("unsupported schema_version");
      }
      const std::string type = j.at("type").get<std::string>();
      if (type == "transcript") {
        out.transcripts.push_back({j.at("run").get<int>(),
                                   j.at("seed").get<std::uint64_t>(),
                                   TranscriptFromJson(j)});
      } else if (type == "failure") {
        out.failures.push_back(j);
      } else if (type == "summary" || type == "mean") {
        out.summaries.push_back(j);
      }
    } catch (const std::exception& e) {
      throw ConfigError("results line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

BatchReport RunBatch(const std::vector<Question>& dataset, ModelBackend& backend,
                     ToolSuite& tools, const BatchOptions& options) {
  if (!options.config_for_seed) throw ConfigError("batch has no run config");
  if (options.repeat < 1) throw ConfigError("repeat must be >= 1");
  if (options.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (options.out_path.empty()) throw ConfigError("batch has no output path");
  std::vector<RunConfig> configs;
  for (int k = 0; k < options.repeat; ++k) {
    configs.push_back(options.config_for_seed(options.seed + k));
    ValidateConfig(configs.back(), &tools);
  }
  {
    std::set<std::string> ids;
    for (const auto& q : dataset) {
      if (!ids.insert(q.id).second) {
        throw ConfigError("duplicate question id '" + q.id + "'");
      }
    }
  }

  // Resume: keep complete lines, drop a torn tail.
  std::map<int, std::map<std::string, Transcript>> done;
  std::set<int> summarized;
  bool mean_written = false;
  namespace fs = std::filesystem;
  if (options.resume && fs::exists(options.out_path)) {
    const ResultsFile prior = ReadResults(options.out_path);
    for (const auto& r : prior.transcripts) {
      done[r.run][r.transcript.question_id] = r.transcript;
    }
    for (const auto& s : prior.summaries) {
      if (s.value("type", "") == "summary") summarized.insert(s.value("run", -1));
      if (s.value("type", "") == "mean") mean_written = true;
    }
    const std::string text = ReadFile(options.out_path, "results file");
    const std::size_t keep = text.rfind('\n');
    fs::resize_file(options.out_path, keep == std::string::npos ? 0 : keep + 1);
  } else {
    std::ofstream truncate(options.out_path, std::ios::trunc);
    if (!truncate) throw ConfigError("cannot write results file " + options.out_path);
  }
  std::ofstream out(options.out_path, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot write results file " + options.out_path);

  BatchReport report;
  for (int k = 0; k < options.repeat; ++k) {
    const RunConfig& config = configs[k];
    const std::uint64_t seed = options.seed + k;
    auto& finished = done[k];

    std::vector<std::size_t> pending;
    if (!summarized.count(k)) {
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (!finished.count(dataset[i].id)) pending.push_back(i);
      }
    }

    // Slots are flushed strictly in dataset order.
    std::vector<std::optional<std::string>> lines(pending.size());
    std::vector<std::optional<Transcript>> transcripts(pending.size());
    std::size_t flushed = 0;
    std::size_t failed = 0;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr abort;

    auto worker = [&] {
      for (std::size_t i = next++; i < pending.size(); i = next++) {
        const Question& q = dataset[pending[i]];
        json line;
        std::optional<Transcript> transcript;
        try {
          transcript = RunQuestion(q, config, backend, tools);
          line = Versioned("transcript");
          line["run"] = k;
          line["seed"] = seed;
          line.update(ToJson(*transcript));
        } catch (const ReplayError&) {
          std::lock_guard lock(mu);
          if (!abort) abort = std::current_exception();
          next = pending.size();
          return;
        } catch (const std::exception& e) {
          line = Versioned("failure");
          line["run"] = k;
          line["seed"] = seed;
          line["question_id"] = q.id;
          line["error"] = e.what();
        }
        std::lock_guard lock(mu);
        if (!transcript) ++failed;
        transcripts[i] = std::move(transcript);
        lines[i] = line.dump();
        while (flushed < lines.size() && lines[flushed]) {
          out << *lines[flushed] << '\n';
          lines[flushed].reset();
          ++flushed;
        }
        out.flush();
      }
    };
    const std::size_t workers = std::min<std::size_t>(
        pending.size(), static_cast<std::size_t>(options.parallelism));
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
    }
    if (abort) std::rethrow_exception(abort);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (transcripts[i]) finished[dataset[pending[i]].id] = std::move(*transcripts[i]);
    }

    RunSummary summary;
    summary.run = k;
    summary.seed = seed;
    summary.questions = dataset.size();
    summary.failed = failed;
    std::size_t correct = 0;
    for (const auto& q : dataset) {
      auto it = finished.find(q.id);
      if (it == finished.end()) continue;
      ++summary.completed;
      summary.ledger += it->second.ledger;
      if (q.ground_truth) {
        ++summary.scored;
        if (it->second.final && AnswersMatch(*it->second.final, q)) ++correct;
      }
    }
    if (summary.scored > 0) {
      summary.accuracy =
          static_cast<double>(correct) / static_cast<double>(summary.scored);
    }
    if (summary.accuracy && summary.completed > 0) {
      const double n = static_cast<double>(summary.completed);
      const double cost =
          options.cost_unit == CostUnit::kTokens
              ? static_cast<double>(summary.ledger.TotalTokens()) / n
              : static_cast<double>(summary.ledger.TotalInferences()) / n;
      summary.objective = ObjectiveReport(*summary.accuracy, cost, config.lambda);
    }
    if (!summarized.count(k)) {
      json line = ToJson(summary, config, options.cost_unit);
      if (!options.label.empty()) line["label"] = options.label;
      out << line.dump() << '\n';
      out.flush();
    }
    report.runs.push_back(std::move(summary));
  }

  std::vector<double> accuracies;
  for (const auto& r : report.runs) {
    if (r.accuracy) accuracies.push_back(*r.accuracy);
  }
  if (!accuracies.empty()) {
    double sum = 0;
    for (double a : accuracies) sum += a;
    report.mean_accuracy = sum / static_cast<double>(accuracies.size());
  }
  if (options.repeat > 1 && !mean_written) {
    json line = Versioned("mean");
    line["runs"] = options.repeat;
    line["accuracy"] =
        report.mean_accuracy ? json(*report.mean_accuracy) : json(nullptr);
    out << line.dump() << '\n';
    out.flush();
  }
  return report;
}

ScoreReport ScoreResults(const std::vector<Transcript>& transcripts,
                         const std::vector<Question>& dataset, ToolSuite* tools,
                         const ScoreOptions& options) {
  std::map<std::string, const Question*> by_id;
  for (const auto& q : dataset) by_id[q.id] = &q;
  for (const auto& t : transcripts) {
    if (!by_id.count(t.question_id)) {
      throw ConfigError("result '" + t.question_id + "' is not in the dataset");
    }
  }

  ScoreReport report;
  std::vector<std::string> columns;
  std::map<std::string, std::size_t> column_index;
  int rounds = 0;
  std::vector<Transcript> scored;
  for (const auto& t : transcripts) {
    if (!by_id.at(t.question_id)->ground_truth) {
      report.excluded.push_back(t.question_id);
      continue;
    }
    scored.push_back(t);
    rounds = std::max(rounds, static_cast<int>(t.rounds.size()));
    for (const auto& r : t.rounds) {
      for (const auto& trace : r.traces) {
        const std::string id = ColumnId(trace);
        if (column_index.try_emplace(id, columns.size()).second) {
          columns.push_back(id);
        }
      }
    }
  }

  // Adjudications already on disk are reused, so rescoring is stable.
  std::map<std::pair<std::string, std::string>, Adjudication> cache;
  if (!options.adjudications_path.empty() &&
      std::filesystem::exists(options.adjudications_path)) {
    std::ifstream in(options.adjudications_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        Adjudication a{j.at("question_id").get<std::string>(),
                       j.at("answer").get<std::string>(),
                       j.at("ground_truth").get<std::string>(),
                       j.at("equivalent").get<bool>(),
                       j.value("response", "")};
        cache[{a.question_id, a.answer}] = a;
      } catch (const json::exception&) {
        // A torn last line from an interrupted run; it is redone.
      }
    }
  }
  std::ofstream adjudication_log;
  if (options.judge && !options.adjudications_path.empty()) {
    adjudication_log.open(options.adjudications_path, std::ios::app);
  }

  std::vector<std::string> question_ids;
  for (const auto& t : scored) question_ids.push_back(t.question_id);
  report.matrix = CorrectnessMatrix(question_ids, columns, rounds);

  auto exact = [](const std::optional<CanonicalAnswer>& a, const Question& q) {
    return a && AnswersMatch(*a, q);
  };
  std::size_t correct_finals = 0;
  for (std::size_t qi = 0; qi < scored.size(); ++qi) {
    Transcript& t = scored[qi];
    const Question& q = *by_id.at(t.question_id);

    bool resolved_last_round = false;
    if (tools) {
      for (auto& round : t.rounds) {
        for (std::size_t i = 0; i < round.traces.size(); ++i) {
          AgentTrace& trace = round.traces[i];
          if (trace.answer_mode != AnswerMode::kCode || trace.final.answer ||
              trace.answer_execution || trace.error) {
            continue;
          }
          ExecutionResult execution;
          trace.final.answer = AnswerFromCodeResponse(
              trace.final.raw_response, *tools, options.code_limit, q.kind,
              &execution);
          if (ExtractCodeBlock(trace.final.raw_response)) {
            trace.answer_execution = std::move(execution);
          }
          round.answers[i] = trace.final;
          if (&round == &t.rounds.back()) resolved_last_round = true;
        }
      }
    }
    if (resolved_last_round && !t.final && !t.rounds.empty()) {
      t.final = MajorityVote(t.rounds.back().answers);
    }

    auto cached_equivalent = [&](const std::optional<CanonicalAnswer>& a) {
      if (!a) return false;
      if (exact(a, q)) return true;
      auto it = cache.find({q.id, a->value});
      return it != cache.end() && it->second.equivalent;
    };

    QuestionScore score;
    score.question_id = q.id;
    score.ground_truth = *q.ground_truth;
    score.stop_round = t.stop_round;
    if (t.final) score.final = t.final->value;
    score.correct = exact(t.final, q);
    if (!score.correct && t.final) {
      auto it = cache.find({q.id, t.final->value});
      if (it != cache.end()) {
        score.correct = it->second.equivalent;
        score.adjudicated = true;
      } else if (options.judge) {
        const std::pair<std::string_view, std::string_view> values[] = {
            {"question", q.body},
            {"reference", *q.ground_truth},
            {"candidate", t.final->value}};
        GenerationRequest request;
        request.context = FillTemplate(kEquivalencePrompt, values);
        request.question_id = q.id;
        request.agent_id = std::string(kScorerId);
        request.round = 0;
        request.purpose = Purpose::kJudge;
        const GenerationResponse response = options.judge->Generate(request);
        const auto verdict = ExtractFinalAnswer(response.text);
        std::string v = verdict ? verdict->value : "";
        std::transform(v.begin(), v.end(), v.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        Adjudication a{q.id, t.final->value, *q.ground_truth, v == "yes",
                       response.text};
        if (adjudication_log.is_open()) {
          adjudication_log << json{{"question_id", a.question_id},
                                   {"answer", a.answer},
                                   {"ground_truth", a.ground_truth},
                                   {"equivalent", a.equivalent},
                                   {"response", a.response}}
                                  .dump()
                           << '\n';
          adjudication_log.flush();
        }
        cache[{a.question_id, a.answer}] = a;
        report.adjudications.push_back(a);
        score.correct = a.equivalent;
        score.adjudicated = true;
      }
    }
    correct_finals += score.correct;

    CostLedger rounds_total;
    for (const auto& round : t.rounds) {
      score.round_ledgers.push_back(round.ledger);
      rounds_total += round.ledger;
    }
    if (!score.round_ledgers.empty()) {
      score.round_ledgers.back() += Minus(t.ledger, rounds_total);
    }

    for (int r = 1; r <= rounds; ++r) {
      int source = r;
      if (r > static_cast<int>(t.rounds.size())) {
        if (!options.carry_forward || t.rounds.empty()) {
          score.round_majority_correct.push_back(false);
          continue;
        }
        source = static_cast<int>(t.rounds.size());
      }
      const RoundRecord& round = t.rounds[source - 1];
      for (const auto& trace : round.traces) {
        report.matrix.Set(qi, column_index.at(ColumnId(trace)), r,
                          cached_equivalent(trace.final.answer));
      }
      score.round_majority_correct.push_back(
          cached_equivalent(MajorityVote(round.answers)));
    }
    report.questions.push_back(std::move(score));
  }
  report.accuracy = scored.empty() ? 0.0
                                   : static_cast<double>(correct_finals) /
                                         static_cast<double>(scored.size());
  return report;
}

std::string AgentRoundsTsv(const ScoreReport& report) {
  const CorrectnessMatrix& m = report.matrix;
  std::ostringstream out;
  out << "row";
  for (int r = 1; r <= m.rounds(); ++r) out << "\tround_" << r;
  out << '\n';
  if (m.empty()) return out.str();
  const auto stats = ComputeRoundStatistics(m);
  out << "Coverage";
  for (const auto& s : stats) out << '\t' << Format("%.2f", 100 * s.coverage);
  out << "\nAverage";
  for (const auto& s : stats) out << '\t' << Format("%.2f", 100 * s.average);
  out << '\n';
  for (std::size_t a = 0; a < m.agents(); ++a) {
    out << m.agent_ids()[a];
    for (const auto& s : stats) out << '\t' << Format("%.2f", 100 * s.per_agent[a]);
    out << '\n';
  }
  return out.str();
}

std::string TransitionsTsv(const ScoreReport& report) {
  std::ostringstream out;
  out << "from_round\tto_round\tfrom\tto\tcount\n";
  const CorrectnessMatrix& m = report.matrix;
  if (m.empty()) return out.str();
  const auto transitions =
      TransitionCategories(CorrectCounts(m), static_cast<int>(m.agents()));
  for (std::size_t t = 0; t < transitions.flows.size(); ++t) {
    for (const auto& [edge, count] : transitions.flows[t]) {
      out << t + 1 << '\t' << t + 2 << '\t' << ToString(edge.first) << '\t'
          << ToString(edge.second) << '\t' << count << '\n';
    }
  }
  return out.str();
}

std::string ScalingTsv(const ScoreReport& report) {
  std::ostringstream out;
  out << "round\tcumulative_inferences\tcumulative_tokens\taccuracy\n";
  const auto& qs = report.questions;
  if (qs.empty()) return out.str();
  const double n = static_cast<double>(qs.size());
  for (int r = 1; r <= report.matrix.rounds(); ++r) {
    double inferences = 0, tokens = 0, correct = 0;
    for (const auto& q : qs) {
      const std::size_t upto =
          std::min<std::size_t>(static_cast<std::size_t>(r), q.round_ledgers.size());
      for (std::size_t i = 0; i < upto; ++i) {
        inferences += static_cast<double>(q.round_ledgers[i].TotalInferences());
        tokens += static_cast<double>(q.round_ledgers[i].TotalTokens());
      }
      correct += q.round_majority_correct[static_cast<std::size_t>(r - 1)];
    }
    out << r << '\t' << Format("%.4f", inferences / n) << '\t'
        << Format("%.4f", tokens / n) << '\t' << Format("%.4f", correct / n)
        << '\n';
  }
  return out.str();
}

std::string MatrixTsv(const ScoreReport& report) {
  std::ostringstream out;
  out << "question_id\tagent_id\tround\tcorrect\tpresent\n";
  const CorrectnessMatrix& m = report.matrix;
  for (std::size_t q = 0; q < m.questions(); ++q) {
    for (std::size_t a = 0; a < m.agents(); ++a) {
      for (int r = 1; r <= m.rounds(); ++r) {
        out << m.question_ids()[q] << '\t' << m.agent_ids()[a] << '\t' << r
            << '\t' << m.correct(q, a, r) << '\t' << m.present(q, a, r) << '\n';
      }
    }
  }
  return out.str();
}

void EmitReports(const ScoreReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::pair<const char*, std::string> files[] = {
      {"agent_rounds.tsv", AgentRoundsTsv(report)},
      {"transitions.tsv", TransitionsTsv(report)},
      {"scaling.tsv", ScalingTsv(report)},
      {"matrix.tsv", MatrixTsv(report)}};
  for (const auto& [name, body] : files) {
    const std::string path = (fs::path(out_dir) / name).string();
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw ConfigError("cannot write report " + path);
    out << body;
  }
}

}  // namespace toolmix
