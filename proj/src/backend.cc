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

#include "toolmix/backend.h"

#include <sstream>

#include "json.hpp"

namespace toolmix {
namespace {

using nlohmann::json;

int Specificity(const ScriptedBackend::Entry& e) {
  return e.question_id.has_value() + e.agent_id.has_value() +
         e.round.has_value() + e.sample.has_value() + e.ordinal.has_value();
}

}  // namespace

std::string_view ToString(Purpose purpose) {
  switch (purpose) {
    case Purpose::kAgent:
      return "agent";
    case Purpose::kJudge:
      return "judge";
    case Purpose::kSelector:
      return "selector";
  }
  return "agent";
}

Purpose PurposeFromString(std::string_view s) {
  if (s == "agent") return Purpose::kAgent;
  if (s == "judge") return Purpose::kJudge;
  if (s == "selector") return Purpose::kSelector;
  throw ConfigError("unknown purpose: " + std::string(s));
}

std::string RequestKey::Describe() const {
  return "(question=" + question_id + ", agent=" + agent_id +
         ", round=" + std::to_string(round) +
         ", sample=" + std::to_string(sample) +
         ", purpose=" + std::string(ToString(purpose)) + ")";
}

RequestKey KeyOf(const GenerationRequest& request) {
  return {request.question_id, request.agent_id, request.round,
          request.sample, request.purpose};
}

int OrdinalCounter::Next(const RequestKey& key) {
  std::lock_guard lock(mu_);
  return next_[key]++;
}

ScriptedBackend::ScriptedBackend(std::vector<Entry> entries)
    : entries_(std::move(entries)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::FromJson(
    std::string_view document) {
  std::vector<Entry> entries;
  try {
    const json doc = json::parse(document);
    for (const auto& j : doc.at("responses")) {
      Entry e;
      if (j.contains("question")) e.question_id = j["question"].get<std::string>();
      if (j.contains("agent")) e.agent_id = j["agent"].get<std::string>();
      if (j.contains("round")) e.round = j["round"].get<int>();
      if (j.contains("sample")) e.sample = j["sample"].get<int>();
      if (j.contains("ordinal")) e.ordinal = j["ordinal"].get<int>();
      e.purpose = PurposeFromString(j.value("purpose", "agent"));
      e.response.text = j.value("text", "");
      e.response.tokens_in = j.value("tokens_in", std::int64_t{0});
      e.response.tokens_out = j.value("tokens_out", std::int64_t{0});
      e.transport_error = j.value("transport_error", "");
      entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed backend script: ") + e.what());
  }
  return std::make_unique<ScriptedBackend>(std::move(entries));
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::FromFile(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend script " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

GenerationResponse ScriptedBackend::Generate(const GenerationRequest& request) {
  calls_.fetch_add(1);
  const RequestKey key = KeyOf(request);
  const int ordinal = ordinals_.Next(key);
  const Entry* best = nullptr;
  for (const auto& e : entries_) {
    if (e.purpose != request.purpose) continue;
    if (e.question_id && *e.question_id != request.question_id) continue;
    if (e.agent_id && *e.agent_id != request.agent_id) continue;
    if (e.round && *e.round != request.round) continue;
    if (e.sample && *e.sample != request.sample) continue;
    if (e.ordinal && *e.ordinal != ordinal) continue;
    if (!best || Specificity(e) > Specificity(*best)) best = &e;
  }
  if (!best) {
    throw FixtureMissError("no scripted response for " + key.Describe() +
                           " ordinal " + std::to_string(ordinal));
  }
  if (!best->transport_error.empty()) {
    throw TransportError(best->transport_error);
  }
  return best->response;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ModelBackend> inner,
                                   const std::string& path)
    : inner_(std::move(inner)), out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("cannot open recording " + path);
}

GenerationResponse RecordingBackend::Generate(
    const GenerationRequest& request) {
  const RequestKey key = KeyOf(request);
  const int ordinal = ordinals_.Next(key);
  json record;
  record["v"] = 1;
  record["question_id"] = request.question_id;
  record["agent_id"] = request.agent_id;
  record["round"] = request.round;
  record["sample"] = request.sample;
  record["purpose"] = std::string(ToString(request.purpose));
  record["ordinal"] = ordinal;
  record["temperature"] = request.temperature;
  record["context_fnv1a64"] = HexDigest(Fnv1a64(request.context));
  record["context_bytes"] = request.context.size();

  std::optional<GenerationResponse> response;
  try {
    response = inner_->Generate(request);
    record["text"] = response->text;
    record["tokens_in"] = response->tokens_in;
    record["tokens_out"] = response->tokens_out;
  } catch (const TransportError& e) {
    record["transport_error"] = e.what();
  }
  {
    std::lock_guard lock(mu_);
    record["seq"] = seq_++;
    out_ << record.dump() << '\n';
    out_.flush();
  }
  if (!response) throw TransportError(record["transport_error"].get<std::string>());
  return *response;
}

ReplayBackend::ReplayBackend(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open recording " + path);
  Load(in);
}

std::unique_ptr<ReplayBackend> ReplayBackend::FromString(
    std::string_view recording) {
  std::unique_ptr<ReplayBackend> backend(new ReplayBackend());
  std::istringstream in{std::string(recording)};
  backend->Load(in);
  return backend;
}

void ReplayBackend::Load(std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.at("v").get<int>() != 1) {
        throw ConfigError("recording line " + std::to_string(line_no) +
                          ": unsupported version");
      }
      RequestKey key{j.value("question_id", ""),
                     j.at("agent_id").get<std::string>(), j.at("round").get<int>(),
                     j.at("sample").get<int>(),
                     PurposeFromString(j.at("purpose").get<std::string>())};
      Record r;
      r.seq = j.at("seq").get<std::int64_t>();
      r.context_hash = j.at("context_fnv1a64").get<std::string>();
      r.context_bytes = j.at("context_bytes").get<std::size_t>();
      r.response.text = j.value("text", "");
      r.response.tokens_in = j.value("tokens_in", std::int64_t{0});
      r.response.tokens_out = j.value("tokens_out", std::int64_t{0});
      r.transport_error = j.value("transport_error", "");
      records_[{key, j.at("ordinal").get<int>()}] = std::move(r);
    } catch (const json::exception& e) {
      throw ConfigError("recording line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

GenerationResponse ReplayBackend::Generate(const GenerationRequest& request) {
  const RequestKey key = KeyOf(request);
  const int ordinal = ordinals_.Next(key);
  auto it = records_.find({key, ordinal});
  if (it == records_.end()) {
    throw ExhaustedRecordingError("recording exhausted: no call " +
                                  std::to_string(ordinal) + " for " +
                                  key.Describe());
  }
  const Record& r = it->second;
  const std::string hash = HexDigest(Fnv1a64(request.context));
  if (hash != r.context_hash || request.context.size() != r.context_bytes) {
    throw DivergenceError(
        "replay diverged at recorded request seq " + std::to_string(r.seq) +
        " " + key.Describe() + " ordinal " + std::to_string(ordinal) +
        ": context hash " + hash + " (" +
        std::to_string(request.context.size()) + " bytes) != recorded " +
        r.context_hash + " (" + std::to_string(r.context_bytes) + " bytes)");
  }
  if (!r.transport_error.empty()) throw TransportError(r.transport_error);
  return r.response;
}

std::shared_ptr<ModelBackend> RecordReplayWrapper(
    std::shared_ptr<ModelBackend> inner, RecordMode mode,
    const std::string& path) {
  if (mode == RecordMode::kRecord) {
    if (!inner) throw ConfigError("record mode needs an inner backend");
    return std::make_shared<RecordingBackend>(std::move(inner), path);
  }
  return std::make_shared<ReplayBackend>(path);
}

}  // namespace toolmix
