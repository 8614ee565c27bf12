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

// Model backend contract and its deterministic implementations.
//
// Scripted responses and recordings are both keyed by
// (question_id, agent_id, round, sample, purpose) plus a per-key call
// ordinal. Each key is driven by a single agent worker, so concurrent
// rounds and questions replay identically no matter how threads
// interleave.

#ifndef TOOLMIX_BACKEND_H_
#define TOOLMIX_BACKEND_H_

#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "toolmix/core.h"
#include "toolmix/tools.h"

namespace toolmix {

enum class Purpose { kAgent, kJudge, kSelector };
std::string_view ToString(Purpose purpose);
Purpose PurposeFromString(std::string_view s);

struct GenerationRequest {
  std::string context;
  std::string question_id;
  double temperature = 0.0;
  std::string agent_id;
  int round = 0;
  int sample = 0;
  Purpose purpose = Purpose::kAgent;
};

struct GenerationResponse {
  std::string text;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Throws TransportError for retryable failures. Must be safe to call
  // concurrently.
  virtual GenerationResponse Generate(const GenerationRequest& request) = 0;
};

// Identity of a request stream; ordinals count calls within one key.
struct RequestKey {
  std::string question_id;
  std::string agent_id;
  int round = 0;
  int sample = 0;
  Purpose purpose = Purpose::kAgent;

  auto operator<=>(const RequestKey&) const = default;
  std::string Describe() const;
};

RequestKey KeyOf(const GenerationRequest& request);

// Thread-safe per-key ordinal counter.
class OrdinalCounter {
 public:
  int Next(const RequestKey& key);

 private:
  std::mutex mu_;
  std::map<RequestKey, int> next_;
};

// Fixture document:
//   {"responses": [
//      {"agent": "CoT", "round": 1, "sample": 0, "purpose": "agent",
//       "ordinal": 0, "text": "<<<B>>>", "tokens_in": 120, "tokens_out": 40},
//      {"purpose": "judge", "round": 2, "text": "... <<<NO>>>"},
//      {"agent": "C", "round": 1, "ordinal": 0, "transport_error": "reset"}]}
// "question", "agent", "round", "sample" and "ordinal" are optional; an absent field
// matches anything. The entry with the most fields specified wins, ties go
// to the earliest entry. A request matching nothing raises
// FixtureMissError.
class ScriptedBackend : public ModelBackend {
 public:
  struct Entry {
    std::optional<std::string> question_id;
    std::optional<std::string> agent_id;
    std::optional<int> round;
    std::optional<int> sample;
    Purpose purpose = Purpose::kAgent;
    std::optional<int> ordinal;
    GenerationResponse response;
    std::string transport_error;
  };

  explicit ScriptedBackend(std::vector<Entry> entries);
  static std::unique_ptr<ScriptedBackend> FromJson(std::string_view document);
  static std::unique_ptr<ScriptedBackend> FromFile(const std::string& path);

  GenerationResponse Generate(const GenerationRequest& request) override;

  std::int64_t calls() const { return calls_.load(); }

 private:
  std::vector<Entry> entries_;
  OrdinalCounter ordinals_;
  std::atomic<std::int64_t> calls_{0};
};

class ReplayError : public Error {
 public:
  using Error::Error;
};

// The replayed run issued a request whose context differs from the
// recording.
class DivergenceError : public ReplayError {
 public:
  using ReplayError::ReplayError;
};

// The replayed run issued more requests than were recorded.
class ExhaustedRecordingError : public ReplayError {
 public:
  using ReplayError::ReplayError;
};

// Recording format, one JSON object per line:
//   v                 schema version (1)
//   seq               global call order at record time
//   question_id, agent_id, round, sample, purpose, ordinal   request key
//   temperature       request temperature
//   context_fnv1a64   FNV-1a 64 of the context, 16 hex digits
//   context_bytes     context length
//   text, tokens_in, tokens_out                 the response, or
//   transport_error   message when the inner backend failed
class RecordingBackend : public ModelBackend {
 public:
  RecordingBackend(std::shared_ptr<ModelBackend> inner,
                   const std::string& path);
  GenerationResponse Generate(const GenerationRequest& request) override;

 private:
  std::shared_ptr<ModelBackend> inner_;
  std::mutex mu_;
  std::ofstream out_;
  std::int64_t seq_ = 0;
  OrdinalCounter ordinals_;
};

class ReplayBackend : public ModelBackend {
 public:
  explicit ReplayBackend(const std::string& path);
  static std::unique_ptr<ReplayBackend> FromString(std::string_view recording);

  // Throws DivergenceError or ExhaustedRecordingError.
  GenerationResponse Generate(const GenerationRequest& request) override;

 private:
  struct Record {
    std::int64_t seq = 0;
    std::string context_hash;
    std::size_t context_bytes = 0;
    GenerationResponse response;
    std::string transport_error;
  };
  ReplayBackend() = default;
  void Load(std::istream& in);

  std::map<std::pair<RequestKey, int>, Record> records_;
  OrdinalCounter ordinals_;
};

// Wraps a backend with record or replay behaviour.
enum class RecordMode { kRecord, kReplay };
std::shared_ptr<ModelBackend> RecordReplayWrapper(
    std::shared_ptr<ModelBackend> inner, RecordMode mode,
    const std::string& path);

}  // namespace toolmix

#endif  // TOOLMIX_BACKEND_H_
