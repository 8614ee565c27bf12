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

#ifndef TOOLMIX_TOOLS_H_
#define TOOLMIX_TOOLS_H_

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "toolmix/agents.h"
#include "toolmix/core.h"

namespace toolmix {

using Millis = std::chrono::milliseconds;

inline constexpr Millis kDefaultCodeLimit{60'000};

enum class ExecStatus { kOk, kRuntimeError, kTimeout };
std::string_view ToString(ExecStatus status);
ExecStatus ExecStatusFromString(std::string_view s);

struct ExecutionResult {
  ExecStatus status = ExecStatus::kOk;
  std::string stdout_text;
  std::string stderr_text;
  Millis wall_time{0};
  int exit_code = 0;
  // The sandbox itself failed (spawn, isolation); not the user's code.
  bool sandbox_failure = false;
  bool output_truncated = false;
};

enum class NetworkPolicy {
  // Fail the execution if a private network namespace cannot be created.
  kDeny,
  // Try to isolate; run with host networking if that is impossible.
  kBestEffort,
  kAllow,
};

struct SandboxOptions {
  // Resolved against PATH when it has no '/'.
  std::string interpreter = "python3";
  std::vector<std::string> interpreter_args = {"-I", "-"};
  NetworkPolicy network = NetworkPolicy::kDeny;
  // Per stream; the rest is discarded and output_truncated is set.
  std::size_t max_output_bytes = 1 << 20;
  // Parent directory for per-run working directories. Empty: $TMPDIR or
  // /tmp.
  std::string scratch_root;
};

// Runs a script in a child process: source on stdin, captured stdio, a
// private temp working directory, a scrubbed environment, an optional
// private network namespace, and a wall-clock kill of the whole process
// group.
class CodeSandbox {
 public:
  explicit CodeSandbox(SandboxOptions options = {});

  ExecutionResult Run(std::string_view source, Millis limit) const;

  const SandboxOptions& options() const { return options_; }

 private:
  SandboxOptions options_;
  std::string interpreter_path_;
};

struct EvidenceBlock {
  // Provider tag: "gs", "llm", "error", ...
  std::string source;
  std::string snippet;

  friend bool operator==(const EvidenceBlock&, const EvidenceBlock&) = default;
};

struct Evidence {
  std::vector<EvidenceBlock> blocks;
  SearchVariant variant_used = SearchVariant::kNone;
};

// Collapses whitespace and strips information tags from the snippet, and
// reduces the source to a bare tag. Everything providers return passes
// through this, which makes rendering reversible.
EvidenceBlock NormalizeBlock(std::string_view source, std::string_view snippet);

//   <information>
//   [1] (gs) first snippet
//   [2] (llm) second snippet
//   </information>
std::string RenderEvidence(const Evidence& evidence);
// Inverse of RenderEvidence for normalized blocks. Throws std::invalid_argument
// on malformed input.
std::vector<EvidenceBlock> ParseEvidence(std::string_view rendered);

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  // Ranked snippets. Throws TransportError on provider failure.
  virtual std::vector<EvidenceBlock> Query(const std::string& query) = 0;
};

struct SearchLimits {
  std::size_t max_blocks = 8;
  std::size_t max_snippet_bytes = 2048;
};

// The providers behind the gs and llm variants; com uses both.
class SearchProviders {
 public:
  SearchProviders() = default;
  SearchProviders(std::shared_ptr<SearchProvider> google,
                  std::shared_ptr<SearchProvider> llm, SearchLimits limits = {});

  bool Supports(SearchVariant variant) const;
  // Throws ConfigError when `variant` lacks a provider.
  void Require(SearchVariant variant) const;

  // gs and llm query one provider; com concatenates gs then llm and drops
  // blocks whose normalized snippet was already seen. A provider transport
  // failure becomes a single "error" block.
  Evidence Search(const std::string& query, SearchVariant variant) const;

 private:
  std::vector<EvidenceBlock> QueryOne(SearchProvider& provider,
                                      std::string_view tag,
                                      const std::string& query) const;

  std::shared_ptr<SearchProvider> google_;
  std::shared_ptr<SearchProvider> llm_;
  SearchLimits limits_;
};

// Query -> snippets table. Misses raise FixtureMissError naming the query.
class ScriptedSearchProvider : public SearchProvider {
 public:
  struct Entry {
    std::vector<EvidenceBlock> blocks;
    // Non-empty: Query throws TransportError with this message.
    std::string transport_error;
  };
  ScriptedSearchProvider(std::string tag, std::map<std::string, Entry> table);
  std::vector<EvidenceBlock> Query(const std::string& query) override;

 private:
  std::string tag_;
  std::map<std::string, Entry> table_;
};

// The tool handle agents see. Implementations must tolerate concurrent
// calls.
class ToolSuite {
 public:
  virtual ~ToolSuite() = default;
  virtual ExecutionResult ExecuteCode(const std::string& source,
                                      Millis limit) = 0;
  virtual Evidence Search(const std::string& query, SearchVariant variant) = 0;
  // Startup check: throws ConfigError if `variant` cannot be served.
  virtual void RequireVariant(SearchVariant variant) const = 0;
};

class LocalToolSuite : public ToolSuite {
 public:
  // `parallelism` bounds concurrent sandboxed processes; callers beyond it
  // queue.
  LocalToolSuite(CodeSandbox sandbox, SearchProviders search,
                 int parallelism = 4);

  ExecutionResult ExecuteCode(const std::string& source, Millis limit) override;
  Evidence Search(const std::string& query, SearchVariant variant) override;
  void RequireVariant(SearchVariant variant) const override;

 private:
  CodeSandbox sandbox_;
  SearchProviders search_;
  std::counting_semaphore<1024> slots_;
};

// Fixture-backed suite: code results keyed by trimmed source, search by
// (variant provider, query). Document schema:
//   {"code":   [{"source": "...", "status": "ok", "stdout": "7",
//                "stderr": ""}, ...],
//    "search": {"gs":  {"<query>": ["snippet", ...] | {"error": "..."}},
//               "llm": {...}}}
class ScriptedToolSuite : public ToolSuite {
 public:
  static std::unique_ptr<ScriptedToolSuite> FromJson(std::string_view document);
  static std::unique_ptr<ScriptedToolSuite> FromFile(const std::string& path);

  ExecutionResult ExecuteCode(const std::string& source, Millis limit) override;
  Evidence Search(const std::string& query, SearchVariant variant) override;
  void RequireVariant(SearchVariant variant) const override;

 private:
  ScriptedToolSuite() = default;
  std::map<std::string, ExecutionResult> code_;
  SearchProviders search_;
};

}  // namespace toolmix

#endif  // TOOLMIX_TOOLS_H_
