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

// Domain types shared by every module, plus the answer-text parsers:
// final-answer span extraction, canonicalization and action classification.

#ifndef TOOLMIX_CORE_H_
#define TOOLMIX_CORE_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toolmix {

// Wire tokens. These must stay byte-exact: the agent prompts tell the model
// to use them.
inline constexpr std::string_view kAnswerOpen = "<<<";
inline constexpr std::string_view kAnswerClose = ">>>";
inline constexpr std::string_view kSearchOpen = "<search>";
inline constexpr std::string_view kSearchClose = "</search>";
inline constexpr std::string_view kInformationOpen = "<information>";
inline constexpr std::string_view kInformationClose = "</information>";
inline constexpr std::string_view kCodeFenceOpen = "```python";
inline constexpr std::string_view kCodeFenceClose = "```";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or input document. Always raised before any model
// call is made.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network or provider failure that may succeed when retried.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A scripted fixture or recording has no entry for a request. Indicates a
// broken test setup, so it is never swallowed by retry or recovery paths.
class FixtureMissError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class AnswerKind { kFreeForm, kMultipleChoice, kNumeric };

std::string_view ToString(AnswerKind kind);
AnswerKind AnswerKindFromString(std::string_view s);

struct Question {
  std::string id;
  std::string body;
  AnswerKind kind = AnswerKind::kFreeForm;
  std::optional<std::string> ground_truth;
};

struct CanonicalAnswer {
  std::string value;
  AnswerKind kind = AnswerKind::kFreeForm;
  // Set when a numeric answer could not be parsed and free-form rules were
  // applied instead.
  bool numeric_fallback = false;

  friend bool operator==(const CanonicalAnswer&,
                         const CanonicalAnswer&) = default;
};

struct AgentAnswer {
  std::string agent_id;
  int round = 1;
  int sample = 0;
  std::string raw_response;
  std::optional<CanonicalAnswer> answer;
  std::string trace_ref;
};

struct CostLedger {
  // One per agent call (one agent answer in one round), independent of how
  // many generations the tool loop needed.
  std::int64_t agent_inferences = 0;
  // Raw agent-purpose generate calls, including tool-loop turns, guidance
  // passes and forced decisions.
  std::int64_t agent_generations = 0;
  std::int64_t judge_inferences = 0;
  std::int64_t selector_inferences = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t tool_calls = 0;

  CostLedger& operator+=(const CostLedger& other);
  friend CostLedger operator+(CostLedger a, const CostLedger& b) {
    return a += b;
  }
  friend bool operator==(const CostLedger&, const CostLedger&) = default;

  std::int64_t TotalInferences() const {
    return agent_inferences + judge_inferences + selector_inferences;
  }
  std::int64_t TotalTokens() const { return input_tokens + output_tokens; }
};

// Set of tools an agent may invoke.
class ToolSet {
 public:
  constexpr ToolSet() = default;
  static constexpr ToolSet None() { return ToolSet(); }
  static constexpr ToolSet CodeOnly() { return ToolSet(true, false); }
  static constexpr ToolSet SearchOnly() { return ToolSet(false, true); }
  static constexpr ToolSet Both() { return ToolSet(true, true); }

  constexpr bool code() const { return code_; }
  constexpr bool search() const { return search_; }
  constexpr bool empty() const { return !code_ && !search_; }

  friend constexpr bool operator==(ToolSet, ToolSet) = default;

 private:
  constexpr ToolSet(bool code, bool search) : code_(code), search_(search) {}
  bool code_ = false;
  bool search_ = false;
};

// Contents of every well-formed <<<...>>> span, left to right. A span is
// the shortest text between a "<<<" and the next ">>>"; markers without a
// partner are ignored.
std::vector<std::string> FindAnswerSpans(std::string_view text);

// Canonicalized content of the last non-blank answer span, or nullopt.
std::optional<CanonicalAnswer> ExtractFinalAnswer(
    std::string_view raw_response, AnswerKind kind = AnswerKind::kFreeForm);

// Rule-based normalization:
//   free_form        trim, collapse internal whitespace
//   multiple_choice  "(X)", "X)", "X." prefix or a bare letter -> "x";
//                    otherwise the free-form text, case-folded
//   numeric          the sole numeric literal, rendered without leading
//                    zeros or trailing fractional zeros; anything else
//                    falls back to free-form with numeric_fallback set
CanonicalAnswer Canonicalize(std::string_view raw, AnswerKind kind);

// Trim and collapse runs of whitespace to one space.
std::string CollapseWhitespace(std::string_view text);

// Last complete ```python ... ``` block, without the fences.
std::optional<std::string> ExtractCodeBlock(std::string_view text);
// Last complete <search>...</search> query, trimmed.
std::optional<std::string> ExtractSearchQuery(std::string_view text);

enum class ActionKind { kFinal, kCode, kSearch, kContinue };
std::string_view ToString(ActionKind kind);

struct Action {
  ActionKind kind = ActionKind::kContinue;
  // Code source for kCode, query for kSearch, empty otherwise.
  std::string payload;
};

// Priority: final answer span, then permitted code, then permitted search.
// Anything else, including a forbidden tool request, is kContinue.
Action ClassifyAction(std::string_view raw_response, ToolSet permissions);

// Stable 64-bit FNV-1a, used for replay divergence checks and seeding.
std::uint64_t Fnv1a64(std::string_view data);
std::string HexDigest(std::uint64_t value);

}  // namespace toolmix

#endif  // TOOLMIX_CORE_H_
