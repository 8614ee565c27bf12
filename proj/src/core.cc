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

#include "toolmix/core.h"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace toolmix {
namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool IsAlpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
char Lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

std::string ToLower(std::string s) {
  for (char& c : s) c = Lower(c);
  return s;
}

// Decomposed numeric literal: sign, digits with the decimal point at
// `point`, i.e. value = 0.d1d2d3... * 10^point.
struct NumericLiteral {
  bool negative = false;
  std::string int_digits;
  std::string frac_digits;
  long exponent = 0;
};

// Scans one numeric literal starting at `i`. Returns the end offset, or
// `i` when no literal starts there.
std::size_t ScanNumber(std::string_view s, std::size_t i,
                       NumericLiteral* out) {
  std::size_t j = i;
  NumericLiteral lit;
  if (j < s.size() && (s[j] == '-' || s[j] == '+')) {
    // A sign only counts at a token boundary, so "COVID-19" is not -19.
    if (j > 0 && !IsSpace(s[j - 1]) && s[j - 1] != '(' && s[j - 1] != '=' &&
        s[j - 1] != ':') {
      return i;
    }
    lit.negative = s[j] == '-';
    ++j;
  }
  const std::size_t digits_start = j;
  while (j < s.size() && IsDigit(s[j])) lit.int_digits += s[j++];
  // Thousands separators: ",ddd" groups directly after 1-3 leading digits.
  if (!lit.int_digits.empty() && lit.int_digits.size() <= 3) {
    while (j + 3 < s.size() && s[j] == ',' && IsDigit(s[j + 1]) &&
           IsDigit(s[j + 2]) && IsDigit(s[j + 3]) &&
           (j + 4 >= s.size() || !IsDigit(s[j + 4]))) {
      lit.int_digits.append(s.substr(j + 1, 3));
      j += 4;
    }
  }
  if (j + 1 < s.size() && s[j] == '.' && IsDigit(s[j + 1])) {
    ++j;
    while (j < s.size() && IsDigit(s[j])) lit.frac_digits += s[j++];
  }
  if (lit.int_digits.empty() && lit.frac_digits.empty()) return i;
  if (j > digits_start && j + 1 < s.size() && (s[j] == 'e' || s[j] == 'E')) {
    std::size_t k = j + 1;
    bool neg_exp = false;
    if (k < s.size() && (s[k] == '-' || s[k] == '+')) {
      neg_exp = s[k] == '-';
      ++k;
    }
    if (k < s.size() && IsDigit(s[k])) {
      long e = 0;
      while (k < s.size() && IsDigit(s[k])) {
        if (e < 100000) e = e * 10 + (s[k] - '0');
        ++k;
      }
      lit.exponent = neg_exp ? -e : e;
      j = k;
    }
  }
  *out = std::move(lit);
  return j;
}

std::vector<NumericLiteral> FindNumbers(std::string_view s) {
  std::vector<NumericLiteral> found;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool starts = IsDigit(s[i]) ||
                        ((s[i] == '-' || s[i] == '+' || s[i] == '.') &&
                         i + 1 < s.size() &&
                         (IsDigit(s[i + 1]) ||
                          (s[i + 1] == '.' && i + 2 < s.size() &&
                           IsDigit(s[i + 2]))));
    if (starts) {
      NumericLiteral lit;
      const std::size_t end = ScanNumber(s, i, &lit);
      if (end > i) {
        found.push_back(std::move(lit));
        i = end;
        continue;
      }
    }
    ++i;
  }
  return found;
}

std::optional<std::string> RenderNumber(const NumericLiteral& lit) {
  if (lit.exponent > 4096 || lit.exponent < -4096) return std::nullopt;
  const std::string digits = lit.int_digits + lit.frac_digits;
  const long point = static_cast<long>(lit.int_digits.size()) + lit.exponent;
  std::string int_part;
  std::string frac_part;
  const long n = static_cast<long>(digits.size());
  if (point <= 0) {
    int_part = "0";
    frac_part = std::string(static_cast<std::size_t>(-point), '0') + digits;
  } else if (point >= n) {
    int_part = digits + std::string(static_cast<std::size_t>(point - n), '0');
  } else {
    int_part = digits.substr(0, static_cast<std::size_t>(point));
    frac_part = digits.substr(static_cast<std::size_t>(point));
  }
  const auto first_nonzero = int_part.find_first_not_of('0');
  int_part = first_nonzero == std::string::npos ? "0"
                                                : int_part.substr(first_nonzero);
  const auto last_nonzero = frac_part.find_last_not_of('0');
  frac_part = last_nonzero == std::string::npos
                  ? ""
                  : frac_part.substr(0, last_nonzero + 1);
  std::string out;
  const bool zero = int_part == "0" && frac_part.empty();
  if (lit.negative && !zero) out += '-';
  out += int_part;
  if (!frac_part.empty()) {
    out += '.';
    out += frac_part;
  }
  return out;
}

// True when position `i` is the end of the text or followed by whitespace.
bool AtBoundary(std::string_view s, std::size_t i) {
  return i >= s.size() || IsSpace(s[i]);
}

std::optional<char> MultipleChoiceLetter(std::string_view s) {
  if (s.size() >= 3 && s[0] == '(' && IsAlpha(s[1]) && s[2] == ')' &&
      AtBoundary(s, 3)) {
    return Lower(s[1]);
  }
  if (s.size() >= 2 && IsAlpha(s[0]) && (s[1] == ')' || s[1] == '.') &&
      AtBoundary(s, 2)) {
    return Lower(s[0]);
  }
  if (s.size() == 1 && IsAlpha(s[0])) return Lower(s[0]);
  return std::nullopt;
}

// Last complete region delimited by `open` ... `close`, without delimiters.
std::optional<std::string_view> LastDelimited(std::string_view text,
                                              std::string_view open,
                                              std::string_view close) {
  std::optional<std::string_view> last;
  std::size_t pos = text.find(open);
  while (pos != std::string_view::npos) {
    const std::size_t content = pos + open.size();
    const std::size_t end = text.find(close, content);
    if (end == std::string_view::npos) break;
    last = text.substr(content, end - content);
    pos = text.find(open, end + close.size());
  }
  return last;
}

}  // namespace

std::string_view ToString(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::kFreeForm:
      return "free_form";
    case AnswerKind::kMultipleChoice:
      return "multiple_choice";
    case AnswerKind::kNumeric:
      return "numeric";
  }
  return "free_form";
}

AnswerKind AnswerKindFromString(std::string_view s) {
  if (s == "free_form") return AnswerKind::kFreeForm;
  if (s == "multiple_choice") return AnswerKind::kMultipleChoice;
  if (s == "numeric") return AnswerKind::kNumeric;
  throw ConfigError("unknown answer kind: " + std::string(s));
}

std::string_view ToString(ActionKind kind) {
  switch (kind) {
    case ActionKind::kFinal:
      return "final";
    case ActionKind::kCode:
      return "code";
    case ActionKind::kSearch:
      return "search";
    case ActionKind::kContinue:
      return "continue";
  }
  return "continue";
}

CostLedger& CostLedger::operator+=(const CostLedger& other) {
  agent_inferences += other.agent_inferences;
  agent_generations += other.agent_generations;
  judge_inferences += other.judge_inferences;
  selector_inferences += other.selector_inferences;
  input_tokens += other.input_tokens;
  output_tokens += other.output_tokens;
  tool_calls += other.tool_calls;
  return *this;
}

std::vector<std::string> FindAnswerSpans(std::string_view text) {
  std::vector<std::string> spans;
  std::size_t cursor = 0;
  while (cursor < text.size()) {
    const std::size_t close = text.find(kAnswerClose, cursor);
    if (close == std::string_view::npos) break;
    // The latest opener before this closer gives the shortest span.
    const std::string_view window = text.substr(cursor, close - cursor);
    const std::size_t open = window.rfind(kAnswerOpen);
    if (open != std::string_view::npos) {
      const std::size_t begin = cursor + open + kAnswerOpen.size();
      spans.emplace_back(text.substr(begin, close - begin));
    }
    cursor = close + kAnswerClose.size();
  }
  return spans;
}

std::optional<CanonicalAnswer> ExtractFinalAnswer(std::string_view raw_response,
                                                  AnswerKind kind) {
  const auto spans = FindAnswerSpans(raw_response);
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    if (!Trim(*it).empty()) return Canonicalize(*it, kind);
  }
  return std::nullopt;
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : Trim(text)) {
    if (IsSpace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

CanonicalAnswer Canonicalize(std::string_view raw, AnswerKind kind) {
  CanonicalAnswer out;
  out.kind = kind;
  const std::string collapsed = CollapseWhitespace(raw);
  switch (kind) {
    case AnswerKind::kFreeForm:
      out.value = collapsed;
      break;
    case AnswerKind::kMultipleChoice:
      if (auto letter = MultipleChoiceLetter(collapsed)) {
        out.value = std::string(1, *letter);
      } else {
        out.value = ToLower(collapsed);
      }
      break;
    case AnswerKind::kNumeric: {
      const auto numbers = FindNumbers(collapsed);
      std::optional<std::string> rendered;
      if (numbers.size() == 1) rendered = RenderNumber(numbers.front());
      if (rendered) {
        out.value = *rendered;
      } else {
        out.value = collapsed;
        out.numeric_fallback = true;
      }
      break;
    }
  }
  return out;
}

std::optional<std::string> ExtractCodeBlock(std::string_view text) {
  auto block = LastDelimited(text, kCodeFenceOpen, kCodeFenceClose);
  if (!block) return std::nullopt;
  std::string_view body = *block;
  // Drop the remainder of the opening fence line.
  const std::size_t newline = body.find('\n');
  if (newline != std::string_view::npos &&
      Trim(body.substr(0, newline)).empty()) {
    body.remove_prefix(newline + 1);
  }
  std::string source(Trim(body));
  if (source.empty()) return std::nullopt;
  return source;
}

std::optional<std::string> ExtractSearchQuery(std::string_view text) {
  auto query = LastDelimited(text, kSearchOpen, kSearchClose);
  if (!query) return std::nullopt;
  std::string trimmed(Trim(*query));
  if (trimmed.empty()) return std::nullopt;
  return trimmed;
}

Action ClassifyAction(std::string_view raw_response, ToolSet permissions) {
  if (ExtractFinalAnswer(raw_response)) return {ActionKind::kFinal, ""};
  if (permissions.code()) {
    if (auto code = ExtractCodeBlock(raw_response)) {
      return {ActionKind::kCode, std::move(*code)};
    }
  }
  if (permissions.search()) {
    if (auto query = ExtractSearchQuery(raw_response)) {
      return {ActionKind::kSearch, std::move(*query)};
    }
  }
  return {ActionKind::kContinue, ""};
}

std::uint64_t Fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexDigest(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace toolmix
