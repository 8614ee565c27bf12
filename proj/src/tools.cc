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

#include "toolmix/tools.h"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace toolmix {
namespace {

using nlohmann::json;

std::string EraseAll(std::string s, std::string_view token) {
  std::size_t pos;
  while ((pos = s.find(token)) != std::string::npos) s.erase(pos, token.size());
  return s;
}

// Cut to at most `max` bytes without splitting a UTF-8 sequence.
std::string TruncateUtf8(std::string s, std::size_t max) {
  if (s.size() <= max) return s;
  std::size_t cut = max;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
  return s;
}

std::string Trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

std::string_view ToString(ExecStatus status) {
  switch (status) {
    case ExecStatus::kOk:
      return "ok";
    case ExecStatus::kRuntimeError:
      return "runtime_error";
    case ExecStatus::kTimeout:
      return "timeout";
  }
  return "ok";
}

ExecStatus ExecStatusFromString(std::string_view s) {
  if (s == "ok") return ExecStatus::kOk;
  if (s == "runtime_error") return ExecStatus::kRuntimeError;
  if (s == "timeout") return ExecStatus::kTimeout;
  throw ConfigError("unknown execution status: " + std::string(s));
}

EvidenceBlock NormalizeBlock(std::string_view source, std::string_view snippet) {
  EvidenceBlock block;
  for (char c : source) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
        c == '.' || c == ':') {
      block.source += c;
    }
  }
  if (block.source.empty()) block.source = "unknown";
  std::string text = EraseAll(std::string(snippet), kInformationOpen);
  text = EraseAll(std::move(text), kInformationClose);
  block.snippet = CollapseWhitespace(text);
  return block;
}

std::string RenderEvidence(const Evidence& evidence) {
  std::string out(kInformationOpen);
  out += '\n';
  for (std::size_t i = 0; i < evidence.blocks.size(); ++i) {
    const auto& block = evidence.blocks[i];
    out += "[" + std::to_string(i + 1) + "] (" + block.source + ") " +
           block.snippet + "\n";
  }
  out += kInformationClose;
  return out;
}

std::vector<EvidenceBlock> ParseEvidence(std::string_view rendered) {
  const std::string text = Trimmed(rendered);
  std::string_view body = text;
  if (body.substr(0, kInformationOpen.size()) != kInformationOpen ||
      body.size() < kInformationOpen.size() + kInformationClose.size() ||
      body.substr(body.size() - kInformationClose.size()) !=
          kInformationClose) {
    throw std::invalid_argument("evidence is not wrapped in information tags");
  }
  body.remove_prefix(kInformationOpen.size());
  body.remove_suffix(kInformationClose.size());
  std::vector<EvidenceBlock> blocks;
  std::istringstream lines{std::string(body)};
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const std::string expected = "[" + std::to_string(blocks.size() + 1) + "] (";
    if (line.rfind(expected, 0) != 0) {
      throw std::invalid_argument("malformed evidence line: " + line);
    }
    const std::size_t close = line.find(") ", expected.size());
    const std::size_t bare_close = line.find(')', expected.size());
    EvidenceBlock block;
    if (close != std::string::npos && close == bare_close) {
      block.source = line.substr(expected.size(), close - expected.size());
      block.snippet = line.substr(close + 2);
    } else if (bare_close == line.size() - 1) {
      block.source = line.substr(expected.size(), bare_close - expected.size());
    } else {
      throw std::invalid_argument("malformed evidence line: " + line);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

SearchProviders::SearchProviders(std::shared_ptr<SearchProvider> google,
                                 std::shared_ptr<SearchProvider> llm,
                                 SearchLimits limits)
    : google_(std::move(google)), llm_(std::move(llm)), limits_(limits) {}

bool SearchProviders::Supports(SearchVariant variant) const {
  switch (variant) {
    case SearchVariant::kNone:
      return true;
    case SearchVariant::kGoogle:
      return google_ != nullptr;
    case SearchVariant::kLlm:
      return llm_ != nullptr;
    case SearchVariant::kCombined:
      return google_ != nullptr && llm_ != nullptr;
  }
  return false;
}

void SearchProviders::Require(SearchVariant variant) const {
  if (!Supports(variant)) {
    throw ConfigError("search variant '" + std::string(ToString(variant)) +
                      "' has no configured provider");
  }
}

std::vector<EvidenceBlock> SearchProviders::QueryOne(
    SearchProvider& provider, std::string_view tag,
    const std::string& query) const {
  std::vector<EvidenceBlock> blocks;
  try {
    for (const auto& raw : provider.Query(query)) {
      EvidenceBlock block = NormalizeBlock(raw.source, raw.snippet);
      block.snippet = TruncateUtf8(std::move(block.snippet),
                                   limits_.max_snippet_bytes);
      if (!block.snippet.empty()) blocks.push_back(std::move(block));
    }
  } catch (const TransportError& e) {
    blocks = {NormalizeBlock(
        "error", "search provider failure (" + std::string(tag) +
                     "): " + e.what())};
  }
  return blocks;
}

Evidence SearchProviders::Search(const std::string& query,
                                 SearchVariant variant) const {
  if (query.empty()) throw std::invalid_argument("empty search query");
  if (variant == SearchVariant::kNone) {
    throw std::invalid_argument("search requested with variant 'none'");
  }
  Require(variant);
  Evidence evidence;
  evidence.variant_used = variant;
  std::vector<EvidenceBlock> candidates;
  if (variant == SearchVariant::kGoogle ||
      variant == SearchVariant::kCombined) {
    auto gs = QueryOne(*google_, "gs", query);
    candidates.insert(candidates.end(), gs.begin(), gs.end());
  }
  if (variant == SearchVariant::kLlm || variant == SearchVariant::kCombined) {
    auto llm = QueryOne(*llm_, "llm", query);
    candidates.insert(candidates.end(), llm.begin(), llm.end());
  }
  std::set<std::string> seen;
  for (auto& block : candidates) {
    if (evidence.blocks.size() >= limits_.max_blocks) break;
    if (variant == SearchVariant::kCombined &&
        !seen.insert(block.snippet).second) {
      continue;
    }
    evidence.blocks.push_back(std::move(block));
  }
  return evidence;
}

ScriptedSearchProvider::ScriptedSearchProvider(std::string tag,
                                               std::map<std::string, Entry> table)
    : tag_(std::move(tag)), table_(std::move(table)) {}

std::vector<EvidenceBlock> ScriptedSearchProvider::Query(
    const std::string& query) {
  auto it = table_.find(query);
  if (it == table_.end()) {
    throw FixtureMissError("no scripted " + tag_ + " search result for query '" +
                           query + "'");
  }
  if (!it->second.transport_error.empty()) {
    throw TransportError(it->second.transport_error);
  }
  return it->second.blocks;
}

LocalToolSuite::LocalToolSuite(CodeSandbox sandbox, SearchProviders search,
                               int parallelism)
    : sandbox_(std::move(sandbox)),
      search_(std::move(search)),
      slots_(std::max(1, std::min(parallelism, 1024))) {}

ExecutionResult LocalToolSuite::ExecuteCode(const std::string& source,
                                            Millis limit) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return sandbox_.Run(source, limit);
}

Evidence LocalToolSuite::Search(const std::string& query,
                                SearchVariant variant) {
  return search_.Search(query, variant);
}

void LocalToolSuite::RequireVariant(SearchVariant variant) const {
  search_.Require(variant);
}

std::unique_ptr<ScriptedToolSuite> ScriptedToolSuite::FromJson(
    std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("tool fixture is not valid JSON: ") +
                      e.what());
  }
  std::unique_ptr<ScriptedToolSuite> suite(new ScriptedToolSuite());
  try {
    for (const auto& entry : doc.value("code", json::array())) {
      ExecutionResult result;
      result.status = ExecStatusFromString(entry.value("status", "ok"));
      result.stdout_text = entry.value("stdout", "");
      result.stderr_text = entry.value("stderr", "");
      result.exit_code = entry.value(
          "exit_code", result.status == ExecStatus::kOk ? 0 : 1);
      suite->code_[Trimmed(entry.at("source").get<std::string>())] = result;
    }
    std::shared_ptr<SearchProvider> providers[2];
    const char* tags[2] = {"gs", "llm"};
    const json search = doc.value("search", json::object());
    for (int i = 0; i < 2; ++i) {
      if (!search.contains(tags[i])) continue;
      std::map<std::string, ScriptedSearchProvider::Entry> table;
      for (const auto& [query, value] : search[tags[i]].items()) {
        ScriptedSearchProvider::Entry entry;
        if (value.is_object()) {
          entry.transport_error = value.at("error").get<std::string>();
        } else {
          for (const auto& snippet : value) {
            if (snippet.is_string()) {
              entry.blocks.push_back({tags[i], snippet.get<std::string>()});
            } else {
              entry.blocks.push_back(
                  {snippet.value("source", std::string(tags[i])),
                   snippet.at("snippet").get<std::string>()});
            }
          }
        }
        table[query] = std::move(entry);
      }
      providers[i] =
          std::make_shared<ScriptedSearchProvider>(tags[i], std::move(table));
    }
    suite->search_ = SearchProviders(providers[0], providers[1]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed tool fixture: ") + e.what());
  }
  return suite;
}

std::unique_ptr<ScriptedToolSuite> ScriptedToolSuite::FromFile(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open tool fixture " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return FromJson(buffer.str());
}

ExecutionResult ScriptedToolSuite::ExecuteCode(const std::string& source,
                                               Millis limit) {
  auto it = code_.find(Trimmed(source));
  if (it == code_.end()) {
    throw FixtureMissError("no scripted execution result for source:\n" +
                           source);
  }
  ExecutionResult result = it->second;
  if (result.status == ExecStatus::kTimeout) result.wall_time = limit;
  return result;
}

Evidence ScriptedToolSuite::Search(const std::string& query,
                                   SearchVariant variant) {
  return search_.Search(query, variant);
}

void ScriptedToolSuite::RequireVariant(SearchVariant variant) const {
  search_.Require(variant);
}

}  // namespace toolmix
