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

#include "toolmix/remote.h"

#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace toolmix {
namespace {

using nlohmann::json;

std::string Env(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

httplib::Client MakeClient(const std::string& base_url, Millis timeout) {
  httplib::Client client(base_url);
  if (!client.is_valid()) {
    throw ConfigError("unusable endpoint '" + base_url +
                      "' (https needs a build with OpenSSL)");
  }
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                                    std::min(timeout, Millis(30'000)))
                                    .count());
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

void CheckStatus(const httplib::Result& result, const std::string& what) {
  if (!result) {
    throw TransportError(what + ": " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw TransportError(what + ": HTTP " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw Error(what + ": HTTP " + std::to_string(status) + ": " +
                result->body.substr(0, 512));
  }
}

}  // namespace

ChatEndpoint ChatEndpointFromEnv() {
  ChatEndpoint e;
  e.base_url = Env("TOOLMIX_API_BASE", e.base_url);
  e.path = Env("TOOLMIX_API_PATH", e.path);
  e.api_key = Env("TOOLMIX_API_KEY");
  e.model = Env("TOOLMIX_MODEL");
  if (e.api_key.empty()) throw ConfigError("TOOLMIX_API_KEY is not set");
  if (e.model.empty()) throw ConfigError("TOOLMIX_MODEL is not set");
  return e;
}

OpenAiCompatibleBackend::OpenAiCompatibleBackend(ChatEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

GenerationResponse OpenAiCompatibleBackend::Generate(
    const GenerationRequest& request) {
  httplib::Client client = MakeClient(endpoint_.base_url, endpoint_.timeout);
  const json body = {
      {"model", endpoint_.model},
      {"messages", json::array({{{"role", "user"}, {"content", request.context}}})},
      {"temperature", request.temperature}};
  httplib::Headers headers = {
      {"Authorization", "Bearer " + endpoint_.api_key}};
  const auto result =
      client.Post(endpoint_.path, headers, body.dump(), "application/json");
  CheckStatus(result, "chat completion");
  GenerationResponse response;
  try {
    const json j = json::parse(result->body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    response.text = content.is_null() ? "" : content.get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
      response.tokens_in = j["usage"].value("prompt_tokens", std::int64_t{0});
      response.tokens_out = j["usage"].value("completion_tokens", std::int64_t{0});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed chat completion response: ") + e.what());
  }
  return response;
}

GoogleSearchEndpoint GoogleSearchEndpointFromEnv() {
  GoogleSearchEndpoint e;
  e.base_url = Env("TOOLMIX_GOOGLE_ENDPOINT", e.base_url);
  e.api_key = Env("TOOLMIX_GOOGLE_API_KEY");
  e.engine_id = Env("TOOLMIX_GOOGLE_CSE_ID");
  if (e.api_key.empty() || e.engine_id.empty()) {
    throw ConfigError(
        "TOOLMIX_GOOGLE_API_KEY and TOOLMIX_GOOGLE_CSE_ID must be set for gs "
        "search");
  }
  return e;
}

GoogleSearchProvider::GoogleSearchProvider(GoogleSearchEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

std::vector<EvidenceBlock> GoogleSearchProvider::Query(const std::string& query) {
  httplib::Client client = MakeClient(endpoint_.base_url, endpoint_.timeout);
  const httplib::Params params = {{"key", endpoint_.api_key},
                                  {"cx", endpoint_.engine_id},
                                  {"q", query},
                                  {"num", std::to_string(endpoint_.results)}};
  const auto result = client.Get(endpoint_.path, params, httplib::Headers{});
  CheckStatus(result, "google search");
  std::vector<EvidenceBlock> blocks;
  try {
    const json j = json::parse(result->body);
    for (const auto& item : j.value("items", json::array())) {
      std::string text = item.value("title", "");
      const std::string snippet = item.value("snippet", "");
      if (!snippet.empty()) text += (text.empty() ? "" : ": ") + snippet;
      const std::string link = item.value("link", "");
      if (!link.empty()) text += " (" + link + ")";
      blocks.push_back({"gs", text});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed search response: ") + e.what());
  }
  return blocks;
}

LlmSearchProvider::LlmSearchProvider(std::shared_ptr<ModelBackend> backend)
    : backend_(std::move(backend)) {}

std::vector<EvidenceBlock> LlmSearchProvider::Query(const std::string& query) {
  GenerationRequest request;
  request.context =
      "Search the web for the query below and report what you find. Write "
      "each finding on its own line, with its source when known.\n\nQuery: " +
      query;
  request.agent_id = "search";
  request.purpose = Purpose::kAgent;
  const GenerationResponse response = backend_->Generate(request);
  std::vector<EvidenceBlock> blocks;
  std::istringstream lines(response.text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r-*") == std::string::npos) continue;
    blocks.push_back({"llm", line});
  }
  return blocks;
}

}  // namespace toolmix
