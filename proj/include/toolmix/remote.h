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

// HTTP clients for real runs: an OpenAI-compatible chat-completions
// backend, a Google Custom Search provider, and a search provider backed by
// a model with built-in search.
//
// Environment:
//   TOOLMIX_API_BASE           scheme://host[:port], default https://api.openai.com
//   TOOLMIX_API_PATH           default /v1/chat/completions
//   TOOLMIX_API_KEY            bearer token (required)
//   TOOLMIX_MODEL              model name (required)
//   TOOLMIX_SEARCH_MODEL       model for llm search, default TOOLMIX_MODEL
//   TOOLMIX_GOOGLE_API_KEY     Custom Search key
//   TOOLMIX_GOOGLE_CSE_ID      Custom Search engine id
//   TOOLMIX_GOOGLE_ENDPOINT    default https://www.googleapis.com

#ifndef TOOLMIX_REMOTE_H_
#define TOOLMIX_REMOTE_H_

#include <memory>
#include <string>
#include <vector>

#include "toolmix/backend.h"
#include "toolmix/tools.h"

namespace toolmix {

struct ChatEndpoint {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model;
  Millis timeout{600'000};
};

// Throws ConfigError when TOOLMIX_API_KEY or TOOLMIX_MODEL is unset.
ChatEndpoint ChatEndpointFromEnv();

// Sends the context as a single user message. Connection failures, 429 and
// 5xx raise TransportError; other non-2xx statuses and malformed bodies
// raise Error.
class OpenAiCompatibleBackend : public ModelBackend {
 public:
  explicit OpenAiCompatibleBackend(ChatEndpoint endpoint);
  GenerationResponse Generate(const GenerationRequest& request) override;

 private:
  ChatEndpoint endpoint_;
};

struct GoogleSearchEndpoint {
  std::string base_url = "https://www.googleapis.com";
  std::string path = "/customsearch/v1";
  std::string api_key;
  std::string engine_id;
  int results = 8;
  Millis timeout{30'000};
};

// Throws ConfigError when the key or engine id is unset.
GoogleSearchEndpoint GoogleSearchEndpointFromEnv();

class GoogleSearchProvider : public SearchProvider {
 public:
  explicit GoogleSearchProvider(GoogleSearchEndpoint endpoint);
  // One block per result: "title: snippet (link)".
  std::vector<EvidenceBlock> Query(const std::string& query) override;

 private:
  GoogleSearchEndpoint endpoint_;
};

// Asks a search-enabled model for findings, one per line; each non-blank
// line becomes a block.
class LlmSearchProvider : public SearchProvider {
 public:
  explicit LlmSearchProvider(std::shared_ptr<ModelBackend> backend);
  std::vector<EvidenceBlock> Query(const std::string& query) override;

 private:
  std::shared_ptr<ModelBackend> backend_;
};

}  // namespace toolmix

#endif  // TOOLMIX_REMOTE_H_
