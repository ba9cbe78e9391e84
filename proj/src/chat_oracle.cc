// Copyright 2026 The normsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "normsim/error.h"
#include "normsim/oracle.h"

namespace normsim {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl SplitBaseUrl(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw ConfigError("oracle.base_url '" + url + "' is not an http(s) URL");
  }
  std::string path = m[2].str();
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

}  // namespace

ChatOracle::ChatOracle(ChatEndpoint endpoint, std::string api_key, Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      sleeper_(std::move(sleeper)) {
  if (api_key_.empty()) {
    throw ConfigError(std::string(kApiKeyVariable) + " is empty");
  }
  if (endpoint_.max_attempts < 1) throw ConfigError("max_attempts must be positive");
  SplitBaseUrl(endpoint_.base_url);
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string ChatOracle::ApiKeyFromEnvironment() {
  const char* key = std::getenv(kApiKeyVariable);
  if (key == nullptr || *key == '\0') {
    throw ConfigError(std::string("the chat oracle needs an API key in the ") +
                      kApiKeyVariable + " environment variable");
  }
  return key;
}

std::string ChatOracle::Redact(std::string text) const {
  for (std::size_t pos = text.find(api_key_); pos != std::string::npos;
       pos = text.find(api_key_, pos)) {
    text.replace(pos, api_key_.size(), "[redacted]");
  }
  return text;
}

OracleResponse ChatOracle::Query(const OracleRequest& request) {
  const SplitUrl url = SplitBaseUrl(endpoint_.base_url);
  const nlohmann::json body{
      {"model", endpoint_.model},
      {"temperature", endpoint_.temperature},
      {"messages",
       {{{"role", "system"}, {"content", SystemPrompt(request)}},
        {{"role", "user"}, {"content", UserPrompt(request)}}}}};
  const std::string payload = body.dump();

  std::string last_failure;
  std::chrono::milliseconds backoff = endpoint_.initial_backoff;
  for (int attempt = 1; attempt <= endpoint_.max_attempts; ++attempt) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(endpoint_.timeout_secs, 0);
    client.set_read_timeout(endpoint_.timeout_secs, 0);
    client.set_write_timeout(endpoint_.timeout_secs, 0);
    client.set_bearer_token_auth(api_key_);
    auto result = client.Post(url.path + "/chat/completions", payload,
                              "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
    } else if (result->status >= 400 && result->status < 500) {
      const std::string detail = "HTTP " + std::to_string(result->status) +
                                 " from chat endpoint: " + Redact(result->body);
      if (result->status == 401 || result->status == 403) {
        throw ConfigError("chat endpoint rejected the credentials in " +
                          std::string(kApiKeyVariable) + " (" + detail + ")");
      }
      throw OracleError(detail);
    } else if (result->status >= 500) {
      last_failure = "HTTP " + std::to_string(result->status) + ": " +
                     Redact(result->body);
    } else {
      try {
        const auto reply = nlohmann::json::parse(result->body);
        const std::string content =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        try {
          return ParseOracleReply(request, content);
        } catch (const ParseError& e) {
          last_failure = std::string(e.what()) + "; raw reply: " + Redact(content);
        }
      } catch (const nlohmann::json::exception&) {
        last_failure = "malformed chat-completions body: " + Redact(result->body);
      }
    }
    if (attempt < endpoint_.max_attempts) {
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  throw OracleError("chat oracle gave up after " +
                    std::to_string(endpoint_.max_attempts) + " attempts: " +
                    last_failure);
}

}  // namespace normsim
