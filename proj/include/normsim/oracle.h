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

#ifndef NORMSIM_ORACLE_H_
#define NORMSIM_ORACLE_H_

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "normsim/agents.h"
#include "normsim/orchard_env.h"

namespace normsim {

enum class QueryKind { kActionSelection, kDiscussionUtterance, kNormativeQuery };

struct OracleRequest {
  std::string agent_name;
  std::string agent_profile;
  QueryKind kind = QueryKind::kActionSelection;
  Observation observation;
  std::string context;                  // RenderContext(observation)
  std::vector<std::string> candidates;  // crop names
  int turn = 0;
  int num_turns = 1;
  int query_crop = -1;             // normative queries
  std::vector<std::string> notes;  // normative-module readings, if any
};

struct OracleResponse {
  int crop = -1;
  std::string utterance;
  std::vector<Criticism> criticisms;
  std::optional<bool> prediction;
  std::string raw;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual OracleResponse Query(const OracleRequest& request) = 0;
};

// Deterministic stand-in for a language model: answers by running a policy.
class ScriptedOracle : public Oracle {
 public:
  explicit ScriptedOracle(std::unique_ptr<Policy> policy)
      : policy_(std::move(policy)) {}

  OracleResponse Query(const OracleRequest& request) override;
  Policy& policy() { return *policy_; }

 private:
  std::unique_ptr<Policy> policy_;
};

// Prompt view of an observation. Pure function of its input.
std::string RenderContext(const Observation& obs);

OracleRequest MakeRequest(QueryKind kind, const std::string& agent_name,
                          const std::string& agent_profile,
                          const Observation& obs);

std::string SystemPrompt(const OracleRequest& request);
std::string UserPrompt(const OracleRequest& request);

// Reads the single fenced JSON object of a model reply. Throws ParseError when
// it is missing, malformed, or names unknown crops or villagers.
OracleResponse ParseOracleReply(const OracleRequest& request,
                                const std::string& content);

inline constexpr const char* kApiKeyVariable = "NORMSIM_API_KEY";

struct ChatEndpoint {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int timeout_secs = 60;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Chat-completions client. Transport failures, 5xx answers and unparseable
// replies are retried with exponential backoff; 4xx answers abort at once.
// Safe to use from several threads; each query opens its own connection.
class ChatOracle : public Oracle {
 public:
  ChatOracle(ChatEndpoint endpoint, std::string api_key, Sleeper sleeper = {});

  // Reads NORMSIM_API_KEY; throws ConfigError naming it when unset.
  static std::string ApiKeyFromEnvironment();

  OracleResponse Query(const OracleRequest& request) override;

  const ChatEndpoint& endpoint() const { return endpoint_; }

 private:
  std::string Redact(std::string text) const;

  ChatEndpoint endpoint_;
  std::string api_key_;
  Sleeper sleeper_;
};

// An environment agent whose speech and actions come from an oracle. An
// optional normative module is kept up to date and its sanction predictions
// are passed along as notes.
class OracleAgent : public Agent {
 public:
  OracleAgent(std::string name, std::string profile,
              std::unique_ptr<Oracle> oracle,
              std::unique_ptr<NormativeAgentPolicy> advisor = nullptr)
      : name_(std::move(name)),
        profile_(std::move(profile)),
        oracle_(std::move(oracle)),
        advisor_(std::move(advisor)) {}

  const std::string& name() const override { return name_; }
  Utterance Discuss(const Observation& obs, int turn) override;
  int Act(const Observation& obs) override;
  bool WillBeCriticized(const Observation& obs, int crop);

  void set_num_turns(int turns) { num_turns_ = turns; }

 private:
  OracleRequest Request(QueryKind kind, const Observation& obs);

  std::string name_;
  std::string profile_;
  std::unique_ptr<Oracle> oracle_;
  std::unique_ptr<NormativeAgentPolicy> advisor_;
  int num_turns_ = 1;
};

}  // namespace normsim

#endif  // NORMSIM_ORACLE_H_
