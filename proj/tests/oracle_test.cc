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

#include "normsim/oracle.h"

#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "mock_chat_server.h"
#include "normsim/agents.h"
#include "normsim/error.h"

namespace normsim {
namespace {

using testing::Fenced;
using testing::MockChatServer;

constexpr char kKey[] = "sk-test-4f1d2c9b7a";

Observation SampleObs() {
  Observation obs;
  obs.self = 0;
  obs.t = 1;
  obs.num_crops = 3;
  obs.agent_names = {"Alice", "John", "Jane"};
  obs.signals = {InstitutionSignal{0, "Ophilia", 1, 0, SignalText(0)}};
  obs.previous_signals = {InstitutionSignal{0, "Ophilia", 0, 0, SignalText(0)}};
  obs.last_step_actions = {1, 0, 0};
  obs.discussion_so_far = {Utterance{1, 0, "Alice, please harvest apples.",
                                     {Criticism{1, 0, 1, CriticismBasis::kInstitution, 0, "x"}}}};
  return obs;
}

TEST(RenderContextTest, Golden) {
  const std::string expected =
      "Current time: 8:30 AM (step 2)\n"
      "You are: Alice\n"
      "Villagers: Alice, John, Jane\n"
      "\n"
      "classification institution SIGNALS:\n"
      "Ophilia's Message: Valued citizens of Skymeadow, let's focus on harvesting "
      "apples. It is important for the prosperity of our community!\n"
      "\n"
      "Harvests last step:\n"
      "Alice: bananas\n"
      "John: apples\n"
      "Jane: apples\n"
      "\n"
      "Criticisms last step:\n"
      "(none)\n"
      "Criticisms you received last step: 0\n"
      "\n"
      "Discussion so far:\n"
      "John: \"Alice, please harvest apples.\"\n";
  EXPECT_EQ(RenderContext(SampleObs()), expected);
}

TEST(RenderContextTest, PureAndFreeOfAuthority) {
  const Observation obs = SampleObs();
  const std::string a = RenderContext(obs);
  EXPECT_EQ(a, RenderContext(obs));
  const OracleRequest r = MakeRequest(QueryKind::kActionSelection, "Alice", "A farmer.", obs);
  for (const std::string& text : {a, SystemPrompt(r), UserPrompt(r)}) {
    EXPECT_EQ(text.find("authoritative"), std::string::npos);
    EXPECT_EQ(text.find("authority"), std::string::npos);
  }
}

TEST(PromptTest, SystemPromptAsksForGoodCitizenship) {
  const OracleRequest r = MakeRequest(QueryKind::kActionSelection, "Alice", "A farmer.", SampleObs());
  EXPECT_EQ(SystemPrompt(r),
            "You are Alice. A farmer.\nYou live in the farming community of "
            "Skymeadow, where villagers harvest fruit together each day. Be a good "
            "citizen.");
}

TEST(PromptTest, UserPromptFormatInstructionPerKind) {
  OracleRequest r = MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs());
  EXPECT_NE(UserPrompt(r).find("{\"action\": \"<crop>\"}"), std::string::npos);
  EXPECT_NE(UserPrompt(r).find("Candidates: apples, bananas, peaches."), std::string::npos);
  r.kind = QueryKind::kDiscussionUtterance;
  EXPECT_NE(UserPrompt(r).find("\"criticisms\""), std::string::npos);
  r.kind = QueryKind::kNormativeQuery;
  r.query_crop = 1;
  EXPECT_NE(UserPrompt(r).find("harvest bananas now?"), std::string::npos);
  EXPECT_NE(UserPrompt(r).find("{\"prediction\": true}"), std::string::npos);
  EXPECT_EQ(UserPrompt(r).rfind(RenderContext(SampleObs()), 0), 0u);
}

// --- Scripted oracle ---------------------------------------------------------

TEST(ScriptedOracleTest, FollowerHarvestsDeclaration) {
  ScriptedOracle oracle(std::make_unique<BackgroundAgentPolicy>(
      BackgroundMode::kFollowAuthoritative, 0, std::nullopt));
  Observation obs = SampleObs();
  obs.self = 1;
  const auto r = oracle.Query(MakeRequest(QueryKind::kActionSelection, "John", "", obs));
  EXPECT_EQ(r.crop, 0);
}

TEST(ScriptedOracleTest, DefyAgentCriticizesFocal) {
  ScriptedOracle oracle(std::make_unique<BackgroundAgentPolicy>(
      BackgroundMode::kDefyInstitution, 0, 1));
  Observation obs = SampleObs();
  obs.self = 1;
  obs.last_step_actions = {0, 1, 1};
  OracleRequest req = MakeRequest(QueryKind::kDiscussionUtterance, "John", "", obs);
  const auto r = oracle.Query(req);
  ASSERT_EQ(r.criticisms.size(), 1u);
  EXPECT_EQ(r.criticisms[0].target, 0);
  EXPECT_EQ(r.criticisms[0].criticized_crop, 0);
  EXPECT_NE(r.utterance.find("Alice, why are you still harvesting apples"), std::string::npos);
  EXPECT_NE(r.utterance.find(r.criticisms[0].text), std::string::npos);
}

TEST(ScriptedOracleTest, NormativeQueryFollowsCommunity) {
  const std::array<int, 1> ids{0};
  ScriptedOracle oracle(
      std::make_unique<NormativeAgentPolicy>(NormativeState::ForInstitutions(ids)));
  Observation obs = SampleObs();
  obs.last_step_actions = {0, 1, 1};  // others harvested bananas
  OracleRequest req = MakeRequest(QueryKind::kNormativeQuery, "Alice", "", obs);
  req.query_crop = 1;
  EXPECT_EQ(oracle.Query(req).prediction, std::optional<bool>(false));
  req.query_crop = 0;
  EXPECT_EQ(oracle.Query(req).prediction, std::optional<bool>(true));
}

TEST(ScriptedOracleTest, Deterministic) {
  auto make = [] {
    return ScriptedOracle(std::make_unique<BaselineAgentPolicy>(99));
  };
  ScriptedOracle a = make();
  ScriptedOracle b = make();
  Observation obs = SampleObs();
  obs.signals.push_back(InstitutionSignal{1, "Bram", 1, 2, SignalText(2)});
  for (int i = 0; i < 50; ++i) {
    const auto req = MakeRequest(QueryKind::kActionSelection, "Alice", "", obs);
    EXPECT_EQ(a.Query(req).crop, b.Query(req).crop);
  }
}

// --- Reply parsing -----------------------------------------------------------

TEST(ParseOracleReplyTest, ValidReplies) {
  OracleRequest req = MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs());
  EXPECT_EQ(ParseOracleReply(req, Fenced(R"({"action": "apples"})")).crop, 0);
  EXPECT_EQ(ParseOracleReply(req, "Sure!\n```\n{\"action\": \"banana\"}\n```").crop, 1);
  EXPECT_EQ(ParseOracleReply(req, R"({"action": "peaches"})").crop, 2);

  req.kind = QueryKind::kDiscussionUtterance;
  const auto d = ParseOracleReply(
      req, Fenced(R"({"utterance": "Jane, stop.", "criticisms": [{"target": "Jane", "crop": "apples"}]})"));
  EXPECT_EQ(d.utterance, "Jane, stop.");
  ASSERT_EQ(d.criticisms.size(), 1u);
  EXPECT_EQ(d.criticisms[0].sender, 0);
  EXPECT_EQ(d.criticisms[0].target, 2);
  EXPECT_EQ(d.criticisms[0].criticized_crop, 0);

  req.kind = QueryKind::kNormativeQuery;
  EXPECT_EQ(ParseOracleReply(req, Fenced(R"({"prediction": false})")).prediction,
            std::optional<bool>(false));
}

TEST(ParseOracleReplyTest, MalformedRepliesThrow) {
  OracleRequest req = MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs());
  EXPECT_THROW(ParseOracleReply(req, "I'll pick apples."), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced("{action: apples}")), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"action": "kiwis"})")), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"action": "plums"})")), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"crop": "apples"})")), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced("[1, 2]")), ParseError);

  req.kind = QueryKind::kDiscussionUtterance;
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"criticisms": []})")), ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"utterance": "x", "criticisms": [{"target": "Zed", "crop": "apples"}]})")),
               ParseError);
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"utterance": "x", "criticisms": [{"target": "Alice", "crop": "bananas"}]})")),
               ParseError);
  // Jane harvested apples, not bananas.
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"utterance": "x", "criticisms": [{"target": "Jane", "crop": "bananas"}]})")),
               ParseError);

  req.kind = QueryKind::kNormativeQuery;
  EXPECT_THROW(ParseOracleReply(req, Fenced(R"({"prediction": "yes"})")), ParseError);
}

// --- Chat oracle against a local endpoint ------------------------------------

ChatEndpoint Endpoint(const MockChatServer& server) {
  ChatEndpoint e;
  e.base_url = server.base_url();
  e.model = "mock-model";
  e.timeout_secs = 5;
  return e;
}

TEST(ChatOracleTest, ParsesActionReply) {
  nlohmann::json seen;
  MockChatServer server([&](const nlohmann::json& req) {
    seen = req;
    return MockChatServer::Reply{200, Fenced(R"({"action":"apples"})")};
  });
  std::vector<std::chrono::milliseconds> sleeps;
  ChatOracle oracle(Endpoint(server), kKey, [&](auto d) { sleeps.push_back(d); });
  const auto req = MakeRequest(QueryKind::kActionSelection, "Alice", "A farmer.", SampleObs());
  EXPECT_EQ(oracle.Query(req).crop, 0);
  EXPECT_EQ(server.calls(), 1);
  EXPECT_TRUE(sleeps.empty());
  EXPECT_EQ(seen.at("model"), "mock-model");
  EXPECT_EQ(seen.at("temperature"), 0.0);
  EXPECT_EQ(seen.at("messages").at(0).at("content"), SystemPrompt(req));
  EXPECT_EQ(seen.at("messages").at(1).at("content"), UserPrompt(req));
  EXPECT_EQ(server.authorization().at(0), std::string("Bearer ") + kKey);
}

TEST(ChatOracleTest, MalformedThriceExhaustsRetries) {
  MockChatServer server([](const nlohmann::json&) {
    return MockChatServer::Reply{200, "I cannot decide."};
  });
  std::vector<std::chrono::milliseconds> sleeps;
  ChatOracle oracle(Endpoint(server), kKey, [&](auto d) { sleeps.push_back(d); });
  const auto req = MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs());
  try {
    oracle.Query(req);
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("I cannot decide."), std::string::npos);
  }
  EXPECT_EQ(server.calls(), 3);
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_EQ(sleeps[0], std::chrono::milliseconds(1000));
  EXPECT_EQ(sleeps[1], std::chrono::milliseconds(2000));
}

TEST(ChatOracleTest, RecoversAfterServerError) {
  int n = 0;
  MockChatServer server([&](const nlohmann::json&) {
    return ++n == 1 ? MockChatServer::Reply{503, "busy"}
                    : MockChatServer::Reply{200, Fenced(R"({"action":"bananas"})")};
  });
  ChatOracle oracle(Endpoint(server), kKey, [](auto) {});
  EXPECT_EQ(oracle.Query(MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs())).crop, 1);
  EXPECT_EQ(server.calls(), 2);
}

TEST(ChatOracleTest, UnauthorizedIsImmediateConfigError) {
  MockChatServer server([](const nlohmann::json&) {
    return MockChatServer::Reply{401, std::string("invalid key ") + kKey};
  });
  int sleeps = 0;
  ChatOracle oracle(Endpoint(server), kKey, [&](auto) { ++sleeps; });
  try {
    oracle.Query(MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs()));
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).find(kKey), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[redacted]"), std::string::npos);
  }
  EXPECT_EQ(server.calls(), 1);
  EXPECT_EQ(sleeps, 0);
}

TEST(ChatOracleTest, OtherClientErrorsAbortWithoutRetry) {
  MockChatServer server([](const nlohmann::json&) {
    return MockChatServer::Reply{400, "bad request"};
  });
  ChatOracle oracle(Endpoint(server), kKey, [](auto) {});
  EXPECT_THROW(oracle.Query(MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs())),
               OracleError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(ChatOracleTest, EchoedKeyIsRedacted) {
  MockChatServer server([](const nlohmann::json&) {
    return MockChatServer::Reply{200, std::string("your key is ") + kKey};
  });
  ChatOracle oracle(Endpoint(server), kKey, [](auto) {});
  try {
    oracle.Query(MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs()));
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    EXPECT_EQ(std::string(e.what()).find(kKey), std::string::npos);
  }
}

TEST(ChatOracleTest, ConfigurationChecks) {
  ChatEndpoint e;
  EXPECT_THROW(ChatOracle(e, ""), ConfigError);
  e.base_url = "ftp://example.com";
  EXPECT_THROW(ChatOracle(e, kKey), ConfigError);
  e.base_url = "http://127.0.0.1:1/v1";
  e.max_attempts = 0;
  EXPECT_THROW(ChatOracle(e, kKey), ConfigError);
}

TEST(ChatOracleTest, MissingEnvironmentKey) {
  ::unsetenv(kApiKeyVariable);
  try {
    ChatOracle::ApiKeyFromEnvironment();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(kApiKeyVariable), std::string::npos);
  }
}

TEST(ChatOracleTest, ConcurrentQueries) {
  MockChatServer server([](const nlohmann::json&) {
    return MockChatServer::Reply{200, Fenced(R"({"action":"peaches"})")};
  });
  ChatOracle oracle(Endpoint(server), kKey, [](auto) {});
  const auto req = MakeRequest(QueryKind::kActionSelection, "Alice", "", SampleObs());
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 5; ++j) ok += oracle.Query(req).crop == 2;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 40);
}

}  // namespace
}  // namespace normsim
