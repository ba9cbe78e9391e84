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

#include <regex>
#include <sstream>

#include "json.hpp"
#include "normsim/error.h"

namespace normsim {

OracleResponse ScriptedOracle::Query(const OracleRequest& request) {
  const Observation& obs = request.observation;
  OracleResponse response;
  switch (request.kind) {
    case QueryKind::kActionSelection:
      response.crop = policy_->Act(obs);
      response.raw = std::string(CropName(response.crop));
      break;
    case QueryKind::kDiscussionUtterance: {
      Utterance u = policy_->Discuss(obs, request.turn);
      response.utterance = std::move(u.text);
      response.criticisms = std::move(u.criticisms);
      response.raw = response.utterance;
      break;
    }
    case QueryKind::kNormativeQuery:
      response.prediction = policy_->PredictCriticism(obs, request.query_crop);
      response.raw = *response.prediction ? "true" : "false";
      break;
  }
  return response;
}

std::string RenderContext(const Observation& obs) {
  std::ostringstream out;
  out << "Current time: " << TimeOfDay(obs.t) << " (step " << obs.t + 1 << ")\n";
  out << "You are: " << obs.agent_names.at(obs.self) << "\n";
  out << "Villagers:";
  for (std::size_t i = 0; i < obs.agent_names.size(); ++i) {
    out << (i == 0 ? " " : ", ") << obs.agent_names[i];
  }
  out << "\n\nclassification institution SIGNALS:\n";
  if (obs.signals.empty()) out << "(none)\n";
  for (const auto& sig : obs.signals) {
    out << sig.institution_name << "'s Message: " << sig.text << "\n";
  }
  out << "\nHarvests last step:\n";
  if (obs.last_step_actions.empty()) out << "(none yet)\n";
  for (std::size_t i = 0; i < obs.last_step_actions.size(); ++i) {
    out << obs.agent_names[i] << ": " << CropName(obs.last_step_actions[i]) << "\n";
  }
  out << "\nCriticisms last step:\n";
  if (obs.last_step_criticisms.empty()) out << "(none)\n";
  for (const auto& c : obs.last_step_criticisms) {
    out << obs.agent_names[c.sender] << " criticized " << obs.agent_names[c.target]
        << " for harvesting " << CropName(c.criticized_crop) << "\n";
  }
  out << "Criticisms you received last step: " << obs.own_received_criticisms.size()
      << "\n\nDiscussion so far:\n";
  if (obs.discussion_so_far.empty()) out << "(nobody has spoken yet)\n";
  for (const auto& u : obs.discussion_so_far) {
    out << obs.agent_names[u.speaker] << ": \"" << u.text << "\"\n";
  }
  return out.str();
}

OracleRequest MakeRequest(QueryKind kind, const std::string& agent_name,
                          const std::string& agent_profile,
                          const Observation& obs) {
  OracleRequest request;
  request.agent_name = agent_name;
  request.agent_profile = agent_profile;
  request.kind = kind;
  request.observation = obs;
  request.context = RenderContext(obs);
  for (int c = 0; c < obs.num_crops; ++c) request.candidates.emplace_back(CropName(c));
  return request;
}

std::string SystemPrompt(const OracleRequest& request) {
  return "You are " + request.agent_name + ". " + request.agent_profile +
         "\nYou live in the farming community of Skymeadow, where villagers "
         "harvest fruit together each day. Be a good citizen.";
}

std::string UserPrompt(const OracleRequest& request) {
  std::ostringstream out;
  out << request.context << "\n";
  if (!request.notes.empty()) {
    out << "Your own assessment of how the community reacts:\n";
    for (const auto& n : request.notes) out << "- " << n << "\n";
    out << "\n";
  }
  std::string candidates;
  for (const auto& c : request.candidates) {
    if (!candidates.empty()) candidates += ", ";
    candidates += c;
  }
  switch (request.kind) {
    case QueryKind::kActionSelection:
      out << "Choose which crop to harvest now. Candidates: " << candidates
          << ".\nRespond with a single fenced JSON object and nothing else, "
             "exactly in this form:\n```json\n{\"action\": \"<crop>\"}\n```\n";
      break;
    case QueryKind::kDiscussionUtterance:
      out << "It is your turn to speak (discussion turn " << request.turn + 1 << "/"
          << request.num_turns
          << "). You may criticize villagers for what they harvested last step."
             "\nRespond with a single fenced JSON object and nothing else, "
             "exactly in this form (criticisms may be an empty list):\n"
             "```json\n{\"utterance\": \"<what you say>\", \"criticisms\": "
             "[{\"target\": \"<villager>\", \"crop\": \"<crop they harvested>\"}]}"
             "\n```\n";
      break;
    case QueryKind::kNormativeQuery:
      out << "Question: will the community criticize you if you harvest "
          << CropName(request.query_crop)
          << " now?\nRespond with a single fenced JSON object and nothing else, "
             "exactly in this form:\n```json\n{\"prediction\": true}\n```\n";
      break;
  }
  return out.str();
}

namespace {

nlohmann::json ExtractObject(const std::string& content) {
  static const std::regex kFence("```(?:json)?\\s*([\\s\\S]*?)```");
  std::smatch match;
  std::string body;
  if (std::regex_search(content, match, kFence)) {
    body = match[1].str();
  } else {
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || content[first] != '{') {
      throw ParseError("reply contains no fenced JSON object");
    }
    body = content;
  }
  nlohmann::json j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("reply's JSON block is not a valid object");
  }
  return j;
}

int CropFromName(const OracleRequest& request, const nlohmann::json& value) {
  if (!value.is_string()) throw ParseError("crop must be a string");
  const auto name = value.get<std::string>();
  for (int c = 0; c < static_cast<int>(request.candidates.size()); ++c) {
    if (request.candidates[c] == name || CropSingular(c) == name) return c;
  }
  throw ParseError("unknown crop '" + name + "'");
}

}  // namespace

OracleResponse ParseOracleReply(const OracleRequest& request,
                                const std::string& content) {
  const nlohmann::json j = ExtractObject(content);
  OracleResponse response;
  response.raw = content;
  const Observation& obs = request.observation;
  switch (request.kind) {
    case QueryKind::kActionSelection:
      if (!j.contains("action")) throw ParseError("reply lacks \"action\"");
      response.crop = CropFromName(request, j.at("action"));
      break;
    case QueryKind::kDiscussionUtterance: {
      if (!j.contains("utterance") || !j.at("utterance").is_string()) {
        throw ParseError("reply lacks a string \"utterance\"");
      }
      response.utterance = j.at("utterance").get<std::string>();
      if (!j.contains("criticisms")) break;
      if (!j.at("criticisms").is_array()) {
        throw ParseError("\"criticisms\" must be a list");
      }
      for (const auto& c : j.at("criticisms")) {
        if (!c.is_object() || !c.contains("target") || !c.at("target").is_string() ||
            !c.contains("crop")) {
          throw ParseError("each criticism needs a target name and a crop");
        }
        const auto target = c.at("target").get<std::string>();
        int index = -1;
        for (int i = 0; i < static_cast<int>(obs.agent_names.size()); ++i) {
          if (obs.agent_names[i] == target) index = i;
        }
        if (index < 0) throw ParseError("unknown villager '" + target + "'");
        if (index == obs.self) throw ParseError("agents cannot criticize themselves");
        const int crop = CropFromName(request, c.at("crop"));
        if (obs.last_step_actions.empty() || obs.last_step_actions[index] != crop) {
          throw ParseError("criticism of " + target + " names a harvest they did "
                           "not make last step");
        }
        response.criticisms.push_back({obs.self, index, crop,
                                       CriticismBasis::kCommunity, -1,
                                       response.utterance});
      }
      break;
    }
    case QueryKind::kNormativeQuery:
      if (!j.contains("prediction") || !j.at("prediction").is_boolean()) {
        throw ParseError("reply lacks a boolean \"prediction\"");
      }
      response.prediction = j.at("prediction").get<bool>();
      break;
  }
  return response;
}

OracleRequest OracleAgent::Request(QueryKind kind, const Observation& obs) {
  OracleRequest request = MakeRequest(kind, name_, profile_, obs);
  request.num_turns = num_turns_;
  if (advisor_) {
    for (const auto& p : advisor_->Predictions(obs)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "harvesting %s: %.0f%% chance of criticism",
                    std::string(CropName(p.action)).c_str(), 100.0 * p.probability);
      request.notes.emplace_back(buf);
    }
  }
  return request;
}

Utterance OracleAgent::Discuss(const Observation& obs, int turn) {
  OracleRequest request = Request(QueryKind::kDiscussionUtterance, obs);
  request.turn = turn;
  OracleResponse response = oracle_->Query(request);
  return Utterance{obs.self, turn, std::move(response.utterance),
                   std::move(response.criticisms)};
}

int OracleAgent::Act(const Observation& obs) {
  if (advisor_) advisor_->Update(obs);
  const OracleResponse response = oracle_->Query(Request(QueryKind::kActionSelection, obs));
  return response.crop;
}

bool OracleAgent::WillBeCriticized(const Observation& obs, int crop) {
  OracleRequest request = Request(QueryKind::kNormativeQuery, obs);
  request.query_crop = crop;
  const OracleResponse response = oracle_->Query(request);
  if (!response.prediction) throw OracleError("normative query went unanswered");
  return *response.prediction;
}

}  // namespace normsim
