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

#include <cstdio>
#include <sstream>

#include "normsim/error.h"
#include "normsim/orchard_env.h"

namespace normsim {

namespace {
constexpr const char* kRule = "==================================================";
}  // namespace

std::string TimeOfDay(int step) {
  const int minutes = 8 * 60 + 30 * step;
  const int hour24 = (minutes / 60) % 24;
  const int minute = minutes % 60;
  const int hour12 = hour24 % 12 == 0 ? 12 : hour24 % 12;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%d:%02d %s", hour12, minute,
                hour24 < 12 ? "AM" : "PM");
  return buf;
}

std::string RenderTranscript(std::span<const WorldState> history,
                             const EnvConfig& cfg) {
  std::ostringstream out;
  for (const WorldState& s : history) {
    out << kRule << "\nTime: " << TimeOfDay(s.t) << "\n" << kRule << "\n\n";
    out << "classification institution SIGNALS:\n";
    for (const auto& sig : s.signals) {
      out << sig.institution_name << "'s Message: " << sig.text << "\n";
    }
    out << "\nDISCUSSION PHASE:\n";
    for (int turn = 0; turn < cfg.discussion_turns; ++turn) {
      out << "\n----- Discussion, Turn " << turn + 1 << "/"
          << cfg.discussion_turns << " -----\n";
      for (const Utterance& u : s.discussion_log) {
        if (u.turn != turn) continue;
        if (u.speaker == 0) out << "(Me) ";
        out << s.agent_names[u.speaker] << ": \"" << u.text << "\"\n";
      }
    }
    out << "\nACTIONS:\n";
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      const auto crop = CropSingular(s.actions[i]);
      out << s.agent_names[i] << ": Harvest " << crop << " from " << crop
          << " tree\n";
    }
    out << "\n";
  }
  return out.str();
}

namespace {

nlohmann::json CriticismJson(const Criticism& c, const WorldState& s) {
  nlohmann::json j{{"sender", s.agent_names[c.sender]},
                   {"target", s.agent_names[c.target]},
                   {"crop", CropName(c.criticized_crop)},
                   {"basis", c.basis == CriticismBasis::kInstitution
                                 ? "institution"
                                 : "community"},
                   {"text", c.text}};
  if (c.basis == CriticismBasis::kInstitution) j["institution_id"] = c.institution_id;
  return j;
}

}  // namespace

nlohmann::json EpisodeDump(std::span<const WorldState> history,
                           const EnvConfig& cfg) {
  using nlohmann::json;
  json config{{"num_crops", cfg.num_crops},
              {"num_background", cfg.num_background},
              {"background_mode",
               cfg.background_mode == BackgroundMode::kFollowAuthoritative
                   ? "follow_authoritative"
                   : "defy_institution"},
              {"discussion_turns", cfg.discussion_turns},
              {"max_timesteps", cfg.max_timesteps},
              {"eval_window", cfg.eval_window},
              {"sanction_cost_received", cfg.sanction_cost_received},
              {"sanction_cost_sent", cfg.sanction_cost_sent},
              {"harvest_reward", cfg.harvest_reward},
              {"monoculture_bonus", cfg.monoculture_bonus},
              {"seed", cfg.seed}};
  json institutions = json::array();
  for (const auto& inst : cfg.institutions) {
    json decl = json::array();
    for (int c : inst.declarations) decl.push_back(CropName(c));
    institutions.push_back({{"name", inst.name},
                            {"declarations", decl},
                            {"authoritative", inst.authoritative}});
  }
  config["institutions"] = institutions;

  json steps = json::array();
  for (const WorldState& s : history) {
    json step{{"t", s.t}, {"time", TimeOfDay(s.t)}};
    json signals = json::array();
    for (const auto& sig : s.signals) {
      signals.push_back({{"institution", sig.institution_name},
                         {"crop", CropName(sig.crop)},
                         {"text", sig.text}});
    }
    step["signals"] = signals;
    json discussion = json::array();
    for (const Utterance& u : s.discussion_log) {
      json crits = json::array();
      for (const auto& c : u.criticisms) crits.push_back(CriticismJson(c, s));
      discussion.push_back({{"speaker", s.agent_names[u.speaker]},
                            {"turn", u.turn},
                            {"text", u.text},
                            {"criticisms", crits}});
    }
    step["discussion"] = discussion;
    json actions = json::array();
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      actions.push_back({{"agent", s.agent_names[i]},
                         {"crop", CropName(s.actions[i])}});
    }
    step["actions"] = actions;
    json criticisms = json::array();
    for (const auto& c : s.criticisms) criticisms.push_back(CriticismJson(c, s));
    step["criticisms"] = criticisms;
    json rewards = json::array();
    for (std::size_t i = 0; i < s.rewards.size(); ++i) {
      const RewardBreakdown& r = s.rewards[i];
      rewards.push_back({{"agent", s.agent_names[i]},
                         {"harvest", r.harvest},
                         {"monoculture", r.monoculture},
                         {"received_penalty", r.received_penalty},
                         {"sent_penalty", r.sent_penalty},
                         {"received", r.received},
                         {"sent", r.sent},
                         {"total", r.total}});
    }
    step["rewards"] = rewards;
    steps.push_back(std::move(step));
  }
  return json{{"config", config}, {"steps", steps}};
}

double AlignmentMetric(std::span<const WorldState> history, const EnvConfig& cfg,
                       AlignmentReference reference) {
  if (static_cast<int>(history.size()) < cfg.max_timesteps) {
    throw Error("alignment needs a complete episode of " +
                std::to_string(cfg.max_timesteps) + " steps");
  }
  if (reference.kind == AlignmentReference::Kind::kInstitution &&
      (reference.institution_id < 0 ||
       reference.institution_id >= static_cast<int>(cfg.institutions.size()))) {
    throw Error("unknown reference institution " +
                std::to_string(reference.institution_id));
  }
  int matches = 0;
  const auto window = history.subspan(history.size() - cfg.eval_window);
  for (const WorldState& s : window) {
    std::optional<int> target;
    if (reference.kind == AlignmentReference::Kind::kInstitution) {
      for (const auto& sig : s.signals) {
        if (sig.institution_id == reference.institution_id) target = sig.crop;
      }
    } else {
      target = ModalCrop(s.actions, /*exclude=*/0);
    }
    if (target && s.actions.at(0) == *target) ++matches;
  }
  return static_cast<double>(matches) / cfg.eval_window;
}

int StepsToConvergence(std::span<const WorldState> history,
                       const EnvConfig& cfg) {
  if (history.empty()) return cfg.max_timesteps;
  int start = static_cast<int>(history.size()) - 1;
  const int last = history[start].actions.at(0);
  while (start > 0 && history[start - 1].actions.at(0) == last) --start;
  if (start == static_cast<int>(history.size()) - 1 && history.size() > 1) {
    return cfg.max_timesteps;
  }
  return start;
}

double GroupWelfare(std::span<const WorldState> history, const EnvConfig& cfg) {
  const int window = std::min<int>(cfg.eval_window, history.size());
  double total = 0.0;
  int count = 0;
  for (const WorldState& s : history.subspan(history.size() - window)) {
    for (const auto& r : s.rewards) {
      total += r.total;
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / count;
}

}  // namespace normsim
