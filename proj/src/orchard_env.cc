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

#include "normsim/orchard_env.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "normsim/error.h"
#include "normsim/rng.h"

namespace normsim {

std::vector<std::string> EnvConfig::Validate() const {
  std::vector<std::string> errors;
  auto bad = [&](std::string msg) { errors.push_back(std::move(msg)); };
  if (num_crops < 2 || num_crops > kMaxCrops) {
    bad("num_crops must be in [2, 5], got " + std::to_string(num_crops));
  }
  const int crops = std::clamp(num_crops, 1, kMaxCrops);
  int authoritative = 0;
  for (std::size_t i = 0; i < institutions.size(); ++i) {
    const auto& inst = institutions[i];
    const std::string where = "institutions[" + std::to_string(i) + "]";
    if (inst.name.empty()) bad(where + ".name must be nonempty");
    if (inst.declarations.empty()) bad(where + ".crop must name a crop");
    for (int c : inst.declarations) {
      if (c < 0 || c >= crops) {
        bad(where + ".crop index " + std::to_string(c) +
            " is not among the first " + std::to_string(crops) + " crops");
      }
    }
    if (inst.authoritative) ++authoritative;
  }
  if (num_background < 0) bad("num_background must be nonnegative");
  if (num_background > 0 &&
      background_mode == BackgroundMode::kFollowAuthoritative &&
      authoritative != 1) {
    bad("background_mode follow_authoritative needs exactly one authoritative "
        "institution, found " + std::to_string(authoritative));
  }
  if (num_background > 0 && background_mode == BackgroundMode::kDefyInstitution) {
    if (defy_institution < 0 ||
        defy_institution >= static_cast<int>(institutions.size())) {
      bad("defy_institution must name a configured institution");
    } else if (!institutions[defy_institution].declarations.empty()) {
      const auto& decl = institutions[defy_institution].declarations;
      const int crop = defy_crop.value_or((decl.front() + 1) % crops);
      if (crop < 0 || crop >= crops) {
        bad("defy_crop index " + std::to_string(crop) + " out of range");
      } else if (std::find(decl.begin(), decl.end(), crop) != decl.end()) {
        bad("defy_crop must differ from every declaration of the defied "
            "institution");
      }
    }
  }
  if (discussion_turns < 0) bad("discussion_turns must be nonnegative");
  if (max_timesteps < 1) bad("max_timesteps must be positive");
  if (eval_window < 1 || eval_window > max_timesteps) {
    bad("eval_window must be in [1, max_timesteps]");
  }
  if (!(sanction_cost_received >= 0.0)) bad("sanction_cost_received must be >= 0");
  if (!(sanction_cost_sent >= 0.0)) bad("sanction_cost_sent must be >= 0");
  if (!(monoculture_bonus >= 0.0)) bad("monoculture_bonus must be >= 0");
  if (!std::isfinite(harvest_reward)) bad("harvest_reward must be finite");
  return errors;
}

void EnvConfig::CheckValid() const {
  auto errors = Validate();
  if (errors.empty()) return;
  std::string msg = "invalid environment config:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw ConfigError(msg);
}

std::vector<Institution> EnvConfig::BuildInstitutions() const {
  std::vector<Institution> out;
  for (std::size_t i = 0; i < institutions.size(); ++i) {
    const auto& c = institutions[i];
    out.push_back(Institution{static_cast<int>(i), c.name,
                              DeclarationPolicy::Rotating(c.declarations),
                              c.authoritative});
  }
  return out;
}

std::vector<std::string> EnvConfig::crop_names() const {
  std::vector<std::string> out;
  for (int c = 0; c < num_crops; ++c) out.emplace_back(CropName(c));
  return out;
}

std::optional<int> EnvConfig::authoritative_institution() const {
  for (std::size_t i = 0; i < institutions.size(); ++i) {
    if (institutions[i].authoritative) return static_cast<int>(i);
  }
  return std::nullopt;
}

int EnvConfig::resolved_defy_crop() const {
  if (defy_crop) return *defy_crop;
  const auto& decl = institutions.at(defy_institution).declarations;
  return (decl.front() + 1) % num_crops;
}

WorldState InitialWorldState(const EnvConfig& cfg) {
  WorldState s;
  s.rng_state = Mix64(cfg.seed);
  return s;
}

std::optional<int> ModalCrop(std::span<const int> actions, int exclude) {
  std::vector<int> counts;
  for (int i = 0; i < static_cast<int>(actions.size()); ++i) {
    if (i == exclude) continue;
    if (actions[i] >= static_cast<int>(counts.size())) counts.resize(actions[i] + 1);
    ++counts[actions[i]];
  }
  if (counts.empty()) return std::nullopt;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                          counts.begin());
}

RewardBreakdown ComputeReward(const EnvConfig& cfg, std::span<const int> actions,
                              std::span<const Criticism> criticisms, int agent) {
  RewardBreakdown r;
  int modal_count = 0;
  if (auto modal = ModalCrop(actions)) {
    modal_count = static_cast<int>(std::count(actions.begin(), actions.end(), *modal));
  }
  for (const Criticism& c : criticisms) {
    if (c.target == agent) ++r.received;
    if (c.sender == agent) ++r.sent;
  }
  r.harvest = cfg.harvest_reward;
  r.monoculture = cfg.monoculture_bonus * modal_count /
                  static_cast<double>(actions.size());
  r.received_penalty = cfg.sanction_cost_received * r.received;
  r.sent_penalty = cfg.sanction_cost_sent * r.sent;
  r.total = r.harvest + r.monoculture - r.received_penalty - r.sent_penalty;
  return r;
}

namespace {

Observation Observe(const WorldState& prev, const WorldState& current, int self,
                    const EnvConfig& cfg) {
  Observation o;
  o.self = self;
  o.t = current.t;
  o.num_crops = cfg.num_crops;
  o.agent_names = current.agent_names;
  o.signals = current.signals;
  o.previous_signals = prev.signals;
  o.last_step_actions = prev.actions;
  o.last_step_criticisms = prev.criticisms;
  for (const Criticism& c : prev.criticisms) {
    if (c.target == self) o.own_received_criticisms.push_back(c);
  }
  o.discussion_so_far = current.discussion_log;
  return o;
}

void CheckCriticism(const Criticism& c, const WorldState& prev, int speaker,
                    int num_agents, const std::string& who) {
  if (c.sender != speaker) {
    throw OracleError(who + " issued a criticism on behalf of agent " +
                      std::to_string(c.sender));
  }
  if (c.target < 0 || c.target >= num_agents || c.target == speaker) {
    throw OracleError(who + " criticized an invalid target " +
                      std::to_string(c.target));
  }
  if (prev.actions.empty()) {
    throw OracleError(who + " criticized before any harvest took place");
  }
  if (prev.actions[c.target] != c.criticized_crop) {
    throw OracleError(who + " criticized " + prev.agent_names[c.target] +
                      " for a harvest they did not make");
  }
}

}  // namespace

WorldState Step(const WorldState& state, std::span<Agent* const> agents,
                const EnvConfig& cfg) {
  if (agents.empty()) throw Error("an episode needs at least one agent");
  const int n = static_cast<int>(agents.size());
  WorldState next;
  next.t = state.t + 1;
  next.rng_state = Mix64(state.rng_state);
  for (Agent* a : agents) next.agent_names.push_back(a->name());

  for (const Institution& inst : cfg.BuildInstitutions()) {
    next.signals.push_back(Declare(inst, next.t));
  }

  std::set<std::pair<int, int>> issued;
  for (int turn = 0; turn < cfg.discussion_turns; ++turn) {
    for (int i = 0; i < n; ++i) {
      Utterance u = agents[i]->Discuss(Observe(state, next, i, cfg), turn);
      u.speaker = i;
      u.turn = turn;
      std::vector<Criticism> accepted;
      for (Criticism& c : u.criticisms) {
        CheckCriticism(c, state, i, n, next.agent_names[i]);
        // At most one sanction per sender and target within a step.
        if (issued.emplace(c.sender, c.target).second) {
          next.criticisms.push_back(c);
          accepted.push_back(std::move(c));
        }
      }
      u.criticisms = std::move(accepted);
      next.discussion_log.push_back(std::move(u));
    }
  }

  std::vector<Observation> views;
  for (int i = 0; i < n; ++i) views.push_back(Observe(state, next, i, cfg));
  for (int i = 0; i < n; ++i) {
    const int crop = agents[i]->Act(views[i]);
    if (crop < 0 || crop >= cfg.num_crops) {
      throw OracleError(next.agent_names[i] + " chose crop " +
                        std::to_string(crop) + ", outside [0, " +
                        std::to_string(cfg.num_crops) + ")");
    }
    next.actions.push_back(crop);
  }

  for (int i = 0; i < n; ++i) {
    next.rewards.push_back(ComputeReward(cfg, next.actions, next.criticisms, i));
  }
  return next;
}

std::vector<WorldState> RunEpisode(std::span<Agent* const> agents,
                                   const EnvConfig& cfg) {
  cfg.CheckValid();
  if (static_cast<int>(agents.size()) != cfg.num_agents()) {
    throw ConfigError("episode has " + std::to_string(agents.size()) +
                      " agents, config expects " + std::to_string(cfg.num_agents()));
  }
  std::vector<WorldState> history;
  history.reserve(cfg.max_timesteps);
  WorldState state = InitialWorldState(cfg);
  for (int t = 0; t < cfg.max_timesteps; ++t) {
    state = Step(state, agents, cfg);
    history.push_back(state);
  }
  return history;
}

}  // namespace normsim
