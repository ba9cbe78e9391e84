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

#include "normsim/game.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "normsim/error.h"

namespace normsim {

FiniteGame::FiniteGame(std::vector<std::vector<std::string>> action_names,
                       const std::vector<std::vector<double>>& utilities)
    : action_names_(std::move(action_names)) {
  if (action_names_.empty()) throw Error("game must have at least one player");
  const int n = num_players();
  strides_.assign(n, 1);
  num_profiles_ = 1;
  for (int p = n - 1; p >= 0; --p) {
    if (action_names_[p].empty()) {
      throw Error("player " + std::to_string(p) + " has no actions");
    }
    strides_[p] = num_profiles_;
    num_profiles_ *= static_cast<std::int64_t>(action_names_[p].size());
  }
  if (static_cast<std::int64_t>(utilities.size()) != num_profiles_) {
    throw Error("utility table has " + std::to_string(utilities.size()) +
                " entries, expected " + std::to_string(num_profiles_));
  }
  utilities_.reserve(num_profiles_ * n);
  for (std::int64_t k = 0; k < num_profiles_; ++k) {
    if (static_cast<int>(utilities[k].size()) != n) {
      throw Error("profile " + ProfileName(ProfileAt(k)) + " has " +
                  std::to_string(utilities[k].size()) + " payoffs, expected " +
                  std::to_string(n));
    }
    for (double u : utilities[k]) {
      if (!std::isfinite(u)) {
        throw Error("non-finite payoff at profile " + ProfileName(ProfileAt(k)));
      }
      utilities_.push_back(u);
    }
  }
}

std::int64_t FiniteGame::ProfileIndex(const Profile& profile) const {
  CheckProfile(profile);
  std::int64_t index = 0;
  for (int p = 0; p < num_players(); ++p) index += profile[p] * strides_[p];
  return index;
}

Profile FiniteGame::ProfileAt(std::int64_t index) const {
  Profile profile(num_players());
  for (int p = 0; p < num_players(); ++p) profile[p] = ActionAt(index, p);
  return profile;
}

int FiniteGame::ActionAt(std::int64_t index, int player) const {
  return static_cast<int>((index / strides_[player]) % num_actions(player));
}

std::int64_t FiniteGame::WithAction(std::int64_t index, int player,
                                    int action) const {
  return index + (action - ActionAt(index, player)) * strides_[player];
}

void FiniteGame::CheckPlayer(int player) const {
  if (player < 0 || player >= num_players()) {
    throw Error("player index " + std::to_string(player) + " out of range");
  }
}

void FiniteGame::CheckProfile(const Profile& profile) const {
  if (static_cast<int>(profile.size()) != num_players()) {
    throw Error("profile has " + std::to_string(profile.size()) +
                " entries, game has " + std::to_string(num_players()) +
                " players");
  }
  for (int p = 0; p < num_players(); ++p) {
    if (profile[p] < 0 || profile[p] >= num_actions(p)) {
      throw Error("action " + std::to_string(profile[p]) +
                  " out of range for player " + std::to_string(p));
    }
  }
}

std::string FiniteGame::ProfileName(const Profile& profile) const {
  std::string name;
  for (int p = 0; p < static_cast<int>(profile.size()); ++p) {
    if (p > 0) name += ',';
    name += action_names_[p][profile[p]];
  }
  return name;
}

Profile FiniteGame::ParseProfile(std::string_view name) const {
  Profile profile;
  std::size_t start = 0;
  for (int p = 0; p < num_players(); ++p) {
    std::size_t end = name.find(',', start);
    if (p == num_players() - 1) end = name.size();
    if (end == std::string_view::npos) {
      throw ParseError("profile '" + std::string(name) + "' names " +
                       std::to_string(p + 1) + " actions, expected " +
                       std::to_string(num_players()));
    }
    std::string_view token = name.substr(start, end - start);
    int found = -1;
    for (int a = 0; a < num_actions(p); ++a) {
      if (action_names_[p][a] == token) found = a;
    }
    if (found < 0) {
      throw ParseError("unknown action '" + std::string(token) +
                       "' for player " + std::to_string(p) + " in profile '" +
                       std::string(name) + "'");
    }
    profile.push_back(found);
    start = end + 1;
  }
  return profile;
}

bool FiniteGame::SameShape(const FiniteGame& other) const {
  if (num_players() != other.num_players()) return false;
  for (int p = 0; p < num_players(); ++p) {
    if (num_actions(p) != other.num_actions(p)) return false;
  }
  return true;
}

FiniteGame FiniteGame::WithFlatUtilities(std::vector<double> flat) const {
  if (flat.size() != utilities_.size()) {
    throw Error("replacement utility table has the wrong size");
  }
  FiniteGame out;
  out.action_names_ = action_names_;
  out.strides_ = strides_;
  out.num_profiles_ = num_profiles_;
  out.utilities_ = std::move(flat);
  return out;
}

std::vector<std::string> FiniteGame::Warnings() const {
  std::vector<std::string> warnings;
  for (std::int64_t k = 0; k < num_profiles_; ++k) {
    for (int p = 0; p < num_players(); ++p) {
      double u = UtilityAt(k, p);
      if (u < 0.0 || u > 1.0) {
        std::ostringstream msg;
        msg << "payoff " << u << " for player " << p << " at profile "
            << ProfileName(ProfileAt(k)) << " is outside [0, 1]";
        warnings.push_back(msg.str());
      }
    }
  }
  return warnings;
}

Profile SocialWelfareOptimum(const FiniteGame& game) {
  std::int64_t best = 0;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = 0; k < game.num_profiles(); ++k) {
    double sum = 0.0;
    for (double u : game.PayoffsAt(k)) sum += u;
    if (sum > best_sum) {
      best_sum = sum;
      best = k;
    }
  }
  return game.ProfileAt(best);
}

std::vector<int> BestResponseSet(const FiniteGame& game, int player,
                                 const Profile& opponents) {
  game.CheckPlayer(player);
  Profile probe = opponents;
  if (static_cast<int>(probe.size()) != game.num_players()) {
    throw Error("opponent profile has the wrong number of entries");
  }
  probe[player] = 0;
  const std::int64_t base = game.ProfileIndex(probe);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> argmax;
  for (int a = 0; a < game.num_actions(player); ++a) {
    double u = game.UtilityAt(game.WithAction(base, player, a), player);
    if (u > best) {
      best = u;
      argmax.assign(1, a);
    } else if (u == best) {
      argmax.push_back(a);
    }
  }
  return argmax;
}

double DeviationIncentive(const FiniteGame& game, const Profile& profile,
                          int player) {
  game.CheckPlayer(player);
  const std::int64_t index = game.ProfileIndex(profile);
  const double current = game.UtilityAt(index, player);
  double best = current;
  for (int a = 0; a < game.num_actions(player); ++a) {
    best = std::max(best, game.UtilityAt(game.WithAction(index, player, a), player));
  }
  return best - current;
}

bool IsNash(const FiniteGame& game, const Profile& profile) {
  for (int p = 0; p < game.num_players(); ++p) {
    if (DeviationIncentive(game, profile, p) > 0.0) return false;
  }
  return true;
}

bool CooperationDilemmaReport::any() const {
  for (const auto& p : players) {
    if (p.has_dilemma) return true;
  }
  return false;
}

std::vector<int> CooperationDilemmaReport::players_in_dilemma() const {
  std::vector<int> out;
  for (int p = 0; p < static_cast<int>(players.size()); ++p) {
    if (players[p].has_dilemma) out.push_back(p);
  }
  return out;
}

CooperationDilemmaReport DetectCooperationDilemma(const FiniteGame& game) {
  CooperationDilemmaReport report;
  report.social_optimum = SocialWelfareOptimum(game);
  for (int p = 0; p < game.num_players(); ++p) {
    PlayerDilemma d;
    d.gain = DeviationIncentive(game, report.social_optimum, p);
    if (d.gain > 0.0) {
      d.has_dilemma = true;
      d.deviation = BestResponseSet(game, p, report.social_optimum).front();
    }
    report.players.push_back(d);
  }
  return report;
}

}  // namespace normsim
