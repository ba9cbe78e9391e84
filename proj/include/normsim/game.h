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

#ifndef NORMSIM_GAME_H_
#define NORMSIM_GAME_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace normsim {

// One action index per player.
using Profile = std::vector<int>;

// An n-player normal-form game over pure joint profiles.
//
// Profiles are stored row-major with player 0 most significant, so the flat
// profile index order is the lexicographic order of profiles.
class FiniteGame {
 public:
  // `utilities[k]` holds the payoff vector of the k-th joint profile.
  FiniteGame(std::vector<std::vector<std::string>> action_names,
             const std::vector<std::vector<double>>& utilities);

  int num_players() const { return static_cast<int>(action_names_.size()); }
  int num_actions(int player) const {
    return static_cast<int>(action_names_.at(player).size());
  }
  const std::vector<std::string>& action_names(int player) const {
    return action_names_.at(player);
  }
  std::int64_t num_profiles() const { return num_profiles_; }

  std::int64_t ProfileIndex(const Profile& profile) const;
  Profile ProfileAt(std::int64_t index) const;
  // Index of the profile that differs from `index` only in `player`'s action.
  std::int64_t WithAction(std::int64_t index, int player, int action) const;
  int ActionAt(std::int64_t index, int player) const;

  double Utility(const Profile& profile, int player) const {
    return UtilityAt(ProfileIndex(profile), player);
  }
  double UtilityAt(std::int64_t index, int player) const {
    return utilities_[index * num_players() + player];
  }
  std::span<const double> PayoffsAt(std::int64_t index) const {
    return {utilities_.data() + index * num_players(),
            static_cast<std::size_t>(num_players())};
  }

  // Throws Error if the profile has the wrong arity or an index out of range.
  void CheckProfile(const Profile& profile) const;
  void CheckPlayer(int player) const;

  // "C,D" style name, and its inverse.
  std::string ProfileName(const Profile& profile) const;
  Profile ParseProfile(std::string_view name) const;

  bool SameShape(const FiniteGame& other) const;

  // Copy of this game with every payoff replaced; `flat` is laid out like the
  // internal storage (profile-major, num_players entries per profile).
  FiniteGame WithFlatUtilities(std::vector<double> flat) const;
  const std::vector<double>& flat_utilities() const { return utilities_; }

  // Non-fatal validation findings (payoffs outside [0, 1]).
  std::vector<std::string> Warnings() const;

 private:
  FiniteGame() = default;

  std::vector<std::vector<std::string>> action_names_;
  std::vector<std::int64_t> strides_;
  std::int64_t num_profiles_ = 0;
  std::vector<double> utilities_;
};

// Lexicographically smallest profile maximizing the sum of payoffs.
Profile SocialWelfareOptimum(const FiniteGame& game);

// All actions of `player` maximizing its payoff when the others play as in
// `opponents` (the entry at `player` is ignored). Ascending, never empty.
std::vector<int> BestResponseSet(const FiniteGame& game, int player,
                                 const Profile& opponents);

// u_i(BR(s_-i), s_-i) - u_i(s). Zero exactly when s_i is a best response.
double DeviationIncentive(const FiniteGame& game, const Profile& profile,
                          int player);

bool IsNash(const FiniteGame& game, const Profile& profile);

struct PlayerDilemma {
  bool has_dilemma = false;
  int deviation = -1;  // best profitable deviation, -1 when none
  double gain = 0.0;   // deviation incentive at the social optimum
};

struct CooperationDilemmaReport {
  Profile social_optimum;
  std::vector<PlayerDilemma> players;

  bool any() const;
  std::vector<int> players_in_dilemma() const;
};

CooperationDilemmaReport DetectCooperationDilemma(const FiniteGame& game);

}  // namespace normsim

#endif  // NORMSIM_GAME_H_
