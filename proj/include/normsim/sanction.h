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

#ifndef NORMSIM_SANCTION_H_
#define NORMSIM_SANCTION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normsim/game.h"

namespace normsim {

// A classification function of the sanction game: the set of
// (profile, target) pairs its owner labels non-cooperative, and the costs a
// sanction carries for the target and for the owner.
class ClassificationFunction {
 public:
  struct Sanction {
    std::int64_t profile;  // flat profile index in the base game
    int target;
  };

  ClassificationFunction(int owner, std::string name,
                         const std::vector<Sanction>& sanctions, double cost,
                         double self_cost);

  // The empty classifier.
  static ClassificationFunction Never(int owner);

  int owner() const { return owner_; }
  const std::string& name() const { return name_; }
  double cost() const { return cost_; }
  double self_cost() const { return self_cost_; }
  bool is_never() const { return targets_.empty(); }

  bool Sanctions(std::int64_t profile, int target) const;
  // Number of sanctions the owner issues at `profile`.
  int IssuedAt(std::int64_t profile) const;
  std::vector<Sanction> sanctions() const;

  // Same sanctioned set, costs ignored.
  bool SameClassification(const ClassificationFunction& other) const {
    return owner_ == other.owner_ && targets_ == other.targets_;
  }

  // Findings that are accepted but worth reporting (costs above 1).
  std::vector<std::string> Warnings() const;

 private:
  int owner_;
  std::string name_;
  std::map<std::int64_t, std::uint64_t> targets_;  // profile -> target bitmask
  double cost_;
  double self_cost_;
};

// One menu index per player.
using ClassifierChoice = std::vector<int>;

class SanctionGame {
 public:
  // Every menu must contain a "never sanction" classifier owned by its player.
  SanctionGame(FiniteGame base,
               std::vector<std::vector<ClassificationFunction>> menus);

  const FiniteGame& base() const { return base_; }
  int num_players() const { return base_.num_players(); }
  const std::vector<ClassificationFunction>& menu(int player) const {
    return menus_.at(player);
  }
  const ClassificationFunction& classifier(int player, int index) const;
  int never_index(int player) const { return never_index_.at(player); }

  // Joint classifier profiles, enumerated with player 0 most significant.
  std::int64_t num_joint_choices() const { return num_joint_; }
  ClassifierChoice JointChoiceAt(std::int64_t index) const;
  std::int64_t JointIndex(const ClassifierChoice& choice) const;
  ClassifierChoice AllNever() const;

  void CheckChoice(const ClassifierChoice& choice) const;
  std::vector<std::string> Warnings() const;

 private:
  FiniteGame base_;
  std::vector<std::vector<ClassificationFunction>> menus_;
  std::vector<int> never_index_;
  std::int64_t num_joint_ = 1;
};

struct AdviceDistribution {
  struct Entry {
    ClassifierChoice choice;
    double probability;
  };
  std::vector<Entry> support;

  static AdviceDistribution PointMass(ClassifierChoice choice);
  // Throws Error if probabilities are negative, do not sum to 1 within 1e-9,
  // or an entry lies outside the menus.
  void Validate(const SanctionGame& sg) const;
};

// Total cost to `player` at `base_profile`: self cost for every sanction the
// player issues plus the cost of every sanction aimed at the player.
double SanctionCost(const SanctionGame& sg, const ClassifierChoice& choice,
                    const Profile& base_profile, int player);
double SanctionCostAt(const SanctionGame& sg, const ClassifierChoice& choice,
                      std::int64_t profile, int player);

// Sanction-game utility is the negated cost.
inline double SanctionUtilityAt(const SanctionGame& sg,
                                const ClassifierChoice& choice,
                                std::int64_t profile, int player) {
  return -SanctionCostAt(sg, choice, profile, player);
}

// u'_i(s) = u_i(s) - cost_i(s) for every profile s.
FiniteGame ApplyTransform(const SanctionGame& sg,
                          const ClassifierChoice& choice);

// Requires a profitable deviation from the social optimum of `base` to exist
// for `player`, and every such deviation to be strictly unprofitable under
// `transformed`.
bool IsDilemmaResolving(const FiniteGame& base, const FiniteGame& transformed,
                        int player);

// min over the others' classifiers of max over the player's own classifier
// of the sanction-game utility at `base_profile`, by full enumeration.
double SanctionMinimax(const SanctionGame& sg, const Profile& base_profile,
                       int player);

struct PlayerFeasibility {
  double delta = 0.0;         // deviation incentive at the target
  int deviation = -1;         // best response used as the punishing regime
  double minimax = 0.0;       // sanction minimax at the deviation profile
  bool minimax_condition = false;  // -delta > minimax
  bool enforceable = false;        // delta == 0 or minimax_condition
};

struct FeasibilityReport {
  Profile target;
  std::vector<PlayerFeasibility> players;
  // First classifier profile (all-never first, then enumeration order) whose
  // transform makes the target a Nash equilibrium, if any exists.
  std::optional<ClassifierChoice> witness;
  // Every player enforceable and a witness exists in the menus.
  bool enforceable = false;
  std::string note;
};

FeasibilityReport EnforcementFeasibility(const SanctionGame& sg,
                                      const Profile& target);

// The all-"never sanction" profile; its transform is the identity.
ClassifierChoice NonResolvingWitness(const SanctionGame& sg);

enum class CeMode { kLiteral, kConditioned };

struct CeReport {
  bool holds = true;
  double worst_violation = 0.0;
  int violating_player = -1;
  int violating_deviation = -1;    // menu index of the profitable alternative
  int violating_recommendation = -1;  // conditioned mode only
};

inline constexpr double kCeTolerance = 1e-9;

// Obedience check for institutional advice at a fixed base profile.
// Literal mode compares obedience against every fixed alternative classifier
// (the coarse form); conditioned mode lets the deviation depend on the
// recommended classifier. Margins are expectations under the advice.
CeReport VerifyCorrelatedEquilibrium(const SanctionGame& sg,
                                     const AdviceDistribution& advice,
                                     const Profile& base_profile,
                                     CeMode mode = CeMode::kLiteral);

bool InstitutionEnvironmentCheck(
    const SanctionGame& sg, const std::vector<AdviceDistribution>& institutions,
    const Profile& base_profile);

// --- Menu construction helpers ---------------------------------------------

// Sanctions every other player j at each profile where j alone deviates from
// `target`.
ClassificationFunction DeviationSanctionClassifier(const FiniteGame& game,
                                                   int owner,
                                                   const Profile& target,
                                                   double cost,
                                                   double self_cost);

// Sanctions (s, j) for every other player j whose action in s is not `crop`.
// Action index doubles as crop index.
ClassificationFunction DeclarationClassifier(const FiniteGame& game, int owner,
                                             int crop, double cost,
                                             double self_cost);

// One classifier per subset of profiles, each sanctioning all other players
// at the profiles in its subset. Index 0 is the empty subset. Requires at
// most 6 profiles.
std::vector<ClassificationFunction> FullClassifierMenu(const FiniteGame& game,
                                                       int owner, double cost,
                                                       double self_cost);

}  // namespace normsim

#endif  // NORMSIM_SANCTION_H_
