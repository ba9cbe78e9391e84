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

#include "normsim/sanction.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "normsim/error.h"
#include "normsim/sanction_search.h"

namespace normsim {

ClassificationFunction::ClassificationFunction(
    int owner, std::string name, const std::vector<Sanction>& sanctions,
    double cost, double self_cost)
    : owner_(owner), name_(std::move(name)), cost_(cost), self_cost_(self_cost) {
  if (!(cost >= 0.0) || !(self_cost >= 0.0) || !std::isfinite(cost) ||
      !std::isfinite(self_cost)) {
    throw Error("classifier costs must be finite and nonnegative");
  }
  for (const Sanction& s : sanctions) {
    if (s.target == owner) {
      throw Error("classifier of player " + std::to_string(owner) +
                  " sanctions its owner; use self_cost instead");
    }
    if (s.target < 0 || s.target >= 64) {
      throw Error("sanction target " + std::to_string(s.target) +
                  " out of range");
    }
    targets_[s.profile] |= std::uint64_t{1} << s.target;
  }
  if (name_.empty()) name_ = targets_.empty() ? "never" : "classifier";
}

ClassificationFunction ClassificationFunction::Never(int owner) {
  return ClassificationFunction(owner, "never", {}, 0.0, 0.0);
}

bool ClassificationFunction::Sanctions(std::int64_t profile, int target) const {
  auto it = targets_.find(profile);
  return it != targets_.end() && ((it->second >> target) & 1u);
}

int ClassificationFunction::IssuedAt(std::int64_t profile) const {
  auto it = targets_.find(profile);
  return it == targets_.end() ? 0 : std::popcount(it->second);
}

std::vector<ClassificationFunction::Sanction> ClassificationFunction::sanctions()
    const {
  std::vector<Sanction> out;
  for (const auto& [profile, mask] : targets_) {
    for (int t = 0; t < 64; ++t) {
      if ((mask >> t) & 1u) out.push_back({profile, t});
    }
  }
  return out;
}

std::vector<std::string> ClassificationFunction::Warnings() const {
  std::vector<std::string> out;
  if (cost_ > 1.0 || self_cost_ > 1.0) {
    std::ostringstream msg;
    msg << "classifier '" << name_ << "' of player " << owner_
        << " has costs (" << cost_ << ", " << self_cost_
        << ") outside [0, 1]";
    out.push_back(msg.str());
  }
  return out;
}

SanctionGame::SanctionGame(FiniteGame base,
                           std::vector<std::vector<ClassificationFunction>> menus)
    : base_(std::move(base)), menus_(std::move(menus)) {
  const int n = base_.num_players();
  if (static_cast<int>(menus_.size()) != n) {
    throw Error("sanction game needs one classifier menu per player");
  }
  if (n > 64) throw Error("sanction games support at most 64 players");
  for (int p = 0; p < n; ++p) {
    if (menus_[p].empty()) {
      throw Error("classifier menu of player " + std::to_string(p) + " is empty");
    }
    int never = -1;
    for (int c = 0; c < static_cast<int>(menus_[p].size()); ++c) {
      const ClassificationFunction& f = menus_[p][c];
      if (f.owner() != p) {
        throw Error("classifier '" + f.name() + "' in menu of player " +
                    std::to_string(p) + " is owned by player " +
                    std::to_string(f.owner()));
      }
      for (const auto& s : f.sanctions()) {
        if (s.profile < 0 || s.profile >= base_.num_profiles() ||
            s.target >= n) {
          throw Error("classifier '" + f.name() + "' of player " +
                      std::to_string(p) + " references an unknown profile or target");
        }
      }
      if (never < 0 && f.is_never()) never = c;
    }
    if (never < 0) {
      throw Error("menu of player " + std::to_string(p) +
                  " lacks a \"never sanction\" classifier");
    }
    never_index_.push_back(never);
    num_joint_ *= static_cast<std::int64_t>(menus_[p].size());
  }
}

const ClassificationFunction& SanctionGame::classifier(int player,
                                                       int index) const {
  const auto& m = menus_.at(player);
  if (index < 0 || index >= static_cast<int>(m.size())) {
    throw Error("classifier index " + std::to_string(index) +
                " not in the menu of player " + std::to_string(player));
  }
  return m[index];
}

ClassifierChoice SanctionGame::JointChoiceAt(std::int64_t index) const {
  ClassifierChoice choice(num_players());
  for (int p = num_players() - 1; p >= 0; --p) {
    const auto size = static_cast<std::int64_t>(menus_[p].size());
    choice[p] = static_cast<int>(index % size);
    index /= size;
  }
  return choice;
}

std::int64_t SanctionGame::JointIndex(const ClassifierChoice& choice) const {
  CheckChoice(choice);
  std::int64_t index = 0;
  for (int p = 0; p < num_players(); ++p) {
    index = index * static_cast<std::int64_t>(menus_[p].size()) + choice[p];
  }
  return index;
}

ClassifierChoice SanctionGame::AllNever() const { return never_index_; }

void SanctionGame::CheckChoice(const ClassifierChoice& choice) const {
  if (static_cast<int>(choice.size()) != num_players()) {
    throw Error("classifier profile needs one entry per player");
  }
  for (int p = 0; p < num_players(); ++p) classifier(p, choice[p]);
}

std::vector<std::string> SanctionGame::Warnings() const {
  std::vector<std::string> out = base_.Warnings();
  for (const auto& menu : menus_) {
    for (const auto& f : menu) {
      for (auto& w : f.Warnings()) out.push_back(std::move(w));
    }
  }
  return out;
}

AdviceDistribution AdviceDistribution::PointMass(ClassifierChoice choice) {
  return AdviceDistribution{{{std::move(choice), 1.0}}};
}

void AdviceDistribution::Validate(const SanctionGame& sg) const {
  if (support.empty()) throw Error("advice distribution has empty support");
  double total = 0.0;
  for (const Entry& e : support) {
    if (!(e.probability >= 0.0) || !std::isfinite(e.probability)) {
      throw Error("advice probabilities must be finite and nonnegative");
    }
    sg.CheckChoice(e.choice);
    total += e.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "advice probabilities sum to " << total << ", not 1";
    throw Error(msg.str());
  }
}

double SanctionCostAt(const SanctionGame& sg, const ClassifierChoice& choice,
                      std::int64_t profile, int player) {
  double cost = 0.0;
  for (int k = 0; k < sg.num_players(); ++k) {
    const ClassificationFunction& f = sg.menu(k)[choice[k]];
    if (k == player) {
      cost += f.self_cost() * f.IssuedAt(profile);
    } else if (f.Sanctions(profile, player)) {
      cost += f.cost();
    }
  }
  return cost;
}

double SanctionCost(const SanctionGame& sg, const ClassifierChoice& choice,
                    const Profile& base_profile, int player) {
  sg.CheckChoice(choice);
  sg.base().CheckPlayer(player);
  return SanctionCostAt(sg, choice, sg.base().ProfileIndex(base_profile),
                        player);
}

FiniteGame ApplyTransform(const SanctionGame& sg,
                          const ClassifierChoice& choice) {
  sg.CheckChoice(choice);
  const FiniteGame& base = sg.base();
  std::vector<double> flat = base.flat_utilities();
  const int n = base.num_players();
  for (std::int64_t k = 0; k < base.num_profiles(); ++k) {
    for (int p = 0; p < n; ++p) {
      const double cost = SanctionCostAt(sg, choice, k, p);
      if (cost != 0.0) flat[k * n + p] -= cost;
    }
  }
  return base.WithFlatUtilities(std::move(flat));
}

bool IsDilemmaResolving(const FiniteGame& base, const FiniteGame& transformed,
                        int player) {
  if (!base.SameShape(transformed)) {
    throw Error("base and transformed games differ in shape");
  }
  base.CheckPlayer(player);
  const std::int64_t sw = base.ProfileIndex(SocialWelfareOptimum(base));
  const double u_sw = base.UtilityAt(sw, player);
  const double u_sw_t = transformed.UtilityAt(sw, player);
  bool dilemma = false;
  for (int a = 0; a < base.num_actions(player); ++a) {
    const std::int64_t dev = base.WithAction(sw, player, a);
    if (base.UtilityAt(dev, player) > u_sw) {
      dilemma = true;
      if (!(transformed.UtilityAt(dev, player) < u_sw_t)) return false;
    }
  }
  return dilemma;
}

double SanctionMinimax(const SanctionGame& sg, const Profile& base_profile,
                       int player) {
  sg.base().CheckPlayer(player);
  const std::int64_t profile = sg.base().ProfileIndex(base_profile);
  const int own_size = static_cast<int>(sg.menu(player).size());
  double minimax = std::numeric_limits<double>::infinity();
  // Visit each assignment of the other players once, via the joint profiles
  // whose own entry is 0.
  for (std::int64_t j = 0; j < sg.num_joint_choices(); ++j) {
    ClassifierChoice choice = sg.JointChoiceAt(j);
    if (choice[player] != 0) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < own_size; ++c) {
      choice[player] = c;
      best = std::max(best, SanctionUtilityAt(sg, choice, profile, player));
    }
    minimax = std::min(minimax, best);
  }
  return minimax;
}

FeasibilityReport EnforcementFeasibility(const SanctionGame& sg,
                                      const Profile& target) {
  const FiniteGame& base = sg.base();
  base.CheckProfile(target);
  FeasibilityReport report;
  report.target = target;
  bool all = true;
  for (int p = 0; p < base.num_players(); ++p) {
    PlayerFeasibility f;
    f.delta = DeviationIncentive(base, target, p);
    Profile regime = target;
    if (f.delta > 0.0) {
      f.deviation = BestResponseSet(base, p, target).front();
      regime[p] = f.deviation;
    }
    f.minimax = SanctionMinimax(sg, regime, p);
    f.minimax_condition = -f.delta > f.minimax;
    f.enforceable = f.delta == 0.0 || f.minimax_condition;
    all = all && f.enforceable;
    report.players.push_back(f);
  }
  report.witness = FindNashWitness(sg, target);
  report.enforceable = all && report.witness.has_value();
  if (all && !report.witness) {
    report.note =
        "punishment condition holds for every player, but no joint classifier "
        "profile in the menus makes the target a Nash equilibrium";
  } else if (!all && report.witness) {
    report.note =
        "a classifier profile in the menus makes the target Nash only through "
        "costs the minimax value does not count (self-inflicted sanctions or "
        "exact ties)";
  }
  return report;
}

ClassifierChoice NonResolvingWitness(const SanctionGame& sg) {
  return sg.AllNever();
}

namespace {

// Sanction-game utility of `player` under `choice` with its own entry
// replaced by `own`.
double UtilityWith(const SanctionGame& sg, ClassifierChoice choice,
                   std::int64_t profile, int player, int own) {
  choice[player] = own;
  return SanctionUtilityAt(sg, choice, profile, player);
}

void Consider(CeReport& report, double margin, int player, int deviation,
              int recommendation) {
  if (margin > report.worst_violation) {
    report.worst_violation = margin;
    report.violating_player = player;
    report.violating_deviation = deviation;
    report.violating_recommendation = recommendation;
  }
}

}  // namespace

CeReport VerifyCorrelatedEquilibrium(const SanctionGame& sg,
                                     const AdviceDistribution& advice,
                                     const Profile& base_profile,
                                     CeMode mode) {
  advice.Validate(sg);
  const std::int64_t profile = sg.base().ProfileIndex(base_profile);
  CeReport report;
  for (int p = 0; p < sg.num_players(); ++p) {
    const int menu_size = static_cast<int>(sg.menu(p).size());
    if (mode == CeMode::kLiteral) {
      double obey = 0.0;
      for (const auto& e : advice.support) {
        obey += e.probability * SanctionUtilityAt(sg, e.choice, profile, p);
      }
      for (int alt = 0; alt < menu_size; ++alt) {
        double deviate = 0.0;
        for (const auto& e : advice.support) {
          deviate += e.probability * UtilityWith(sg, e.choice, profile, p, alt);
        }
        Consider(report, deviate - obey, p, alt, -1);
      }
    } else {
      for (int rec = 0; rec < menu_size; ++rec) {
        for (int alt = 0; alt < menu_size; ++alt) {
          if (alt == rec) continue;
          double gain = 0.0;
          bool recommended = false;
          for (const auto& e : advice.support) {
            if (e.choice[p] != rec) continue;
            recommended = true;
            gain += e.probability *
                    (UtilityWith(sg, e.choice, profile, p, alt) -
                     SanctionUtilityAt(sg, e.choice, profile, p));
          }
          if (recommended) Consider(report, gain, p, alt, rec);
        }
      }
    }
  }
  report.holds = report.worst_violation <= kCeTolerance;
  if (report.holds) report = CeReport{};
  return report;
}

bool InstitutionEnvironmentCheck(
    const SanctionGame& sg, const std::vector<AdviceDistribution>& institutions,
    const Profile& base_profile) {
  for (const auto& advice : institutions) {
    if (VerifyCorrelatedEquilibrium(sg, advice, base_profile, CeMode::kLiteral)
            .holds) {
      return true;
    }
  }
  return false;
}

ClassificationFunction DeviationSanctionClassifier(const FiniteGame& game,
                                                   int owner,
                                                   const Profile& target,
                                                   double cost,
                                                   double self_cost) {
  game.CheckPlayer(owner);
  const std::int64_t t = game.ProfileIndex(target);
  std::vector<ClassificationFunction::Sanction> sanctions;
  for (int j = 0; j < game.num_players(); ++j) {
    if (j == owner) continue;
    for (int a = 0; a < game.num_actions(j); ++a) {
      if (a != target[j]) sanctions.push_back({game.WithAction(t, j, a), j});
    }
  }
  return ClassificationFunction(owner, "punish-deviation", sanctions, cost,
                                self_cost);
}

ClassificationFunction DeclarationClassifier(const FiniteGame& game, int owner,
                                             int crop, double cost,
                                             double self_cost) {
  game.CheckPlayer(owner);
  for (int j = 0; j < game.num_players(); ++j) {
    if (crop < 0 || crop >= game.num_actions(j)) {
      throw Error("declared crop " + std::to_string(crop) +
                  " is not an action of player " + std::to_string(j));
    }
  }
  std::vector<ClassificationFunction::Sanction> sanctions;
  for (std::int64_t k = 0; k < game.num_profiles(); ++k) {
    for (int j = 0; j < game.num_players(); ++j) {
      if (j != owner && game.ActionAt(k, j) != crop) sanctions.push_back({k, j});
    }
  }
  return ClassificationFunction(owner, "declared-" + std::to_string(crop),
                                sanctions, cost, self_cost);
}

std::vector<ClassificationFunction> FullClassifierMenu(const FiniteGame& game,
                                                       int owner, double cost,
                                                       double self_cost) {
  game.CheckPlayer(owner);
  if (game.num_profiles() > 6) {
    throw Error("full classifier menus are limited to games with at most 6 "
                "profiles");
  }
  const auto count = std::int64_t{1} << game.num_profiles();
  std::vector<ClassificationFunction> menu;
  for (std::int64_t mask = 0; mask < count; ++mask) {
    std::vector<ClassificationFunction::Sanction> sanctions;
    for (std::int64_t k = 0; k < game.num_profiles(); ++k) {
      if (!((mask >> k) & 1)) continue;
      for (int j = 0; j < game.num_players(); ++j) {
        if (j != owner) sanctions.push_back({k, j});
      }
    }
    menu.emplace_back(owner, mask == 0 ? "never" : "subset-" + std::to_string(mask),
                      sanctions, cost, self_cost);
  }
  return menu;
}

}  // namespace normsim
