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

#include "normsim/sanction_search.h"

#include <omp.h>

#include <atomic>
#include <limits>

namespace normsim {

bool TransformMakesNash(const SanctionGame& sg, const ClassifierChoice& choice,
                        std::int64_t target) {
  const FiniteGame& game = sg.base();
  for (int p = 0; p < game.num_players(); ++p) {
    const double stay =
        game.UtilityAt(target, p) - SanctionCostAt(sg, choice, target, p);
    for (int a = 0; a < game.num_actions(p); ++a) {
      const std::int64_t dev = game.WithAction(target, p, a);
      if (dev == target) continue;
      const double move =
          game.UtilityAt(dev, p) - SanctionCostAt(sg, choice, dev, p);
      if (move > stay) return false;
    }
  }
  return true;
}

std::int64_t SearchOrderToJoint(const SanctionGame& sg, std::int64_t position) {
  const std::int64_t never = sg.JointIndex(sg.AllNever());
  if (position == 0) return never;
  // Positions 1.. walk the joint indices in order, skipping the all-never one.
  const std::int64_t j = position - 1;
  return j < never ? j : j + 1;
}

std::optional<ClassifierChoice> FindNashWitnessSerial(const SanctionGame& sg,
                                                      const Profile& target) {
  const std::int64_t t = sg.base().ProfileIndex(target);
  for (std::int64_t pos = 0; pos < sg.num_joint_choices(); ++pos) {
    ClassifierChoice choice = sg.JointChoiceAt(SearchOrderToJoint(sg, pos));
    if (TransformMakesNash(sg, choice, t)) return choice;
  }
  return std::nullopt;
}

std::optional<ClassifierChoice> FindNashWitness(const SanctionGame& sg,
                                                const Profile& target,
                                                int num_threads) {
  const std::int64_t t = sg.base().ProfileIndex(target);
  const std::int64_t total = sg.num_joint_choices();
  if (num_threads <= 0) num_threads = omp_get_max_threads();
  // Smallest satisfying search position; positions beyond the current best
  // are skipped once one is known.
  std::atomic<std::int64_t> best{std::numeric_limits<std::int64_t>::max()};
#pragma omp parallel for schedule(dynamic, 64) num_threads(num_threads)
  for (std::int64_t pos = 0; pos < total; ++pos) {
    if (pos >= best.load(std::memory_order_relaxed)) continue;
    ClassifierChoice choice = sg.JointChoiceAt(SearchOrderToJoint(sg, pos));
    if (TransformMakesNash(sg, choice, t)) {
      std::int64_t current = best.load(std::memory_order_relaxed);
      while (pos < current &&
             !best.compare_exchange_weak(current, pos, std::memory_order_relaxed)) {
      }
    }
  }
  const std::int64_t found = best.load();
  if (found == std::numeric_limits<std::int64_t>::max()) return std::nullopt;
  return sg.JointChoiceAt(SearchOrderToJoint(sg, found));
}

std::int64_t CountNashTransformsSerial(const SanctionGame& sg,
                                       const Profile& target) {
  const std::int64_t t = sg.base().ProfileIndex(target);
  std::int64_t count = 0;
  for (std::int64_t j = 0; j < sg.num_joint_choices(); ++j) {
    if (TransformMakesNash(sg, sg.JointChoiceAt(j), t)) ++count;
  }
  return count;
}

std::int64_t CountNashTransforms(const SanctionGame& sg, const Profile& target,
                                 int num_threads) {
  const std::int64_t t = sg.base().ProfileIndex(target);
  const std::int64_t total = sg.num_joint_choices();
  if (num_threads <= 0) num_threads = omp_get_max_threads();
  std::int64_t count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count) \
    num_threads(num_threads)
  for (std::int64_t j = 0; j < total; ++j) {
    if (TransformMakesNash(sg, sg.JointChoiceAt(j), t)) ++count;
  }
  return count;
}

}  // namespace normsim
