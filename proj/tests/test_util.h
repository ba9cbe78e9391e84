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

#ifndef NORMSIM_TESTS_TEST_UTIL_H_
#define NORMSIM_TESTS_TEST_UTIL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "normsim/game.h"
#include "normsim/sanction.h"

namespace normsim::testing {

inline std::string DataPath(const std::string& name) {
  return std::string(NORMSIM_TEST_DATA_DIR) + "/" + name;
}

// (C,C)=(3,3), (C,D)=(0,5), (D,C)=(5,0), (D,D)=(1,1).
inline FiniteGame MakePd() {
  return FiniteGame({{"C", "D"}, {"C", "D"}},
                    {{3, 3}, {0, 5}, {5, 0}, {1, 1}});
}

inline FiniteGame MakeCoordination() {
  return FiniteGame({{"A", "B"}, {"A", "B"}},
                    {{1, 1}, {0, 0}, {0, 0}, {1, 1}});
}

// Every profile of an action-count vector, in lexicographic order.
inline std::vector<Profile> AllProfiles(const std::vector<int>& sizes) {
  std::vector<Profile> out;
  Profile p(sizes.size(), 0);
  while (true) {
    out.push_back(p);
    int i = static_cast<int>(sizes.size()) - 1;
    while (i >= 0 && ++p[i] == sizes[i]) p[i--] = 0;
    if (i < 0) return out;
  }
}

inline std::vector<int> Sizes(const FiniteGame& g) {
  std::vector<int> s;
  for (int i = 0; i < g.num_players(); ++i) s.push_back(g.num_actions(i));
  return s;
}

// Random game; integer payoffs in [0, 4] make ties common.
inline FiniteGame RandomGame(std::mt19937_64& rng, int max_players,
                             int max_actions, bool integer_payoffs) {
  std::uniform_int_distribution<int> np(1, max_players);
  std::uniform_int_distribution<int> na(1, max_actions);
  const int n = np(rng);
  std::vector<std::vector<std::string>> names(n);
  for (auto& a : names) {
    const int k = na(rng);
    for (int j = 0; j < k; ++j) a.push_back("a" + std::to_string(j));
  }
  std::int64_t count = 1;
  for (const auto& a : names) count *= static_cast<std::int64_t>(a.size());
  std::uniform_int_distribution<int> small(0, 4);
  std::uniform_real_distribution<double> real(0.0, 1.0);
  std::vector<std::vector<double>> u(count, std::vector<double>(n));
  for (auto& row : u) {
    for (double& x : row) x = integer_payoffs ? small(rng) : real(rng);
  }
  return FiniteGame(std::move(names), u);
}

// Oracle: a profile is Nash iff no single player's switch strictly helps.
inline bool BruteForceNash(const FiniteGame& g, const Profile& s) {
  for (int i = 0; i < g.num_players(); ++i) {
    for (int a = 0; a < g.num_actions(i); ++a) {
      Profile d = s;
      d[i] = a;
      if (g.Utility(d, i) > g.Utility(s, i)) return false;
    }
  }
  return true;
}

// Player i sanctions player j at the profile where only j deviates from
// (C,C), plus a never classifier.
inline std::vector<std::vector<ClassificationFunction>> PdMenus(double cost,
                                                                double self_cost) {
  const FiniteGame pd = MakePd();
  std::vector<std::vector<ClassificationFunction>> menus(2);
  menus[0] = {ClassificationFunction::Never(0),
              ClassificationFunction(0, "punish", {{pd.ProfileIndex({0, 1}), 1}},
                                     cost, self_cost)};
  menus[1] = {ClassificationFunction::Never(1),
              ClassificationFunction(1, "punish", {{pd.ProfileIndex({1, 0}), 0}},
                                     cost, self_cost)};
  return menus;
}

}  // namespace normsim::testing

#endif  // NORMSIM_TESTS_TEST_UTIL_H_
