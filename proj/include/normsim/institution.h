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

#ifndef NORMSIM_INSTITUTION_H_
#define NORMSIM_INSTITUTION_H_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "normsim/sanction.h"

namespace normsim {

inline constexpr int kMaxCrops = 5;
inline constexpr std::array<std::string_view, kMaxCrops> kCropNames = {
    "apples", "bananas", "peaches", "oranges", "plums"};
inline constexpr std::array<std::string_view, kMaxCrops> kInstitutionNames = {
    "Ophilia", "Bram", "Cyra", "Dorn", "Elia"};

// "banana" for bananas, as used in harvest action lines.
std::string_view CropSingular(int crop);
std::string_view CropName(int crop);
std::optional<int> CropIndex(std::string_view name);

// Which crop an institution declares at each timestep. A single entry is a
// constant declaration; longer lists rotate.
class DeclarationPolicy {
 public:
  static DeclarationPolicy Constant(int crop) { return DeclarationPolicy({crop}); }
  static DeclarationPolicy Rotating(std::vector<int> cycle) {
    return DeclarationPolicy(std::move(cycle));
  }

  int CropAt(int t) const;
  bool is_constant() const { return cycle_.size() == 1; }
  const std::vector<int>& cycle() const { return cycle_; }

 private:
  explicit DeclarationPolicy(std::vector<int> cycle);
  std::vector<int> cycle_;
};

struct Institution {
  int id = 0;
  std::string name;
  DeclarationPolicy policy = DeclarationPolicy::Constant(0);
  // Ground truth for the environment and harness. Never copied into anything
  // an agent observes.
  bool authoritative = false;
};

struct InstitutionSignal {
  int institution_id = 0;
  std::string institution_name;
  int timestep = 0;
  int crop = 0;
  std::string text;

  bool operator==(const InstitutionSignal&) const = default;
};

std::string SignalText(int crop);

InstitutionSignal Declare(const Institution& inst, int t);

// Point-mass advice on the joint profile in which every player uses the
// classifier sanctioning exactly the deviations from the crop declared at t.
// Throws Error if some menu lacks that classifier.
AdviceDistribution AdviceProfile(const Institution& inst, const SanctionGame& sg,
                                 int t);

}  // namespace normsim

#endif  // NORMSIM_INSTITUTION_H_
