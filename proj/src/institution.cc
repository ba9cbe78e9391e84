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

#include "normsim/institution.h"

#include "normsim/error.h"

namespace normsim {

namespace {
constexpr std::array<std::string_view, kMaxCrops> kCropSingular = {
    "apple", "banana", "peach", "orange", "plum"};

void CheckCrop(int crop) {
  if (crop < 0 || crop >= kMaxCrops) {
    throw Error("crop index " + std::to_string(crop) + " out of range");
  }
}
}  // namespace

std::string_view CropSingular(int crop) {
  CheckCrop(crop);
  return kCropSingular[crop];
}

std::string_view CropName(int crop) {
  CheckCrop(crop);
  return kCropNames[crop];
}

std::optional<int> CropIndex(std::string_view name) {
  for (int c = 0; c < kMaxCrops; ++c) {
    if (kCropNames[c] == name) return c;
  }
  return std::nullopt;
}

DeclarationPolicy::DeclarationPolicy(std::vector<int> cycle)
    : cycle_(std::move(cycle)) {
  if (cycle_.empty()) throw Error("declaration policy needs at least one crop");
  for (int c : cycle_) CheckCrop(c);
}

int DeclarationPolicy::CropAt(int t) const {
  if (t < 0) throw Error("timestep must be nonnegative");
  return cycle_[static_cast<std::size_t>(t) % cycle_.size()];
}

std::string SignalText(int crop) {
  return "Valued citizens of Skymeadow, let's focus on harvesting " +
         std::string(CropName(crop)) +
         ". It is important for the prosperity of our community!";
}

InstitutionSignal Declare(const Institution& inst, int t) {
  const int crop = inst.policy.CropAt(t);
  return InstitutionSignal{inst.id, inst.name, t, crop, SignalText(crop)};
}

AdviceDistribution AdviceProfile(const Institution& inst, const SanctionGame& sg,
                                 int t) {
  const int crop = inst.policy.CropAt(t);
  ClassifierChoice choice;
  for (int p = 0; p < sg.num_players(); ++p) {
    const ClassificationFunction wanted =
        DeclarationClassifier(sg.base(), p, crop, 0.0, 0.0);
    int found = -1;
    const auto& menu = sg.menu(p);
    for (int c = 0; c < static_cast<int>(menu.size()) && found < 0; ++c) {
      if (menu[c].SameClassification(wanted)) found = c;
    }
    if (found < 0) {
      throw Error("menu of player " + std::to_string(p) +
                  " has no classifier sanctioning deviations from " +
                  std::string(CropName(crop)));
    }
    choice.push_back(found);
  }
  return AdviceDistribution::PointMass(std::move(choice));
}

}  // namespace normsim
