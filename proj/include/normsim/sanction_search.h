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

#ifndef NORMSIM_SANCTION_SEARCH_H_
#define NORMSIM_SANCTION_SEARCH_H_

#include <cstdint>
#include <optional>

#include "normsim/sanction.h"

namespace normsim {

// Exhaustive searches over joint classifier profiles. Each has a serial
// reference and an OpenMP version that must return identical results.
//
// Search order: the all-never profile first, then the remaining joint
// profiles in enumeration order.

// True when the transform under `choice` leaves no player a strictly
// profitable unilateral deviation from `target`. Evaluates only the target
// and its unilateral deviations.
bool TransformMakesNash(const SanctionGame& sg, const ClassifierChoice& choice,
                        std::int64_t target);

// Maps a search position to a joint classifier index.
std::int64_t SearchOrderToJoint(const SanctionGame& sg, std::int64_t position);

std::optional<ClassifierChoice> FindNashWitnessSerial(const SanctionGame& sg,
                                                      const Profile& target);
// `num_threads` <= 0 uses the OpenMP default.
std::optional<ClassifierChoice> FindNashWitness(const SanctionGame& sg,
                                                const Profile& target,
                                                int num_threads = 0);

std::int64_t CountNashTransformsSerial(const SanctionGame& sg,
                                       const Profile& target);
std::int64_t CountNashTransforms(const SanctionGame& sg, const Profile& target,
                                 int num_threads = 0);

}  // namespace normsim

#endif  // NORMSIM_SANCTION_SEARCH_H_
