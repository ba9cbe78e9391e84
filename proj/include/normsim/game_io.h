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

#ifndef NORMSIM_GAME_IO_H_
#define NORMSIM_GAME_IO_H_

#include <string>
#include <string_view>

#include "json.hpp"
#include "normsim/game.h"
#include "normsim/sanction.h"

namespace normsim {

// Parses JSON, rejecting duplicate object keys. Errors are ParseError with
// "<source>:<line>:<column>: ..." messages.
nlohmann::json ParseJsonText(std::string_view text, std::string_view source);
nlohmann::json LoadJsonFile(const std::string& path);

// {"players": 2, "actions": [["C","D"],["C","D"]],
//  "utilities": {"C,C": [3,3], ...}}
FiniteGame GameFromJson(const nlohmann::json& j);
nlohmann::json GameToJson(const FiniteGame& game);

// Reads "classifiers" against `base`. If the document also carries game
// fields they must describe `base`.
SanctionGame SanctionGameFromJson(const nlohmann::json& j,
                                  const FiniteGame& base);
nlohmann::json SanctionMenusToJson(const SanctionGame& sg);

// {"support": [{"profile_indices": [1, 1], "p": 1.0}]}
AdviceDistribution AdviceFromJson(const nlohmann::json& j);

}  // namespace normsim

#endif  // NORMSIM_GAME_IO_H_
