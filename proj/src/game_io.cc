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

#include "normsim/game_io.h"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "normsim/error.h"

namespace normsim {
namespace {

using nlohmann::json;

std::string Position(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return std::to_string(line) + ":" + std::to_string(column);
}

// Byte offset of the n-th (1-based) occurrence of `quoted` used as an
// object key, i.e. followed by a colon.
std::size_t KeyOffset(std::string_view text, const std::string& quoted, int n) {
  for (std::size_t pos = text.find(quoted); pos != std::string_view::npos;
       pos = text.find(quoted, pos + 1)) {
    if (pos > 0 && text[pos - 1] == '\\') continue;
    std::size_t after = pos + quoted.size();
    while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) {
      ++after;
    }
    if (after < text.size() && text[after] == ':' && --n == 0) return pos;
  }
  return 0;
}

const json& Field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string(what) + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

double Number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ParseError(what + " must be a number");
  return j.get<double>();
}

}  // namespace

json ParseJsonText(std::string_view text, std::string_view source) {
  std::vector<std::set<std::string>> keys;
  std::map<std::string, int> key_seen;
  std::string duplicate;
  int duplicate_ordinal = 0;
  auto callback = [&](int /*depth*/, json::parse_event_t event,
                      json& parsed) -> bool {
    switch (event) {
      case json::parse_event_t::object_start:
        keys.emplace_back();
        break;
      case json::parse_event_t::object_end:
        keys.pop_back();
        break;
      case json::parse_event_t::key: {
        auto name = parsed.get<std::string>();
        const int ordinal = ++key_seen[name];
        if (!keys.back().insert(name).second && duplicate.empty()) {
          duplicate = name;
          duplicate_ordinal = ordinal;
        }
        break;
      }
      default:
        break;
    }
    return true;
  };
  json out;
  try {
    out = json::parse(text.begin(), text.end(), callback);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(source) + ":" + Position(text, e.byte) +
                     ": " + e.what());
  }
  if (!duplicate.empty()) {
    const std::string quoted = "\"" + duplicate + "\"";
    throw ParseError(std::string(source) + ":" +
                     Position(text, KeyOffset(text, quoted, duplicate_ordinal)) +
                     ": duplicate key " + quoted);
  }
  return out;
}

json LoadJsonFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseJsonText(buffer.str(), path);
}

FiniteGame GameFromJson(const json& j) {
  const json& players = Field(j, "players", "game");
  if (!players.is_number_integer() || players.get<int>() < 1) {
    throw ParseError("game: \"players\" must be a positive integer");
  }
  const int n = players.get<int>();
  const json& actions = Field(j, "actions", "game");
  if (!actions.is_array() || static_cast<int>(actions.size()) != n) {
    throw ParseError("game: \"actions\" must list one action array per player");
  }
  std::vector<std::vector<std::string>> names(n);
  for (int p = 0; p < n; ++p) {
    if (!actions[p].is_array() || actions[p].empty()) {
      throw ParseError("game: player " + std::to_string(p) +
                       " needs a nonempty action list");
    }
    std::set<std::string> seen;
    for (const json& a : actions[p]) {
      if (!a.is_string()) throw ParseError("game: action names must be strings");
      auto name = a.get<std::string>();
      if (name.empty() || name.find(',') != std::string::npos) {
        throw ParseError("game: action name '" + name +
                         "' must be nonempty and contain no comma");
      }
      if (!seen.insert(name).second) {
        throw ParseError("game: duplicate action '" + name + "' for player " +
                         std::to_string(p));
      }
      names[p].push_back(std::move(name));
    }
  }
  const json& utilities = Field(j, "utilities", "game");
  if (!utilities.is_object()) {
    throw ParseError("game: \"utilities\" must be an object keyed by profile");
  }
  // Build with placeholder payoffs to get profile indexing, then fill.
  std::int64_t count = 1;
  for (const auto& a : names) count *= static_cast<std::int64_t>(a.size());
  FiniteGame shape(names, std::vector<std::vector<double>>(
                              count, std::vector<double>(n, 0.0)));
  std::vector<std::vector<double>> table(count);
  for (const auto& [key, value] : utilities.items()) {
    const std::int64_t k = shape.ProfileIndex(shape.ParseProfile(key));
    if (!table[k].empty()) {
      throw ParseError("game: duplicate profile '" + key + "'");
    }
    if (!value.is_array() || static_cast<int>(value.size()) != n) {
      throw ParseError("game: profile '" + key + "' needs " +
                       std::to_string(n) + " payoffs");
    }
    for (const json& u : value) {
      table[k].push_back(Number(u, "game: payoff at '" + key + "'"));
    }
  }
  for (std::int64_t k = 0; k < count; ++k) {
    if (table[k].empty()) {
      throw ParseError("game: missing profile '" +
                       shape.ProfileName(shape.ProfileAt(k)) + "'");
    }
  }
  try {
    return FiniteGame(std::move(names), table);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("game: ") + e.what());
  }
}

json GameToJson(const FiniteGame& game) {
  json j;
  j["players"] = game.num_players();
  j["actions"] = json::array();
  for (int p = 0; p < game.num_players(); ++p) {
    j["actions"].push_back(game.action_names(p));
  }
  json utilities = json::object();
  for (std::int64_t k = 0; k < game.num_profiles(); ++k) {
    auto payoffs = game.PayoffsAt(k);
    utilities[game.ProfileName(game.ProfileAt(k))] =
        std::vector<double>(payoffs.begin(), payoffs.end());
  }
  j["utilities"] = utilities;
  return j;
}

SanctionGame SanctionGameFromJson(const json& j, const FiniteGame& base) {
  if (j.contains("utilities")) {
    FiniteGame embedded = GameFromJson(j);
    if (!embedded.SameShape(base) ||
        embedded.flat_utilities() != base.flat_utilities()) {
      throw ParseError("sanction file: embedded game differs from the game file");
    }
  }
  const json& menus = Field(j, "classifiers", "sanction file");
  if (!menus.is_array() || static_cast<int>(menus.size()) != base.num_players()) {
    throw ParseError("sanction file: \"classifiers\" needs one menu per player");
  }
  std::vector<std::vector<ClassificationFunction>> out(base.num_players());
  for (int p = 0; p < base.num_players(); ++p) {
    if (!menus[p].is_array()) {
      throw ParseError("sanction file: menu of player " + std::to_string(p) +
                       " must be an array");
    }
    for (const json& c : menus[p]) {
      const std::string where = "sanction file: classifier of player " +
                                std::to_string(p);
      std::vector<ClassificationFunction::Sanction> sanctions;
      if (c.contains("sanctions")) {
        for (const json& s : c.at("sanctions")) {
          const json& prof = Field(s, "profile", where.c_str());
          const json& target = Field(s, "target", where.c_str());
          if (!prof.is_string() || !target.is_number_integer()) {
            throw ParseError(where + ": sanction needs a profile string and an "
                             "integer target");
          }
          const int t = target.get<int>();
          if (t < 0 || t >= base.num_players()) {
            throw ParseError(where + ": target " + std::to_string(t) +
                             " out of range");
          }
          sanctions.push_back(
              {base.ProfileIndex(base.ParseProfile(prof.get<std::string>())), t});
        }
      }
      const double cost = c.contains("cost") ? Number(c.at("cost"), where + " cost") : 0.0;
      const double self_cost =
          c.contains("self_cost") ? Number(c.at("self_cost"), where + " self_cost") : 0.0;
      const std::string name = c.value("name", std::string());
      try {
        out[p].emplace_back(p, name, sanctions, cost, self_cost);
      } catch (const Error& e) {
        throw ParseError(where + ": " + e.what());
      }
    }
  }
  try {
    return SanctionGame(base, std::move(out));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("sanction file: ") + e.what());
  }
}

json SanctionMenusToJson(const SanctionGame& sg) {
  json menus = json::array();
  for (int p = 0; p < sg.num_players(); ++p) {
    json menu = json::array();
    for (const auto& f : sg.menu(p)) {
      json sanctions = json::array();
      for (const auto& s : f.sanctions()) {
        sanctions.push_back(
            {{"profile", sg.base().ProfileName(sg.base().ProfileAt(s.profile))},
             {"target", s.target}});
      }
      menu.push_back({{"name", f.name()},
                      {"sanctions", sanctions},
                      {"cost", f.cost()},
                      {"self_cost", f.self_cost()}});
    }
    menus.push_back(menu);
  }
  return json{{"classifiers", menus}};
}

AdviceDistribution AdviceFromJson(const json& j) {
  const json& support = Field(j, "support", "advice file");
  if (!support.is_array()) {
    throw ParseError("advice file: \"support\" must be an array");
  }
  AdviceDistribution advice;
  for (const json& e : support) {
    const json& indices = Field(e, "profile_indices", "advice file");
    if (!indices.is_array()) {
      throw ParseError("advice file: \"profile_indices\" must be an array");
    }
    ClassifierChoice choice;
    for (const json& i : indices) {
      if (!i.is_number_integer()) {
        throw ParseError("advice file: classifier indices must be integers");
      }
      choice.push_back(i.get<int>());
    }
    advice.support.push_back(
        {std::move(choice), Number(Field(e, "p", "advice file"), "advice file: p")});
  }
  return advice;
}

}  // namespace normsim
