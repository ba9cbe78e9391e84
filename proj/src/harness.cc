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


#include "normsim/harness.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>

#include "normsim/agents.h"
#include "normsim/error.h"
#include "normsim/game_io.h"
#include "normsim/institution.h"
#include "normsim/rng.h"

namespace normsim {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 12> kAgentNames = {
    "Alice", "John", "Anthony", "Jane",  "Darcy", "Miguel",
    "Priya", "Tomas", "Wren",   "Yusuf", "Hana",  "Oskar"};

std::string Join(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

std::string Indexed(const std::string& where, std::size_t i) {
  return where + "[" + std::to_string(i) + "]";
}

// Reads typed fields, recording every violation instead of stopping at the
// first one.
class SchemaReader {
 public:
  void Fail(const std::string& where, const std::string& msg) {
    errors_.push_back(where + ": " + msg);
  }

  bool Object(const json& j, const std::string& where,
              std::initializer_list<std::string_view> allowed) {
    return Object(j, where, std::span<const std::string_view>(allowed.begin(), allowed.size()));
  }

  bool Object(const json& j, const std::string& where,
              std::span<const std::string_view> allowed) {
    if (!j.is_object()) {
      Fail(where.empty() ? "config" : where, "must be an object");
      return false;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
        Fail(Join(where, it.key()), "unknown field");
      }
    }
    return true;
  }

  void Int(const json& j, std::string_view key, const std::string& where,
           int* out) {
    const json* v = Find(j, key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<std::int64_t>() < INT32_MIN ||
        v->get<std::int64_t>() > INT32_MAX) {
      Fail(Join(where, key), "must be an integer");
      return;
    }
    *out = v->get<int>();
  }

  void Seed(const json& j, std::string_view key, const std::string& where,
            std::uint64_t* out) {
    const json* v = Find(j, key);
    if (!v) return;
    if (v->is_number_unsigned()) {
      *out = v->get<std::uint64_t>();
    } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
      *out = static_cast<std::uint64_t>(v->get<std::int64_t>());
    } else {
      Fail(Join(where, key), "must be a nonnegative 64-bit integer");
    }
  }

  void Real(const json& j, std::string_view key, const std::string& where,
            double* out) {
    const json* v = Find(j, key);
    if (!v) return;
    if (!v->is_number()) {
      Fail(Join(where, key), "must be a number");
      return;
    }
    *out = v->get<double>();
  }

  void Bool(const json& j, std::string_view key, const std::string& where,
            bool* out) {
    const json* v = Find(j, key);
    if (!v) return;
    if (!v->is_boolean()) {
      Fail(Join(where, key), "must be true or false");
      return;
    }
    *out = v->get<bool>();
  }

  void String(const json& j, std::string_view key, const std::string& where,
              std::string* out) {
    const json* v = Find(j, key);
    if (!v) return;
    if (!v->is_string()) {
      Fail(Join(where, key), "must be a string");
      return;
    }
    *out = v->get<std::string>();
  }

  void IntList(const json& j, std::string_view key, const std::string& where,
               std::vector<int>* out) {
    const json* v = Find(j, key);
    if (!v) return;
    const std::string field = Join(where, key);
    if (!v->is_array() || v->empty()) {
      Fail(field, "must be a nonempty list of integers");
      return;
    }
    std::vector<int> values;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_integer()) {
        Fail(Indexed(field, i), "must be an integer");
        return;
      }
      values.push_back((*v)[i].get<int>());
    }
    *out = std::move(values);
  }

  // A crop by name ("apples") or index.
  std::optional<int> Crop(const json& v, const std::string& where) {
    if (v.is_string()) {
      if (auto c = CropIndex(v.get<std::string>())) return c;
      Fail(where, "unknown crop '" + v.get<std::string>() + "'");
      return std::nullopt;
    }
    if (v.is_number_integer()) {
      const auto c = v.get<std::int64_t>();
      if (c >= 0 && c < kMaxCrops) return static_cast<int>(c);
      Fail(where, "crop index " + std::to_string(c) + " out of range");
      return std::nullopt;
    }
    Fail(where, "must be a crop name");
    return std::nullopt;
  }

  const std::vector<std::string>& errors() const { return errors_; }

  void ThrowIfAny(const std::string& what) const {
    if (errors_.empty()) return;
    std::string msg = "invalid " + what + ":";
    for (const auto& e : errors_) msg += "\n  - " + e;
    throw ConfigError(msg);
  }

 private:
  static const json* Find(const json& j, std::string_view key) {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  std::vector<std::string> errors_;
};

void ReadInstitutions(SchemaReader& r, const json& list, const std::string& where,
                      std::vector<InstitutionConfig>* out) {
  if (!list.is_array()) {
    r.Fail(where, "must be a list");
    return;
  }
  out->clear();
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = Indexed(where, i);
    const json& item = list[i];
    if (!r.Object(item, at, {"name", "crop", "authoritative"})) continue;
    InstitutionConfig inst;
    if (i < kInstitutionNames.size()) inst.name = std::string(kInstitutionNames[i]);
    r.String(item, "name", at, &inst.name);
    r.Bool(item, "authoritative", at, &inst.authoritative);
    if (!item.contains("crop")) {
      r.Fail(Join(at, "crop"), "is required");
    } else if (item["crop"].is_array()) {
      const json& rotation = item["crop"];
      if (rotation.empty()) r.Fail(Join(at, "crop"), "rotation must be nonempty");
      for (std::size_t k = 0; k < rotation.size(); ++k) {
        if (auto c = r.Crop(rotation[k], Indexed(Join(at, "crop"), k))) {
          inst.declarations.push_back(*c);
        }
      }
    } else if (auto c = r.Crop(item["crop"], Join(at, "crop"))) {
      inst.declarations.push_back(*c);
    }
    out->push_back(std::move(inst));
  }
}

void ReadEnvTuning(SchemaReader& r, const json& j, const std::string& where,
                   EnvConfig* env) {
  r.Int(j, "num_crops", where, &env->num_crops);
  r.Int(j, "discussion_turns", where, &env->discussion_turns);
  r.Int(j, "max_timesteps", where, &env->max_timesteps);
  r.Int(j, "eval_window", where, &env->eval_window);
  r.Real(j, "sanction_cost_received", where, &env->sanction_cost_received);
  r.Real(j, "sanction_cost_sent", where, &env->sanction_cost_sent);
  r.Real(j, "harvest_reward", where, &env->harvest_reward);
  r.Real(j, "monoculture_bonus", where, &env->monoculture_bonus);
  if (j.contains("crop_names")) {
    const json& names = j["crop_names"];
    const std::string field = Join(where, "crop_names");
    bool prefix = names.is_array() && !names.empty() &&
                  names.size() <= kCropNames.size();
    for (std::size_t i = 0; prefix && i < names.size(); ++i) {
      prefix = names[i].is_string() && names[i].get<std::string>() == kCropNames[i];
    }
    if (!prefix) {
      r.Fail(field, "must be a prefix of [apples, bananas, peaches, oranges, plums]");
    } else if (j.contains("num_crops") &&
               static_cast<int>(names.size()) != env->num_crops) {
      r.Fail(field, "length disagrees with num_crops");
    } else {
      env->num_crops = static_cast<int>(names.size());
    }
  }
}

constexpr std::array<std::string_view, 9> kTuningKeys = {
    "num_crops",        "crop_names",         "discussion_turns",
    "max_timesteps",    "eval_window",        "sanction_cost_received",
    "sanction_cost_sent", "harvest_reward",   "monoculture_bonus"};

void ReadOracle(SchemaReader& r, const json& o, const std::string& at,
                OracleConfig* config) {
  if (!r.Object(o, at, {"kind", "base_url", "model", "temperature",
                        "timeout_secs", "max_attempts", "initial_backoff_ms"})) {
    return;
  }
  OracleConfig& oc = *config;
  if (o.contains("kind")) {
    std::string kind;
    r.String(o, "kind", at, &kind);
    if (kind == "scripted") {
      oc.kind = OracleConfig::Kind::kScripted;
    } else if (kind == "chat") {
      oc.kind = OracleConfig::Kind::kChat;
    } else if (o["kind"].is_string()) {
      r.Fail(Join(at, "kind"), "must be scripted or chat");
    }
  }
  r.String(o, "base_url", at, &oc.endpoint.base_url);
  r.String(o, "model", at, &oc.endpoint.model);
  r.Real(o, "temperature", at, &oc.endpoint.temperature);
  r.Int(o, "timeout_secs", at, &oc.endpoint.timeout_secs);
  r.Int(o, "max_attempts", at, &oc.endpoint.max_attempts);
  int backoff = static_cast<int>(oc.endpoint.initial_backoff.count());
  r.Int(o, "initial_backoff_ms", at, &backoff);
  oc.endpoint.initial_backoff = std::chrono::milliseconds(backoff);
  if (oc.endpoint.timeout_secs < 1) r.Fail(Join(at, "timeout_secs"), "must be positive");
  if (oc.endpoint.max_attempts < 1) r.Fail(Join(at, "max_attempts"), "must be positive");
  if (backoff < 0) r.Fail(Join(at, "initial_backoff_ms"), "must be nonnegative");
}

void ReadAgent(SchemaReader& r, const json& j, const std::string& where,
               AgentConfig* agent) {
  if (!r.Object(j, where, {"focal", "beta", "sanction_threshold",
                           "observe_others", "oracle"})) {
    return;
  }
  if (j.contains("focal")) {
    std::string focal;
    r.String(j, "focal", where, &focal);
    if (auto f = ParseFocalKind(focal)) {
      agent->focal = *f;
    } else if (j["focal"].is_string()) {
      r.Fail(Join(where, "focal"), "must be normative or baseline");
    }
  }
  r.Real(j, "beta", where, &agent->beta);
  r.Real(j, "sanction_threshold", where, &agent->sanction_threshold);
  r.Bool(j, "observe_others", where, &agent->observe_others);
  if (!(agent->beta > 0.0 && agent->beta < 1.0)) {
    r.Fail(Join(where, "beta"), "must lie in (0, 1)");
  }
  if (!(agent->sanction_threshold > 0.0 && agent->sanction_threshold <= 1.0)) {
    r.Fail(Join(where, "sanction_threshold"), "must lie in (0, 1]");
  }
  if (j.contains("oracle")) ReadOracle(r, j["oracle"], Join(where, "oracle"), &agent->oracle);
}

std::string FocalProfile(FocalKind kind) {
  return kind == FocalKind::kNormative
             ? "A villager of Skymeadow who pays close attention to which "
               "harvests the other villagers criticize."
             : "A villager of Skymeadow who follows the guidance of the "
               "chieftains.";
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string CsvSafe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

MetricsRow RowFromJson(const json& j) {
  MetricsRow row;
  auto exp = ParseExperimentKind(j.at("experiment").get<std::string>());
  auto focal = ParseFocalKind(j.at("focal_kind").get<std::string>());
  if (!exp || !focal) throw ParseError("unknown experiment or focal kind");
  row.cell.experiment = *exp;
  row.cell.focal = *focal;
  const json& cell = j.at("cell");
  row.cell.num_crops = cell.at("num_crops").get<int>();
  row.cell.num_background = cell.at("num_background").get<int>();
  row.cell.num_institutions = cell.at("num_institutions").get<int>();
  row.trial_count = j.at("trial_count").get<int>();
  row.alignment_inst_mean = j.at("alignment_inst").at("mean").get<double>();
  row.alignment_inst_std = j.at("alignment_inst").at("std").get<double>();
  row.alignment_comm_mean = j.at("alignment_comm").at("mean").get<double>();
  row.alignment_comm_std = j.at("alignment_comm").at("std").get<double>();
  row.steps_to_convergence_mean = j.at("steps_to_convergence_mean").get<double>();
  row.group_welfare_mean = j.at("group_welfare_mean").get<double>();
  row.status = j.at("status").get<std::string>();
  return row;
}

}  // namespace

std::string ExperimentName(ExperimentKind kind) {
  return kind == ExperimentKind::kSingleNonAuthoritative ? "single_nonauthoritative"
                                                         : "multi_institution";
}

std::string FocalName(FocalKind kind) {
  return kind == FocalKind::kNormative ? "normative" : "baseline";
}

std::optional<ExperimentKind> ParseExperimentKind(const std::string& name) {
  if (name == "single_nonauthoritative") return ExperimentKind::kSingleNonAuthoritative;
  if (name == "multi_institution") return ExperimentKind::kMultiInstitution;
  return std::nullopt;
}

std::optional<FocalKind> ParseFocalKind(const std::string& name) {
  if (name == "normative") return FocalKind::kNormative;
  if (name == "baseline") return FocalKind::kBaseline;
  return std::nullopt;
}

SimulationConfig SimulationConfigFromJson(const json& j) {
  SchemaReader r;
  SimulationConfig cfg;
  std::vector<std::string_view> keys(kTuningKeys.begin(), kTuningKeys.end());
  for (std::string_view k : {"institutions", "num_background", "background_mode",
                             "defy_institution", "defy_crop", "seed", "agent",
                             "oracle"}) {
    keys.push_back(k);
  }
  if (!j.is_object()) {
    r.Fail("config", "must be an object");
    r.ThrowIfAny("simulation config");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      r.Fail(it.key(), "unknown field");
    }
  }
  EnvConfig& env = cfg.env;
  ReadEnvTuning(r, j, "", &env);
  if (j.contains("institutions")) {
    ReadInstitutions(r, j["institutions"], "institutions", &env.institutions);
  }
  r.Int(j, "num_background", "", &env.num_background);
  if (j.contains("background_mode")) {
    std::string mode;
    r.String(j, "background_mode", "", &mode);
    if (mode == "follow_authoritative") {
      env.background_mode = BackgroundMode::kFollowAuthoritative;
    } else if (mode == "defy_institution") {
      env.background_mode = BackgroundMode::kDefyInstitution;
    } else if (j["background_mode"].is_string()) {
      r.Fail("background_mode", "must be follow_authoritative or defy_institution");
    }
  }
  r.Int(j, "defy_institution", "", &env.defy_institution);
  if (j.contains("defy_crop")) env.defy_crop = r.Crop(j["defy_crop"], "defy_crop");
  r.Seed(j, "seed", "", &env.seed);
  if (j.contains("agent")) ReadAgent(r, j["agent"], "agent", &cfg.agents);
  if (j.contains("oracle")) ReadOracle(r, j["oracle"], "oracle", &cfg.agents.oracle);
  for (const auto& e : env.Validate()) {
    const std::string field = e.substr(0, e.find_first_of(".: "));
    const bool reported = std::any_of(
        r.errors().begin(), r.errors().end(),
        [&](const std::string& prior) { return prior.rfind(field, 0) == 0; });
    const std::size_t space = e.find(' ');
    if (!reported) r.Fail(e.substr(0, space), e.substr(space + 1));
  }
  r.ThrowIfAny("simulation config");
  return cfg;
}

std::string AgentName(int index) {
  if (index >= 0 && index < static_cast<int>(kAgentNames.size())) {
    return std::string(kAgentNames[index]);
  }
  return "Villager" + std::to_string(index);
}

Population::Population(const EnvConfig& env, const AgentConfig& agents) {
  std::vector<int> ids(env.institutions.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::unique_ptr<NormativeAgentPolicy> normative;
  if (agents.focal == FocalKind::kNormative) {
    normative = std::make_unique<NormativeAgentPolicy>(
        NormativeState::ForInstitutions(ids, agents.beta, agents.sanction_threshold),
        agents.observe_others);
  }
  std::unique_ptr<OracleAgent> focal;
  if (agents.oracle.kind == OracleConfig::Kind::kChat) {
    auto oracle = std::make_unique<ChatOracle>(agents.oracle.endpoint,
                                               ChatOracle::ApiKeyFromEnvironment());
    focal = std::make_unique<OracleAgent>(AgentName(0), FocalProfile(agents.focal),
                                          std::move(oracle), std::move(normative));
  } else {
    std::unique_ptr<Policy> policy;
    if (normative) {
      policy = std::move(normative);
    } else {
      policy = std::make_unique<BaselineAgentPolicy>(HashSeed({env.seed, 0}));
    }
    focal = std::make_unique<OracleAgent>(
        AgentName(0), FocalProfile(agents.focal),
        std::make_unique<ScriptedOracle>(std::move(policy)));
  }
  focal->set_num_turns(env.discussion_turns);
  agents_.push_back(std::move(focal));

  const bool follow = env.background_mode == BackgroundMode::kFollowAuthoritative;
  const int institution =
      follow ? env.authoritative_institution().value_or(0) : env.defy_institution;
  std::optional<int> defy_crop;
  if (!follow && env.num_background > 0) defy_crop = env.resolved_defy_crop();
  for (int i = 1; i <= env.num_background; ++i) {
    auto policy = std::make_unique<BackgroundAgentPolicy>(env.background_mode,
                                                          institution, defy_crop);
    auto agent = std::make_unique<OracleAgent>(
        AgentName(i), "A villager of Skymeadow.",
        std::make_unique<ScriptedOracle>(std::move(policy)));
    agent->set_num_turns(env.discussion_turns);
    agents_.push_back(std::move(agent));
  }
}

std::vector<Agent*> Population::handles() const {
  std::vector<Agent*> out;
  for (const auto& a : agents_) out.push_back(a.get());
  return out;
}

ExperimentConfig ExperimentConfigFromJson(const json& j) {
  SchemaReader r;
  ExperimentConfig cfg;
  if (r.Object(j, "", {"experiment", "num_crops", "num_background",
                       "num_institutions", "num_background_followers", "trials",
                       "focal_kind", "env", "agent", "oracle", "seed_base"})) {
    if (!j.contains("experiment")) {
      r.Fail("experiment", "is required");
    } else {
      std::string name;
      r.String(j, "experiment", "", &name);
      if (auto kind = ParseExperimentKind(name)) {
        cfg.experiment = *kind;
      } else if (j["experiment"].is_string()) {
        r.Fail("experiment", "must be single_nonauthoritative or multi_institution");
      }
    }
    r.IntList(j, "num_crops", "", &cfg.num_crops);
    r.IntList(j, "num_background", "", &cfg.num_background);
    r.IntList(j, "num_institutions", "", &cfg.num_institutions);
    r.IntList(j, "num_background_followers", "", &cfg.num_background_followers);
    r.Int(j, "trials", "", &cfg.trials);
    r.Seed(j, "seed_base", "", &cfg.seed_base);
    if (j.contains("focal_kind")) {
      const json& f = j["focal_kind"];
      std::vector<json> items = f.is_array() ? std::vector<json>(f.begin(), f.end())
                                             : std::vector<json>{f};
      cfg.focal_kinds.clear();
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string at = f.is_array() ? Indexed("focal_kind", i) : "focal_kind";
        auto kind = items[i].is_string() ? ParseFocalKind(items[i].get<std::string>())
                                         : std::nullopt;
        if (!kind) {
          r.Fail(at, "must be normative or baseline");
        } else if (std::find(cfg.focal_kinds.begin(), cfg.focal_kinds.end(), *kind) !=
                   cfg.focal_kinds.end()) {
          r.Fail(at, "listed twice");
        } else {
          cfg.focal_kinds.push_back(*kind);
        }
      }
      if (items.empty()) r.Fail("focal_kind", "must be nonempty");
    }
    if (j.contains("env") && r.Object(j["env"], "env", kTuningKeys)) {
      ReadEnvTuning(r, j["env"], "env", &cfg.base_env);
    }
    if (j.contains("agent")) ReadAgent(r, j["agent"], "agent", &cfg.agents);
    if (j.contains("oracle")) ReadOracle(r, j["oracle"], "oracle", &cfg.agents.oracle);
  }
  if (cfg.trials < 1) r.Fail("trials", "must be at least 1");
  for (int c : cfg.num_crops) {
    if (c < 2 || c > kMaxCrops) r.Fail("num_crops", "values must lie in [2, 5]");
  }
  for (int b : cfg.num_background) {
    if (b < 0) r.Fail("num_background", "values must be nonnegative");
  }
  for (int b : cfg.num_background_followers) {
    if (b < 0) r.Fail("num_background_followers", "values must be nonnegative");
  }
  for (int k : cfg.num_institutions) {
    if (k < 1) r.Fail("num_institutions", "values must be positive");
  }
  EnvConfig probe = cfg.base_env;
  probe.institutions = {InstitutionConfig{"probe", {0}, false}};
  probe.num_background = 0;
  for (const auto& e : probe.Validate()) r.Fail("env", e);
  r.ThrowIfAny("experiment config");
  return cfg;
}

std::string Cell::Id() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s_%s_c%d_b%d_k%d",
                experiment == ExperimentKind::kSingleNonAuthoritative ? "e1" : "e2",
                FocalName(focal).c_str(), num_crops, num_background,
                num_institutions);
  return buf;
}

std::vector<Cell> ExpandGrid(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (FocalKind focal : cfg.focal_kinds) {
    if (cfg.experiment == ExperimentKind::kSingleNonAuthoritative) {
      for (int c : cfg.num_crops) {
        for (int b : cfg.num_background) {
          cells.push_back(Cell{cfg.experiment, focal, c, b, 1});
        }
      }
    } else {
      for (int k : cfg.num_institutions) {
        for (int b : cfg.num_background_followers) {
          cells.push_back(Cell{cfg.experiment, focal, cfg.base_env.num_crops, b, k});
        }
      }
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

std::optional<std::string> CellInfeasibility(const ExperimentConfig&,
                                             const Cell& cell) {
  if (cell.num_crops < 2 || cell.num_crops > kMaxCrops) {
    return "num_crops " + std::to_string(cell.num_crops) + " outside [2, 5]";
  }
  if (cell.num_institutions > cell.num_crops) {
    return "more institutions (" + std::to_string(cell.num_institutions) +
           ") than crops (" + std::to_string(cell.num_crops) + ")";
  }
  if (cell.num_institutions < 1) return "no institutions";
  if (cell.num_background < 0) return "negative background size";
  return std::nullopt;
}

EnvConfig CellEnv(const ExperimentConfig& cfg, const Cell& cell, int trial) {
  EnvConfig env = cfg.base_env;
  env.num_crops = cell.num_crops;
  env.num_background = cell.num_background;
  // The focal kind is left out so both kinds face the same world.
  env.seed = HashSeed({cfg.seed_base, static_cast<std::uint64_t>(cell.experiment),
                       static_cast<std::uint64_t>(cell.num_crops),
                       static_cast<std::uint64_t>(cell.num_background),
                       static_cast<std::uint64_t>(cell.num_institutions),
                       static_cast<std::uint64_t>(trial)});
  env.institutions.clear();
  env.defy_crop.reset();
  if (cell.experiment == ExperimentKind::kSingleNonAuthoritative) {
    env.institutions.push_back(
        InstitutionConfig{std::string(kInstitutionNames[0]), {0}, false});
    env.background_mode = BackgroundMode::kDefyInstitution;
    env.defy_institution = 0;
    env.defy_crop = 1;
  } else {
    std::mt19937_64 rng(env.seed);
    const int authoritative = UniformIndex(rng, cell.num_institutions);
    for (int i = 0; i < cell.num_institutions; ++i) {
      env.institutions.push_back(InstitutionConfig{
          std::string(kInstitutionNames[i]), {i}, i == authoritative});
    }
    env.background_mode = BackgroundMode::kFollowAuthoritative;
    env.defy_institution = 0;
  }
  return env;
}

EpisodeMetrics ComputeEpisodeMetrics(const std::vector<WorldState>& history,
                                     const EnvConfig& env) {
  EpisodeMetrics m;
  m.reference_institution = env.authoritative_institution().value_or(
      env.background_mode == BackgroundMode::kDefyInstitution ? env.defy_institution
                                                              : 0);
  m.institution_alignment = AlignmentMetric(
      history, env, AlignmentReference::ForInstitution(m.reference_institution));
  m.community_alignment =
      AlignmentMetric(history, env, AlignmentReference::CommunityModal());
  m.steps_to_convergence = StepsToConvergence(history, env);
  m.group_welfare = GroupWelfare(history, env);
  return m;
}

EpisodeResult RunCell(const ExperimentConfig& cfg, const Cell& cell, int trial) {
  EpisodeResult result;
  result.cell = cell;
  result.trial = trial;
  if (auto why = CellInfeasibility(cfg, cell)) {
    result.status = EpisodeResult::Status::kSkipped;
    result.message = *why;
    return result;
  }
  try {
    result.env = CellEnv(cfg, cell, trial);
    result.env.CheckValid();
    AgentConfig agents = cfg.agents;
    agents.focal = cell.focal;
    Population population(result.env, agents);
    const std::vector<Agent*> handles = population.handles();
    result.history = RunEpisode(handles, result.env);
    result.metrics = ComputeEpisodeMetrics(result.history, result.env);
  } catch (const std::exception& e) {
    result.status = EpisodeResult::Status::kFailed;
    result.message = e.what();
  } catch (...) {
    result.status = EpisodeResult::Status::kFailed;
    result.message = "unknown error";
  }
  return result;
}

std::vector<MetricsRow> AggregateEpisodes(const std::vector<EpisodeResult>& episodes) {
  std::map<Cell, std::vector<const EpisodeResult*>> by_cell;
  for (const auto& e : episodes) by_cell[e.cell].push_back(&e);
  std::vector<MetricsRow> rows;
  for (const auto& [cell, list] : by_cell) {
    MetricsRow row;
    row.cell = cell;
    std::vector<EpisodeMetrics> ok;
    int failed = 0;
    std::string skip_reason;
    for (const EpisodeResult* e : list) {
      switch (e->status) {
        case EpisodeResult::Status::kOk: ok.push_back(e->metrics); break;
        case EpisodeResult::Status::kFailed: ++failed; break;
        case EpisodeResult::Status::kSkipped: skip_reason = e->message; break;
      }
    }
    row.trial_count = static_cast<int>(ok.size());
    if (!skip_reason.empty() && ok.empty() && failed == 0) {
      row.status = "skipped: " + skip_reason;
    } else if (failed > 0) {
      row.status = "failed: " + std::to_string(failed) + " of " +
                   std::to_string(list.size()) + " episodes";
    }
    if (!ok.empty()) {
      auto mean_std = [&](auto field, double* mean, double* sd) {
        double sum = 0.0;
        for (const auto& m : ok) sum += field(m);
        *mean = sum / ok.size();
        double var = 0.0;
        for (const auto& m : ok) var += (field(m) - *mean) * (field(m) - *mean);
        *sd = std::sqrt(var / ok.size());
      };
      double unused = 0.0;
      mean_std([](const EpisodeMetrics& m) { return m.institution_alignment; },
               &row.alignment_inst_mean, &row.alignment_inst_std);
      mean_std([](const EpisodeMetrics& m) { return m.community_alignment; },
               &row.alignment_comm_mean, &row.alignment_comm_std);
      mean_std([](const EpisodeMetrics& m) {
                 return static_cast<double>(m.steps_to_convergence);
               },
               &row.steps_to_convergence_mean, &unused);
      mean_std([](const EpisodeMetrics& m) { return m.group_welfare; },
               &row.group_welfare_mean, &unused);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct Task {
  Cell cell;
  int trial;
};

std::vector<Task> Tasks(const ExperimentConfig& cfg) {
  std::vector<Task> tasks;
  for (const Cell& cell : ExpandGrid(cfg)) {
    for (int t = 0; t < cfg.trials; ++t) tasks.push_back(Task{cell, t});
  }
  return tasks;
}

ExperimentOutput Finish(std::vector<EpisodeResult> episodes) {
  ExperimentOutput out;
  out.rows = AggregateEpisodes(episodes);
  for (const auto& e : episodes) {
    if (e.status == EpisodeResult::Status::kFailed) out.any_failed = true;
  }
  out.episodes = std::move(episodes);
  return out;
}

}  // namespace

ExperimentOutput RunExperimentSerial(const ExperimentConfig& cfg) {
  std::vector<EpisodeResult> episodes;
  for (const Task& task : Tasks(cfg)) {
    episodes.push_back(RunCell(cfg, task.cell, task.trial));
  }
  return Finish(std::move(episodes));
}

ExperimentOutput RunExperiment(const ExperimentConfig& cfg, int jobs) {
  const std::vector<Task> tasks = Tasks(cfg);
  std::vector<EpisodeResult> episodes(tasks.size());
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const long n = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    episodes[i] = RunCell(cfg, tasks[i].cell, tasks[i].trial);
  }
  return Finish(std::move(episodes));
}

std::string MetricsCsv(const std::vector<MetricsRow>& rows) {
  std::vector<MetricsRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricsRow& a, const MetricsRow& b) { return a.cell < b.cell; });
  std::string out = std::string(kMetricsCsvHeader) + "\n";
  for (const auto& r : sorted) {
    out += ExperimentName(r.cell.experiment) + "," + FocalName(r.cell.focal) + "," +
           std::to_string(r.cell.num_crops) + "," +
           std::to_string(r.cell.num_background) + "," +
           std::to_string(r.cell.num_institutions) + "," +
           std::to_string(r.trial_count) + "," + Fixed(r.alignment_inst_mean) + "," +
           Fixed(r.alignment_inst_std) + "," + Fixed(r.alignment_comm_mean) + "," +
           Fixed(r.alignment_comm_std) + "," + Fixed(r.steps_to_convergence_mean) +
           "," + Fixed(r.group_welfare_mean) + "," + CsvSafe(r.status) + "\n";
  }
  return out;
}

json MetricsJson(const std::vector<MetricsRow>& rows) {
  std::vector<MetricsRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricsRow& a, const MetricsRow& b) { return a.cell < b.cell; });
  json list = json::array();
  for (const auto& r : sorted) {
    list.push_back({
        {"experiment", ExperimentName(r.cell.experiment)},
        {"focal_kind", FocalName(r.cell.focal)},
        {"cell",
         {{"num_crops", r.cell.num_crops},
          {"num_background", r.cell.num_background},
          {"num_institutions", r.cell.num_institutions}}},
        {"trial_count", r.trial_count},
        {"alignment_inst", {{"mean", r.alignment_inst_mean}, {"std", r.alignment_inst_std}}},
        {"alignment_comm", {{"mean", r.alignment_comm_mean}, {"std", r.alignment_comm_std}}},
        {"steps_to_convergence_mean", r.steps_to_convergence_mean},
        {"group_welfare_mean", r.group_welfare_mean},
        {"status", r.status},
    });
  }
  return json{{"schema", kMetricsSchema}, {"rows", std::move(list)}};
}

std::string EpisodeFileName(const EpisodeResult& episode) {
  return "ep_" + episode.cell.Id() + "_" + std::to_string(episode.trial) + ".txt";
}

void WriteExperimentOutputs(const std::string& out_dir,
                            const ExperimentOutput& output) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  WriteFile(dir / "metrics.csv", MetricsCsv(output.rows));
  WriteFile(dir / "metrics.json", MetricsJson(output.rows).dump(2) + "\n");
  for (const auto& e : output.episodes) {
    if (e.status != EpisodeResult::Status::kOk) continue;
    WriteFile(dir / EpisodeFileName(e), RenderTranscript(e.history, e.env));
  }
}

std::vector<MetricsRow> ReadMetricsFile(const std::string& path) {
  const std::string text = ReadFile(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<MetricsRow> rows;
  if (first != std::string::npos && text[first] == '{') {
    const json j = ParseJsonText(text, path);
    if (!j.contains("schema") || j["schema"] != kMetricsSchema) {
      throw ParseError(path + ": schema is not " + std::string(kMetricsSchema));
    }
    try {
      for (const json& row : j.at("rows")) rows.push_back(RowFromJson(row));
    } catch (const json::exception& e) {
      throw ParseError(path + ": malformed metrics row: " + e.what());
    }
    return rows;
  }
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsCsvHeader) {
    throw ParseError(path + ":1: header does not match the metrics schema");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitCsvLine(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (f.size() != 13) throw ParseError(where + ": expected 13 fields");
    MetricsRow row;
    auto exp = ParseExperimentKind(f[0]);
    auto focal = ParseFocalKind(f[1]);
    if (!exp || !focal) throw ParseError(where + ": unknown experiment or focal kind");
    try {
      row.cell = Cell{*exp, *focal, std::stoi(f[2]), std::stoi(f[3]), std::stoi(f[4])};
      row.trial_count = std::stoi(f[5]);
      row.alignment_inst_mean = std::stod(f[6]);
      row.alignment_inst_std = std::stod(f[7]);
      row.alignment_comm_mean = std::stod(f[8]);
      row.alignment_comm_std = std::stod(f[9]);
      row.steps_to_convergence_mean = std::stod(f[10]);
      row.group_welfare_mean = std::stod(f[11]);
    } catch (const std::logic_error&) {
      throw ParseError(where + ": malformed number");
    }
    row.status = f[12];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ComparisonRow> CompareFocalKinds(const std::vector<MetricsRow>& rows) {
  std::map<std::tuple<ExperimentKind, int, int, int>, ComparisonRow> merged;
  for (const auto& r : rows) {
    const auto key = std::tuple(r.cell.experiment, r.cell.num_crops,
                                r.cell.num_background, r.cell.num_institutions);
    auto [it, inserted] = merged.try_emplace(key);
    ComparisonRow& c = it->second;
    if (inserted) {
      c.experiment = r.cell.experiment;
      c.num_crops = r.cell.num_crops;
      c.num_background = r.cell.num_background;
      c.num_institutions = r.cell.num_institutions;
    }
    auto& slot = r.cell.focal == FocalKind::kNormative ? c.normative : c.baseline;
    if (slot) throw Error("duplicate metrics row for cell " + r.cell.Id());
    slot = r;
  }
  std::vector<ComparisonRow> out;
  for (auto& [key, row] : merged) out.push_back(std::move(row));
  return out;
}

std::string ComparisonText(const std::vector<ComparisonRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %5s %10s %12s  %-17s %-9s  %-17s %-9s %7s\n",
                "experiment", "crops", "background", "institutions",
                "normative inst", "comm", "baseline inst", "comm", "gap");
  out += buf;
  auto mean_sd = [](const std::optional<MetricsRow>& r) {
    if (!r || r->trial_count == 0) return std::string("-");
    char b[48];
    std::snprintf(b, sizeof(b), "%.3f +/- %.3f", r->alignment_inst_mean,
                  r->alignment_inst_std);
    return std::string(b);
  };
  auto comm = [](const std::optional<MetricsRow>& r) {
    if (!r || r->trial_count == 0) return std::string("-");
    char b[24];
    std::snprintf(b, sizeof(b), "%.3f", r->alignment_comm_mean);
    return std::string(b);
  };
  for (const auto& r : rows) {
    std::string gap = "-";
    if (r.normative && r.baseline && r.normative->trial_count > 0 &&
        r.baseline->trial_count > 0) {
      char b[24];
      std::snprintf(b, sizeof(b), "%+.3f",
                    r.normative->alignment_inst_mean - r.baseline->alignment_inst_mean);
      gap = b;
    }
    std::snprintf(buf, sizeof(buf), "%-24s %5d %10d %12d  %-17s %-9s  %-17s %-9s %7s\n",
                  ExperimentName(r.experiment).c_str(), r.num_crops, r.num_background,
                  r.num_institutions, mean_sd(r.normative).c_str(),
                  comm(r.normative).c_str(), mean_sd(r.baseline).c_str(),
                  comm(r.baseline).c_str(), gap.c_str());
    out += buf;
  }
  return out;
}

std::string ComparisonCsv(const std::vector<ComparisonRow>& rows) {
  std::string out =
      "experiment,num_crops,num_background,num_institutions,"
      "normative_alignment_inst_mean,normative_alignment_inst_std,"
      "normative_alignment_comm_mean,baseline_alignment_inst_mean,"
      "baseline_alignment_inst_std,baseline_alignment_comm_mean,"
      "alignment_inst_gap\n";
  auto cols = [](const std::optional<MetricsRow>& r) {
    if (!r || r->trial_count == 0) return std::string(",,");
    return Fixed(r->alignment_inst_mean) + "," + Fixed(r->alignment_inst_std) + "," +
           Fixed(r->alignment_comm_mean);
  };
  for (const auto& r : rows) {
    std::string gap;
    if (r.normative && r.baseline && r.normative->trial_count > 0 &&
        r.baseline->trial_count > 0) {
      gap = Fixed(r.normative->alignment_inst_mean - r.baseline->alignment_inst_mean);
    }
    out += ExperimentName(r.experiment) + "," + std::to_string(r.num_crops) + "," +
           std::to_string(r.num_background) + "," +
           std::to_string(r.num_institutions) + "," + cols(r.normative) + "," +
           cols(r.baseline) + "," + gap + "\n";
  }
  return out;
}

}  // namespace normsim
