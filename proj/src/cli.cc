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


#include "normsim/cli.h"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "normsim/error.h"
#include "normsim/game.h"
#include "normsim/game_io.h"
#include "normsim/harness.h"
#include "normsim/sanction.h"

namespace normsim {
namespace {

using nlohmann::json;

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string Fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string PlayerSet(const std::vector<int>& players) {
  std::string s = "{";
  for (std::size_t i = 0; i < players.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(players[i]);
  }
  return s + "}";
}

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

struct AnalyzeOptions {
  std::vector<std::string> files;
  std::string target;
  std::string mode = "literal";
  bool json = false;
};

int Analyze(const AnalyzeOptions& opt, std::ostream& out, std::ostream& err) {
  const FiniteGame game = GameFromJson(LoadJsonFile(opt.files.at(0)));
  for (const auto& w : game.Warnings()) err << "warning: " << w << "\n";
  const CooperationDilemmaReport dilemma = DetectCooperationDilemma(game);
  json report;
  int status = kExitOk;

  std::vector<double> deltas;
  for (int i = 0; i < game.num_players(); ++i) {
    deltas.push_back(DeviationIncentive(game, dilemma.social_optimum, i));
  }
  double welfare = 0.0;
  for (int i = 0; i < game.num_players(); ++i) {
    welfare += game.Utility(dilemma.social_optimum, i);
  }
  std::string delta_text = "(";
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    delta_text += (i ? "," : "") + Num(deltas[i]);
  }
  delta_text += ")";
  std::string text;
  text += "game: " + std::to_string(game.num_players()) + " players, " +
          std::to_string(game.num_profiles()) + " profiles\n";
  text += "social optimum: " + game.ProfileName(dilemma.social_optimum) +
          " (welfare " + Num(welfare) + ")\n";
  text += "cooperation dilemma: " +
          (dilemma.any() ? "players " + PlayerSet(dilemma.players_in_dilemma())
                         : std::string("none")) +
          ", Δ = " + delta_text + "\n";
  report["players"] = game.num_players();
  report["social_optimum"] = game.ProfileName(dilemma.social_optimum);
  report["social_welfare"] = welfare;
  report["deviation_incentives"] = deltas;
  report["dilemma_players"] = dilemma.players_in_dilemma();

  Profile target = dilemma.social_optimum;
  if (!opt.target.empty()) target = game.ParseProfile(opt.target);

  if (opt.files.size() >= 2) {
    const SanctionGame sg = SanctionGameFromJson(LoadJsonFile(opt.files[1]), game);
    const auto base_warnings = game.Warnings();
    for (const auto& w : sg.Warnings()) {
      if (std::find(base_warnings.begin(), base_warnings.end(), w) == base_warnings.end()) {
        err << "warning: " << w << "\n";
      }
    }
    const FeasibilityReport f = EnforcementFeasibility(sg, target);
    text += "target: " + game.ProfileName(target) + "\n";
    json players = json::array();
    std::vector<int> blocked;
    for (int i = 0; i < game.num_players(); ++i) {
      const PlayerFeasibility& p = f.players[i];
      text += "player " + std::to_string(i) + ": Δ = " + Num(p.delta);
      if (p.deviation >= 0) {
        text += ", deviation " + game.action_names(i)[p.deviation] +
                ", minimax = " + Num(p.minimax) + ", -Δ > minimax: " +
                (p.minimax_condition ? "yes" : "no");
      }
      text += ", enforceable: " + std::string(p.enforceable ? "yes" : "no") + "\n";
      if (!p.enforceable) blocked.push_back(i);
      players.push_back({{"delta", p.delta},
                         {"deviation", p.deviation},
                         {"minimax", p.minimax},
                         {"minimax_condition", p.minimax_condition},
                         {"enforceable", p.enforceable}});
    }
    if (f.enforceable) {
      text += "enforceable: yes (" +
              (game.num_players() == 2 ? std::string("both players")
                                       : "all " + std::to_string(game.num_players()) +
                                             " players") +
              ")\n";
    } else if (!blocked.empty()) {
      text += "enforceable: no (players " + PlayerSet(blocked) + ")\n";
    } else {
      text += "enforceable: no (no classifier profile in the menus makes the "
              "target a Nash equilibrium)\n";
    }
    json feasibility = {{"target", game.ProfileName(target)},
                        {"players", players},
                        {"enforceable", f.enforceable},
                        {"note", f.note}};
    if (f.witness) {
      std::string names;
      for (int i = 0; i < game.num_players(); ++i) {
        names += (i ? ", " : "") + sg.classifier(i, (*f.witness)[i]).name();
      }
      const FiniteGame transformed = ApplyTransform(sg, *f.witness);
      std::vector<int> resolved;
      for (int i = 0; i < game.num_players(); ++i) {
        if (IsDilemmaResolving(game, transformed, i)) resolved.push_back(i);
      }
      text += "witness: [" + names + "]\n";
      text += "target is Nash after transform: " +
              std::string(IsNash(transformed, target) ? "yes" : "no") + "\n";
      text += "dilemma resolving under witness: " +
              (resolved.empty() ? std::string("none") : "players " + PlayerSet(resolved)) +
              "\n";
      feasibility["witness"] = *f.witness;
      feasibility["dilemma_resolving_players"] = resolved;
    } else {
      feasibility["witness"] = nullptr;
    }
    if (!f.note.empty()) text += "note: " + f.note + "\n";
    report["feasibility"] = feasibility;

    if (opt.files.size() >= 3) {
      const AdviceDistribution advice = AdviceFromJson(LoadJsonFile(opt.files[2]));
      advice.Validate(sg);
      const CeMode mode = opt.mode == "conditioned" ? CeMode::kConditioned
                                                    : CeMode::kLiteral;
      const CeReport ce = VerifyCorrelatedEquilibrium(sg, advice, target, mode);
      text += "advice (" + opt.mode + ") at " + game.ProfileName(target) + ": ";
      json advice_json = {{"mode", opt.mode},
                          {"holds", ce.holds},
                          {"worst_violation", ce.worst_violation}};
      if (ce.holds) {
        text += "holds\n";
      } else {
        status = kExitFailure;
        text += "violated, worst_violation = " + Num(ce.worst_violation) +
                " (player " + std::to_string(ce.violating_player) +
                ", alternative '" +
                sg.classifier(ce.violating_player, ce.violating_deviation).name() +
                "')\n";
        advice_json["violating_player"] = ce.violating_player;
        advice_json["violating_deviation"] = ce.violating_deviation;
        if (ce.violating_recommendation >= 0) {
          advice_json["violating_recommendation"] = ce.violating_recommendation;
        }
      }
      report["advice"] = advice_json;
    }
  } else if (opt.files.size() >= 3) {
    throw ConfigError("an advice file needs a sanction file");
  }
  if (opt.json) {
    out << report.dump(2) << "\n";
  } else {
    out << text;
  }
  return status;
}

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string oracle;
  bool json = false;
};

int Simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  SimulationConfig cfg = SimulationConfigFromJson(LoadJsonFile(opt.config));
  if (opt.seed) cfg.env.seed = *opt.seed;
  if (opt.oracle == "chat") cfg.agents.oracle.kind = OracleConfig::Kind::kChat;
  if (opt.oracle == "scripted") cfg.agents.oracle.kind = OracleConfig::Kind::kScripted;
  Population population(cfg.env, cfg.agents);
  const std::vector<Agent*> handles = population.handles();
  std::vector<WorldState> history;
  try {
    history = RunEpisode(handles, cfg.env);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    err << "error: episode failed: " << e.what() << "\n";
    return kExitFailure;
  }
  const std::filesystem::path dir(opt.out_dir);
  std::filesystem::create_directories(dir);
  WriteFile(dir / "transcript.txt", RenderTranscript(history, cfg.env));
  WriteFile(dir / "episode.json", EpisodeDump(history, cfg.env).dump(2) + "\n");

  json metrics;
  json inst = json::array();
  std::string text = "episode: " + std::to_string(history.size()) + " steps, " +
                     std::to_string(cfg.env.num_agents()) + " agents, seed " +
                     std::to_string(cfg.env.seed) + "\n";
  for (std::size_t i = 0; i < cfg.env.institutions.size(); ++i) {
    const double a = AlignmentMetric(
        history, cfg.env, AlignmentReference::ForInstitution(static_cast<int>(i)));
    text += "institution alignment (" + cfg.env.institutions[i].name + "): " +
            Fixed3(a) + "\n";
    inst.push_back({{"institution", cfg.env.institutions[i].name}, {"alignment", a}});
  }
  const double comm =
      AlignmentMetric(history, cfg.env, AlignmentReference::CommunityModal());
  const int steps = StepsToConvergence(history, cfg.env);
  const double welfare = GroupWelfare(history, cfg.env);
  text += "community alignment: " + Fixed3(comm) + "\n";
  text += "steps to convergence: " + std::to_string(steps) + "\n";
  text += "group welfare: " + Fixed3(welfare) + "\n";
  text += "wrote " + (dir / "transcript.txt").string() + " and " +
          (dir / "episode.json").string() + "\n";
  metrics = {{"steps", history.size()},
             {"seed", cfg.env.seed},
             {"institution_alignment", inst},
             {"community_alignment", comm},
             {"steps_to_convergence", steps},
             {"group_welfare", welfare},
             {"transcript", (dir / "transcript.txt").string()},
             {"episode", (dir / "episode.json").string()}};
  if (opt.json) {
    out << metrics.dump(2) << "\n";
  } else {
    out << text;
  }
  return kExitOk;
}

struct ExperimentOptions {
  std::string config;
  std::string out_dir = "out";
  int jobs = 0;
  bool json = false;
};

int Experiment(const ExperimentOptions& opt, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = ExperimentConfigFromJson(LoadJsonFile(opt.config));
  const ExperimentOutput result = RunExperiment(cfg, opt.jobs);
  WriteExperimentOutputs(opt.out_dir, result);
  for (const auto& e : result.episodes) {
    if (e.status == EpisodeResult::Status::kFailed) {
      err << "episode " << e.cell.Id() << " trial " << e.trial
          << " failed: " << e.message << "\n";
    }
  }
  if (opt.json) {
    out << MetricsJson(result.rows).dump(2) << "\n";
  } else {
    out << ComparisonText(CompareFocalKinds(result.rows));
    out << "wrote " << (std::filesystem::path(opt.out_dir) / "metrics.csv").string()
        << "\n";
  }
  return result.any_failed ? kExitFailure : kExitOk;
}

struct ReportOptions {
  std::vector<std::string> files;
  std::string out_dir;
  bool json = false;
};

int Report(const ReportOptions& opt, std::ostream& out, std::ostream&) {
  std::vector<MetricsRow> rows;
  for (const auto& f : opt.files) {
    auto more = ReadMetricsFile(f);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  const std::vector<ComparisonRow> table = CompareFocalKinds(rows);
  if (!opt.out_dir.empty()) {
    const std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    WriteFile(dir / "comparison.csv", ComparisonCsv(table));
    WriteFile(dir / "comparison.txt", ComparisonText(table));
  }
  if (opt.json) {
    json list = json::array();
    for (const auto& r : table) {
      json row = {{"experiment", ExperimentName(r.experiment)},
                  {"num_crops", r.num_crops},
                  {"num_background", r.num_background},
                  {"num_institutions", r.num_institutions}};
      for (const auto& [key, m] : {std::pair{"normative", &r.normative},
                                   std::pair{"baseline", &r.baseline}}) {
        if (!*m) {
          row[key] = nullptr;
          continue;
        }
        row[key] = {{"trial_count", (*m)->trial_count},
                    {"alignment_inst_mean", (*m)->alignment_inst_mean},
                    {"alignment_inst_std", (*m)->alignment_inst_std},
                    {"alignment_comm_mean", (*m)->alignment_comm_mean},
                    {"alignment_comm_std", (*m)->alignment_comm_std},
                    {"status", (*m)->status}};
      }
      list.push_back(std::move(row));
    }
    out << json{{"rows", list}}.dump(2) << "\n";
  } else {
    out << ComparisonText(table);
  }
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Normative simulation and sanction-game analysis toolkit", "normsim"};
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  CLI::App* a = app.add_subcommand("analyze", "Analyze a game, its sanction menus and advice");
  a->add_option("files", analyze.files,
                "game.json [sanctions.json [advice.json]]")
      ->required()
      ->expected(1, 3)
      ->check(CLI::ExistingFile);
  a->add_option("--target", analyze.target,
                "Target profile such as C,C (default: the social optimum)");
  a->add_option("--mode", analyze.mode, "Advice check: literal or conditioned")
      ->check(CLI::IsMember({"literal", "conditioned"}));
  a->add_flag("--json", analyze.json, "Machine-readable output");

  SimulateOptions simulate;
  CLI::App* s = app.add_subcommand("simulate", "Run one orchard episode");
  s->add_option("config", simulate.config, "Simulation config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  s->add_option("--seed", simulate.seed, "Override the config seed");
  s->add_option("--out", simulate.out_dir, "Output directory")->capture_default_str();
  s->add_option("--oracle", simulate.oracle, "Focal oracle: scripted or chat")
      ->check(CLI::IsMember({"scripted", "chat"}));
  s->add_flag("--json", simulate.json, "Machine-readable output");

  ExperimentOptions experiment;
  CLI::App* e = app.add_subcommand("experiment", "Run an experiment grid");
  e->add_option("config", experiment.config, "Experiment config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--out", experiment.out_dir, "Output directory")->capture_default_str();
  e->add_option("--jobs", experiment.jobs,
                "Worker threads (default: number of logical processors)")
      ->check(CLI::NonNegativeNumber);
  e->add_flag("--json", experiment.json, "Machine-readable output");

  ReportOptions report;
  CLI::App* r = app.add_subcommand("report", "Compare normative and baseline metrics");
  r->add_option("files", report.files, "metrics.csv or metrics.json files")
      ->required()
      ->check(CLI::ExistingFile);
  r->add_option("--out", report.out_dir, "Directory for comparison.csv and comparison.txt");
  r->add_flag("--json", report.json, "Machine-readable output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (a->parsed()) return Analyze(analyze, out, err);
    if (s->parsed()) return Simulate(simulate, out, err);
    if (e->parsed()) return Experiment(experiment, out, err);
    if (r->parsed()) return Report(report, out, err);
  } catch (const ConfigError& ex) {
    err << "configuration error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& ex) {
    err << "parse error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const OracleError& ex) {
    err << "oracle error: " << ex.what() << "\n";
    return kExitFailure;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace normsim
