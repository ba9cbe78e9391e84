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

#ifndef NORMSIM_HARNESS_H_
#define NORMSIM_HARNESS_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "normsim/oracle.h"
#include "normsim/orchard_env.h"

namespace normsim {

enum class ExperimentKind { kSingleNonAuthoritative, kMultiInstitution };
enum class FocalKind { kNormative, kBaseline };

std::string ExperimentName(ExperimentKind kind);
std::string FocalName(FocalKind kind);
std::optional<ExperimentKind> ParseExperimentKind(const std::string& name);
std::optional<FocalKind> ParseFocalKind(const std::string& name);

struct OracleConfig {
  enum class Kind { kScripted, kChat };
  Kind kind = Kind::kScripted;
  ChatEndpoint endpoint;
};

struct AgentConfig {
  FocalKind focal = FocalKind::kNormative;
  double beta = 0.5;
  double sanction_threshold = 0.6;
  bool observe_others = true;
  OracleConfig oracle;
};

struct SimulationConfig {
  EnvConfig env;
  AgentConfig agents;
};

// Reads an environment plus agent roster. Collects every schema violation
// before throwing a single ConfigError.
SimulationConfig SimulationConfigFromJson(const nlohmann::json& j);

// Agent names: the focal agent first, then the background community.
std::string AgentName(int index);

// Owns the agents of one episode. Agent 0 is the focal agent.
class Population {
 public:
  Population(const EnvConfig& env, const AgentConfig& agents);

  std::vector<Agent*> handles() const;

 private:
  std::vector<std::unique_ptr<Agent>> agents_;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSingleNonAuthoritative;
  std::vector<int> num_crops = {2, 3, 4, 5};
  std::vector<int> num_background = {1, 2, 3, 4, 5};
  std::vector<int> num_institutions = {2, 3, 4, 5};
  std::vector<int> num_background_followers = {1, 2, 3, 4, 5};
  int trials = 3;
  std::vector<FocalKind> focal_kinds = {FocalKind::kNormative};
  EnvConfig base_env;  // timing, costs and crop count for experiment 2
  AgentConfig agents;
  std::uint64_t seed_base = 42;
};

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);

struct Cell {
  ExperimentKind experiment = ExperimentKind::kSingleNonAuthoritative;
  FocalKind focal = FocalKind::kNormative;
  int num_crops = 0;
  int num_background = 0;
  int num_institutions = 0;

  std::string Id() const;
  auto Key() const {
    return std::tuple(experiment, focal, num_crops, num_background,
                      num_institutions);
  }
  bool operator<(const Cell& other) const { return Key() < other.Key(); }
  bool operator==(const Cell& other) const { return Key() == other.Key(); }
};

std::vector<Cell> ExpandGrid(const ExperimentConfig& cfg);

// Reason a cell cannot run, if any.
std::optional<std::string> CellInfeasibility(const ExperimentConfig& cfg,
                                             const Cell& cell);

// Environment of one trial. Experiment 1 has a single non-authoritative
// institution defied by every background agent; experiment 2 has one
// institution per crop prefix, one of them (chosen by the trial seed)
// authoritative and followed by the whole background.
EnvConfig CellEnv(const ExperimentConfig& cfg, const Cell& cell, int trial);

struct EpisodeMetrics {
  int reference_institution = -1;
  double institution_alignment = 0.0;
  double community_alignment = 0.0;
  int steps_to_convergence = 0;
  double group_welfare = 0.0;
};

struct EpisodeResult {
  Cell cell;
  int trial = 0;
  enum class Status { kOk, kFailed, kSkipped } status = Status::kOk;
  std::string message;
  EnvConfig env;
  std::vector<WorldState> history;
  EpisodeMetrics metrics;
};

EpisodeMetrics ComputeEpisodeMetrics(const std::vector<WorldState>& history,
                                     const EnvConfig& env);

// Never throws: failures and infeasible cells are reported in the status.
EpisodeResult RunCell(const ExperimentConfig& cfg, const Cell& cell, int trial);

struct MetricsRow {
  Cell cell;
  int trial_count = 0;
  double alignment_inst_mean = 0.0;
  double alignment_inst_std = 0.0;
  double alignment_comm_mean = 0.0;
  double alignment_comm_std = 0.0;
  double steps_to_convergence_mean = 0.0;
  double group_welfare_mean = 0.0;
  std::string status = "ok";
};

struct ExperimentOutput {
  std::vector<MetricsRow> rows;  // sorted by cell
  std::vector<EpisodeResult> episodes;
  bool any_failed = false;
};

// Reference implementation: cells and trials one after another.
ExperimentOutput RunExperimentSerial(const ExperimentConfig& cfg);
// Same result with cells and trials spread over `jobs` OpenMP threads.
ExperimentOutput RunExperiment(const ExperimentConfig& cfg, int jobs);

std::vector<MetricsRow> AggregateEpisodes(const std::vector<EpisodeResult>& episodes);

inline constexpr const char* kMetricsCsvHeader =
    "experiment,focal_kind,num_crops,num_background,num_institutions,"
    "trial_count,alignment_inst_mean,alignment_inst_std,alignment_comm_mean,"
    "alignment_comm_std,steps_to_convergence_mean,group_welfare_mean,status";
inline constexpr const char* kMetricsSchema = "normsim.metrics.v1";

std::string MetricsCsv(const std::vector<MetricsRow>& rows);
nlohmann::json MetricsJson(const std::vector<MetricsRow>& rows);
std::string EpisodeFileName(const EpisodeResult& episode);

// metrics.csv, metrics.json and one transcript per completed episode.
void WriteExperimentOutputs(const std::string& out_dir,
                            const ExperimentOutput& output);

// Accepts metrics.csv or metrics.json; rejects any other schema.
std::vector<MetricsRow> ReadMetricsFile(const std::string& path);

struct ComparisonRow {
  ExperimentKind experiment;
  int num_crops = 0;
  int num_background = 0;
  int num_institutions = 0;
  std::optional<MetricsRow> normative;
  std::optional<MetricsRow> baseline;
};

std::vector<ComparisonRow> CompareFocalKinds(const std::vector<MetricsRow>& rows);
std::string ComparisonText(const std::vector<ComparisonRow>& rows);
std::string ComparisonCsv(const std::vector<ComparisonRow>& rows);

}  // namespace normsim

#endif  // NORMSIM_HARNESS_H_
