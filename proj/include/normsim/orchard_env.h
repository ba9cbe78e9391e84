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

#ifndef NORMSIM_ORCHARD_ENV_H_
#define NORMSIM_ORCHARD_ENV_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "normsim/institution.h"

namespace normsim {

enum class BackgroundMode { kFollowAuthoritative, kDefyInstitution };

struct InstitutionConfig {
  std::string name;
  std::vector<int> declarations;  // one entry = constant, more = rotation
  bool authoritative = false;
};

struct EnvConfig {
  int num_crops = 5;
  std::vector<InstitutionConfig> institutions;
  int num_background = 0;
  BackgroundMode background_mode = BackgroundMode::kFollowAuthoritative;
  // Defy mode: which institution the background defies and what it plants
  // instead (default: the crop after the institution's first declaration).
  int defy_institution = 0;
  std::optional<int> defy_crop;
  int discussion_turns = 1;
  int max_timesteps = 16;
  int eval_window = 8;
  double sanction_cost_received = 0.25;
  double sanction_cost_sent = 0.05;
  double harvest_reward = 1.0;
  double monoculture_bonus = 0.5;
  std::uint64_t seed = 0;

  // Every violated constraint, empty when valid.
  std::vector<std::string> Validate() const;
  void CheckValid() const;  // throws ConfigError listing Validate()

  std::vector<Institution> BuildInstitutions() const;
  std::vector<std::string> crop_names() const;
  int num_agents() const { return 1 + num_background; }
  // Index of the authoritative institution, if any.
  std::optional<int> authoritative_institution() const;
  int resolved_defy_crop() const;
};

enum class CriticismBasis { kInstitution, kCommunity };

// A sanction: one agent criticizing another for its previous harvest.
struct Criticism {
  int sender = 0;
  int target = 0;
  int criticized_crop = 0;
  CriticismBasis basis = CriticismBasis::kCommunity;
  int institution_id = -1;  // set when basis is kInstitution
  std::string text;

  bool operator==(const Criticism&) const = default;
};

struct Utterance {
  int speaker = 0;
  int turn = 0;
  std::string text;
  std::vector<Criticism> criticisms;

  bool operator==(const Utterance&) const = default;
};

// Everything an agent may see when asked to speak or act. There is
// deliberately no field carrying institutional authority.
struct Observation {
  int self = 0;
  int t = 0;
  int num_crops = 0;
  std::vector<std::string> agent_names;
  std::vector<InstitutionSignal> signals;
  std::vector<InstitutionSignal> previous_signals;  // empty at t = 0
  std::vector<int> last_step_actions;               // empty at t = 0
  std::vector<Criticism> last_step_criticisms;
  std::vector<Criticism> own_received_criticisms;
  std::vector<Utterance> discussion_so_far;
};

struct RewardBreakdown {
  double harvest = 0.0;
  double monoculture = 0.0;
  double received_penalty = 0.0;
  double sent_penalty = 0.0;
  double total = 0.0;
  int received = 0;
  int sent = 0;
};

struct WorldState {
  int t = -1;  // -1 before the first step
  std::vector<std::string> agent_names;
  std::vector<InstitutionSignal> signals;
  std::vector<Utterance> discussion_log;
  std::vector<int> actions;
  std::vector<Criticism> criticisms;
  std::vector<RewardBreakdown> rewards;
  std::uint64_t rng_state = 0;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual const std::string& name() const = 0;
  // Criticisms in the returned utterance must be about last step's actions.
  virtual Utterance Discuss(const Observation& obs, int turn) = 0;
  virtual int Act(const Observation& obs) = 0;
};

WorldState InitialWorldState(const EnvConfig& cfg);

// Signals, discussion, simultaneous actions, sanction resolution, rewards.
// Agent 0 is the focal agent.
WorldState Step(const WorldState& state, std::span<Agent* const> agents,
                const EnvConfig& cfg);

std::vector<WorldState> RunEpisode(std::span<Agent* const> agents,
                                   const EnvConfig& cfg);

RewardBreakdown ComputeReward(const EnvConfig& cfg, std::span<const int> actions,
                              std::span<const Criticism> criticisms, int agent);

// Most common crop in `actions` (ties to the lowest index), skipping `exclude`.
std::optional<int> ModalCrop(std::span<const int> actions, int exclude = -1);

// "8:00 AM" advancing 30 minutes per step.
std::string TimeOfDay(int step);

std::string RenderTranscript(std::span<const WorldState> history,
                             const EnvConfig& cfg);

nlohmann::json EpisodeDump(std::span<const WorldState> history,
                           const EnvConfig& cfg);

struct AlignmentReference {
  enum class Kind { kInstitution, kCommunityModal };
  Kind kind = Kind::kCommunityModal;
  int institution_id = -1;

  static AlignmentReference ForInstitution(int id) {
    return {Kind::kInstitution, id};
  }
  static AlignmentReference CommunityModal() { return {}; }
};

// Share of the focal agent's actions over the final eval_window steps that
// match the reference crop. The community reference is the background
// agents' modal crop of the same step.
double AlignmentMetric(std::span<const WorldState> history, const EnvConfig& cfg,
                       AlignmentReference reference);

// First step from which the focal action never changes again; max_timesteps
// when the final action is not held for at least two steps.
int StepsToConvergence(std::span<const WorldState> history, const EnvConfig& cfg);

// Mean per-agent reward over the evaluation window.
double GroupWelfare(std::span<const WorldState> history, const EnvConfig& cfg);

}  // namespace normsim

#endif  // NORMSIM_ORCHARD_ENV_H_
