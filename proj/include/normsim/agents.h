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

#ifndef NORMSIM_AGENTS_H_
#define NORMSIM_AGENTS_H_

#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "normsim/orchard_env.h"

namespace normsim {

// --- Weighted Majority over sanction predictors ------------------------------

enum class ExpertVote { kAbstain, kNoSanction, kSanction };

struct Expert {
  enum class Kind { kInstitution, kCommunity };
  Kind kind = Kind::kCommunity;
  int institution_id = -1;
};

// The institutional parameters: one weight per expert, never renormalized.
struct NormativeState {
  std::vector<Expert> experts;
  std::vector<double> weights;
  double beta = 0.5;
  double sanction_threshold = 0.6;

  // One expert per institution, then the community-majority expert. All
  // weights start at 1.
  static NormativeState ForInstitutions(std::span<const int> institution_ids,
                                        double beta = 0.5,
                                        double sanction_threshold = 0.6);
};

// What the experts know when predicting: each institution's declaration and
// the community's modal crop (absent before anyone has harvested).
struct ExpertContext {
  std::map<int, int> declarations;
  std::optional<int> community_modal;
};

// Declarations from the current signals, modal crop of the other agents'
// last actions.
ExpertContext CurrentContext(const Observation& obs);

std::vector<ExpertVote> ExpertVotes(const NormativeState& state,
                                    const ExpertContext& context, int action);

// Weight of sanction-predicting experts over the weight of all non-abstaining
// experts; 0 when everyone abstains.
double WeightedSanctionVote(std::span<const double> weights,
                            std::span<const ExpertVote> votes);

// Multiplies the weight of every non-abstaining expert whose vote disagrees
// with `sanctioned` by beta.
void PenalizeExperts(std::span<double> weights, std::span<const ExpertVote> votes,
                     bool sanctioned, double beta);

struct SanctionPrediction {
  int action = 0;
  double probability = 0.0;
};

SanctionPrediction PredictSanction(const NormativeState& state,
                                   const Observation& obs, int action);

struct SanctionObservation {
  int action = 0;
  bool sanctioned = false;
};

// `context` is what the experts knew when the observed actions were chosen.
NormativeState WmUpdate(NormativeState state, const ExpertContext& context,
                        std::span<const SanctionObservation> observed);

struct LeadingInstitution {
  int institution_id = -1;
  double share = 0.0;
};

// Heaviest institution expert and its share of the weight that bears on it:
// all institution weights, plus the community weight when the community's
// modal crop contradicts that institution's declaration.
std::optional<LeadingInstitution> LeadInstitution(const NormativeState& state,
                                                  const ExpertContext& context);

struct PolicyDecision {
  int crop = 0;
  std::vector<Criticism> criticisms;
};

// Harvest the crop least likely to be criticized; criticize deviations from
// the leading institution once its share exceeds the sanction threshold.
PolicyDecision NormativeAction(const NormativeState& state,
                               const Observation& obs,
                               std::optional<int> previous_action);

// --- Scripted community policies ---------------------------------------------

// Follow mode harvests the institution's declaration and criticizes every
// deviation from it; defy mode harvests `defy_crop` and criticizes everyone
// who obeyed the institution.
PolicyDecision BackgroundPolicy(const Observation& obs, BackgroundMode mode,
                                std::optional<int> my_institution,
                                std::optional<int> defy_crop);

// Obeys one institution signal, chosen uniformly when there are several.
int BaselinePolicy(const Observation& obs, std::mt19937_64& rng);

// --- Stateful policies behind scripted agents --------------------------------

class Policy {
 public:
  virtual ~Policy() = default;
  virtual Utterance Discuss(const Observation& obs, int turn) = 0;
  virtual int Act(const Observation& obs) = 0;
  // Whether the community will criticize harvesting `crop` this step.
  virtual bool PredictCriticism(const Observation& obs, int crop) = 0;
};

class BackgroundAgentPolicy : public Policy {
 public:
  BackgroundAgentPolicy(BackgroundMode mode, int institution_id,
                        std::optional<int> defy_crop)
      : mode_(mode), institution_id_(institution_id), defy_crop_(defy_crop) {}

  Utterance Discuss(const Observation& obs, int turn) override;
  int Act(const Observation& obs) override;
  bool PredictCriticism(const Observation& obs, int crop) override;

 private:
  BackgroundMode mode_;
  int institution_id_;
  std::optional<int> defy_crop_;
};

class BaselineAgentPolicy : public Policy {
 public:
  explicit BaselineAgentPolicy(std::uint64_t seed) : rng_(seed) {}

  Utterance Discuss(const Observation& obs, int turn) override;
  int Act(const Observation& obs) override;
  bool PredictCriticism(const Observation& obs, int crop) override;

 private:
  std::mt19937_64 rng_;
};

class NormativeAgentPolicy : public Policy {
 public:
  NormativeAgentPolicy(NormativeState state, bool observe_others = true)
      : state_(std::move(state)), observe_others_(observe_others) {}

  Utterance Discuss(const Observation& obs, int turn) override;
  int Act(const Observation& obs) override;
  bool PredictCriticism(const Observation& obs, int crop) override;

  // Folds this step's sanctions of last step's actions into the weights.
  // Idempotent within a step.
  void Update(const Observation& obs);
  std::vector<SanctionPrediction> Predictions(const Observation& obs) const;
  const NormativeState& state() const { return state_; }

 private:
  NormativeState state_;
  bool observe_others_;
  int updated_step_ = -1;
  std::optional<ExpertContext> previous_context_;
  std::optional<int> previous_action_;
};

}  // namespace normsim

#endif  // NORMSIM_AGENTS_H_
