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

#include "normsim/agents.h"

#include <algorithm>
#include <limits>

#include "normsim/error.h"
#include "normsim/rng.h"

namespace normsim {

NormativeState NormativeState::ForInstitutions(
    std::span<const int> institution_ids, double beta,
    double sanction_threshold) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error("beta must lie in (0, 1)");
  if (!(sanction_threshold > 0.0 && sanction_threshold <= 1.0)) {
    throw Error("sanction_threshold must lie in (0, 1]");
  }
  NormativeState state;
  for (int id : institution_ids) {
    state.experts.push_back({Expert::Kind::kInstitution, id});
  }
  state.experts.push_back({Expert::Kind::kCommunity, -1});
  state.weights.assign(state.experts.size(), 1.0);
  state.beta = beta;
  state.sanction_threshold = sanction_threshold;
  return state;
}

ExpertContext CurrentContext(const Observation& obs) {
  ExpertContext context;
  for (const auto& sig : obs.signals) context.declarations[sig.institution_id] = sig.crop;
  context.community_modal = ModalCrop(obs.last_step_actions, obs.self);
  return context;
}

std::vector<ExpertVote> ExpertVotes(const NormativeState& state,
                                    const ExpertContext& context, int action) {
  std::vector<ExpertVote> votes;
  votes.reserve(state.experts.size());
  for (const Expert& e : state.experts) {
    std::optional<int> expected;
    if (e.kind == Expert::Kind::kInstitution) {
      auto it = context.declarations.find(e.institution_id);
      if (it != context.declarations.end()) expected = it->second;
    } else {
      expected = context.community_modal;
    }
    if (!expected) {
      votes.push_back(ExpertVote::kAbstain);
    } else {
      votes.push_back(action != *expected ? ExpertVote::kSanction
                                          : ExpertVote::kNoSanction);
    }
  }
  return votes;
}

double WeightedSanctionVote(std::span<const double> weights,
                            std::span<const ExpertVote> votes) {
  double sanction = 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < votes.size(); ++e) {
    if (votes[e] == ExpertVote::kAbstain) continue;
    total += weights[e];
    if (votes[e] == ExpertVote::kSanction) sanction += weights[e];
  }
  return total > 0.0 ? sanction / total : 0.0;
}

void PenalizeExperts(std::span<double> weights, std::span<const ExpertVote> votes,
                     bool sanctioned, double beta) {
  for (std::size_t e = 0; e < votes.size(); ++e) {
    if (votes[e] == ExpertVote::kAbstain) continue;
    if ((votes[e] == ExpertVote::kSanction) != sanctioned) {
      // Floor keeps weights strictly positive over arbitrarily long runs.
      weights[e] = std::max(weights[e] * beta, std::numeric_limits<double>::min());
    }
  }
}

SanctionPrediction PredictSanction(const NormativeState& state,
                                   const Observation& obs, int action) {
  const auto votes = ExpertVotes(state, CurrentContext(obs), action);
  return {action, WeightedSanctionVote(state.weights, votes)};
}

NormativeState WmUpdate(NormativeState state, const ExpertContext& context,
                        std::span<const SanctionObservation> observed) {
  for (const SanctionObservation& o : observed) {
    const auto votes = ExpertVotes(state, context, o.action);
    PenalizeExperts(state.weights, votes, o.sanctioned, state.beta);
  }
  return state;
}

std::optional<LeadingInstitution> LeadInstitution(const NormativeState& state,
                                                  const ExpertContext& context) {
  int lead = -1;
  double institution_total = 0.0;
  double community_weight = 0.0;
  for (std::size_t e = 0; e < state.experts.size(); ++e) {
    if (state.experts[e].kind == Expert::Kind::kCommunity) {
      community_weight += state.weights[e];
      continue;
    }
    institution_total += state.weights[e];
    if (lead < 0 || state.weights[e] > state.weights[lead]) lead = static_cast<int>(e);
  }
  if (lead < 0) return std::nullopt;
  const int id = state.experts[lead].institution_id;
  double denominator = institution_total;
  auto decl = context.declarations.find(id);
  if (context.community_modal &&
      (decl == context.declarations.end() || *context.community_modal != decl->second)) {
    denominator += community_weight;
  }
  return LeadingInstitution{id, state.weights[lead] / denominator};
}

namespace {

const InstitutionSignal* FindSignal(const std::vector<InstitutionSignal>& signals,
                                    int institution_id) {
  for (const auto& s : signals) {
    if (s.institution_id == institution_id) return &s;
  }
  return nullptr;
}

// The declaration last step's actions are judged against.
const InstitutionSignal* JudgedSignal(const Observation& obs, int institution_id) {
  if (const auto* s = FindSignal(obs.previous_signals, institution_id)) return s;
  return FindSignal(obs.signals, institution_id);
}

std::string CriticizeDisobedience(const Observation& obs, int target,
                                  const InstitutionSignal& sig) {
  return obs.agent_names[target] +
         ", I'm extremely disappointed in your continued disobedience of "
         "Chieftain " + sig.institution_name + "'s guidance!";
}

std::string CriticizeObedience(const Observation& obs, int target,
                               const InstitutionSignal& sig) {
  return obs.agent_names[target] + ", why are you still harvesting " +
         std::string(CropName(sig.crop)) + " just because of Chieftain " +
         sig.institution_name + "'s orders? That is not how we do things here.";
}

std::string JoinTexts(const std::vector<Criticism>& criticisms) {
  std::string text;
  for (const auto& c : criticisms) {
    if (!text.empty()) text += ' ';
    text += c.text;
  }
  return text;
}

}  // namespace

PolicyDecision NormativeAction(const NormativeState& state,
                               const Observation& obs,
                               std::optional<int> previous_action) {
  PolicyDecision decision;
  const ExpertContext context = CurrentContext(obs);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> tied;
  for (int crop = 0; crop < obs.num_crops; ++crop) {
    const double p =
        WeightedSanctionVote(state.weights, ExpertVotes(state, context, crop));
    if (p < best) {
      best = p;
      tied.assign(1, crop);
    } else if (p == best) {
      tied.push_back(crop);
    }
  }
  decision.crop = tied.empty() ? 0 : tied.front();
  if (previous_action &&
      std::find(tied.begin(), tied.end(), *previous_action) != tied.end()) {
    decision.crop = *previous_action;
  }

  if (obs.last_step_actions.empty()) return decision;
  const auto lead = LeadInstitution(state, context);
  if (!lead || lead->share <= state.sanction_threshold) return decision;
  const InstitutionSignal* sig = JudgedSignal(obs, lead->institution_id);
  if (sig == nullptr) return decision;
  for (int j = 0; j < static_cast<int>(obs.last_step_actions.size()); ++j) {
    if (j == obs.self || obs.last_step_actions[j] == sig->crop) continue;
    decision.criticisms.push_back({obs.self, j, obs.last_step_actions[j],
                                   CriticismBasis::kInstitution,
                                   lead->institution_id,
                                   CriticizeDisobedience(obs, j, *sig)});
  }
  return decision;
}

PolicyDecision BackgroundPolicy(const Observation& obs, BackgroundMode mode,
                                std::optional<int> my_institution,
                                std::optional<int> defy_crop) {
  if (obs.signals.empty()) throw Error("background agents need an institution signal");
  const int id = my_institution.value_or(obs.signals.front().institution_id);
  const InstitutionSignal* current = FindSignal(obs.signals, id);
  if (current == nullptr) {
    throw Error("background agent follows unknown institution " + std::to_string(id));
  }
  PolicyDecision decision;
  if (mode == BackgroundMode::kFollowAuthoritative) {
    if (!my_institution) throw Error("follow mode needs an institution");
    decision.crop = current->crop;
  } else {
    if (!defy_crop) throw Error("defy mode needs a crop to plant instead");
    if (*defy_crop == current->crop) {
      throw Error("defy crop equals the institution's declaration");
    }
    decision.crop = *defy_crop;
  }
  const InstitutionSignal* judged = JudgedSignal(obs, id);
  for (int j = 0; j < static_cast<int>(obs.last_step_actions.size()); ++j) {
    if (j == obs.self) continue;
    const int crop = obs.last_step_actions[j];
    if (mode == BackgroundMode::kFollowAuthoritative && crop != judged->crop) {
      decision.criticisms.push_back({obs.self, j, crop, CriticismBasis::kInstitution,
                                     id, CriticizeDisobedience(obs, j, *judged)});
    } else if (mode == BackgroundMode::kDefyInstitution && crop == judged->crop) {
      decision.criticisms.push_back({obs.self, j, crop, CriticismBasis::kCommunity,
                                     -1, CriticizeObedience(obs, j, *judged)});
    }
  }
  return decision;
}

int BaselinePolicy(const Observation& obs, std::mt19937_64& rng) {
  if (obs.signals.empty()) return 0;
  if (obs.signals.size() == 1) return obs.signals.front().crop;
  return obs.signals[UniformIndex(rng, static_cast<int>(obs.signals.size()))].crop;
}

Utterance BackgroundAgentPolicy::Discuss(const Observation& obs, int turn) {
  const PolicyDecision d = BackgroundPolicy(obs, mode_, institution_id_, defy_crop_);
  Utterance u;
  if (turn == 0) u.criticisms = d.criticisms;
  if (!u.criticisms.empty()) {
    u.text = JoinTexts(u.criticisms);
    return u;
  }
  const InstitutionSignal* sig = FindSignal(obs.signals, institution_id_);
  if (mode_ == BackgroundMode::kFollowAuthoritative) {
    u.text = "Let's all harvest " + std::string(CropName(d.crop)) +
             " as Chieftain " + sig->institution_name +
             " asks. It is important for the prosperity of our community.";
  } else {
    u.text = "Remember, the elders taught us to prioritize diversity in our "
             "harvest. Let's not neglect other fruits like " +
             std::string(CropName(d.crop)) + ", just because of Chieftain " +
             sig->institution_name + "'s orders.";
  }
  return u;
}

int BackgroundAgentPolicy::Act(const Observation& obs) {
  return BackgroundPolicy(obs, mode_, institution_id_, defy_crop_).crop;
}

bool BackgroundAgentPolicy::PredictCriticism(const Observation& obs, int crop) {
  const InstitutionSignal* sig = FindSignal(obs.signals, institution_id_);
  if (sig == nullptr) return false;
  return mode_ == BackgroundMode::kFollowAuthoritative ? crop != sig->crop
                                                       : crop == sig->crop;
}

Utterance BaselineAgentPolicy::Discuss(const Observation& /*obs*/, int /*turn*/) {
  return Utterance{0, 0,
                   "Good day, everyone. I'm glad to be part of Skymeadow and "
                   "happy to help with the harvest.",
                   {}};
}

int BaselineAgentPolicy::Act(const Observation& obs) {
  return BaselinePolicy(obs, rng_);
}

bool BaselineAgentPolicy::PredictCriticism(const Observation& /*obs*/,
                                           int /*crop*/) {
  return false;
}

void NormativeAgentPolicy::Update(const Observation& obs) {
  if (obs.t == updated_step_) return;
  if (!obs.last_step_actions.empty() && previous_context_) {
    std::vector<SanctionObservation> observed;
    for (int j = 0; j < static_cast<int>(obs.last_step_actions.size()); ++j) {
      if (j != obs.self && !observe_others_) continue;
      bool sanctioned = false;
      for (const Utterance& u : obs.discussion_so_far) {
        for (const Criticism& c : u.criticisms) {
          if (c.target == j && c.sender != obs.self) sanctioned = true;
        }
      }
      observed.push_back({obs.last_step_actions[j], sanctioned});
    }
    state_ = WmUpdate(std::move(state_), *previous_context_, observed);
  }
  previous_context_ = CurrentContext(obs);
  updated_step_ = obs.t;
}

std::vector<SanctionPrediction> NormativeAgentPolicy::Predictions(
    const Observation& obs) const {
  std::vector<SanctionPrediction> out;
  for (int crop = 0; crop < obs.num_crops; ++crop) {
    out.push_back(PredictSanction(state_, obs, crop));
  }
  return out;
}

Utterance NormativeAgentPolicy::Discuss(const Observation& obs, int turn) {
  Utterance u;
  if (turn == 0) u.criticisms = NormativeAction(state_, obs, previous_action_).criticisms;
  u.text = u.criticisms.empty()
               ? "I'm still learning how things work in Skymeadow. I'll harvest "
                 "whatever keeps our community working together."
               : JoinTexts(u.criticisms);
  return u;
}

int NormativeAgentPolicy::Act(const Observation& obs) {
  Update(obs);
  const int crop = NormativeAction(state_, obs, previous_action_).crop;
  previous_action_ = crop;
  return crop;
}

bool NormativeAgentPolicy::PredictCriticism(const Observation& obs, int crop) {
  const ExpertContext context = CurrentContext(obs);
  if (context.community_modal) return crop != *context.community_modal;
  return PredictSanction(state_, obs, crop).probability > 0.5;
}

}  // namespace normsim
