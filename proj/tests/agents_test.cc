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

#include <array>
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "normsim/error.h"
#include "normsim/orchard_env.h"

namespace normsim {
namespace {

constexpr int kApples = 0;
constexpr int kBananas = 1;
constexpr int kPeaches = 2;

InstitutionSignal Signal(int id, int crop, int t = 0) {
  return {id, id == 0 ? "Ophilia" : "Bram", t, crop, SignalText(crop)};
}

// Agent 0 observing a world of `n` agents at step t with the given previous
// actions.
Observation MakeObs(int t, std::vector<InstitutionSignal> signals,
                    std::vector<int> last_actions, int n = 4) {
  Observation obs;
  obs.self = 0;
  obs.t = t;
  obs.num_crops = 5;
  for (int i = 0; i < n; ++i) obs.agent_names.push_back("A" + std::to_string(i));
  obs.signals = signals;
  if (t > 0) obs.previous_signals = signals;
  obs.last_step_actions = std::move(last_actions);
  return obs;
}

NormativeState OneInstitution(double beta = 0.5) {
  const std::array<int, 1> ids{0};
  return NormativeState::ForInstitutions(ids, beta);
}

TEST(NormativeStateTest, OneExpertPerInstitutionPlusCommunity) {
  const std::array<int, 3> ids{0, 1, 2};
  const NormativeState s = NormativeState::ForInstitutions(ids);
  ASSERT_EQ(s.experts.size(), 4u);
  EXPECT_EQ(s.experts.back().kind, Expert::Kind::kCommunity);
  for (double w : s.weights) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(s.beta, 0.5);
  EXPECT_EQ(s.sanction_threshold, 0.6);
  EXPECT_THROW(NormativeState::ForInstitutions(ids, 1.0), Error);
  EXPECT_THROW(NormativeState::ForInstitutions(ids, 0.5, 0.0), Error);
}

// --- PredictSanction ---------------------------------------------------------

TEST(PredictSanctionTest, SplitVoteIsOneHalf) {
  const NormativeState s = OneInstitution();
  // Others all harvested bananas: community modal is bananas.
  const Observation obs = MakeObs(1, {Signal(0, kApples)}, {kApples, kBananas, kBananas, kBananas});
  EXPECT_DOUBLE_EQ(PredictSanction(s, obs, kApples).probability, 0.5);
}

TEST(PredictSanctionTest, CollapsedInstitutionWeight) {
  NormativeState s = OneInstitution();
  s.weights = {0.0625, 1.0};
  const Observation obs = MakeObs(1, {Signal(0, kApples)}, {kApples, kBananas, kBananas, kBananas});
  EXPECT_NEAR(PredictSanction(s, obs, kApples).probability, 1.0 / 1.0625, 1e-12);
  EXPECT_NEAR(PredictSanction(s, obs, kApples).probability, 0.941, 1e-3);
}

TEST(PredictSanctionTest, CommunityAbstainsAtFirstStep) {
  const NormativeState s = OneInstitution();
  const Observation obs = MakeObs(0, {Signal(0, kApples)}, {});
  EXPECT_EQ(PredictSanction(s, obs, kApples).probability, 0.0);
  EXPECT_EQ(PredictSanction(s, obs, kBananas).probability, 1.0);
}

TEST(PredictSanctionTest, AllAbstainIsZero) {
  const NormativeState s = NormativeState::ForInstitutions({});
  const Observation obs = MakeObs(0, {}, {});
  for (int c = 0; c < 5; ++c) EXPECT_EQ(PredictSanction(s, obs, c).probability, 0.0);
}

// --- WmUpdate ----------------------------------------------------------------

ExpertContext AppleContext(std::optional<int> modal) {
  ExpertContext ctx;
  ctx.declarations[0] = kApples;
  ctx.community_modal = modal;
  return ctx;
}

TEST(WmUpdateTest, OneWrongPrediction) {
  // Apples harvested and sanctioned: the institution said no sanction.
  const std::array<SanctionObservation, 1> obs{{{kApples, true}}};
  const NormativeState s = WmUpdate(OneInstitution(), AppleContext(kBananas), obs);
  EXPECT_EQ(s.weights[0], 0.5);
  EXPECT_EQ(s.weights[1], 1.0);
}

TEST(WmUpdateTest, FourWrongPredictions) {
  const std::array<SanctionObservation, 4> obs{
      {{kApples, true}, {kApples, true}, {kApples, true}, {kApples, true}}};
  const NormativeState s = WmUpdate(OneInstitution(), AppleContext(kBananas), obs);
  EXPECT_EQ(s.weights[0], 0.0625);
  EXPECT_EQ(s.weights[1], 1.0);
}

TEST(WmUpdateTest, BothCorrectLeavesWeights) {
  // Both predict no sanction for apples when the modal is apples.
  const std::array<SanctionObservation, 1> obs{{{kApples, false}}};
  const NormativeState s = WmUpdate(OneInstitution(), AppleContext(kApples), obs);
  EXPECT_EQ(s.weights[0], 1.0);
  EXPECT_EQ(s.weights[1], 1.0);
}

TEST(WmUpdateTest, AbstainingExpertUntouched) {
  const std::array<SanctionObservation, 1> obs{{{kBananas, false}}};
  const NormativeState s = WmUpdate(OneInstitution(), AppleContext(std::nullopt), obs);
  EXPECT_EQ(s.weights[0], 0.5);
  EXPECT_EQ(s.weights[1], 1.0);
}

TEST(WmUpdateTest, WeightsStayPositive) {
  std::vector<SanctionObservation> obs(5000, {kApples, true});
  const NormativeState s = WmUpdate(OneInstitution(0.1), AppleContext(kBananas), obs);
  EXPECT_GT(s.weights[0], 0.0);
}

// --- NormativeAction ---------------------------------------------------------

TEST(NormativeActionTest, CollapsedInstitutionFollowsCommunity) {
  NormativeState s = OneInstitution();
  s.weights = {0.0625, 1.0};
  const Observation obs = MakeObs(3, {Signal(0, kApples)}, {kBananas, kBananas, kBananas, kBananas});
  const PolicyDecision d = NormativeAction(s, obs, kApples);
  EXPECT_EQ(d.crop, kBananas);
  EXPECT_TRUE(d.criticisms.empty());
}

TEST(NormativeActionTest, LeadingInstitutionSanctionsDeviants) {
  const std::array<int, 1> ids{0};
  NormativeState s = NormativeState::ForInstitutions(ids);
  s.weights = {0.9, 0.1};  // share 0.9 > 0.6
  const Observation obs = MakeObs(2, {Signal(0, kApples)}, {kApples, kApples, kPeaches, kApples});
  const PolicyDecision d = NormativeAction(s, obs, std::nullopt);
  const auto lead = LeadInstitution(s, CurrentContext(obs));
  ASSERT_TRUE(lead.has_value());
  EXPECT_GT(lead->share, 0.6);
  EXPECT_EQ(d.crop, kApples);
  ASSERT_EQ(d.criticisms.size(), 1u);
  EXPECT_EQ(d.criticisms[0].sender, 0);
  EXPECT_EQ(d.criticisms[0].target, 2);
  EXPECT_EQ(d.criticisms[0].criticized_crop, kPeaches);
  EXPECT_EQ(d.criticisms[0].basis, CriticismBasis::kInstitution);
  EXPECT_EQ(d.criticisms[0].institution_id, 0);
}

TEST(NormativeActionTest, NoSanctionsBelowThreshold) {
  NormativeState s = OneInstitution();
  s.weights = {0.55, 0.45};
  // Modal peaches contradicts the declaration, so the community weight
  // counts against the institution: share 0.55.
  const Observation obs = MakeObs(2, {Signal(0, kApples)}, {kApples, kPeaches, kPeaches, kBananas});
  const PolicyDecision d = NormativeAction(s, obs, std::nullopt);
  EXPECT_TRUE(d.criticisms.empty());
}

TEST(NormativeActionTest, AllAbstainPicksLowestCrop) {
  const NormativeState s = NormativeState::ForInstitutions({});
  const Observation obs = MakeObs(0, {}, {});
  EXPECT_EQ(NormativeAction(s, obs, std::nullopt).crop, 0);
  EXPECT_TRUE(NormativeAction(s, obs, std::nullopt).criticisms.empty());
}

TEST(NormativeActionTest, TieKeepsPreviousAction) {
  const NormativeState s;  // no experts: every crop ties at 0
  const Observation obs = MakeObs(1, {}, {kPeaches, kPeaches, kBananas, kApples});
  EXPECT_EQ(NormativeAction(s, obs, std::nullopt).crop, 0);
  EXPECT_EQ(NormativeAction(s, obs, 3).crop, 3);
}

TEST(NormativeActionTest, ArgminInvariantUnderWeightScaling) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  std::uniform_int_distribution<int> crop(0, 4);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  const std::array<int, 3> ids{0, 1, 2};
  for (int trial = 0; trial < 500; ++trial) {
    NormativeState s = NormativeState::ForInstitutions(ids);
    for (double& x : s.weights) x = w(rng);
    std::vector<InstitutionSignal> sigs{Signal(0, crop(rng)), Signal(1, crop(rng)),
                                        Signal(2, crop(rng))};
    const Observation obs = MakeObs(1, sigs, {crop(rng), crop(rng), crop(rng), crop(rng)});
    NormativeState scaled = s;
    const double k = scale(rng);
    for (double& x : scaled.weights) x *= k;
    const auto a = NormativeAction(s, obs, std::nullopt);
    const auto b = NormativeAction(scaled, obs, std::nullopt);
    EXPECT_EQ(a.crop, b.crop);
    EXPECT_EQ(a.criticisms.size(), b.criticisms.size());
  }
}

// --- Background and baseline policies -----------------------------------------

TEST(BackgroundPolicyTest, FollowCriticizesDeviant) {
  Observation obs = MakeObs(1, {Signal(0, kApples)}, {kBananas, kApples, kApples, kApples});
  obs.self = 1;
  const PolicyDecision d = BackgroundPolicy(obs, BackgroundMode::kFollowAuthoritative, 0, std::nullopt);
  EXPECT_EQ(d.crop, kApples);
  ASSERT_EQ(d.criticisms.size(), 1u);
  EXPECT_EQ(d.criticisms[0].target, 0);
  EXPECT_EQ(d.criticisms[0].sender, 1);
  EXPECT_EQ(d.criticisms[0].basis, CriticismBasis::kInstitution);
}

TEST(BackgroundPolicyTest, DefyCriticizesObedient) {
  Observation obs = MakeObs(1, {Signal(0, kApples)}, {kApples, kBananas, kBananas, kBananas});
  obs.self = 1;
  const PolicyDecision d = BackgroundPolicy(obs, BackgroundMode::kDefyInstitution, 0, kBananas);
  EXPECT_EQ(d.crop, kBananas);
  ASSERT_EQ(d.criticisms.size(), 1u);
  EXPECT_EQ(d.criticisms[0].target, 0);
  EXPECT_EQ(d.criticisms[0].basis, CriticismBasis::kCommunity);
}

TEST(BackgroundPolicyTest, FirstStepHasNoCriticisms) {
  Observation obs = MakeObs(0, {Signal(0, kApples)}, {});
  obs.self = 1;
  const auto follow = BackgroundPolicy(obs, BackgroundMode::kFollowAuthoritative, 0, std::nullopt);
  const auto defy = BackgroundPolicy(obs, BackgroundMode::kDefyInstitution, 0, kBananas);
  EXPECT_EQ(follow.crop, kApples);
  EXPECT_TRUE(follow.criticisms.empty());
  EXPECT_EQ(defy.crop, kBananas);
  EXPECT_TRUE(defy.criticisms.empty());
}

TEST(BackgroundPolicyTest, PreconditionViolations) {
  Observation obs = MakeObs(0, {Signal(0, kApples)}, {});
  EXPECT_THROW(BackgroundPolicy(obs, BackgroundMode::kDefyInstitution, 0, std::nullopt), Error);
  EXPECT_THROW(BackgroundPolicy(obs, BackgroundMode::kDefyInstitution, 0, kApples), Error);
  EXPECT_THROW(BackgroundPolicy(obs, BackgroundMode::kFollowAuthoritative, 7, std::nullopt), Error);
  obs.signals.clear();
  EXPECT_THROW(BackgroundPolicy(obs, BackgroundMode::kFollowAuthoritative, 0, std::nullopt), Error);
}

TEST(BaselinePolicyTest, SingleInstitutionAlwaysObeyed) {
  std::mt19937_64 rng(1);
  const Observation obs = MakeObs(0, {Signal(0, kApples)}, {});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(BaselinePolicy(obs, rng), kApples);
}

TEST(BaselinePolicyTest, NoSignalsHarvestsCropZero) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(BaselinePolicy(MakeObs(0, {}, {}), rng), 0);
}

TEST(BaselinePolicyTest, UniformOverThreeInstitutions) {
  std::mt19937_64 rng(2026);
  const Observation obs = MakeObs(0, {Signal(0, kApples), Signal(1, kBananas), Signal(2, kPeaches)}, {});
  std::array<int, 3> counts{};
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++counts[BaselinePolicy(obs, rng)];
  double chi2 = 0.0;
  const double expected = kDraws / 3.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 2 degrees of freedom, p = 0.001.
  EXPECT_LT(chi2, 13.816);
}

TEST(BaselineAgentPolicyTest, NeverCriticizes) {
  BaselineAgentPolicy p(3);
  const Observation obs = MakeObs(2, {Signal(0, kApples)}, {kBananas, kBananas, kPeaches, kApples});
  EXPECT_TRUE(p.Discuss(obs, 0).criticisms.empty());
  EXPECT_FALSE(p.PredictCriticism(obs, kPeaches));
}

// --- Weighted Majority properties --------------------------------------------

TEST(WeightedMajorityProperty, MistakeBound) {
  std::mt19937_64 rng(7);
  for (double beta : {0.3, 0.5, 0.7}) {
    for (int seq = 0; seq < 500; ++seq) {
      const int n = std::uniform_int_distribution<int>(1, 8)(rng);
      const int len = std::uniform_int_distribution<int>(1, 200)(rng);
      std::vector<double> weights(n, 1.0);
      std::vector<int> expert_mistakes(n, 0);
      // Each expert has its own accuracy so the best one is meaningful.
      std::vector<double> accuracy(n);
      for (double& a : accuracy) a = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      int mistakes = 0;
      for (int t = 0; t < len; ++t) {
        const bool truth = std::bernoulli_distribution(0.5)(rng);
        std::vector<ExpertVote> votes(n);
        for (int e = 0; e < n; ++e) {
          const bool right = std::bernoulli_distribution(accuracy[e])(rng);
          votes[e] = (right == truth) ? ExpertVote::kSanction : ExpertVote::kNoSanction;
          if ((votes[e] == ExpertVote::kSanction) != truth) ++expert_mistakes[e];
        }
        const double p = WeightedSanctionVote(weights, votes);
        // Ties count as a mistake: the bound must hold either way.
        const bool predicted = p > 0.5;
        if (predicted != truth || p == 0.5) ++mistakes;
        PenalizeExperts(weights, votes, truth, beta);
      }
      const int best = *std::min_element(expert_mistakes.begin(), expert_mistakes.end());
      const double bound =
          (std::log(n) + best * std::log(1.0 / beta)) / std::log(2.0 / (1.0 + beta));
      ASSERT_LE(mistakes, bound + 1e-9)
          << "beta " << beta << " n " << n << " len " << len << " best " << best;
    }
  }
}

TEST(WeightedMajorityProperty, WeightsPositiveAndNonIncreasing) {
  std::mt19937_64 rng(8);
  std::vector<double> weights(6, 1.0);
  for (int t = 0; t < 3000; ++t) {
    std::vector<ExpertVote> votes(6);
    for (auto& v : votes) v = static_cast<ExpertVote>(std::uniform_int_distribution<int>(0, 2)(rng));
    const std::vector<double> before = weights;
    PenalizeExperts(weights, votes, std::bernoulli_distribution(0.5)(rng), 0.5);
    for (std::size_t e = 0; e < weights.size(); ++e) {
      EXPECT_GT(weights[e], 0.0);
      EXPECT_LE(weights[e], before[e]);
    }
  }
}

// Runs a short follow-mode episode with a normative focal agent that
// sometimes deviates, and checks the institution expert's weight.
class ScriptedFocal : public Agent {
 public:
  explicit ScriptedFocal(NormativeAgentPolicy* policy) : policy_(policy) {}
  const std::string& name() const override { return name_; }
  Utterance Discuss(const Observation& obs, int turn) override {
    Utterance u = policy_->Discuss(obs, turn);
    u.speaker = obs.self;
    u.turn = turn;
    return u;
  }
  int Act(const Observation& obs) override {
    policy_->Update(obs);
    return obs.t % 3 == 1 ? kPeaches : kApples;
  }

 private:
  std::string name_ = "Alice";
  NormativeAgentPolicy* policy_;
};

class PolicyAgent : public Agent {
 public:
  PolicyAgent(std::string name, std::unique_ptr<Policy> p)
      : name_(std::move(name)), policy_(std::move(p)) {}
  const std::string& name() const override { return name_; }
  Utterance Discuss(const Observation& obs, int turn) override {
    Utterance u = policy_->Discuss(obs, turn);
    u.speaker = obs.self;
    u.turn = turn;
    for (auto& c : u.criticisms) c.sender = obs.self;
    return u;
  }
  int Act(const Observation& obs) override { return policy_->Act(obs); }

 private:
  std::string name_;
  std::unique_ptr<Policy> policy_;
};

std::vector<double> RunEpisodeWeights(BackgroundMode mode, int background) {
  EnvConfig cfg;
  cfg.num_crops = 5;
  cfg.institutions = {InstitutionConfig{"Ophilia", {kApples}, mode == BackgroundMode::kFollowAuthoritative}};
  cfg.num_background = background;
  cfg.background_mode = mode;
  cfg.defy_crop = kBananas;
  cfg.max_timesteps = 12;
  cfg.eval_window = 4;
  const std::array<int, 1> ids{0};
  NormativeAgentPolicy policy(NormativeState::ForInstitutions(ids));
  std::vector<std::unique_ptr<Agent>> agents;
  agents.push_back(std::make_unique<ScriptedFocal>(&policy));
  for (int b = 0; b < background; ++b) {
    agents.push_back(std::make_unique<PolicyAgent>(
        "B" + std::to_string(b),
        std::make_unique<BackgroundAgentPolicy>(mode, 0, mode == BackgroundMode::kDefyInstitution
                                                             ? std::optional<int>(kBananas)
                                                             : std::nullopt)));
  }
  std::vector<Agent*> handles;
  for (auto& a : agents) handles.push_back(a.get());
  WorldState state = InitialWorldState(cfg);
  std::vector<double> weights;
  for (int t = 0; t < cfg.max_timesteps; ++t) {
    state = Step(state, handles, cfg);
    weights.push_back(policy.state().weights[0]);
  }
  return weights;
}

TEST(WeightedMajorityProperty, FollowModeNeverPenalizesInstitution) {
  for (int b = 1; b <= 5; ++b) {
    for (double w : RunEpisodeWeights(BackgroundMode::kFollowAuthoritative, b)) {
      EXPECT_EQ(w, 1.0) << "background " << b;
    }
  }
}

TEST(WeightedMajorityProperty, DefyModePenalizesInstitution) {
  for (int b = 2; b <= 5; ++b) {
    const auto weights = RunEpisodeWeights(BackgroundMode::kDefyInstitution, b);
    EXPECT_LT(weights.back(), 1e-3) << "background " << b;
    for (std::size_t t = 1; t < weights.size(); ++t) EXPECT_LE(weights[t], weights[t - 1]);
  }
}

}  // namespace
}  // namespace normsim
