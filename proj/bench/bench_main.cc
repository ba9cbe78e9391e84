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

// Serial references against their OpenMP counterparts.

#include <random>

#include <benchmark/benchmark.h>

#include "normsim/harness.h"
#include "normsim/sanction.h"
#include "normsim/sanction_search.h"

namespace normsim {
namespace {

// Three players, two actions each, with `per_player` random classifiers.
SanctionGame RandomThreePlayer(int per_player) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> payoff(0.0, 1.0);
  std::vector<std::vector<double>> u(8, std::vector<double>(3));
  for (auto& row : u)
    for (double& x : row) x = payoff(rng);
  FiniteGame g({{"C", "D"}, {"C", "D"}, {"C", "D"}}, u);
  std::vector<std::vector<ClassificationFunction>> menus(3);
  for (int p = 0; p < 3; ++p) {
    menus[p].push_back(ClassificationFunction::Never(p));
    for (int c = 1; c < per_player; ++c) {
      std::vector<ClassificationFunction::Sanction> s;
      for (std::int64_t k = 0; k < g.num_profiles(); ++k)
        for (int t = 0; t < 3; ++t)
          if (t != p && rng() % 4 == 0) s.push_back({k, t});
      menus[p].emplace_back(p, "c" + std::to_string(c), s, 0.3, 0.0);
    }
  }
  return SanctionGame(std::move(g), std::move(menus));
}

void BM_CountNashTransformsSerial(benchmark::State& state) {
  const SanctionGame sg = RandomThreePlayer(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(CountNashTransformsSerial(sg, {0, 0, 0}));
  state.SetItemsProcessed(state.iterations() * sg.num_joint_choices());
}

void BM_CountNashTransformsParallel(benchmark::State& state) {
  const SanctionGame sg = RandomThreePlayer(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(CountNashTransforms(sg, {0, 0, 0}));
  state.SetItemsProcessed(state.iterations() * sg.num_joint_choices());
}

BENCHMARK(BM_CountNashTransformsSerial)->Arg(16)->Arg(48)->UseRealTime();
BENCHMARK(BM_CountNashTransformsParallel)->Arg(16)->Arg(48)->UseRealTime();

ExperimentConfig ExperimentTwoGrid() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kMultiInstitution;
  cfg.focal_kinds = {FocalKind::kNormative, FocalKind::kBaseline};
  return cfg;
}

void BM_ExperimentSerial(benchmark::State& state) {
  const ExperimentConfig cfg = ExperimentTwoGrid();
  for (auto _ : state) benchmark::DoNotOptimize(RunExperimentSerial(cfg).rows.size());
}

void BM_ExperimentParallel(benchmark::State& state) {
  const ExperimentConfig cfg = ExperimentTwoGrid();
  for (auto _ : state) benchmark::DoNotOptimize(RunExperiment(cfg, 0).rows.size());
}

BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ExperimentParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
}  // namespace normsim

BENCHMARK_MAIN();
