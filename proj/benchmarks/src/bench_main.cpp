// benchmarks/src/bench_main.cpp

// Copyright 2026 The docws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "docws/docws.hpp"

namespace {

using namespace docws;

ThetaParams RandomTheta(std::size_t m, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<ClassId> attached(m);
  for (std::size_t j = 0; j < m; ++j) attached[j] = static_cast<ClassId>(1 + j % k);
  ThetaParams t = InitialTheta(attached, k);
  for (auto &v : t.theta) v = u(rng);
  return t;
}

// One small generated corpus shared by the corpus-level cases.
const SweepFixture &Fixture() {
  static const SweepFixture fx = [] {
    SynthSpec spec = SynthSpec::Default();
    spec.n_documents = 100;
    return SweepFixture::Make(spec, 0, SweepConfig::DefaultSweepTrainConfig());
  }();
  return fx;
}

void BM_LogPartition(benchmark::State &state) {
  ThetaParams t = RandomTheta(static_cast<std::size_t>(state.range(0)), 3, 1);
  for (auto _ : state) benchmark::DoNotOptimize(LogPartition(t));
}
BENCHMARK(BM_LogPartition)->Arg(8)->Arg(64)->Arg(512);

void BM_Posterior(benchmark::State &state) {
  ThetaParams t = RandomTheta(static_cast<std::size_t>(state.range(0)), 3, 2);
  std::vector<ClassId> row(t.n_lfs, kAbstain);
  for (std::size_t j = 0; j < t.n_lfs; j += 3) row[j] = t.attached[j];
  for (auto _ : state) benchmark::DoNotOptimize(Posterior(t, row));
}
BENCHMARK(BM_Posterior)->Arg(8)->Arg(64);

void BM_Featurize(benchmark::State &state) {
  const Corpus &c = Fixture().data.corpus;
  for (auto _ : state) benchmark::DoNotOptimize(FeaturizeCorpus(c, {}, 14));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.NumTokens()));
}
BENCHMARK(BM_Featurize)->Unit(benchmark::kMillisecond);

void BM_BuildLabelMatrix(benchmark::State &state) {
  const auto &fx = Fixture();
  for (auto _ : state) benchmark::DoNotOptimize(BuildLabelMatrix(fx.data.lfs, fx.data.corpus, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(fx.matrix.n_instances));
}
BENCHMARK(BM_BuildLabelMatrix)->Unit(benchmark::kMillisecond);

void BM_JointStep(benchmark::State &state) {
  const auto &fx = Fixture();
  const std::size_t bs = 16;
  TrainConfig cfg = SweepConfig::DefaultSweepTrainConfig();
  PhiParams phi(cfg.hash_bits, static_cast<int>(fx.data.corpus.classes.size()));
  ThetaParams theta = InitialTheta(fx.matrix.attached, phi.n_classes);
  auto gold = GoldLabels(fx.data.corpus, fx.instances);
  std::vector<LabeledExample> bl;
  std::vector<WeakExample> bu;
  for (std::size_t i = 0; i < fx.matrix.n_instances && (bl.size() < bs || bu.size() < bs); ++i) {
    if (bl.size() < bs) bl.push_back({&fx.features[i], *gold[i]});
    if (bu.size() < bs && fx.matrix.RowFired(i))
      bu.push_back({&fx.features[i], {fx.matrix.Row(i), fx.matrix.n_lfs}, true});
  }
  QualityBeliefs q{std::vector<double>(fx.matrix.n_lfs, 0.8)};
  AdamState adam(phi, theta);
  for (auto _ : state)
    benchmark::DoNotOptimize(JointStep(phi, theta, bl, bu, q, cfg, 1e-3, adam));
}
BENCHMARK(BM_JointStep);

}  // namespace

BENCHMARK_MAIN();
