/* Copyright 2026 The dstage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Serial reference paths against their OpenMP counterparts.

#include <random>

#include <benchmark/benchmark.h>

#include "dstage/cfs.hpp"
#include "dstage/classifiers.hpp"
#include "dstage/eval.hpp"
#include "dstage/features.hpp"
#include "dstage/synth.hpp"

namespace {

using dstage::Exec;

dstage::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  dstage::Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.class_order = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % 3);
    ds.y.push_back(y);
    for (std::size_t j = 0; j < d; ++j) ds.X.push_back(g(rng) + (j % 7 == 0 ? 0.8 * y : 0.0));
  }
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  return ds;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::kParallel : Exec::kSerial; }

void BM_ForestTrain(benchmark::State& state) {
  const auto ds = random_dataset(120, 200, 1);
  dstage::TrainOptions opt;
  opt.exec = exec_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dstage::train(dstage::ModelKind::kRandomForest, ds, 7, opt));
  }
}
BENCHMARK(BM_ForestTrain)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CfsSelect(benchmark::State& state) {
  const auto ds = random_dataset(120, 300, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dstage::greedy_stepwise(ds, exec_of(state)));
  }
}
BENCHMARK(BM_CfsSelect)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExtractF1(benchmark::State& state) {
  std::vector<dstage::AudioBuffer> clips;
  for (int i = 0; i < 8; ++i) {
    clips.push_back(dstage::synth_emotion_utterance("neutral", "b" + std::to_string(i), 3).audio);
  }
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    std::vector<std::vector<double>> out(clips.size());
    const auto n = static_cast<std::ptrdiff_t>(clips.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = dstage::f1_vector(clips[i]).values;
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ExtractF1)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_CrossValidation(benchmark::State& state) {
  const auto ds = random_dataset(90, 40, 3);
  dstage::FeatureMatrix m;
  m.set_id = dstage::FeatureSetId::kF1;
  m.names = ds.feature_names;
  for (std::size_t i = 0; i < ds.n; ++i) {
    m.append("u" + std::to_string(i), ds.class_order[ds.y[i]], ds.row(i));
  }
  dstage::ExperimentSpec spec;
  spec.plan.members = {dstage::FeatureSetId::kF1};
  spec.seed = 5;
  spec.train_options.forest_trees = 30;
  spec.exec = exec_of(state);
  spec.train_options.exec = Exec::kSerial;
  const std::vector<dstage::FeatureMatrix> members{m};
  for (auto _ : state) {
    benchmark::DoNotOptimize(dstage::run_experiment(spec, members, ds.class_order));
  }
}
BENCHMARK(BM_CrossValidation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
