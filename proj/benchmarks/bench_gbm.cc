/*
 * Copyright 2026 The ecgdx Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <benchmark/benchmark.h>

#include "ecgdx/gbm.h"
#include "ecgdx/splits.h"
#include "ecgdx/synth.h"

namespace {

using namespace ecgdx;

Cohort bench_cohort(std::size_t n) {
  auto spec = SynthSpec::internal_defaults();
  spec.n_samples = n;
  spec.seed = 3;
  spec.targets = {{"G30", 0.05,
                   {{index_of(Feature::kQtcMs), +1, 1.5}, {index_of(Feature::kAge), +1, 1.0}}}};
  return generate_synth(spec);
}

void BM_Fit(benchmark::State& state) {
  const Cohort cohort = bench_cohort(static_cast<std::size_t>(state.range(0)));
  const LabeledData data = cohort.labeled(0);
  TrainConfig config;
  config.max_rounds = static_cast<int>(state.range(1));
  config.patience = config.max_rounds;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(data, data, config));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}
BENCHMARK(BM_Fit)->Args({10000, 20})->Args({100000, 20})->Unit(benchmark::kMillisecond);

void BM_PredictMargins(benchmark::State& state) {
  const Cohort cohort = bench_cohort(20000);
  const LabeledData data = cohort.labeled(0);
  TrainConfig config;
  config.max_rounds = 100;
  config.patience = 100;
  const TreeEnsemble model = fit(data, data, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_margins(model, data.x));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.x.rows()));
}
BENCHMARK(BM_PredictMargins)->Unit(benchmark::kMillisecond);

void BM_StratifiedSplit(benchmark::State& state) {
  const Cohort cohort = bench_cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(stratified_split(cohort, 1));
  }
}
BENCHMARK(BM_StratifiedSplit)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace
