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

#include "ecgdx/shap.h"
#include "ecgdx/synth.h"

namespace {

using namespace ecgdx;

struct Fixture {
  Cohort cohort;
  FeatureMatrix x;
  TreeEnsemble model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    auto spec = SynthSpec::internal_defaults();
    spec.n_samples = 20000;
    spec.seed = 9;
    spec.targets = {{"G30", 0.05,
                     {{index_of(Feature::kQtcMs), +1, 1.5},
                      {index_of(Feature::kRrMs), -1, 1.0}}}};
    Fixture out{generate_synth(spec), {}, {}};
    out.x = out.cohort.feature_matrix();
    TrainConfig config;
    config.max_rounds = 100;
    config.patience = 100;
    const LabeledData data = out.cohort.labeled(0);
    out.model = fit(data, data, config);
    return out;
  }();
  return f;
}

void BM_TreeShapRecursive(benchmark::State& state) {
  const Fixture& f = fixture();
  std::size_t row = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree_shap(f.model, f.x.row(row)));
    row = (row + 1) % f.x.rows();
  }
}
BENCHMARK(BM_TreeShapRecursive)->Unit(benchmark::kMicrosecond);

void BM_TreeExplainerSingle(benchmark::State& state) {
  const Fixture& f = fixture();
  const TreeExplainer explainer(f.model);
  std::size_t row = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explainer.explain(f.x.row(row)));
    row = (row + 1) % f.x.rows();
  }
}
BENCHMARK(BM_TreeExplainerSingle)->Unit(benchmark::kMicrosecond);

void BM_ExplainSet(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain_set(f.model, f.x));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.x.rows()));
}
BENCHMARK(BM_ExplainSet)->Unit(benchmark::kMillisecond);

void BM_Beeswarm(benchmark::State& state) {
  const Fixture& f = fixture();
  const auto explanations = explain_set(f.model, f.x);
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_svg(beeswarm(explanations, f.cohort)));
  }
}
BENCHMARK(BM_Beeswarm)->Unit(benchmark::kMillisecond);

}  // namespace
