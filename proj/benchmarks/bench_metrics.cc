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

#include <random>
#include <vector>

#include "ecgdx/metrics.h"

namespace {

using namespace ecgdx;

void make_scores(std::size_t n, std::vector<double>& s, std::vector<std::uint8_t>& y) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  s.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 20 == 0;
    s[i] = z(gen) + y[i];
  }
}

void BM_Auroc(benchmark::State& state) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  make_scores(static_cast<std::size_t>(state.range(0)), s, y);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(s, y));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(100000);

void BM_BootstrapCi(benchmark::State& state) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  make_scores(static_cast<std::size_t>(state.range(0)), s, y);
  BootstrapOptions options;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_ci(s, y, options));
  }
}
BENCHMARK(BM_BootstrapCi)->Arg(2500)->Unit(benchmark::kMillisecond);

}  // namespace
