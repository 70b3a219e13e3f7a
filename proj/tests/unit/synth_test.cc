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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ecgdx/kv_config.h"
#include "ecgdx/synth.h"

namespace ecgdx {
namespace {

std::string serialize(const Cohort& c) {
  std::ostringstream os;
  write_cohort(c, os);
  return os.str();
}

SynthSpec small_spec(std::size_t n, std::uint64_t seed) {
  auto spec = SynthSpec::internal_defaults();
  spec.n_samples = n;
  spec.seed = seed;
  spec.targets = {{"G30", 0.05, {}}};
  return spec;
}

TEST(Synth, DeterministicUnderSeed) {
  const auto spec = small_spec(2000, 11);
  EXPECT_EQ(serialize(generate_synth(spec)), serialize(generate_synth(spec)));
  auto other = spec;
  other.seed = 12;
  EXPECT_NE(serialize(generate_synth(spec)), serialize(generate_synth(other)));
}

TEST(Synth, PrevalenceWithoutEffects) {
  const auto c = generate_synth(small_spec(20000, 5));
  const auto y = c.labels(0);
  double pos = 0;
  for (auto v : y) pos += v;
  const double p = pos / static_cast<double>(y.size());
  EXPECT_GE(p, 0.045);
  EXPECT_LE(p, 0.055);
}

TEST(Synth, PlantedEffectCorrelates) {
  auto spec = small_spec(20000, 9);
  spec.targets = {{"G30", 0.05, {{index_of(Feature::kQtcMs), +1, 2.0}}}};
  const auto c = generate_synth(spec);
  const auto y = c.labels(0);
  const std::size_t f = index_of(Feature::kQtcMs);
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = c.sample(i).features[f];
    if (is_missing(x)) continue;
    const double v = y[i];
    sx += x;
    sy += v;
    sxx += x * x;
    syy += v * v;
    sxy += x * v;
    n += 1;
  }
  const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const double t = r * std::sqrt((n - 2) / (1 - r * r));
  EXPECT_GT(r, 0.0);
  EXPECT_GT(t, 3.291);  // two-sided p < 0.001
}

TEST(Synth, MissingFraction) {
  auto spec = small_spec(10000, 2);
  for (std::size_t f = 2; f < kNumFeatures; ++f) spec.marginals[f].missing_rate = 0.15;
  const auto c = generate_synth(spec);
  for (std::size_t f = 2; f < kNumFeatures; ++f) {
    double missing = 0;
    for (const auto& s : c.samples()) missing += is_missing(s.features[f]);
    EXPECT_NEAR(missing / 10000.0, 0.15, 0.01) << f;
  }
  for (const auto& s : c.samples()) {
    EXPECT_FALSE(is_missing(s.features[0]));
    EXPECT_FALSE(is_missing(s.features[1]));
  }
}

TEST(Synth, MarginalsMatchTableValues) {
  auto spec = small_spec(50000, 4);
  const auto stats = descriptive_stats(generate_synth(spec));
  const auto& rr = stats.features[index_of(Feature::kRrMs) - 1];
  EXPECT_NEAR(rr.median, 769.0, 15.0);
  EXPECT_NEAR(rr.iqr, 264.0, 15.0);
  EXPECT_NEAR(stats.male_pct, 100.0 * spec.male_fraction, 1.0);
  EXPECT_GE(stats.age.bounds[0], kMinAdultAge);
}

TEST(Synth, ShiftMovesMedians) {
  const auto base = SynthSpec::internal_defaults();
  const auto moved = base.shifted(0.25);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (f == index_of(Feature::kSex)) continue;
    EXPECT_DOUBLE_EQ(moved.marginals[f].median,
                     base.marginals[f].median + 0.25 * base.marginals[f].iqr);
    EXPECT_DOUBLE_EQ(moved.marginals[f].iqr, base.marginals[f].iqr);
  }
}

TEST(Synth, MarginalSd) {
  Marginal m{0.0, 2.0 * std::log(3.0), 0.0};
  EXPECT_NEAR(marginal_sd(m), M_PI / std::sqrt(3.0), 1e-12);
}

TEST(Synth, ValidateRejectsBadSpecs) {
  auto spec = small_spec(100, 1);
  spec.targets[0].prevalence = 1.0;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec(100, 1);
  spec.marginals[2].missing_rate = 1.0;
  EXPECT_THROW(spec.validate(), Error);
  spec = small_spec(100, 1);
  spec.targets[0].effects = {{2, +1, -1.0}};
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Synth, ParseSpecFile) {
  const auto kv = KeyValueFile::parse(
      "preset = external\n"
      "n_samples = 300\n"
      "seed = 21\n"
      "missing_rate = 0.05\n"
      "feature.rr_ms.median = 800\n"
      "target.G30.prevalence = 0.1\n"
      "target.G30.effects = qtc_ms:+2.5, age:-1\n");
  const auto spec = parse_synth_spec(kv);
  EXPECT_EQ(spec.n_samples, 300u);
  EXPECT_EQ(spec.seed, 21u);
  EXPECT_EQ(spec.marginals[index_of(Feature::kRrMs)].median, 800.0);
  EXPECT_EQ(spec.marginals[index_of(Feature::kQtMs)].missing_rate, 0.05);
  ASSERT_EQ(spec.targets.size(), 1u);
  ASSERT_EQ(spec.targets[0].effects.size(), 2u);
  EXPECT_EQ(spec.targets[0].effects[0].feature, index_of(Feature::kQtcMs));
  EXPECT_EQ(spec.targets[0].effects[1].direction, -1);
  EXPECT_EQ(spec.targets[0].effects[1].strength, 1.0);
  EXPECT_EQ(generate_synth(spec).size(), 300u);
  EXPECT_THROW(parse_synth_spec(KeyValueFile::parse("target.G30.effects = foo:+1\n")), Error);
}

}  // namespace
}  // namespace ecgdx
