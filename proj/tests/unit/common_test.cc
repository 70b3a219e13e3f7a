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
#include <limits>
#include <set>
#include <vector>

#include "ecgdx/common.h"
#include "ecgdx/kv_config.h"
#include "ecgdx/matrix.h"

namespace ecgdx {
namespace {

TEST(Format, ShortestRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 769.0, -0.0001234, 1e-300, 123456789.125}) {
    const auto text = format_shortest(v);
    EXPECT_EQ(*parse_double(text), v) << text;
  }
  EXPECT_EQ(format_shortest(769.0), "769");
  EXPECT_EQ(format_shortest(kMissing), "");
}

TEST(Format, FixedDecimals) {
  EXPECT_EQ(format_fixed(0.5, 4), "0.5000");
  EXPECT_EQ(format_fixed(0.81344, 4), "0.8134");
  EXPECT_EQ(format_fixed(1.04, 2), "1.04");
}

TEST(Parse, StrictNumbers) {
  EXPECT_EQ(parse_double("12.5"), 12.5);
  EXPECT_EQ(parse_double("+3"), 3.0);
  EXPECT_FALSE(parse_double(""));
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double("nan"));
  EXPECT_FALSE(parse_double("inf"));
  EXPECT_FALSE(parse_double("1,000"));
  EXPECT_EQ(parse_int("-42"), -42);
  EXPECT_FALSE(parse_int("4.2"));
}

TEST(Strings, TrimAndSplit) {
  EXPECT_EQ(trim("  a b \t"), "a b");
  const auto parts = split("a,,b", ',');
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "");
  EXPECT_EQ(parts[2], "b");
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 2.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.75), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(lower_median_sorted(v), 3.0);
  const std::vector<double> even{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(lower_median_sorted(even), 2.0);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);

  Rng r(7);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[r.uniform_index(7)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, DerivedSeedsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(1, s));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(FeatureMatrix, ShapeAndFingerprint) {
  FeatureMatrix m({"a", "b"}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m(2, 1), 6.0);
  EXPECT_EQ(m.row(1)[0], 3.0);
  FeatureMatrix other({"b", "a"}, {});
  EXPECT_NE(m.fingerprint(), other.fingerprint());
  EXPECT_THROW(FeatureMatrix({"a", "b"}, {1, 2, 3}), Error);
}

TEST(KeyValueFile, ParsesTypedValues) {
  const auto kv = KeyValueFile::parse(
      "# comment\n"
      "seed = 7\n"
      "gbm.learning_rate=0.05\n"
      "targets = G30, F32 ,\n"
      "flag = true\n");
  EXPECT_EQ(kv.get_int("seed"), 7);
  EXPECT_EQ(kv.get_double("gbm.learning_rate"), 0.05);
  EXPECT_EQ(kv.get_bool("flag"), true);
  const auto targets = kv.get_list("targets");
  ASSERT_TRUE(targets);
  EXPECT_EQ(*targets, (std::vector<std::string>{"G30", "F32"}));
  EXPECT_FALSE(kv.get("missing"));
  EXPECT_EQ(kv.with_prefix("gbm.").size(), 1u);
}

TEST(KeyValueFile, RejectsBadInput) {
  EXPECT_THROW(KeyValueFile::parse("a = 1\na = 2\n"), Error);
  EXPECT_THROW(KeyValueFile::parse("no equals sign\n"), Error);
  const auto kv = KeyValueFile::parse("seed = seven\n");
  EXPECT_THROW(kv.get_int("seed"), Error);
}

}  // namespace
}  // namespace ecgdx
