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

#include <algorithm>
#include <cmath>
#include <random>

#include "ecgdx/metrics.h"
#include "oracles.h"

namespace ecgdx {
namespace {

using testing::pairwise_auroc;

TEST(Auroc, WorkedExample) {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<std::uint8_t> y{0, 0, 1, 1};
  EXPECT_EQ(auroc(s, y), 0.75);
}

TEST(Auroc, Extremes) {
  const std::vector<std::uint8_t> y{0, 0, 1, 1, 1};
  EXPECT_EQ(auroc(std::vector<double>{1, 2, 3, 4, 5}, y), 1.0);
  EXPECT_EQ(auroc(std::vector<double>{5, 4, 3, 2, 1}, y), 0.0);
  EXPECT_EQ(auroc(std::vector<double>(5, 0.3), y), 0.5);
}

TEST(Auroc, Errors) {
  const std::vector<double> s{1, 2};
  EXPECT_THROW(auroc(s, std::vector<std::uint8_t>{1, 1}), Error);
  EXPECT_THROW(auroc(s, std::vector<std::uint8_t>{1}), Error);
  EXPECT_THROW(auroc(std::vector<double>{1, NAN}, std::vector<std::uint8_t>{0, 1}), Error);
  EXPECT_THROW(auroc(s, std::vector<std::uint8_t>{0, 2}), Error);
}

TEST(Auroc, MatchesPairwiseOracleWithTies) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 300)(gen);
    const int levels = std::uniform_int_distribution<int>(1, 12)(gen);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[i] = std::uniform_int_distribution<int>(0, levels - 1)(gen) * 0.1;
      y[i] = std::bernoulli_distribution(0.3)(gen);
    }
    y[0] = 0;
    y[1] = 1;
    const auto oracle = pairwise_auroc(s, y);
    EXPECT_EQ(auroc(s, y), oracle.value()) << trial;
  }
}

TEST(Auroc, NegationSymmetry) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(101);
    std::vector<double> neg(101);
    std::vector<std::uint8_t> y(101);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::round(z(gen) * 4.0);
      neg[i] = -s[i];
      y[i] = i % 3 == 0;
    }
    EXPECT_EQ(auroc(s, y) + auroc(neg, y), 1.0);
  }
}

TEST(Auroc, MonotoneTransformInvariant) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> z;
  std::vector<double> s(500);
  std::vector<double> t(500);
  std::vector<std::uint8_t> y(500);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = z(gen);
    t[i] = std::exp(3.0 * s[i]) + 7.0;
    y[i] = z(gen) + s[i] > 0.5;
  }
  EXPECT_EQ(auroc(s, y), auroc(t, y));
}

TEST(Bootstrap, DeterministicAndOrdered) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> z;
  std::vector<double> s(400);
  std::vector<std::uint8_t> y(400);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = i % 5 == 0;
    s[i] = z(gen) + y[i];
  }
  BootstrapOptions opt;
  opt.seed = 99;
  const auto a = bootstrap_ci(s, y, opt);
  const auto b = bootstrap_ci(s, y, opt);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LE(a.low, auroc(s, y));
  EXPECT_GE(a.high, auroc(s, y));
  EXPECT_GE(a.low, 0.0);
  EXPECT_LE(a.high, 1.0);

  opt.num_threads = 4;
  const auto c = bootstrap_ci(s, y, opt);
  EXPECT_EQ(a.low, c.low);
  EXPECT_EQ(a.high, c.high);

  BootstrapOptions narrow = opt;
  narrow.alpha = 0.2;
  const auto d = bootstrap_ci(s, y, narrow);
  EXPECT_LE(a.low, d.low);
  EXPECT_GE(a.high, d.high);
}

TEST(Bootstrap, ReplicatesAreResampledAurocs) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  const std::vector<std::uint8_t> y{0, 1, 0, 1, 0, 1};
  BootstrapOptions opt;
  opt.iterations = 200;
  opt.seed = 3;
  const auto reps = bootstrap_aurocs(s, y, opt);
  ASSERT_EQ(reps.size(), 200u);
  for (double r : reps) {
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    // Any AUROC on six points is a multiple of 1/(2*P*N) with P*N <= 9.
    bool representable = false;
    for (int pn = 1; pn <= 9 && !representable; ++pn) {
      const double k = r * 2.0 * pn;
      representable = std::abs(k - std::round(k)) < 1e-9;
    }
    EXPECT_TRUE(representable) << r;
  }
}

TEST(Bootstrap, SeparatedScoresGiveNarrowInterval) {
  std::vector<double> s(2000);
  std::vector<std::uint8_t> y(2000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = i % 10 == 0;
    s[i] = y[i] ? 10.0 + i : static_cast<double>(i) / 1000.0;
  }
  BootstrapOptions opt;
  opt.iterations = 300;
  const auto ci = bootstrap_ci(s, y, opt);
  EXPECT_GE(ci.low, 0.99);
  EXPECT_LE(ci.high, 1.0);
  EXPECT_LE(ci.low, ci.high);
}

TEST(Bootstrap, RareClassStillResolves) {
  std::vector<double> s(2000, 0.0);
  std::vector<std::uint8_t> y(2000, 0);
  y[0] = 1;
  s[0] = 1.0;
  BootstrapOptions opt;
  opt.iterations = 50;
  const auto reps = bootstrap_aurocs(s, y, opt);
  for (double r : reps) EXPECT_EQ(r, 1.0);
  EXPECT_THROW(bootstrap_ci(s, std::vector<std::uint8_t>(2000, 0), opt), Error);
}

TEST(Prevalence, Basic) {
  EXPECT_EQ(prevalence(std::vector<std::uint8_t>{0, 0, 1, 1}), 0.5);
  EXPECT_EQ(prevalence(std::vector<std::uint8_t>{0, 0, 0}), 0.0);
  EXPECT_THROW(prevalence(std::vector<std::uint8_t>{}), Error);
}

MetricReport g30() {
  return MetricReport{"G30", DatasetTag::kInternal, 0.8134, 0.8124, 0.8140, 0.0104, 1000};
}

TEST(Report, CellFormat) {
  EXPECT_EQ(format_report_cell(g30()), "0.8134 (0.8124, 0.8140) [1.04%]");
  MetricReport half{"X", DatasetTag::kExternal, 0.5, 0.4, 0.6, 0.5, 10};
  EXPECT_EQ(format_report_cell(half), "0.5000 (0.4000, 0.6000) [50.00%]");
}

TEST(Report, GroupedTable) {
  std::vector<MetricReport> reports{
      g30(),
      {"F32", DatasetTag::kInternal, 0.7, 0.69, 0.71, 0.03, 500},
      {"G30", DatasetTag::kExternal, 0.8, 0.7, 0.9, 0.001, 800},
      {"Z99", DatasetTag::kInternal, 0.6, 0.5, 0.55, 0.2, 50},
  };
  const std::map<std::string, std::string> groups{{"G30", "Neurological"},
                                                  {"F32", "Psychiatric"}};
  const auto t = report_table(reports, groups, {{"G30", "Alzheimer's disease"}});
  const std::string expected_md =
      "| Code: Description | Internal AUROC (95% CI) [Prev.] | External AUROC (95% CI) [Prev.] |\n"
      "|---|---|---|\n"
      "| **Neurological** | | |\n"
      "| G30: Alzheimer's disease | 0.8134 (0.8124, 0.8140) [1.04%] | 0.8000 (0.7000, 0.9000) "
      "[0.10%] |\n"
      "| **Other** | | |\n"
      "| Z99 | 0.6000 (0.5000, 0.5500) [20.00%] | n/a |\n"
      "| **Psychiatric** | | |\n"
      "| F32 | 0.7000 (0.6900, 0.7100) [3.00%] | n/a |\n";
  EXPECT_EQ(t.markdown, expected_md);
  const std::string expected_csv =
      "group,code,dataset,auroc,ci_low,ci_high,prevalence,n\n"
      "Neurological,G30,internal,0.8134,0.8124,0.814,0.0104,1000\n"
      "Neurological,G30,external,0.8,0.7,0.9,0.001,800\n"
      "Other,Z99,internal,0.6,0.5,0.55,0.2,50\n"
      "Psychiatric,F32,internal,0.7,0.69,0.71,0.03,500\n";
  EXPECT_EQ(t.csv, expected_csv);
  ASSERT_EQ(t.warnings.size(), 1u);
  EXPECT_NE(t.warnings[0].find("Z99"), std::string::npos);
}

TEST(Report, DuplicateRowsRejected) {
  std::vector<MetricReport> reports{g30(), g30()};
  EXPECT_THROW(report_table(reports, {}), Error);
}

}  // namespace
}  // namespace ecgdx
