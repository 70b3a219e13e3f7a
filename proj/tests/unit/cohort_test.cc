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
#include <random>
#include <sstream>

#include "ecgdx/cohort.h"

namespace ecgdx {
namespace {

const char* kHeader =
    "sample_id,age,sex,rr_ms,pr_ms,qrs_ms,qt_ms,qtc_ms,p_axis_deg,qrs_axis_deg,t_axis_deg,icd_G30";

std::string row(const std::string& id, const std::string& age, const std::string& sex,
                const std::string& qtc = "447", const std::string& label = "0") {
  return id + "," + age + "," + sex + ",769,158,94,394," + qtc + ",51,13,42," + label;
}

Cohort parse(const std::string& text, std::vector<std::string> targets = {}) {
  std::istringstream in(text);
  return read_cohort(in, targets);
}

Sample make_sample(const std::string& id, double age, double sex) {
  Sample s;
  s.id = id;
  s.features = {age, sex, 769, 158, 94, 394, 447, 51, 13, 42};
  return s;
}

TEST(Schema, FixedOrderAndNames) {
  const auto& schema = FeatureSchema::standard();
  ASSERT_EQ(schema.size(), 10u);
  const std::vector<std::string> expected{"age",   "sex",    "rr_ms",      "pr_ms",
                                          "qrs_ms", "qt_ms", "qtc_ms",     "p_axis_deg",
                                          "qrs_axis_deg", "t_axis_deg"};
  EXPECT_EQ(schema.names(), expected);
  EXPECT_TRUE(schema.info(Feature::kAge).required);
  EXPECT_TRUE(schema.info(Feature::kSex).required);
  EXPECT_FALSE(schema.info(Feature::kQtcMs).required);
  EXPECT_EQ(schema.index_of("qtc_ms"), 6u);
  EXPECT_FALSE(schema.index_of("QTc"));
}

TEST(ReadCohort, HappyPath) {
  const auto c = parse(std::string(kHeader) + "\n" + row("a", "70", "1") + "\n" +
                       row("b", "45", "0", "447", "1") + "\n" + row("c", "18", "0") + "\n");
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.targets(), std::vector<std::string>{"G30"});
  EXPECT_EQ(c.sample(1).labels[0], 1);
  EXPECT_EQ(c.sample(0).features[0], 70.0);
}

TEST(ReadCohort, EmptyCellIsMissing) {
  const auto c = parse(std::string(kHeader) + "\n" + row("a", "70", "1", "") + "\n");
  EXPECT_TRUE(is_missing(c.sample(0).features[index_of(Feature::kQtcMs)]));
}

TEST(ReadCohort, DomainViolationNamesRowAndColumn) {
  std::string text = std::string(kHeader) + "\n";
  for (int i = 1; i <= 8; ++i) text += row("s" + std::to_string(i), "50", i == 7 ? "2" : "1") + "\n";
  try {
    parse(text);
    FAIL() << "expected CohortCsvError";
  } catch (const CohortCsvError& e) {
    ASSERT_EQ(e.diagnostics().size(), 1u);
    EXPECT_EQ(e.diagnostics()[0].row, 7u);
    EXPECT_EQ(e.diagnostics()[0].column, "sex");
    EXPECT_NE(std::string(e.what()).find("row 7, column sex"), std::string::npos);
  }
}

TEST(ReadCohort, ReportsEveryProblem) {
  const std::string text = std::string(kHeader) + "\n" + row("a", "17", "1") + "\n" +
                           row("b", "x", "1") + "\n" + row("c", "50", "1", "447", "2") + "\n" +
                           row("a", "50", "1") + "\n";
  try {
    parse(text);
    FAIL();
  } catch (const CohortCsvError& e) {
    const auto& d = e.diagnostics();
    ASSERT_EQ(d.size(), 4u);
    EXPECT_EQ(d[0].row, 1u);
    EXPECT_EQ(d[0].column, "age");
    EXPECT_EQ(d[1].column, "age");
    EXPECT_EQ(d[2].column, "icd_G30");
    EXPECT_EQ(d[3].column, "sample_id");
  }
}

TEST(ReadCohort, RejectsBadHeader) {
  EXPECT_THROW(parse("sample_id,age,rr_ms\n"), CohortCsvError);
  EXPECT_THROW(parse(std::string(kHeader) + ",extra\n"), CohortCsvError);
  EXPECT_THROW(parse(""), CohortCsvError);
}

TEST(ReadCohort, RejectsAxisOutOfRangeAndNonPositiveInterval) {
  std::string bad_axis = std::string(kHeader) + "\na,50,1,769,158,94,394,447,400,13,42,0\n";
  EXPECT_THROW(parse(bad_axis), CohortCsvError);
  std::string bad_interval = std::string(kHeader) + "\na,50,1,0,158,94,394,447,51,13,42,0\n";
  EXPECT_THROW(parse(bad_interval), CohortCsvError);
  std::string no_age = std::string(kHeader) + "\na,,1,769,158,94,394,447,51,13,42,0\n";
  EXPECT_THROW(parse(no_age), CohortCsvError);
}

TEST(ReadCohort, SelectsRequestedTargets) {
  const std::string text =
      "sample_id,age,sex,rr_ms,pr_ms,qrs_ms,qt_ms,qtc_ms,p_axis_deg,qrs_axis_deg,t_axis_deg,"
      "icd_G30,icd_F32\n"
      "a,50,1,769,158,94,394,447,51,13,42,0,1\n";
  const auto c = parse(text, {"F32"});
  EXPECT_EQ(c.targets(), std::vector<std::string>{"F32"});
  EXPECT_EQ(c.sample(0).labels[0], 1);
  EXPECT_THROW(parse(text, {"I10"}), CohortCsvError);
}

TEST(WriteCohort, RoundTrip) {
  std::vector<Sample> samples{make_sample("a,1", 66.5, 1), make_sample("b", 18, 0)};
  samples[0].features[index_of(Feature::kPrMs)] = kMissing;
  samples[1].features[index_of(Feature::kRrMs)] = 0.1 + 0.2;
  samples[0].labels = {1};
  samples[1].labels = {0};
  const Cohort c({"G30"}, samples);
  std::ostringstream out;
  write_cohort(c, out);
  const auto back = parse(out.str());
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.sample(0).id, "a,1");
  EXPECT_TRUE(is_missing(back.sample(0).features[index_of(Feature::kPrMs)]));
  EXPECT_EQ(back.sample(1).features[index_of(Feature::kRrMs)], 0.1 + 0.2);
  std::ostringstream again;
  write_cohort(back, again);
  EXPECT_EQ(out.str(), again.str());
}

TEST(CohortType, Invariants) {
  EXPECT_THROW(Cohort({"G30"}, {make_sample("a", 50, 1)}), Error);  // no label
  auto a = make_sample("a", 50, 1);
  a.labels = {0};
  auto b = a;
  EXPECT_THROW(Cohort({"G30"}, {a, b}), Error);  // duplicate id
  EXPECT_THROW(Cohort({}, {make_sample("y", 17, 0)}), Error);
}

TEST(CohortType, SubsetAndTargets) {
  std::vector<Sample> samples;
  for (int i = 0; i < 5; ++i) {
    auto s = make_sample("s" + std::to_string(i), 20 + i, i % 2);
    s.labels = {static_cast<std::uint8_t>(i % 2), 1};
    samples.push_back(s);
  }
  const Cohort c({"G30", "F32"}, samples);
  const std::vector<std::size_t> idx{4, 1};
  const auto sub = c.subset(idx);
  EXPECT_EQ(sub.sample(0).id, "s4");
  EXPECT_EQ(sub.sample(1).id, "s1");
  const std::vector<std::string> codes{"F32"};
  const auto only = c.with_targets(codes);
  EXPECT_EQ(only.targets(), codes);
  EXPECT_EQ(only.labels(0), std::vector<std::uint8_t>(5, 1));
  const auto data = c.labeled(0);
  EXPECT_EQ(data.x.rows(), 5u);
  EXPECT_EQ(data.y[1], 1);
}

TEST(DescriptiveStats, MedianAndIqr) {
  std::vector<Sample> samples;
  for (int i = 1; i <= 5; ++i) {
    auto s = make_sample("s" + std::to_string(i), 30, 1);
    s.features[index_of(Feature::kRrMs)] = i;
    samples.push_back(s);
  }
  const auto stats = descriptive_stats(Cohort({}, samples));
  const auto& rr = stats.features[index_of(Feature::kRrMs) - 1];
  EXPECT_EQ(rr.feature, index_of(Feature::kRrMs));
  EXPECT_DOUBLE_EQ(rr.median, 3.0);
  EXPECT_DOUBLE_EQ(rr.iqr, 2.0);
  EXPECT_EQ(stats.male, 5u);
  EXPECT_DOUBLE_EQ(stats.male_pct, 100.0);
  EXPECT_DOUBLE_EQ(stats.female_pct, 0.0);
}

TEST(DescriptiveStats, MissingExcludedAndPercentagesSum) {
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    auto s = make_sample("s" + std::to_string(i), 18 + 2 * i, i % 3 == 0 ? 0 : 1);
    if (i % 4 == 0) s.features[index_of(Feature::kQtMs)] = kMissing;
    samples.push_back(s);
  }
  const auto stats = descriptive_stats(Cohort({}, samples));
  EXPECT_EQ(stats.features[index_of(Feature::kQtMs) - 1].n_present, 30u);
  EXPECT_NEAR(stats.female_pct + stats.male_pct, 100.0, 0.1);
  double sum = 0.0;
  std::size_t count = 0;
  for (int b = 0; b < 4; ++b) {
    sum += stats.age_bin_pct[static_cast<std::size_t>(b)];
    count += stats.age_bin_counts[static_cast<std::size_t>(b)];
  }
  EXPECT_NEAR(sum, 100.0, 0.1);
  EXPECT_EQ(count, 40u);
  EXPECT_EQ(stats.age.bounds[0], 18.0);
  EXPECT_EQ(stats.age.bounds[4], 96.0);
  for (const auto& f : stats.features) EXPECT_GE(f.iqr, 0.0);
}

TEST(DescriptiveStats, PermutationInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(300, 1200);
  std::vector<Sample> samples;
  for (int i = 0; i < 101; ++i) {
    auto s = make_sample("s" + std::to_string(i), 18 + i % 60, i % 2);
    s.features[index_of(Feature::kRrMs)] = std::round(u(gen));
    samples.push_back(s);
  }
  const auto a = format_stats_csv(descriptive_stats(Cohort({}, samples)));
  std::shuffle(samples.begin(), samples.end(), gen);
  const auto b = format_stats_csv(descriptive_stats(Cohort({}, samples)));
  EXPECT_EQ(a, b);
}

TEST(DescriptiveStats, TableRendering) {
  std::vector<Sample> samples;
  for (int i = 1; i <= 5; ++i) samples.push_back(make_sample("s" + std::to_string(i), 30, i % 2));
  const auto stats = descriptive_stats(Cohort({}, samples));
  const auto md = format_stats_markdown(stats);
  EXPECT_NE(md.find("RR-interval"), std::string::npos);
  EXPECT_NE(md.find("769 (0)"), std::string::npos);
  const auto csv = format_stats_csv(stats);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "feature,n_present,median,iqr");
  EXPECT_THROW(descriptive_stats(Cohort()), Error);
}

TEST(AgeQuartiles, BinsAreHalfOpenExceptLast) {
  AgeQuartiles q;
  q.bounds = {18, 30, 50, 70, 90};
  EXPECT_EQ(q.bin_of(18), 0);
  EXPECT_EQ(q.bin_of(30), 1);
  EXPECT_EQ(q.bin_of(69.9), 2);
  EXPECT_EQ(q.bin_of(90), 3);
}

}  // namespace
}  // namespace ecgdx
