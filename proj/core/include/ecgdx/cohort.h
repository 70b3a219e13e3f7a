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

#ifndef ECGDX_COHORT_H_
#define ECGDX_COHORT_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgdx/common.h"
#include "ecgdx/matrix.h"

namespace ecgdx {

// Harmonized feature layout. Order is fixed; it is also the CSV column order.
enum class Feature : std::size_t {
  kAge = 0,
  kSex,
  kRrMs,
  kPrMs,
  kQrsMs,
  kQtMs,
  kQtcMs,
  kPAxisDeg,
  kQrsAxisDeg,
  kTAxisDeg,
};

inline constexpr std::size_t kNumFeatures = 10;

enum class FeatureKind { kAge, kBinarySex, kIntervalMs, kAxisDeg };

struct FeatureInfo {
  std::string_view name;     // CSV column name
  std::string_view display;  // label used in descriptive tables
  FeatureKind kind;
  bool required;
};

// The harmonized schema: 2 demographic + 8 ECG features. Sex is coded
// 0 = female, 1 = male.
class FeatureSchema {
 public:
  static const FeatureSchema& standard();

  std::size_t size() const { return kNumFeatures; }
  const FeatureInfo& info(std::size_t index) const { return features_[index]; }
  const FeatureInfo& info(Feature f) const {
    return features_[static_cast<std::size_t>(f)];
  }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  FeatureSchema();

  std::array<FeatureInfo, kNumFeatures> features_;
  std::vector<std::string> names_;
  std::string fingerprint_;
};

inline constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

inline constexpr double kMinAdultAge = 18.0;
inline constexpr double kMaxSynthAge = 110.0;
inline constexpr double kMinAxisDeg = -180.0;
inline constexpr double kMaxAxisDeg = 360.0;

using FeatureVector = std::array<double, kNumFeatures>;

struct Sample {
  std::string id;
  FeatureVector features{};
  // One 0/1 label per cohort target, in Cohort::targets() order.
  std::vector<std::uint8_t> labels;
};

// Returns a description of the first invariant the feature vector violates,
// or nullopt when the sample is valid.
struct FeatureViolation {
  std::size_t feature;
  std::string message;
};
std::optional<FeatureViolation> check_features(const FeatureVector& features);

// Immutable validated collection of samples sharing one target list.
class Cohort {
 public:
  Cohort() = default;
  // Throws Error if any sample violates the schema, a label vector is
  // misaligned with `targets`, or sample ids are not unique.
  Cohort(std::vector<std::string> targets, std::vector<Sample> samples);

  const FeatureSchema& schema() const { return FeatureSchema::standard(); }
  const std::vector<std::string>& targets() const { return targets_; }
  std::span<const Sample> samples() const { return samples_; }
  const Sample& sample(std::size_t i) const { return samples_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  std::optional<std::size_t> target_index(std::string_view code) const;

  FeatureMatrix feature_matrix() const;
  std::vector<std::uint8_t> labels(std::size_t target) const;
  LabeledData labeled(std::size_t target) const;

  // Sub-cohort with the samples at `indices`, in the given order.
  Cohort subset(std::span<const std::size_t> indices) const;
  // Same samples restricted to a subset of targets (by code).
  Cohort with_targets(std::span<const std::string> codes) const;

 private:
  std::vector<std::string> targets_;
  std::vector<Sample> samples_;
};

// ---------------------------------------------------------------------------
// CSV interface
//
// Header: sample_id, age, sex, rr_ms, pr_ms, qrs_ms, qt_ms, qtc_ms,
// p_axis_deg, qrs_axis_deg, t_axis_deg, then icd_<CODE> columns (0 or 1).
// Empty ECG cells are missing. Rows are numbered from 1 after the header.

struct CsvDiagnostic {
  std::size_t row;  // 0 = header
  std::string column;
  std::string message;
};

class CohortCsvError : public Error {
 public:
  explicit CohortCsvError(std::vector<CsvDiagnostic> diagnostics);
  const std::vector<CsvDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<CsvDiagnostic> diagnostics_;
};

inline constexpr std::string_view kTargetColumnPrefix = "icd_";

// Reads a cohort. With an empty `targets` list every icd_ column is loaded.
Cohort read_cohort(std::istream& in, std::span<const std::string> targets = {});
Cohort load_cohort(const std::filesystem::path& path,
                   std::span<const std::string> targets = {});

// Target codes declared by a CSV header, in column order.
std::vector<std::string> read_target_columns(const std::filesystem::path& path);

void write_cohort(const Cohort& cohort, std::ostream& out);
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Descriptive statistics

// Age quartile boundaries {min, q1, q2, q3, max} (linear interpolation).
// Bins are [b_k, b_{k+1}) except the last, which is closed.
struct AgeQuartiles {
  std::array<double, 5> bounds{};
  int bin_of(double age) const;
};
AgeQuartiles age_quartiles(const Cohort& cohort);

struct FeatureSummary {
  std::size_t feature = 0;
  std::size_t n_present = 0;
  double median = kMissing;
  double iqr = kMissing;
};

struct DescriptiveStats {
  std::size_t n = 0;
  std::size_t female = 0;
  std::size_t male = 0;
  double female_pct = 0.0;
  double male_pct = 0.0;
  AgeQuartiles age;
  std::array<std::size_t, 4> age_bin_counts{};
  std::array<double, 4> age_bin_pct{};
  // Every feature except sex, in schema order.
  std::vector<FeatureSummary> features;
};

DescriptiveStats descriptive_stats(const Cohort& cohort);

// Table-style rendering ("769 (264)", "18-53 (23.83)").
std::string format_stats_markdown(const DescriptiveStats& stats);
// Columns: feature, n_present, median, iqr.
std::string format_stats_csv(const DescriptiveStats& stats);

}  // namespace ecgdx

#endif  // ECGDX_COHORT_H_
