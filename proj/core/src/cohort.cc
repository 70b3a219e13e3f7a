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

#include "ecgdx/cohort.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ecgdx {

FeatureSchema::FeatureSchema()
    : features_{{
          {"age", "Age[years]", FeatureKind::kAge, true},
          {"sex", "Sex", FeatureKind::kBinarySex, true},
          {"rr_ms", "RR-interval[ms]", FeatureKind::kIntervalMs, false},
          {"pr_ms", "PR-interval[ms]", FeatureKind::kIntervalMs, false},
          {"qrs_ms", "QRS-duration[ms]", FeatureKind::kIntervalMs, false},
          {"qt_ms", "QT-interval[ms]", FeatureKind::kIntervalMs, false},
          {"qtc_ms", "QTc-interval[ms]", FeatureKind::kIntervalMs, false},
          {"p_axis_deg", "P-wave-axis[deg]", FeatureKind::kAxisDeg, false},
          {"qrs_axis_deg", "QRS-axis[deg]", FeatureKind::kAxisDeg, false},
          {"t_axis_deg", "T-wave-axis[deg]", FeatureKind::kAxisDeg, false},
      }} {
  for (const auto& f : features_) names_.emplace_back(f.name);
  fingerprint_ = schema_fingerprint(names_);
}

const FeatureSchema& FeatureSchema::standard() {
  static const FeatureSchema schema;
  return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<FeatureViolation> check_features(const FeatureVector& features) {
  const auto& schema = FeatureSchema::standard();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const double v = features[i];
    const auto& info = schema.info(i);
    if (is_missing(v)) {
      if (info.required) return FeatureViolation{i, "required value is missing"};
      continue;
    }
    if (!std::isfinite(v)) return FeatureViolation{i, "value is not finite"};
    switch (info.kind) {
      case FeatureKind::kAge:
        if (v < kMinAdultAge) return FeatureViolation{i, "age below 18"};
        break;
      case FeatureKind::kBinarySex:
        if (v != 0.0 && v != 1.0) return FeatureViolation{i, "sex must be 0 or 1"};
        break;
      case FeatureKind::kIntervalMs:
        if (v <= 0.0) return FeatureViolation{i, "interval must be positive"};
        break;
      case FeatureKind::kAxisDeg:
        if (v < kMinAxisDeg || v > kMaxAxisDeg) {
          return FeatureViolation{i, "axis outside [-180, 360]"};
        }
        break;
    }
  }
  return std::nullopt;
}

Cohort::Cohort(std::vector<std::string> targets, std::vector<Sample> samples)
    : targets_(std::move(targets)), samples_(std::move(samples)) {
  std::unordered_set<std::string_view> codes;
  for (const auto& code : targets_) {
    if (code.empty()) throw Error("empty target code");
    if (!codes.insert(code).second) throw Error("duplicate target code " + code);
  }
  std::unordered_set<std::string_view> ids;
  ids.reserve(samples_.size());
  for (const auto& s : samples_) {
    if (s.id.empty()) throw Error("sample with empty id");
    if (!ids.insert(s.id).second) throw Error("duplicate sample id " + s.id);
    if (auto violation = check_features(s.features)) {
      throw Error("sample " + s.id + ", feature " +
                  std::string(schema().info(violation->feature).name) + ": " +
                  violation->message);
    }
    if (s.labels.size() != targets_.size()) {
      throw Error("sample " + s.id + " does not carry one label per target");
    }
    for (auto label : s.labels) {
      if (label > 1) throw Error("sample " + s.id + " has a label outside {0,1}");
    }
  }
}

std::optional<std::size_t> Cohort::target_index(std::string_view code) const {
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (targets_[i] == code) return i;
  }
  return std::nullopt;
}

FeatureMatrix Cohort::feature_matrix() const {
  std::vector<double> values;
  values.reserve(samples_.size() * kNumFeatures);
  for (const auto& s : samples_) {
    values.insert(values.end(), s.features.begin(), s.features.end());
  }
  return FeatureMatrix(schema().names(), std::move(values));
}

std::vector<std::uint8_t> Cohort::labels(std::size_t target) const {
  std::vector<std::uint8_t> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.labels.at(target));
  return out;
}

LabeledData Cohort::labeled(std::size_t target) const {
  return LabeledData{feature_matrix(), labels(target)};
}

Cohort Cohort::subset(std::span<const std::size_t> indices) const {
  std::vector<Sample> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(samples_.at(i));
  return Cohort(targets_, std::move(picked));
}

Cohort Cohort::with_targets(std::span<const std::string> codes) const {
  std::vector<std::size_t> positions;
  for (const auto& code : codes) {
    auto idx = target_index(code);
    if (!idx) throw Error("cohort has no target " + code);
    positions.push_back(*idx);
  }
  std::vector<Sample> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) {
    Sample copy{s.id, s.features, {}};
    for (auto p : positions) copy.labels.push_back(s.labels[p]);
    out.push_back(std::move(copy));
  }
  return Cohort(std::vector<std::string>(codes.begin(), codes.end()), std::move(out));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string describe(const std::vector<CsvDiagnostic>& diagnostics) {
  std::ostringstream os;
  os << "cohort CSV rejected (" << diagnostics.size() << " problem"
     << (diagnostics.size() == 1 ? "" : "s") << ")";
  const std::size_t shown = std::min<std::size_t>(diagnostics.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& d = diagnostics[i];
    os << "; row " << d.row;
    if (!d.column.empty()) os << ", column " << d.column;
    os << ": " << d.message;
  }
  if (diagnostics.size() > shown) os << "; ...";
  return os.str();
}

// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

constexpr std::string_view kSampleIdColumn = "sample_id";

}  // namespace

CohortCsvError::CohortCsvError(std::vector<CsvDiagnostic> diagnostics)
    : Error(describe(diagnostics)), diagnostics_(std::move(diagnostics)) {}

Cohort read_cohort(std::istream& in, std::span<const std::string> targets) {
  const auto& schema = FeatureSchema::standard();
  std::vector<CsvDiagnostic> diagnostics;

  std::string line;
  if (!std::getline(in, line)) {
    throw CohortCsvError({{0, "", "file is empty"}});
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_record(line);

  // Required prefix: sample_id + the ten features, in order.
  const std::size_t required = 1 + kNumFeatures;
  for (std::size_t c = 0; c < required; ++c) {
    const std::string_view expected =
        c == 0 ? kSampleIdColumn : schema.info(c - 1).name;
    if (c >= header.size() || trim(header[c]) != expected) {
      diagnostics.push_back({0, std::string(expected),
                             "missing required column (expected at position " +
                                 std::to_string(c + 1) + ")"});
    }
  }
  std::unordered_map<std::string, std::size_t> target_columns;
  std::vector<std::string> declared;
  for (std::size_t c = required; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    if (name.rfind(kTargetColumnPrefix, 0) != 0 || name.size() == kTargetColumnPrefix.size()) {
      diagnostics.push_back({0, name, "unexpected column (targets must be named icd_<CODE>)"});
      continue;
    }
    std::string code = name.substr(kTargetColumnPrefix.size());
    if (!target_columns.emplace(code, c).second) {
      diagnostics.push_back({0, name, "duplicate target column"});
      continue;
    }
    declared.push_back(std::move(code));
  }
  std::vector<std::string> wanted =
      targets.empty() ? declared : std::vector<std::string>(targets.begin(), targets.end());
  std::vector<std::size_t> wanted_columns;
  for (const auto& code : wanted) {
    auto it = target_columns.find(code);
    if (it == target_columns.end()) {
      diagnostics.push_back({0, std::string(kTargetColumnPrefix) + code,
                             "requested target column not found"});
    } else {
      wanted_columns.push_back(it->second);
    }
  }
  if (!diagnostics.empty()) throw CohortCsvError(std::move(diagnostics));

  std::vector<Sample> samples;
  std::unordered_set<std::string> seen_ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_record(line);
    if (fields.size() != header.size()) {
      diagnostics.push_back({row, "", "expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size())});
      continue;
    }
    const std::size_t before = diagnostics.size();
    Sample sample;
    sample.id = std::string(trim(fields[0]));
    if (sample.id.empty()) {
      diagnostics.push_back({row, std::string(kSampleIdColumn), "empty sample id"});
    } else if (!seen_ids.insert(sample.id).second) {
      diagnostics.push_back({row, std::string(kSampleIdColumn), "duplicate sample id " + sample.id});
    }
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto& info = schema.info(f);
      const std::string_view cell = trim(fields[f + 1]);
      if (cell.empty()) {
        sample.features[f] = kMissing;
        continue;
      }
      auto value = parse_double(cell);
      if (!value) {
        diagnostics.push_back({row, std::string(info.name),
                               "non-numeric value '" + std::string(cell) + "'"});
        sample.features[f] = kMissing;
        continue;
      }
      sample.features[f] = *value;
    }
    if (diagnostics.size() == before) {
      if (auto violation = check_features(sample.features)) {
        diagnostics.push_back(
            {row, std::string(schema.info(violation->feature).name), violation->message});
      }
    }
    for (std::size_t t = 0; t < wanted_columns.size(); ++t) {
      const std::string_view cell = trim(fields[wanted_columns[t]]);
      if (cell == "0") {
        sample.labels.push_back(0);
      } else if (cell == "1") {
        sample.labels.push_back(1);
      } else {
        diagnostics.push_back({row, std::string(kTargetColumnPrefix) + wanted[t],
                               "label must be 0 or 1, found '" + std::string(cell) + "'"});
        sample.labels.push_back(0);
      }
    }
    if (diagnostics.size() == before) samples.push_back(std::move(sample));
  }
  if (!diagnostics.empty()) throw CohortCsvError(std::move(diagnostics));
  return Cohort(std::move(wanted), std::move(samples));
}

Cohort load_cohort(const std::filesystem::path& path, std::span<const std::string> targets) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cohort file " + path.string());
  return read_cohort(in, targets);
}

std::vector<std::string> read_target_columns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cohort file " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> codes;
  for (const auto& column : split_record(line)) {
    const std::string_view name = trim(column);
    if (name.size() > kTargetColumnPrefix.size() &&
        name.substr(0, kTargetColumnPrefix.size()) == kTargetColumnPrefix) {
      codes.emplace_back(name.substr(kTargetColumnPrefix.size()));
    }
  }
  return codes;
}

void write_cohort(const Cohort& cohort, std::ostream& out) {
  const auto& schema = cohort.schema();
  out << kSampleIdColumn;
  for (const auto& name : schema.names()) out << ',' << name;
  for (const auto& code : cohort.targets()) out << ',' << kTargetColumnPrefix << code;
  out << '\n';
  for (const auto& s : cohort.samples()) {
    out << quote_if_needed(s.id);
    for (double v : s.features) out << ',' << format_shortest(v);
    for (auto label : s.labels) out << ',' << static_cast<int>(label);
    out << '\n';
  }
}

void save_cohort(const Cohort& cohort, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write cohort file " + path.string());
  write_cohort(cohort, out);
  if (!out) throw Error("failed writing cohort file " + path.string());
}

// ---------------------------------------------------------------------------
// Descriptive statistics

int AgeQuartiles::bin_of(double age) const {
  for (int k = 0; k < 3; ++k) {
    if (age < bounds[k + 1]) return k;
  }
  return 3;
}

AgeQuartiles age_quartiles(const Cohort& cohort) {
  if (cohort.empty()) throw Error("age quartiles of an empty cohort");
  std::vector<double> ages;
  ages.reserve(cohort.size());
  for (const auto& s : cohort.samples()) ages.push_back(s.features[index_of(Feature::kAge)]);
  std::sort(ages.begin(), ages.end());
  AgeQuartiles q;
  q.bounds = {ages.front(), quantile_sorted(ages, 0.25), quantile_sorted(ages, 0.5),
              quantile_sorted(ages, 0.75), ages.back()};
  return q;
}

DescriptiveStats descriptive_stats(const Cohort& cohort) {
  if (cohort.empty()) throw Error("descriptive statistics of an empty cohort");
  DescriptiveStats stats;
  stats.n = cohort.size();
  const double n = static_cast<double>(stats.n);

  for (const auto& s : cohort.samples()) {
    if (s.features[index_of(Feature::kSex)] == 1.0) {
      ++stats.male;
    } else {
      ++stats.female;
    }
  }
  stats.female_pct = 100.0 * static_cast<double>(stats.female) / n;
  stats.male_pct = 100.0 * static_cast<double>(stats.male) / n;

  stats.age = age_quartiles(cohort);
  for (const auto& s : cohort.samples()) {
    ++stats.age_bin_counts[stats.age.bin_of(s.features[index_of(Feature::kAge)])];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    stats.age_bin_pct[k] = 100.0 * static_cast<double>(stats.age_bin_counts[k]) / n;
  }

  std::vector<double> values;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (f == index_of(Feature::kSex)) continue;
    values.clear();
    for (const auto& s : cohort.samples()) {
      if (!is_missing(s.features[f])) values.push_back(s.features[f]);
    }
    std::sort(values.begin(), values.end());
    FeatureSummary summary;
    summary.feature = f;
    summary.n_present = values.size();
    if (!values.empty()) {
      summary.median = lower_median_sorted(values);
      summary.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    }
    stats.features.push_back(summary);
  }
  return stats;
}

namespace {

// Up to two decimals, trailing zeros dropped: 769 -> "769", 25.5 -> "25.5".
std::string compact(double value) {
  if (is_missing(value)) return "NA";
  std::string s = format_fixed(value, 2);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace

std::string format_stats_markdown(const DescriptiveStats& stats) {
  const auto& schema = FeatureSchema::standard();
  std::ostringstream os;
  os << "| Variable | Value |\n|---|---|\n";
  os << "| **Gender (%)** | |\n";
  os << "| Female | " << stats.female << " (" << format_fixed(stats.female_pct, 2) << ") |\n";
  os << "| Male | " << stats.male << " (" << format_fixed(stats.male_pct, 2) << ") |\n";
  os << "| **Age (%)** | |\n";
  const auto& age = stats.features.front();
  os << "| Median years (IQR) | " << compact(age.median) << " (" << compact(age.iqr) << ") |\n";
  for (std::size_t k = 0; k < 4; ++k) {
    os << "| Quantile " << k + 1 << " | " << compact(stats.age.bounds[k]) << "-"
       << compact(stats.age.bounds[k + 1]) << " (" << format_fixed(stats.age_bin_pct[k], 2)
       << ") |\n";
  }
  os << "| **ECG features Median(IQR)** | |\n";
  for (const auto& summary : stats.features) {
    if (summary.feature == index_of(Feature::kAge)) continue;
    os << "| " << schema.info(summary.feature).display << " | " << compact(summary.median)
       << " (" << compact(summary.iqr) << ") |\n";
  }
  return os.str();
}

std::string format_stats_csv(const DescriptiveStats& stats) {
  const auto& schema = FeatureSchema::standard();
  std::ostringstream os;
  os << "feature,n_present,median,iqr\n";
  for (const auto& summary : stats.features) {
    os << schema.info(summary.feature).name << ',' << summary.n_present << ','
       << format_shortest(summary.median) << ',' << format_shortest(summary.iqr) << '\n';
  }
  return os.str();
}

}  // namespace ecgdx
