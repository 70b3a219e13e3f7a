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

#ifndef ECGDX_METRICS_H_
#define ECGDX_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecgdx/common.h"

namespace ecgdx {

// Area under the ROC curve, Mann-Whitney form: (wins + ties / 2) / (P * N),
// computed with one sort and midranks. The numerator is accumulated exactly
// (in half-units), so the result equals the pairwise count after a single
// rounding. Throws Error on length mismatch, non-finite scores or
// single-class labels.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

struct BootstrapOptions {
  std::size_t iterations = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  // Worker threads; 0 = hardware concurrency. Results do not depend on it.
  unsigned num_threads = 1;
};

// Percentile bootstrap interval of the AUROC. Iteration i draws from its own
// generator seeded by (seed, i); a single-class resample is redrawn. Throws
// Error if more than 10 * iterations draws are needed in total.
ConfidenceInterval bootstrap_ci(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                const BootstrapOptions& options = {});

// All bootstrap AUROC replicates in iteration order (for diagnostics/tests).
std::vector<double> bootstrap_aurocs(std::span<const double> scores,
                                     std::span<const std::uint8_t> labels,
                                     const BootstrapOptions& options = {});

double prevalence(std::span<const std::uint8_t> labels);

enum class DatasetTag { kInternal, kExternal };
std::string dataset_name(DatasetTag tag);

struct MetricReport {
  std::string target;
  DatasetTag dataset = DatasetTag::kInternal;
  double auroc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double prevalence = 0.0;
  std::size_t n = 0;
};

// "0.8134 (0.8124, 0.8140) [1.04%]"
std::string format_report_cell(const MetricReport& report);

struct ReportTables {
  std::string markdown;
  std::string csv;
  // Rows whose point estimate falls outside its own interval.
  std::vector<std::string> warnings;
};

// Rows grouped by `grouping` (code -> group; unknown codes go to "Other"),
// sorted by group then code. `descriptions` optionally maps code -> text for
// the "Code: Description" column. Throws Error on duplicate (target, dataset).
ReportTables report_table(std::span<const MetricReport> reports,
                          const std::map<std::string, std::string>& grouping,
                          const std::map<std::string, std::string>& descriptions = {});

inline constexpr const char* kReportCsvHeader =
    "group,code,dataset,auroc,ci_low,ci_high,prevalence,n";

}  // namespace ecgdx

#endif  // ECGDX_METRICS_H_
