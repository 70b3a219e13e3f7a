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

#include "ecgdx/metrics.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <thread>

namespace ecgdx {

namespace {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

ClassCounts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw Error("auroc: " + std::to_string(scores.size()) + " scores but " +
                std::to_string(labels.size()) + " labels");
  }
  ClassCounts counts;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error("auroc: non-finite score");
    if (labels[i] > 1) throw Error("auroc: labels must be 0 or 1");
    if (labels[i] == 1) {
      ++counts.positives;
    } else {
      ++counts.negatives;
    }
  }
  if (counts.positives == 0 || counts.negatives == 0) {
    throw Error("auroc: labels contain a single class");
  }
  return counts;
}

// Sample indices in ascending score order plus the start of each tie group.
struct SortedScores {
  std::vector<std::size_t> order;
  std::vector<std::size_t> group_start;  // size = groups + 1
};

SortedScores sort_scores(std::span<const double> scores) {
  SortedScores sorted;
  sorted.order.resize(scores.size());
  std::iota(sorted.order.begin(), sorted.order.end(), std::size_t{0});
  std::sort(sorted.order.begin(), sorted.order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  for (std::size_t k = 0; k < sorted.order.size(); ++k) {
    if (k == 0 || scores[sorted.order[k]] != scores[sorted.order[k - 1]]) {
      sorted.group_start.push_back(k);
    }
  }
  sorted.group_start.push_back(sorted.order.size());
  return sorted;
}

// Twice the Mann-Whitney U statistic of positives over negatives, with
// per-sample multiplicities `weight`. Within a tie group each
// positive-negative pair counts one half, i.e. the midrank correction. All
// partial sums are integers well below 2^53 and therefore exact.
template <typename WeightFn>
double twice_u(const SortedScores& sorted, std::span<const std::uint8_t> labels,
                    WeightFn weight, double& positives, double& negatives) {
  double twice = 0.0;
  double neg_below = 0.0;
  double pos_total = 0.0;
  for (std::size_t g = 0; g + 1 < sorted.group_start.size(); ++g) {
    double pos = 0.0;
    double neg = 0.0;
    for (std::size_t k = sorted.group_start[g]; k < sorted.group_start[g + 1]; ++k) {
      const std::size_t i = sorted.order[k];
      const double w = weight(i);
      if (labels[i] == 1) {
        pos += w;
      } else {
        neg += w;
      }
    }
    twice += 2.0 * pos * neg_below + pos * neg;
    neg_below += neg;
    pos_total += pos;
  }
  positives = pos_total;
  negatives = neg_below;
  return twice;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const ClassCounts counts = check_inputs(scores, labels);
  const SortedScores sorted = sort_scores(scores);
  double p = 0.0;
  double n = 0.0;
  const double twice = twice_u(sorted, labels, [](std::size_t) { return 1.0; }, p, n);
  // Both operands are integers below 2^53, so this is one correctly rounded
  // division of the exact rational.
  return twice /
         (2.0 * static_cast<double>(counts.positives) * static_cast<double>(counts.negatives));
}

std::vector<double> bootstrap_aurocs(std::span<const double> scores,
                                     std::span<const std::uint8_t> labels,
                                     const BootstrapOptions& options) {
  check_inputs(scores, labels);
  if (options.iterations == 0) throw Error("bootstrap: iterations must be positive");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) {
    throw Error("bootstrap: alpha must lie in (0, 1)");
  }
  const std::size_t n = scores.size();
  const SortedScores sorted = sort_scores(scores);
  const std::size_t max_attempts = 10 * options.iterations;

  std::vector<double> replicates(options.iterations);
  std::vector<std::size_t> attempts(options.iterations, 0);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> counts(n);
    for (std::size_t it = begin; it < end; ++it) {
      Rng rng(derive_seed(options.seed, it));
      while (true) {
        ++attempts[it];
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t k = 0; k < n; ++k) ++counts[rng.uniform_index(n)];
        double p = 0.0;
        double q = 0.0;
        const double twice = twice_u(
            sorted, labels, [&](std::size_t i) { return static_cast<double>(counts[i]); }, p, q);
        if (p > 0.0 && q > 0.0) {
          replicates[it] = twice / (2.0 * p * q);
          break;
        }
        if (attempts[it] >= max_attempts) break;
      }
    }
  };

  unsigned threads = options.num_threads == 0 ? std::thread::hardware_concurrency()
                                              : options.num_threads;
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(options.iterations));
  if (threads == 1) {
    run_range(0, options.iterations);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (options.iterations + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(options.iterations, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back(run_range, begin, end);
    }
  }

  const std::size_t total = std::accumulate(attempts.begin(), attempts.end(), std::size_t{0});
  if (total > max_attempts) {
    throw Error("bootstrap: could not obtain " + std::to_string(options.iterations) +
                " two-class resamples within " + std::to_string(max_attempts) + " draws");
  }
  return replicates;
}

ConfidenceInterval bootstrap_ci(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                const BootstrapOptions& options) {
  auto replicates = bootstrap_aurocs(scores, labels, options);
  std::sort(replicates.begin(), replicates.end());
  return ConfidenceInterval{quantile_sorted(replicates, options.alpha / 2.0),
                            quantile_sorted(replicates, 1.0 - options.alpha / 2.0)};
}

double prevalence(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw Error("prevalence of an empty label set");
  std::size_t positives = 0;
  for (auto y : labels) positives += y == 1;
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

std::string dataset_name(DatasetTag tag) {
  return tag == DatasetTag::kInternal ? "internal" : "external";
}

std::string format_report_cell(const MetricReport& report) {
  return format_fixed(report.auroc, 4) + " (" + format_fixed(report.ci_low, 4) + ", " +
         format_fixed(report.ci_high, 4) + ") [" + format_fixed(100.0 * report.prevalence, 2) +
         "%]";
}

namespace {

constexpr const char* kDefaultGroup = "Other";

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

ReportTables report_table(std::span<const MetricReport> reports,
                          const std::map<std::string, std::string>& grouping,
                          const std::map<std::string, std::string>& descriptions) {
  struct Row {
    const MetricReport* internal = nullptr;
    const MetricReport* external = nullptr;
  };
  // group -> code -> row
  std::map<std::string, std::map<std::string, Row>> groups;
  for (const auto& report : reports) {
    auto it = grouping.find(report.target);
    const std::string group = it == grouping.end() ? kDefaultGroup : it->second;
    Row& row = groups[group][report.target];
    const MetricReport*& slot =
        report.dataset == DatasetTag::kInternal ? row.internal : row.external;
    if (slot != nullptr) {
      throw Error("report_table: duplicate row for " + report.target + " (" +
                  dataset_name(report.dataset) + ")");
    }
    slot = &report;
  }

  ReportTables tables;
  std::ostringstream md;
  std::ostringstream csv;
  md << "| Code: Description | Internal AUROC (95% CI) [Prev.] | "
        "External AUROC (95% CI) [Prev.] |\n";
  md << "|---|---|---|\n";
  csv << kReportCsvHeader << '\n';

  auto check = [&tables](const MetricReport& r) {
    if (r.auroc < r.ci_low || r.auroc > r.ci_high) {
      tables.warnings.push_back(r.target + " (" + dataset_name(r.dataset) + "): AUROC " +
                                format_fixed(r.auroc, 4) + " lies outside its interval");
    }
  };
  auto csv_row = [&csv](const std::string& group, const MetricReport& r) {
    csv << csv_field(group) << ',' << csv_field(r.target) << ',' << dataset_name(r.dataset)
        << ',' << format_shortest(r.auroc) << ',' << format_shortest(r.ci_low) << ','
        << format_shortest(r.ci_high) << ',' << format_shortest(r.prevalence) << ',' << r.n
        << '\n';
  };

  for (const auto& [group, rows] : groups) {
    md << "| **" << group << "** | | |\n";
    for (const auto& [code, row] : rows) {
      std::string label = code;
      if (auto d = descriptions.find(code); d != descriptions.end()) label += ": " + d->second;
      md << "| " << label << " | " << (row.internal ? format_report_cell(*row.internal) : "n/a")
         << " | " << (row.external ? format_report_cell(*row.external) : "n/a") << " |\n";
      for (const MetricReport* r : {row.internal, row.external}) {
        if (r == nullptr) continue;
        check(*r);
        csv_row(group, *r);
      }
    }
  }
  tables.markdown = md.str();
  tables.csv = csv.str();
  return tables;
}

}  // namespace ecgdx
