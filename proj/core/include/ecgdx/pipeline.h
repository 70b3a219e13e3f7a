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

#ifndef ECGDX_PIPELINE_H_
#define ECGDX_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ecgdx/gbm.h"
#include "ecgdx/kv_config.h"
#include "ecgdx/metrics.h"

namespace ecgdx {

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;

struct RunConfig {
  std::filesystem::path internal_csv;
  std::optional<std::filesystem::path> external_csv;
  std::vector<std::string> targets;
  std::uint64_t seed = 0;
  TrainConfig train;
  std::filesystem::path output_dir = "ecgdx_out";
  double auroc_floor = 0.7;
  std::size_t bootstrap_iterations = 1000;
  // code -> group / description, used by the report tables.
  std::map<std::string, std::string> groups;
  std::map<std::string, std::string> descriptions;

  void validate() const;
};

// Keys: internal_csv, external_csv, targets (comma list), seed, output_dir,
// auroc_floor, bootstrap.iterations, gbm.<field>, group.<CODE>,
// description.<CODE>. Relative paths resolve against `base_dir`. Unknown
// keys are an error.
RunConfig parse_run_config(const KeyValueFile& file, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct RunOptions {
  unsigned jobs = 1;
  bool force = false;
  std::ostream* log = nullptr;
};

struct TargetOutcome {
  std::string target;
  bool ok = false;
  std::string error;
  std::optional<MetricReport> internal;
  std::optional<MetricReport> external;
  std::size_t best_iteration = 0;
  bool pass = false;
};

struct RunResult {
  std::vector<TargetOutcome> targets;  // config order
  int exit_code = kExitOk;
};

// Per-target artifact names; every name carries the code and dataset tag.
std::string model_filename(const std::string& code);
std::string trainlog_filename(const std::string& code);
std::string explanations_filename(const std::string& code);
std::string beeswarm_filename(const std::string& code);

inline constexpr const char* kReportCsvName = "report.csv";
inline constexpr const char* kReportMarkdownName = "report.md";
inline constexpr const char* kSummaryName = "summary.csv";
inline constexpr const char* kFoldsName = "folds.csv";

// (internal > floor) and (external > floor). Without an external cohort
// the internal test alone decides.
bool passes_floor(const TargetOutcome& outcome, double floor);

// Split, fit, evaluate, explain and report every configured target.
// Throws Error on configuration problems (unreadable internal cohort, or
// existing artifacts without `force`); per-target problems are recorded in
// the outcome and the run continues.
RunResult run_pipeline(const RunConfig& config, const RunOptions& options = {});

// Thin wrappers used by the command-line tool. Each returns an exit status
// and writes diagnostics to `log`.
int cmd_run(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::filesystem::path> out_dir, const RunOptions& options);
int cmd_synth(const std::filesystem::path& spec_path, const std::filesystem::path& out_csv,
              std::optional<std::uint64_t> seed, bool force, std::ostream& log);
int cmd_stats(const std::filesystem::path& csv, std::optional<std::filesystem::path> out_dir,
              bool force, std::ostream& out, std::ostream& log);
int cmd_split(const std::filesystem::path& csv, std::uint64_t seed,
              const std::filesystem::path& out_csv, bool force, std::ostream& out,
              std::ostream& log);
// `folds_csv` with `role` restricts the explained rows to one role of a
// previous split (e.g. the internal test fold of a run).
int cmd_explain(const std::filesystem::path& model_path, const std::filesystem::path& csv,
                const std::filesystem::path& out_csv,
                std::optional<std::filesystem::path> folds_csv, const std::string& role,
                bool force, unsigned jobs, std::ostream& log);

}  // namespace ecgdx

#endif  // ECGDX_PIPELINE_H_
