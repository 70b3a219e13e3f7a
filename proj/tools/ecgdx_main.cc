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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ecgdx/pipeline.h"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"ECG feature models for diagnosis prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
  bool force = false;
  app.add_option("--config", config, "Configuration file");
  app.add_option("--seed", seed, "Random seed override");
  app.add_option("--out", out, "Output directory or file");
  app.add_option("--jobs", jobs, "Concurrent workers")->check(CLI::PositiveNumber);
  app.add_flag("--force", force, "Overwrite existing artifacts");

  auto* run = app.add_subcommand("run", "Train, evaluate and explain every configured target");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort CSV");
  std::string synth_spec;
  synth->add_option("spec", synth_spec, "Synthesis spec (key = value); defaults to --config");

  auto* stats = app.add_subcommand("stats", "Descriptive statistics of a cohort CSV");
  std::string stats_csv;
  stats->add_option("csv", stats_csv, "Cohort CSV")->required();

  auto* split = app.add_subcommand("split", "Stratified 20-fold assignment of a cohort CSV");
  std::string split_csv;
  split->add_option("csv", split_csv, "Cohort CSV")->required();

  auto* explain = app.add_subcommand("explain", "SHAP values of a saved model on a cohort CSV");
  std::string model_path;
  std::string explain_csv;
  std::string folds_csv;
  std::string role = "test";
  explain->add_option("model", model_path, "Model JSON")->required();
  explain->add_option("csv", explain_csv, "Cohort CSV")->required();
  explain->add_option("--folds", folds_csv, "Fold CSV from a previous split or run");
  explain->add_option("--role", role, "Role to keep when --folds is given")
      ->check(CLI::IsMember({"train", "validation", "test"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ecgdx::kExitOk : ecgdx::kExitFailure;
  }

  auto require_out = [&](const char* what) {
    if (out.empty()) {
      std::cerr << "error: --out " << what << " is required\n";
      return false;
    }
    return true;
  };

  if (*run) {
    if (config.empty()) {
      std::cerr << "error: run needs --config\n";
      return ecgdx::kExitFailure;
    }
    ecgdx::RunOptions options;
    options.jobs = jobs;
    options.force = force;
    options.log = &std::cerr;
    std::optional<fs::path> out_dir;
    if (!out.empty()) out_dir = out;
    return ecgdx::cmd_run(config, seed, out_dir, options);
  }
  if (*synth) {
    if (synth_spec.empty()) synth_spec = config;
    if (synth_spec.empty()) {
      std::cerr << "error: synth needs a spec file\n";
      return ecgdx::kExitFailure;
    }
    if (!require_out("CSV")) return ecgdx::kExitFailure;
    return ecgdx::cmd_synth(synth_spec, out, seed, force, std::cerr);
  }
  if (*stats) {
    std::optional<fs::path> out_dir;
    if (!out.empty()) out_dir = out;
    return ecgdx::cmd_stats(stats_csv, out_dir, force, std::cout, std::cerr);
  }
  if (*split) {
    if (!require_out("CSV")) return ecgdx::kExitFailure;
    return ecgdx::cmd_split(split_csv, seed.value_or(0), out, force, std::cout, std::cerr);
  }
  if (*explain) {
    if (!require_out("CSV")) return ecgdx::kExitFailure;
    std::optional<fs::path> folds;
    if (!folds_csv.empty()) folds = folds_csv;
    return ecgdx::cmd_explain(model_path, explain_csv, out, folds, role, force, jobs, std::cerr);
  }
  return ecgdx::kExitFailure;
}
