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

#include "ecgdx/pipeline.h"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ecgdx/cohort.h"
#include "ecgdx/shap.h"
#include "ecgdx/splits.h"
#include "ecgdx/synth.h"

namespace ecgdx {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw Error(path.string() + " already exists (use --force to overwrite)");
  }
}

class Logger {
 public:
  explicit Logger(std::ostream* out) : out_(out) {}
  void line(const std::string& text) {
    if (out_ == nullptr) return;
    std::lock_guard<std::mutex> lock(mutex_);
    *out_ << text << '\n';
  }

 private:
  std::ostream* out_;
  std::mutex mutex_;
};

MetricReport evaluate(const TreeEnsemble& model, const Cohort& cohort, std::size_t target,
                      DatasetTag tag, std::size_t iterations, std::uint64_t seed) {
  const auto scores = predict_margins(model, cohort.feature_matrix());
  const auto labels = cohort.labels(target);
  MetricReport report;
  report.target = cohort.targets()[target];
  report.dataset = tag;
  report.auroc = auroc(scores, labels);
  BootstrapOptions options;
  options.iterations = iterations;
  options.seed = seed;
  const auto ci = bootstrap_ci(scores, labels, options);
  report.ci_low = ci.low;
  report.ci_high = ci.high;
  report.prevalence = prevalence(labels);
  report.n = labels.size();
  return report;
}

std::vector<std::string> sample_ids(const Cohort& cohort) {
  std::vector<std::string> ids;
  ids.reserve(cohort.size());
  for (const auto& s : cohort.samples()) ids.push_back(s.id);
  return ids;
}

std::string format_summary(const std::vector<TargetOutcome>& outcomes) {
  std::ostringstream os;
  os << "code,status,internal_auroc,external_auroc,pass,message\n";
  for (const auto& o : outcomes) {
    os << o.target << ',' << (o.ok ? "ok" : "error") << ','
       << (o.internal ? format_shortest(o.internal->auroc) : "") << ','
       << (o.external ? format_shortest(o.external->auroc) : "") << ','
       << (o.pass ? "pass" : "fail") << ',';
    std::string message = o.error;
    std::replace(message.begin(), message.end(), ',', ';');
    std::replace(message.begin(), message.end(), '\n', ' ');
    os << message << '\n';
  }
  return os.str();
}

// sample_id,fold,role
std::map<std::string, std::string> read_fold_roles(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::map<std::string, std::string> roles;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    // The id may be quoted; the last two fields never are.
    const auto last = line.rfind(',');
    const auto mid = last == std::string::npos ? last : line.rfind(',', last - 1);
    if (mid == std::string::npos) throw Error(path.string() + ": malformed row '" + line + "'");
    std::string id = line.substr(0, mid);
    if (id.size() >= 2 && id.front() == '"' && id.back() == '"') {
      std::string unq;
      for (std::size_t i = 1; i + 1 < id.size(); ++i) {
        unq.push_back(id[i]);
        if (id[i] == '"' && i + 2 < id.size() && id[i + 1] == '"') ++i;
      }
      id = unq;
    }
    roles[id] = line.substr(last + 1);
  }
  return roles;
}

}  // namespace

void RunConfig::validate() const {
  if (internal_csv.empty()) throw Error("config: internal_csv is required");
  if (targets.empty()) throw Error("config: targets must list at least one code");
  std::set<std::string> seen;
  for (const auto& t : targets) {
    if (!seen.insert(t).second) throw Error("config: target " + t + " listed twice");
  }
  if (!(auroc_floor >= 0.5 && auroc_floor < 1.0)) {
    throw Error("config: auroc_floor must lie in [0.5, 1)");
  }
  if (bootstrap_iterations == 0) throw Error("config: bootstrap.iterations must be positive");
  train.validate();
}

RunConfig parse_run_config(const KeyValueFile& file, const fs::path& base_dir) {
  static const std::set<std::string> kKnown = {
      "internal_csv", "external_csv", "targets", "seed", "output_dir", "auroc_floor",
      "bootstrap.iterations", "gbm.learning_rate", "gbm.max_depth", "gbm.reg_lambda",
      "gbm.gamma", "gbm.min_child_weight", "gbm.max_rounds", "gbm.patience"};
  for (const auto& e : file.entries()) {
    if (kKnown.count(e.key) == 0 && e.key.rfind("group.", 0) != 0 &&
        e.key.rfind("description.", 0) != 0) {
      throw Error(file.source() + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  RunConfig c;
  if (auto v = file.get("internal_csv")) c.internal_csv = resolve(base_dir, *v);
  if (auto v = file.get("external_csv"); v && !v->empty()) c.external_csv = resolve(base_dir, *v);
  if (auto v = file.get_list("targets")) c.targets = *v;
  if (auto v = file.get_int("seed")) {
    if (*v < 0) throw Error("config: seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = file.get("output_dir")) c.output_dir = resolve(base_dir, *v);
  if (auto v = file.get_double("auroc_floor")) c.auroc_floor = *v;
  if (auto v = file.get_int("bootstrap.iterations")) {
    if (*v <= 0) throw Error("config: bootstrap.iterations must be positive");
    c.bootstrap_iterations = static_cast<std::size_t>(*v);
  }
  if (auto v = file.get_double("gbm.learning_rate")) c.train.learning_rate = *v;
  if (auto v = file.get_int("gbm.max_depth")) c.train.max_depth = static_cast<int>(*v);
  if (auto v = file.get_double("gbm.reg_lambda")) c.train.reg_lambda = *v;
  if (auto v = file.get_double("gbm.gamma")) c.train.gamma = *v;
  if (auto v = file.get_double("gbm.min_child_weight")) c.train.min_child_weight = *v;
  if (auto v = file.get_int("gbm.max_rounds")) c.train.max_rounds = static_cast<int>(*v);
  if (auto v = file.get_int("gbm.patience")) c.train.patience = static_cast<int>(*v);
  for (const auto& e : file.with_prefix("group.")) c.groups[e.key.substr(6)] = e.value;
  for (const auto& e : file.with_prefix("description.")) {
    c.descriptions[e.key.substr(12)] = e.value;
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(KeyValueFile::load(path), path.parent_path());
}

std::string model_filename(const std::string& code) { return "model_" + code + "_internal.json"; }
std::string trainlog_filename(const std::string& code) {
  return "trainlog_" + code + "_internal.tsv";
}
std::string explanations_filename(const std::string& code) {
  return "explanations_" + code + "_internal.csv";
}
std::string beeswarm_filename(const std::string& code) {
  return "beeswarm_" + code + "_internal.svg";
}

bool passes_floor(const TargetOutcome& outcome, double floor) {
  if (!outcome.ok || !outcome.internal) return false;
  if (!(outcome.internal->auroc > floor)) return false;
  return !outcome.external || outcome.external->auroc > floor;
}

RunResult run_pipeline(const RunConfig& config, const RunOptions& options) {
  config.validate();
  Logger log(options.log);
  const fs::path& out = config.output_dir;
  fs::create_directories(out);
  for (const auto& code : config.targets) {
    for (const auto& name : {model_filename(code), trainlog_filename(code),
                             explanations_filename(code), beeswarm_filename(code)}) {
      refuse_overwrite(out / name, options.force);
    }
  }
  for (const char* name : {kReportCsvName, kReportMarkdownName, kSummaryName, kFoldsName}) {
    refuse_overwrite(out / name, options.force);
  }

  RunResult result;
  result.targets.resize(config.targets.size());
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    result.targets[i].target = config.targets[i];
  }

  // Targets whose label column is absent are reported per target.
  const auto internal_columns = read_target_columns(config.internal_csv);
  std::vector<std::string> external_columns;
  if (config.external_csv) external_columns = read_target_columns(*config.external_csv);
  auto has = [](const std::vector<std::string>& v, const std::string& c) {
    return std::find(v.begin(), v.end(), c) != v.end();
  };
  std::vector<std::string> usable;
  for (auto& o : result.targets) {
    if (!has(internal_columns, o.target)) {
      o.error = "no column " + std::string(kTargetColumnPrefix) + o.target + " in internal cohort";
    } else if (config.external_csv && !has(external_columns, o.target)) {
      o.error = "no column " + std::string(kTargetColumnPrefix) + o.target + " in external cohort";
    } else {
      usable.push_back(o.target);
    }
  }

  const Cohort internal = load_cohort(config.internal_csv, usable);
  std::optional<Cohort> external;
  if (config.external_csv) external = load_cohort(*config.external_csv, usable);
  log.line("internal cohort: " + std::to_string(internal.size()) + " samples");
  if (external) log.line("external cohort: " + std::to_string(external->size()) + " samples");

  const FoldAssignment folds = stratified_split(internal, config.seed);
  {
    std::ostringstream os;
    write_fold_csv(folds, os);
    write_text(out / kFoldsName, os.str());
  }
  const Cohort train = materialize(internal, folds, FoldRole::kTrain);
  const Cohort valid = materialize(internal, folds, FoldRole::kValidation);
  const Cohort test = materialize(internal, folds, FoldRole::kTest);
  log.line("split: train " + std::to_string(train.size()) + ", validation " +
           std::to_string(valid.size()) + ", test " + std::to_string(test.size()));

  auto process = [&](TargetOutcome& o) {
    const std::size_t t = *internal.target_index(o.target);
    const std::uint64_t seed = derive_seed(config.seed, fnv1a(o.target));
    TrainConfig train_config = config.train;
    train_config.seed = seed;
    TrainLog train_log;
    const TreeEnsemble model = fit(train.labeled(t), valid.labeled(t), train_config, &train_log);
    save_model(model, out / model_filename(o.target));
    write_text(out / trainlog_filename(o.target), format_train_log(train_log));
    o.best_iteration = model.best_iteration;

    o.internal = evaluate(model, test, t, DatasetTag::kInternal, config.bootstrap_iterations,
                          derive_seed(seed, 1));
    if (external) {
      const std::size_t te = *external->target_index(o.target);
      o.external = evaluate(model, *external, te, DatasetTag::kExternal,
                            config.bootstrap_iterations, derive_seed(seed, 2));
    }

    const auto explanations = explain_set(model, test);
    write_explanations_csv(out / explanations_filename(o.target), sample_ids(test),
                           internal.schema().names(), explanations);
    render_svg(beeswarm(explanations, test), out / beeswarm_filename(o.target));
    o.ok = true;
    o.pass = passes_floor(o, config.auroc_floor);
  };

  std::vector<TargetOutcome*> queue;
  for (auto& o : result.targets) {
    if (o.error.empty()) queue.push_back(&o);
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < queue.size(); k = next++) {
      TargetOutcome& o = *queue[k];
      try {
        process(o);
        log.line(o.target + ": best_iteration " + std::to_string(o.best_iteration) +
                 ", internal AUROC " + format_fixed(o.internal->auroc, 4) +
                 (o.external ? ", external AUROC " + format_fixed(o.external->auroc, 4) : "") +
                 (o.pass ? " [pass]" : " [fail]"));
      } catch (const std::exception& e) {
        o.ok = false;
        o.pass = false;
        o.internal.reset();
        o.external.reset();
        o.error = e.what();
      }
    }
  };
  const unsigned jobs = std::clamp<unsigned>(options.jobs == 0 ? 1 : options.jobs, 1,
                                             static_cast<unsigned>(std::max<std::size_t>(
                                                 queue.size(), 1)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<MetricReport> reports;
  std::size_t failed = 0;
  for (const auto& o : result.targets) {
    if (!o.ok) {
      ++failed;
      log.line(o.target + ": error: " + o.error);
      continue;
    }
    reports.push_back(*o.internal);
    if (o.external) reports.push_back(*o.external);
  }
  const ReportTables tables = report_table(reports, config.groups, config.descriptions);
  for (const auto& w : tables.warnings) log.line("warning: " + w);
  write_text(out / kReportCsvName, tables.csv);
  write_text(out / kReportMarkdownName, tables.markdown);
  write_text(out / kSummaryName, format_summary(result.targets));

  if (failed == 0) {
    result.exit_code = kExitOk;
  } else if (failed == result.targets.size()) {
    result.exit_code = kExitFailure;
  } else {
    result.exit_code = kExitPartial;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Command wrappers

int cmd_run(const fs::path& config_path, std::optional<std::uint64_t> seed,
            std::optional<fs::path> out_dir, const RunOptions& options) {
  std::ostream& log = options.log ? *options.log : std::clog;
  try {
    RunConfig config = load_run_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    return run_pipeline(config, options).exit_code;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_csv,
              std::optional<std::uint64_t> seed, bool force, std::ostream& log) {
  try {
    refuse_overwrite(out_csv, force);
    SynthSpec spec = parse_synth_spec(KeyValueFile::load(spec_path));
    if (seed) spec.seed = *seed;
    const Cohort cohort = generate_synth(spec);
    save_cohort(cohort, out_csv);
    log << "wrote " << cohort.size() << " samples to " << out_csv.string() << '\n';
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_stats(const fs::path& csv, std::optional<fs::path> out_dir, bool force,
              std::ostream& out, std::ostream& log) {
  try {
    const Cohort cohort = load_cohort(csv);
    const DescriptiveStats stats = descriptive_stats(cohort);
    const std::string markdown = format_stats_markdown(stats);
    out << markdown;
    if (out_dir) {
      fs::create_directories(*out_dir);
      refuse_overwrite(*out_dir / "stats.md", force);
      refuse_overwrite(*out_dir / "stats.csv", force);
      write_text(*out_dir / "stats.md", markdown);
      write_text(*out_dir / "stats.csv", format_stats_csv(stats));
    }
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_split(const fs::path& csv, std::uint64_t seed, const fs::path& out_csv, bool force,
              std::ostream& out, std::ostream& log) {
  try {
    refuse_overwrite(out_csv, force);
    const Cohort cohort = load_cohort(csv);
    const FoldAssignment folds = stratified_split(cohort, seed);
    std::ostringstream os;
    write_fold_csv(folds, os);
    write_text(out_csv, os.str());
    for (FoldRole role : {FoldRole::kTrain, FoldRole::kValidation, FoldRole::kTest}) {
      out << role_name(role) << ' ' << folds.role_size(role) << '\n';
    }
    for (const auto& t : folds.unsplittable_targets()) {
      log << "warning: target " << t << " could not be spread over all folds\n";
    }
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int cmd_explain(const fs::path& model_path, const fs::path& csv, const fs::path& out_csv,
                std::optional<fs::path> folds_csv, const std::string& role, bool force,
                unsigned jobs, std::ostream& log) {
  try {
    refuse_overwrite(out_csv, force);
    const TreeEnsemble model = load_model(model_path);
    Cohort cohort = load_cohort(csv);
    if (folds_csv) {
      if (role != "train" && role != "validation" && role != "test") {
        throw Error("role must be train, validation or test");
      }
      const auto roles = read_fold_roles(*folds_csv);
      std::vector<std::size_t> keep;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        auto it = roles.find(cohort.sample(i).id);
        if (it == roles.end()) {
          throw Error("sample " + cohort.sample(i).id + " is missing from " + folds_csv->string());
        }
        if (it->second == role) keep.push_back(i);
      }
      cohort = cohort.subset(keep);
    }
    const auto explanations = explain_set(model, cohort, jobs);
    write_explanations_csv(out_csv, sample_ids(cohort), cohort.schema().names(), explanations);
    log << "explained " << explanations.size() << " samples\n";
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace ecgdx
