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

#ifndef ECGDX_SHAP_H_
#define ECGDX_SHAP_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecgdx/cohort.h"
#include "ecgdx/gbm.h"
#include "ecgdx/matrix.h"

namespace ecgdx {

// Attributions in margin (log-odds) space. base_value + sum(phi) == margin.
struct Explanation {
  double base_value = 0.0;
  std::vector<double> phi;
  double margin = 0.0;
};

// Cover-weighted expected margin: base_margin plus, per tree, the mean leaf
// value weighted by the training cover of each root-to-leaf path.
double expected_margin(const TreeEnsemble& ensemble);

// Path-dependent TreeSHAP (recursive extend/unwind form). Throws Error if
// the ensemble has no cover metadata or the sample length is wrong.
Explanation tree_shap(const TreeEnsemble& ensemble, std::span<const double> sample);

inline constexpr std::size_t kMaxBruteForceFeatures = 15;

// Exact Shapley values by enumerating all 2^M coalitions of the
// path-dependent value function. Throws Error when M > 15.
Explanation brute_force_shapley(const TreeEnsemble& ensemble, std::span<const double> sample);

// Reusable explainer. For each leaf it tabulates the attributions for every
// subset of the path features the sample agrees with, so one explanation
// costs a single tree walk. Falls back to tree_shap when the tables would be
// too large.
class TreeExplainer {
 public:
  explicit TreeExplainer(const TreeEnsemble& ensemble);

  Explanation explain(std::span<const double> sample) const;
  // Rows [begin, end) of `x` into out[0, end - begin), visiting one tree at
  // a time over the whole block.
  void explain_rows(const FeatureMatrix& x, std::size_t begin, std::size_t end,
                    std::span<Explanation> out) const;
  bool tabulated() const { return tabulated_; }
  double base_value() const { return base_value_; }

 private:
  static constexpr int kMaxPathFeatures = 16;
  struct Node {
    int feature = -1;
    int left = -1;
    int right = -1;
    int leaf = -1;
    double threshold = 0.0;
    bool default_left = true;
  };
  struct Leaf {
    std::size_t offset = 0;
    int size = 0;
    std::uint8_t features[kMaxPathFeatures] = {};
    double value = 0.0;
  };
  struct TreeTable {
    std::vector<Node> nodes;
    std::vector<Leaf> leaves;
  };

  void walk(const TreeTable& table, int index, std::uint64_t disagree, const double* x,
            double* phi, double& margin) const;

  const TreeEnsemble* ensemble_;
  double base_value_ = 0.0;
  bool tabulated_ = false;
  std::vector<TreeTable> trees_;
  std::vector<double> values_;
};

// One explanation per row, in row order. Rows are split across
// `num_threads` workers (0 = hardware concurrency).
std::vector<Explanation> explain_set(const TreeEnsemble& ensemble, const FeatureMatrix& x,
                                     unsigned num_threads = 1);
std::vector<Explanation> explain_set(const TreeEnsemble& ensemble, const Cohort& cohort,
                                     unsigned num_threads = 1);

// CSV: sample_id, phi_<feature>..., base_value, margin.
std::string format_explanations_csv(std::span<const std::string> sample_ids,
                                    std::span<const std::string> feature_names,
                                    std::span<const Explanation> explanations);
void write_explanations_csv(const std::filesystem::path& path,
                            std::span<const std::string> sample_ids,
                            std::span<const std::string> feature_names,
                            std::span<const Explanation> explanations);

// Beeswarm summary figure.

struct BeeswarmPoint {
  std::size_t sample = 0;
  double x = 0.0;       // phi
  double jitter = 0.0;  // vertical offset in row units, |jitter| <= kMaxJitter
  double color = 0.5;   // percentile-normalized feature value in [0, 1]
  bool missing = false;
};

struct BeeswarmRow {
  std::size_t feature = 0;
  std::string label;
  double mean_abs_phi = 0.0;
  std::vector<BeeswarmPoint> points;
};

struct BeeswarmLayout {
  std::vector<BeeswarmRow> rows;  // descending mean |phi|, ties by feature index

  std::size_t point_count() const;
};

inline constexpr double kMaxJitter = 0.45;
inline constexpr int kJitterBins = 100;

// `labels` gives the row captions (defaults to the matrix feature names).
// Throws Error if the explanations do not match the matrix shape.
BeeswarmLayout beeswarm(std::span<const Explanation> explanations, const FeatureMatrix& x,
                        std::span<const std::string> labels = {});
// Row captions use the schema display names.
BeeswarmLayout beeswarm(std::span<const Explanation> explanations, const Cohort& cohort);

std::string render_svg(const BeeswarmLayout& layout);
void render_svg(const BeeswarmLayout& layout, const std::filesystem::path& path);

}  // namespace ecgdx

#endif  // ECGDX_SHAP_H_
