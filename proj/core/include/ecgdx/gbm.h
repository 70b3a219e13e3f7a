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

#ifndef ECGDX_GBM_H_
#define ECGDX_GBM_H_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgdx/common.h"
#include "ecgdx/matrix.h"

namespace ecgdx {

struct TrainConfig {
  double learning_rate = 0.1;
  int max_depth = 6;
  double reg_lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  int max_rounds = 1000;
  int patience = 10;
  std::uint64_t seed = 0;

  // Throws Error when a bound is violated.
  void validate() const;
};

struct GradHess {
  double grad = 0.0;
  double hess = 0.0;
};

inline constexpr double kHessianFloor = 1e-16;

// First and second derivative of the binary log-loss w.r.t. the margin.
GradHess logistic_grad_hess(double margin, int label);

// Binary log-loss log(1 + exp(m)) - y * m, evaluated without overflow.
double logistic_loss(double margin, int label);

// Margin is clamped to [-36, 36] so the result lies strictly inside (0, 1).
double sigmoid(double margin);

struct TreeNode {
  // Internal nodes: feature >= 0. Samples with value < threshold go left;
  // missing values follow default_left.
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  int left = -1;
  int right = -1;
  // Leaf margin contribution (already scaled by the learning rate).
  double leaf_value = 0.0;
  // Training statistics recorded at fit time. cover = number of training
  // samples reaching the node; NaN when unknown (e.g. hand-built trees).
  double cover = kMissing;
  double sum_grad = kMissing;
  double sum_hess = kMissing;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() : nodes_(1) {}
  explicit Tree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes_.size(); }

  int leaf_index(std::span<const double> x) const;
  double evaluate(std::span<const double> x) const { return nodes_[leaf_index(x)].leaf_value; }
  int depth() const;
  bool has_cover() const;
  int max_feature() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeEnsemble {
  double base_margin = 0.0;
  std::vector<Tree> trees;
  // Number of leading trees used for prediction.
  std::size_t best_iteration = 0;
  std::vector<std::string> feature_names;
  std::string fingerprint;
  TrainConfig config;

  std::size_t num_features() const { return feature_names.size(); }
  std::span<const Tree> active_trees() const {
    return std::span<const Tree>(trees).first(std::min(best_iteration, trees.size()));
  }
  bool has_cover() const;
};

struct RoundRecord {
  int round = 0;  // 1-based; equals the number of trees after the round
  double train_loss = 0.0;
  double valid_auroc = 0.0;
};

struct TrainLog {
  std::vector<RoundRecord> rounds;
  std::size_t best_iteration = 0;
};

// Second-order boosting of depth-wise exact-greedy trees on the logistic loss
// with AUROC early stopping on `valid`. Returned trees are truncated to
// best_iteration. Throws Error on single-class labels or schema mismatch.
TreeEnsemble fit(const LabeledData& train, const LabeledData& valid, const TrainConfig& config,
                 TrainLog* log = nullptr);

// Throws Error if the sample length differs from the ensemble's feature count.
double predict_margin(const TreeEnsemble& ensemble, std::span<const double> sample);
double predict_proba(const TreeEnsemble& ensemble, std::span<const double> sample);
// Throws Error if the matrix fingerprint differs from the ensemble's.
std::vector<double> predict_margins(const TreeEnsemble& ensemble, const FeatureMatrix& x);

// JSON model persistence.
inline constexpr std::string_view kModelFormatVersion = "ecgdx-gbm/1";
std::string serialize_model(const TreeEnsemble& ensemble);
TreeEnsemble parse_model(std::string_view json_text);
void save_model(const TreeEnsemble& ensemble, const std::filesystem::path& path);
TreeEnsemble load_model(const std::filesystem::path& path);

// Per-round TSV log: round, train_loss, valid_auroc.
std::string format_train_log(const TrainLog& log);
TrainLog parse_train_log(std::string_view tsv);

}  // namespace ecgdx

#endif  // ECGDX_GBM_H_
