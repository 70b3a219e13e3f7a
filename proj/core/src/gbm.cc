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

#include "ecgdx/gbm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ecgdx/metrics.h"

namespace ecgdx {

namespace {

constexpr double kMarginClamp = 36.0;
constexpr double kImprovementEpsilon = 1e-9;

double raw_sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("train config: learning_rate must be positive");
  }
  if (max_depth < 1) throw Error("train config: max_depth must be positive");
  if (!(reg_lambda >= 0.0) || !std::isfinite(reg_lambda)) {
    throw Error("train config: reg_lambda must be non-negative");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error("train config: gamma must be non-negative");
  }
  if (!(min_child_weight >= 0.0) || !std::isfinite(min_child_weight)) {
    throw Error("train config: min_child_weight must be non-negative");
  }
  if (max_rounds < 1) throw Error("train config: max_rounds must be positive");
  if (patience < 1) throw Error("train config: patience must be positive");
  if (patience > max_rounds) throw Error("train config: patience exceeds max_rounds");
}

GradHess logistic_grad_hess(double margin, int label) {
  const double p = raw_sigmoid(margin);
  return GradHess{p - static_cast<double>(label), std::max(p * (1.0 - p), kHessianFloor)};
}

double logistic_loss(double margin, int label) {
  // softplus(m) = max(m, 0) + log1p(exp(-|m|))
  const double softplus = std::max(margin, 0.0) + std::log1p(std::exp(-std::abs(margin)));
  return softplus - static_cast<double>(label) * margin;
}

double sigmoid(double margin) {
  return raw_sigmoid(std::clamp(margin, -kMarginClamp, kMarginClamp));
}

// ---------------------------------------------------------------------------
// Tree

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("tree must have at least one node");
  // Children must follow their parent, which also rules out cycles.
  const int size = static_cast<int>(nodes_.size());
  for (int i = 0; i < size; ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) continue;
    if (node.left <= i || node.left >= size || node.right <= i || node.right >= size ||
        node.left == node.right) {
      throw Error("tree node " + std::to_string(i) + " has invalid children");
    }
  }
}

int Tree::leaf_index(std::span<const double> x) const {
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    const double v = x[static_cast<std::size_t>(node.feature)];
    const bool go_left = is_missing(v) ? node.default_left : v < node.threshold;
    i = go_left ? node.left : node.right;
  }
  return i;
}

int Tree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int deepest = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.is_leaf()) {
      deepest = std::max(deepest, depth[i]);
      continue;
    }
    depth[node.left] = depth[i] + 1;
    depth[node.right] = depth[i] + 1;
  }
  return deepest;
}

bool Tree::has_cover() const {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const TreeNode& n) {
    return std::isfinite(n.cover) && n.cover > 0.0;
  });
}

int Tree::max_feature() const {
  int m = -1;
  for (const auto& node : nodes_) m = std::max(m, node.feature);
  return m;
}

bool TreeEnsemble::has_cover() const {
  return std::all_of(trees.begin(), trees.end(), [](const Tree& t) { return t.has_cover(); });
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct SortedEntry {
  double value;
  std::uint32_t row;
};

struct NodeStats {
  double grad = 0.0;
  double hess = 0.0;
  double count = 0.0;
};

struct SplitCandidate {
  double gain = 0.0;  // net of gamma; only candidates with gain > 0 are kept
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  NodeStats left;
  NodeStats right;
};

// Per-feature presorted columns, computed once per fit.
struct ColumnIndex {
  std::vector<std::vector<SortedEntry>> present;
  std::vector<std::vector<std::uint32_t>> missing;
};

ColumnIndex build_column_index(const FeatureMatrix& x) {
  ColumnIndex index;
  index.present.resize(x.cols());
  index.missing.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& column = index.present[f];
    column.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double v = x(r, f);
      if (is_missing(v)) {
        index.missing[f].push_back(static_cast<std::uint32_t>(r));
      } else {
        column.push_back({v, static_cast<std::uint32_t>(r)});
      }
    }
    std::stable_sort(column.begin(), column.end(),
                     [](const SortedEntry& a, const SortedEntry& b) { return a.value < b.value; });
  }
  return index;
}

double leaf_weight(const NodeStats& s, const TrainConfig& config) {
  return -s.grad / (s.hess + config.reg_lambda) * config.learning_rate;
}

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

// Midpoint strictly above `lo` and not above `hi`, so `lo` routes left and
// `hi` routes right under the `value < threshold` rule.
double split_threshold(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid > lo) || mid > hi) mid = hi;
  return mid;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const ColumnIndex& columns, const TrainConfig& config)
      : x_(x), columns_(columns), config_(config), node_of_(x.rows()) {}

  Tree build(std::span<const GradHess> gh) {
    std::vector<TreeNode> nodes(1);
    std::fill(node_of_.begin(), node_of_.end(), 0);

    NodeStats root;
    for (const auto& v : gh) {
      root.grad += v.grad;
      root.hess += v.hess;
    }
    root.count = static_cast<double>(gh.size());
    set_stats(nodes[0], root);
    std::vector<NodeStats> stats{root};

    std::vector<int> frontier{0};
    for (int depth = 0; depth < config_.max_depth && !frontier.empty(); ++depth) {
      std::vector<int> slot_of_node(nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_node[frontier[s]] = static_cast<int>(s);

      std::vector<SplitCandidate> best(frontier.size());
      for (std::size_t f = 0; f < x_.cols(); ++f) {
        search_feature(f, gh, frontier, slot_of_node, stats, best);
      }

      std::vector<int> next;
      std::vector<int> split_slot(nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const SplitCandidate& c = best[s];
        if (c.feature < 0) continue;
        const int id = frontier[s];
        const int left = static_cast<int>(nodes.size());
        const int right = left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        stats.push_back(c.left);
        stats.push_back(c.right);
        set_stats(nodes[left], c.left);
        set_stats(nodes[right], c.right);
        TreeNode& node = nodes[id];
        node.feature = c.feature;
        node.threshold = c.threshold;
        node.default_left = c.default_left;
        node.left = left;
        node.right = right;
        node.leaf_value = 0.0;
        split_slot[id] = static_cast<int>(s);
        next.push_back(left);
        next.push_back(right);
      }
      if (next.empty()) break;

      for (std::size_t r = 0; r < node_of_.size(); ++r) {
        const int id = node_of_[r];
        if (split_slot[id] < 0) continue;
        const TreeNode& node = nodes[id];
        const double v = x_(r, static_cast<std::size_t>(node.feature));
        const bool go_left = is_missing(v) ? node.default_left : v < node.threshold;
        node_of_[r] = go_left ? node.left : node.right;
      }
      frontier = std::move(next);
    }
    return Tree(std::move(nodes));
  }

  // Leaf reached by each training row in the last built tree.
  std::span<const int> leaf_of_rows() const { return node_of_; }

 private:
  void set_stats(TreeNode& node, const NodeStats& s) const {
    node.sum_grad = s.grad;
    node.sum_hess = s.hess;
    node.cover = s.count;
    node.leaf_value = leaf_weight(s, config_);
  }

  void search_feature(std::size_t f, std::span<const GradHess> gh, const std::vector<int>& frontier,
                      const std::vector<int>& slot_of_node, const std::vector<NodeStats>& stats,
                      std::vector<SplitCandidate>& best) {
    const std::size_t slots = frontier.size();
    missing_.assign(slots, NodeStats{});
    for (auto r : columns_.missing[f]) {
      const int s = slot_of_node[node_of_[r]];
      if (s < 0) continue;
      missing_[s].grad += gh[r].grad;
      missing_[s].hess += gh[r].hess;
      missing_[s].count += 1.0;
    }
    acc_.assign(slots, NodeStats{});
    last_.assign(slots, 0.0);
    seen_.assign(slots, 0);

    const double lambda = config_.reg_lambda;
    const double min_child = config_.min_child_weight;
    for (const auto& entry : columns_.present[f]) {
      const int s = slot_of_node[node_of_[entry.row]];
      if (s < 0) continue;
      NodeStats& acc = acc_[s];
      if (seen_[s] && entry.value > last_[s]) {
        const NodeStats& total = stats[frontier[s]];
        const NodeStats& miss = missing_[s];
        const double parent = score(total.grad, total.hess, lambda);
        // Missing values routed left, then right.
        for (int option = 0; option < 2; ++option) {
          const bool missing_left = option == 0;
          NodeStats left = acc;
          if (missing_left) {
            left.grad += miss.grad;
            left.hess += miss.hess;
            left.count += miss.count;
          }
          const NodeStats right{total.grad - left.grad, total.hess - left.hess,
                                total.count - left.count};
          if (left.hess < min_child || right.hess < min_child) continue;
          const double gain = 0.5 * (score(left.grad, left.hess, lambda) +
                                     score(right.grad, right.hess, lambda) - parent) -
                              config_.gamma;
          if (!(gain > best[s].gain)) continue;
          SplitCandidate& c = best[s];
          c.gain = gain;
          c.feature = static_cast<int>(f);
          c.threshold = split_threshold(last_[s], entry.value);
          c.left = left;
          c.right = right;
          if (miss.count > 0.0) {
            c.default_left = missing_left;
          } else {
            // No missing values seen here: default to the larger child.
            c.default_left = left.count >= right.count;
          }
        }
      }
      acc.grad += gh[entry.row].grad;
      acc.hess += gh[entry.row].hess;
      acc.count += 1.0;
      last_[s] = entry.value;
      seen_[s] = 1;
    }
  }

  const FeatureMatrix& x_;
  const ColumnIndex& columns_;
  const TrainConfig& config_;
  std::vector<int> node_of_;
  std::vector<NodeStats> missing_;
  std::vector<NodeStats> acc_;
  std::vector<double> last_;
  std::vector<char> seen_;
};

void check_labels(std::span<const std::uint8_t> y, const char* what) {
  for (auto v : y) {
    if (v > 1) throw Error(std::string(what) + " labels must be 0 or 1");
  }
}

}  // namespace

TreeEnsemble fit(const LabeledData& train, const LabeledData& valid, const TrainConfig& config,
                 TrainLog* log) {
  config.validate();
  const std::size_t n = train.x.rows();
  if (n == 0) throw Error("fit: empty training set");
  if (valid.x.rows() == 0) throw Error("fit: empty validation set");
  if (train.y.size() != n || valid.y.size() != valid.x.rows()) {
    throw Error("fit: label count does not match row count");
  }
  if (train.x.fingerprint() != valid.x.fingerprint()) {
    throw Error("fit: training and validation schemas differ");
  }
  if (n > std::numeric_limits<std::uint32_t>::max()) throw Error("fit: too many rows");
  check_labels(train.y, "training");
  check_labels(valid.y, "validation");

  const double train_prevalence = prevalence(train.y);
  if (train_prevalence == 0.0 || train_prevalence == 1.0) {
    throw Error("fit: training labels contain a single class");
  }
  const double valid_prevalence = prevalence(valid.y);
  if (valid_prevalence == 0.0 || valid_prevalence == 1.0) {
    throw Error("fit: validation labels contain a single class; AUROC early stopping needs both");
  }

  TreeEnsemble ensemble;
  ensemble.base_margin = std::log(train_prevalence / (1.0 - train_prevalence));
  ensemble.feature_names = train.x.feature_names();
  ensemble.fingerprint = train.x.fingerprint();
  ensemble.config = config;

  const ColumnIndex columns = build_column_index(train.x);
  TreeBuilder builder(train.x, columns, config);

  std::vector<double> train_margin(n, ensemble.base_margin);
  std::vector<double> valid_margin(valid.x.rows(), ensemble.base_margin);
  std::vector<GradHess> gh(n);

  TrainLog local_log;
  double best_auroc = -std::numeric_limits<double>::infinity();
  std::size_t best_iteration = 0;
  int since_best = 0;

  for (int round = 1; round <= config.max_rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) gh[r] = logistic_grad_hess(train_margin[r], train.y[r]);

    Tree tree = builder.build(gh);
    const auto leaves = builder.leaf_of_rows();
    double loss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      train_margin[r] += tree.node(leaves[r]).leaf_value;
      loss += logistic_loss(train_margin[r], train.y[r]);
    }
    for (std::size_t r = 0; r < valid_margin.size(); ++r) {
      valid_margin[r] += tree.evaluate(valid.x.row(r));
    }
    ensemble.trees.push_back(std::move(tree));

    const double valid_auroc = auroc(valid_margin, valid.y);
    local_log.rounds.push_back({round, loss / static_cast<double>(n), valid_auroc});
    if (valid_auroc > best_auroc + kImprovementEpsilon) {
      best_auroc = valid_auroc;
      best_iteration = static_cast<std::size_t>(round);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  ensemble.trees.resize(best_iteration);
  ensemble.best_iteration = best_iteration;
  local_log.best_iteration = best_iteration;
  if (log != nullptr) *log = std::move(local_log);
  return ensemble;
}

double predict_margin(const TreeEnsemble& ensemble, std::span<const double> sample) {
  if (sample.size() != ensemble.num_features()) {
    throw Error("predict: sample has " + std::to_string(sample.size()) +
                " features, model expects " + std::to_string(ensemble.num_features()));
  }
  double margin = ensemble.base_margin;
  for (const auto& tree : ensemble.active_trees()) margin += tree.evaluate(sample);
  return margin;
}

double predict_proba(const TreeEnsemble& ensemble, std::span<const double> sample) {
  return sigmoid(predict_margin(ensemble, sample));
}

std::vector<double> predict_margins(const TreeEnsemble& ensemble, const FeatureMatrix& x) {
  if (x.fingerprint() != ensemble.fingerprint) {
    throw Error("predict: feature schema does not match the model");
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_margin(ensemble, x.row(r));
  return out;
}

}  // namespace ecgdx
