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

#include "ecgdx/shap.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace ecgdx {

namespace {

bool goes_left(const TreeNode& node, std::span<const double> x) {
  const double v = x[static_cast<std::size_t>(node.feature)];
  return is_missing(v) ? node.default_left : v < node.threshold;
}

void check_explainable(const TreeEnsemble& ensemble, std::span<const double> sample) {
  if (!ensemble.has_cover()) {
    throw Error("shap: ensemble lacks per-node cover metadata");
  }
  if (sample.size() != ensemble.num_features()) {
    throw Error("shap: sample has " + std::to_string(sample.size()) + " features, model expects " +
                std::to_string(ensemble.num_features()));
  }
}

double tree_expectation(const Tree& tree, int index) {
  const TreeNode& node = tree.node(index);
  if (node.is_leaf()) return node.leaf_value;
  const double l = tree.node(node.left).cover;
  const double r = tree.node(node.right).cover;
  return (l * tree_expectation(tree, node.left) + r * tree_expectation(tree, node.right)) /
         node.cover;
}

// ---------------------------------------------------------------------------
// Recursive path-dependent TreeSHAP.

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one_fraction * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * ((depth - i) / static_cast<double>(depth + 1));
    } else if (zero != 0.0) {
      total += (path[i].weight / zero) / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

void tree_shap_recursive(const Tree& tree, std::span<const double> x, double* phi, int index,
                         int depth, PathElement* parent_path, double zero_fraction,
                         double one_fraction, int feature) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, zero_fraction, one_fraction, feature);

  const TreeNode& node = tree.node(index);
  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_path_sum(path, depth, i);
      const PathElement& e = path[i];
      phi[e.feature] += w * (e.one_fraction - e.zero_fraction) * node.leaf_value;
    }
    return;
  }

  const bool left = goes_left(node, x);
  const int hot = left ? node.left : node.right;
  const int cold = left ? node.right : node.left;
  const double hot_zero = tree.node(hot).cover / node.cover;
  const double cold_zero = tree.node(cold).cover / node.cover;
  double incoming_zero = 1.0;
  double incoming_one = 1.0;

  // A feature seen earlier on the path is unwound and re-extended with the
  // combined fractions.
  int k = 0;
  for (; k <= depth; ++k) {
    if (path[k].feature == node.feature) break;
  }
  if (k != depth + 1) {
    incoming_zero = path[k].zero_fraction;
    incoming_one = path[k].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }
  tree_shap_recursive(tree, x, phi, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one,
                      node.feature);
  tree_shap_recursive(tree, x, phi, cold, depth + 1, path, cold_zero * incoming_zero, 0.0,
                      node.feature);
}

// ---------------------------------------------------------------------------
// Coalition value for the brute-force oracle.

double coalition_value(const Tree& tree, int index, std::span<const double> x,
                       std::uint32_t coalition) {
  const TreeNode& node = tree.node(index);
  if (node.is_leaf()) return node.leaf_value;
  if ((coalition >> node.feature) & 1U) {
    return coalition_value(tree, goes_left(node, x) ? node.left : node.right, x, coalition);
  }
  const double l = tree.node(node.left).cover;
  const double r = tree.node(node.right).cover;
  return (l * coalition_value(tree, node.left, x, coalition) +
          r * coalition_value(tree, node.right, x, coalition)) /
         node.cover;
}

// Shapley weight |S|! (M - |S| - 1)! / M!.
std::vector<double> shapley_weights(int m) {
  std::vector<double> w(static_cast<std::size_t>(std::max(m, 1)));
  for (int s = 0; s < m; ++s) {
    double v = 1.0 / m;
    // 1 / (M * C(M-1, s))
    for (int j = 1; j <= s; ++j) v *= static_cast<double>(j) / static_cast<double>(m - j);
    w[static_cast<std::size_t>(s)] = v;
  }
  return w;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

constexpr std::size_t kMaxTableEntries = std::size_t{1} << 24;
constexpr int kMaxTabulatedPathFeatures = 16;
constexpr std::size_t kMaxTabulatedFeatures = 64;

// Attribution table for one leaf whose path carries features with combined
// cover fractions `zero`. Entry [mask * d + i] is phi_i when the sample
// agrees with the path on exactly the features in `mask`.
void fill_leaf_table(std::span<const double> zero, double value, double* out) {
  const int d = static_cast<int>(zero.size());
  const auto w = shapley_weights(d);
  std::vector<double> poly(static_cast<std::size_t>(d) + 1);
  for (std::uint32_t mask = 0; mask < (1U << d); ++mask) {
    for (int i = 0; i < d; ++i) {
      // Coefficient k: sum over S of size k inside mask \ {i} of the product
      // of zero fractions of the remaining features.
      std::fill(poly.begin(), poly.end(), 0.0);
      poly[0] = 1.0;
      int terms = 0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        const double z = zero[static_cast<std::size_t>(j)];
        if ((mask >> j) & 1U) {
          for (int k = terms + 1; k >= 1; --k) poly[k] = poly[k] * z + poly[k - 1];
          poly[0] *= z;
          ++terms;
        } else {
          for (int k = 0; k <= terms; ++k) poly[k] *= z;
        }
      }
      double g = 0.0;
      for (int k = 0; k <= terms; ++k) g += w[static_cast<std::size_t>(k)] * poly[k];
      const double one = ((mask >> i) & 1U) ? 1.0 : 0.0;
      out[mask * static_cast<std::uint32_t>(d) + static_cast<std::uint32_t>(i)] =
          value * (one - zero[static_cast<std::size_t>(i)]) * g;
    }
  }
}

struct PathStep {
  int feature;
  double fraction;
};

void collect_leaves(const Tree& tree, int index, std::vector<PathStep>& path,
                    const std::function<void(int, const std::vector<PathStep>&)>& visit) {
  const TreeNode& node = tree.node(index);
  if (node.is_leaf()) {
    visit(index, path);
    return;
  }
  for (int child : {node.left, node.right}) {
    path.push_back({node.feature, tree.node(child).cover / node.cover});
    collect_leaves(tree, child, path, visit);
    path.pop_back();
  }
}

}  // namespace

double expected_margin(const TreeEnsemble& ensemble) {
  if (!ensemble.has_cover()) throw Error("shap: ensemble lacks per-node cover metadata");
  double base = ensemble.base_margin;
  for (const Tree& tree : ensemble.active_trees()) base += tree_expectation(tree, 0);
  return base;
}

Explanation tree_shap(const TreeEnsemble& ensemble, std::span<const double> sample) {
  check_explainable(ensemble, sample);
  Explanation out;
  out.phi.assign(ensemble.num_features(), 0.0);
  out.base_value = ensemble.base_margin;
  out.margin = ensemble.base_margin;
  std::vector<PathElement> buffer;
  for (const Tree& tree : ensemble.active_trees()) {
    const auto d = static_cast<std::size_t>(tree.depth()) + 2;
    buffer.resize(std::max(buffer.size(), d * (d + 1) / 2));
    tree_shap_recursive(tree, sample, out.phi.data(), 0, 0, buffer.data(), 1.0, 1.0, -1);
    out.base_value += tree_expectation(tree, 0);
    out.margin += tree.evaluate(sample);
  }
  return out;
}

Explanation brute_force_shapley(const TreeEnsemble& ensemble, std::span<const double> sample) {
  check_explainable(ensemble, sample);
  const std::size_t m = ensemble.num_features();
  if (m > kMaxBruteForceFeatures) {
    throw Error("brute_force_shapley: " + std::to_string(m) + " features exceed the limit of " +
                std::to_string(kMaxBruteForceFeatures));
  }
  const std::uint32_t full = (1U << m) - 1;
  std::vector<double> value(std::size_t{full} + 1, ensemble.base_margin);
  for (std::uint32_t s = 0; s <= full; ++s) {
    for (const Tree& tree : ensemble.active_trees()) {
      value[s] += coalition_value(tree, 0, sample, s);
    }
  }
  const auto w = shapley_weights(static_cast<int>(m));
  Explanation out;
  out.phi.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t bit = 1U << i;
    double phi = 0.0;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      phi += w[static_cast<std::size_t>(std::popcount(s))] * (value[s | bit] - value[s]);
    }
    out.phi[i] = phi;
  }
  out.base_value = value[0];
  out.margin = ensemble.base_margin;
  for (const Tree& tree : ensemble.active_trees()) out.margin += tree.evaluate(sample);
  return out;
}

// ---------------------------------------------------------------------------
// TreeExplainer

TreeExplainer::TreeExplainer(const TreeEnsemble& ensemble) : ensemble_(&ensemble) {
  base_value_ = expected_margin(ensemble);
  if (ensemble.num_features() > kMaxTabulatedFeatures) return;

  std::size_t entries = 0;
  std::vector<TreeTable> tables;
  std::vector<std::vector<double>> zeros;
  for (const Tree& tree : ensemble.active_trees()) {
    TreeTable table;
    table.nodes.resize(tree.size());
    bool fits = true;
    std::vector<PathStep> path;
    collect_leaves(tree, 0, path, [&](int node, const std::vector<PathStep>& steps) {
      Leaf leaf;
      std::vector<double> zero;
      for (const auto& s : steps) {
        auto* end = leaf.features + leaf.size;
        auto* it = std::find(leaf.features, end, static_cast<std::uint8_t>(s.feature));
        if (it == end) {
          if (leaf.size == kMaxPathFeatures) {
            fits = false;
            return;
          }
          leaf.features[leaf.size++] = static_cast<std::uint8_t>(s.feature);
          zero.push_back(s.fraction);
        } else {
          zero[static_cast<std::size_t>(it - leaf.features)] *= s.fraction;
        }
      }
      leaf.offset = entries;
      leaf.value = tree.node(node).leaf_value;
      entries += (std::size_t{1} << leaf.size) * static_cast<std::size_t>(leaf.size);
      table.nodes[static_cast<std::size_t>(node)].leaf = static_cast<int>(table.leaves.size());
      table.leaves.push_back(leaf);
      zeros.push_back(std::move(zero));
    });
    if (!fits || entries > kMaxTableEntries) return;
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const TreeNode& n = tree.node(static_cast<int>(i));
      Node& c = table.nodes[i];
      c.feature = n.feature;
      c.left = n.left;
      c.right = n.right;
      c.threshold = n.threshold;
      c.default_left = n.default_left;
    }
    tables.push_back(std::move(table));
  }

  values_.assign(entries, 0.0);
  std::size_t k = 0;
  for (const TreeTable& table : tables) {
    for (const Leaf& leaf : table.leaves) {
      fill_leaf_table(zeros[k++], leaf.value, values_.data() + leaf.offset);
    }
  }
  trees_ = std::move(tables);
  tabulated_ = true;
}

void TreeExplainer::walk(const TreeTable& table, int index, std::uint64_t disagree,
                         const double* x, double* phi, double& margin) const {
  const Node& node = table.nodes[static_cast<std::size_t>(index)];
  if (node.leaf >= 0) {
    const Leaf& leaf = table.leaves[static_cast<std::size_t>(node.leaf)];
    std::uint32_t mask = 0;
    for (int k = 0; k < leaf.size; ++k) {
      mask |= static_cast<std::uint32_t>(((disagree >> leaf.features[k]) & 1U) ^ 1U) << k;
    }
    const double* row =
        values_.data() + leaf.offset + std::size_t{mask} * static_cast<std::size_t>(leaf.size);
    for (int k = 0; k < leaf.size; ++k) phi[leaf.features[k]] += row[k];
    if (disagree == 0) margin += leaf.value;
    return;
  }
  const double v = x[node.feature];
  const bool left = is_missing(v) ? node.default_left : v < node.threshold;
  const std::uint64_t bit = std::uint64_t{1} << node.feature;
  walk(table, left ? node.left : node.right, disagree, x, phi, margin);
  walk(table, left ? node.right : node.left, disagree | bit, x, phi, margin);
}

Explanation TreeExplainer::explain(std::span<const double> sample) const {
  if (!tabulated_) return tree_shap(*ensemble_, sample);
  if (sample.size() != ensemble_->num_features()) {
    throw Error("shap: sample has " + std::to_string(sample.size()) + " features, model expects " +
                std::to_string(ensemble_->num_features()));
  }
  Explanation out;
  out.phi.assign(ensemble_->num_features(), 0.0);
  out.base_value = base_value_;
  out.margin = ensemble_->base_margin;
  for (const TreeTable& table : trees_) {
    walk(table, 0, 0, sample.data(), out.phi.data(), out.margin);
  }
  return out;
}

void TreeExplainer::explain_rows(const FeatureMatrix& x, std::size_t begin, std::size_t end,
                                 std::span<Explanation> out) const {
  if (x.cols() != ensemble_->num_features()) {
    throw Error("shap: data has " + std::to_string(x.cols()) + " features, model expects " +
                std::to_string(ensemble_->num_features()));
  }
  if (!tabulated_) {
    for (std::size_t r = begin; r < end; ++r) out[r - begin] = tree_shap(*ensemble_, x.row(r));
    return;
  }
  for (std::size_t r = begin; r < end; ++r) {
    Explanation& e = out[r - begin];
    e.phi.assign(x.cols(), 0.0);
    e.base_value = base_value_;
    e.margin = ensemble_->base_margin;
  }
  for (const TreeTable& table : trees_) {
    for (std::size_t r = begin; r < end; ++r) {
      Explanation& e = out[r - begin];
      walk(table, 0, 0, x.row(r).data(), e.phi.data(), e.margin);
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<Explanation> explain_set(const TreeEnsemble& ensemble, const FeatureMatrix& x,
                                     unsigned num_threads) {
  if (x.rows() == 0) return {};
  if (x.fingerprint() != ensemble.fingerprint) {
    throw Error("shap: feature schema of the data does not match the model");
  }
  const TreeExplainer explainer(ensemble);
  std::vector<Explanation> out(x.rows());
  auto run = [&](std::size_t begin, std::size_t end) {
    constexpr std::size_t kBlock = 4096;
    for (std::size_t b = begin; b < end; b += kBlock) {
      const std::size_t e = std::min(end, b + kBlock);
      explainer.explain_rows(x, b, e, std::span<Explanation>(out).subspan(b, e - b));
    }
  };
  unsigned threads = num_threads == 0 ? std::thread::hardware_concurrency() : num_threads;
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(
                                                 x.rows(), 1024)));
  if (threads == 1) {
    run(0, x.rows());
    return out;
  }
  const std::size_t chunk = (x.rows() + threads - 1) / threads;
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(x.rows(), begin + chunk);
      if (begin < end) workers.emplace_back(run, begin, end);
    }
  }
  return out;
}

std::vector<Explanation> explain_set(const TreeEnsemble& ensemble, const Cohort& cohort,
                                     unsigned num_threads) {
  if (cohort.empty()) return {};
  return explain_set(ensemble, cohort.feature_matrix(), num_threads);
}

std::string format_explanations_csv(std::span<const std::string> sample_ids,
                                    std::span<const std::string> feature_names,
                                    std::span<const Explanation> explanations) {
  if (sample_ids.size() != explanations.size()) {
    throw Error("explanations: " + std::to_string(sample_ids.size()) + " ids for " +
                std::to_string(explanations.size()) + " explanations");
  }
  std::ostringstream os;
  os << "sample_id";
  for (const auto& name : feature_names) os << ",phi_" << name;
  os << ",base_value,margin\n";
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    const Explanation& e = explanations[i];
    if (e.phi.size() != feature_names.size()) {
      throw Error("explanations: phi length does not match feature names");
    }
    os << csv_field(sample_ids[i]);
    for (double v : e.phi) os << ',' << format_shortest(v);
    os << ',' << format_shortest(e.base_value) << ',' << format_shortest(e.margin) << '\n';
  }
  return os.str();
}

void write_explanations_csv(const std::filesystem::path& path,
                            std::span<const std::string> sample_ids,
                            std::span<const std::string> feature_names,
                            std::span<const Explanation> explanations) {
  const std::string text = format_explanations_csv(sample_ids, feature_names, explanations);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace ecgdx
