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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <regex>
#include <set>

#include "ecgdx/shap.h"
#include "oracles.h"

namespace ecgdx {
namespace {

using testing::permutation_shapley;
using testing::random_ensemble;
using testing::random_sample;

TreeEnsemble stump() {
  std::vector<TreeNode> nodes(3);
  nodes[0].feature = 0;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[0].cover = 40;
  nodes[1].leaf_value = 1.0;
  nodes[1].cover = 30;
  nodes[2].leaf_value = -2.0;
  nodes[2].cover = 10;
  TreeEnsemble e;
  e.trees.emplace_back(nodes);
  e.best_iteration = 1;
  e.feature_names = {"x", "y"};
  e.fingerprint = schema_fingerprint(e.feature_names);
  return e;
}

TEST(TreeShap, WorkedStump) {
  const auto e = stump();
  const std::vector<double> x{0.2, 7.0};
  const auto r = tree_shap(e, x);
  EXPECT_DOUBLE_EQ(r.base_value, 0.25);
  EXPECT_DOUBLE_EQ(r.phi[0], 0.75);
  EXPECT_DOUBLE_EQ(r.phi[1], 0.0);
  EXPECT_DOUBLE_EQ(r.margin, 1.0);
  const auto right = tree_shap(e, std::vector<double>{0.9, 0.0});
  EXPECT_DOUBLE_EQ(right.phi[0], -2.25);
}

TEST(TreeShap, SingleLeafTree) {
  TreeEnsemble e;
  std::vector<TreeNode> nodes(1);
  nodes[0].leaf_value = 0.7;
  nodes[0].cover = 5;
  e.trees.emplace_back(nodes);
  e.best_iteration = 1;
  e.base_margin = -1.0;
  e.feature_names = {"a"};
  const auto r = tree_shap(e, std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(r.base_value, -0.3);
  EXPECT_EQ(r.phi[0], 0.0);
  EXPECT_DOUBLE_EQ(expected_margin(e), -0.3);
}

TEST(TreeShap, UnusedFeaturesGetZero) {
  std::mt19937_64 gen(1);
  auto e = random_ensemble(gen, 5, 4, 3);
  e.feature_names.push_back("unused");
  for (int i = 0; i < 20; ++i) {
    auto x = random_sample(gen, 4);
    EXPECT_EQ(tree_shap(e, x).phi[3], 0.0);
    EXPECT_EQ(TreeExplainer(e).explain(x).phi[3], 0.0);
  }
}

TEST(TreeShap, AdditiveOverTrees) {
  std::mt19937_64 gen(2);
  const auto e = random_ensemble(gen, 2, 4, 5);
  TreeEnsemble a = e;
  a.trees = {e.trees[0]};
  a.best_iteration = 1;
  TreeEnsemble b = e;
  b.trees = {e.trees[1]};
  b.best_iteration = 1;
  b.base_margin = 0.0;
  const auto x = random_sample(gen, 5);
  const auto whole = tree_shap(e, x);
  const auto pa = tree_shap(a, x);
  const auto pb = tree_shap(b, x);
  for (int f = 0; f < 5; ++f) EXPECT_NEAR(whole.phi[f], pa.phi[f] + pb.phi[f], 1e-12);
}

TEST(TreeShap, MatchesBruteForceAndPermutationOracle) {
  std::mt19937_64 gen(3);
  int cases = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int features = 2 + trial % 5;
    const auto e = random_ensemble(gen, 1 + trial % 4, 1 + trial % 6, features);
    for (int s = 0; s < 4; ++s, ++cases) {
      const auto x = random_sample(gen, features);
      const auto fast = tree_shap(e, x);
      const auto brute = brute_force_shapley(e, x);
      const auto perm = permutation_shapley(e, x);
      EXPECT_NEAR(fast.base_value, brute.base_value, 1e-10);
      double sum = fast.base_value;
      for (int f = 0; f < features; ++f) {
        EXPECT_NEAR(fast.phi[f], brute.phi[f], 1e-9) << trial;
        EXPECT_NEAR(fast.phi[f], perm[f], 1e-9) << trial;
        sum += fast.phi[f];
      }
      EXPECT_NEAR(sum, predict_margin(e, x), 1e-9);
    }
  }
  EXPECT_GE(cases, 200);
}

TEST(TreeShap, RepeatedFeatureOnPath) {
  std::vector<TreeNode> nodes(5);
  nodes[0] = {0, 0.5, true, 1, 2, 0.0, 100, kMissing, kMissing};
  nodes[1] = {0, 0.2, false, 3, 4, 0.0, 60, kMissing, kMissing};
  nodes[2].leaf_value = 3.0;
  nodes[2].cover = 40;
  nodes[3].leaf_value = -1.0;
  nodes[3].cover = 20;
  nodes[4].leaf_value = 0.5;
  nodes[4].cover = 40;
  TreeEnsemble e;
  e.trees.emplace_back(nodes);
  e.best_iteration = 1;
  e.feature_names = {"x"};
  const auto r = tree_shap(e, std::vector<double>{0.1});
  EXPECT_NEAR(r.base_value, (-20.0 + 20.0 + 120.0) / 100.0, 1e-15);
  EXPECT_NEAR(r.phi[0], -1.0 - r.base_value, 1e-15);
}

TEST(TreeShap, RequiresCover) {
  auto e = stump();
  std::vector<TreeNode> nodes = e.trees[0].nodes();
  nodes[1].cover = kMissing;
  e.trees[0] = Tree(nodes);
  EXPECT_THROW(tree_shap(e, std::vector<double>{0.0, 0.0}), Error);
  EXPECT_THROW(TreeExplainer{e}, Error);
  EXPECT_THROW(tree_shap(stump(), std::vector<double>{0.0}), Error);
}

TEST(TreeShap, BruteForceLimit) {
  std::mt19937_64 gen(4);
  const auto e = random_ensemble(gen, 1, 2, 16);
  EXPECT_THROW(brute_force_shapley(e, random_sample(gen, 16)), Error);
}

TEST(TreeExplainer, AgreesWithRecursiveForm) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int features = 3 + trial % 10;
    const auto e = random_ensemble(gen, 3 + trial % 5, 2 + trial % 7, features);
    const TreeExplainer explainer(e);
    EXPECT_TRUE(explainer.tabulated());
    for (int s = 0; s < 10; ++s) {
      const auto x = random_sample(gen, features, 0.2);
      const auto a = tree_shap(e, x);
      const auto b = explainer.explain(x);
      EXPECT_NEAR(a.base_value, b.base_value, 1e-12);
      EXPECT_NEAR(a.margin, b.margin, 1e-12);
      for (int f = 0; f < features; ++f) EXPECT_NEAR(a.phi[f], b.phi[f], 1e-12);
    }
  }
}

TEST(TreeExplainer, BlocksMatchSingleRows) {
  std::mt19937_64 gen(6);
  const auto e = random_ensemble(gen, 8, 5, 6);
  std::vector<double> values;
  for (int i = 0; i < 300; ++i) {
    const auto x = random_sample(gen, 6);
    values.insert(values.end(), x.begin(), x.end());
  }
  const FeatureMatrix m(e.feature_names, values);
  const auto one = explain_set(e, m, 1);
  const auto many = explain_set(e, m, 3);
  const TreeExplainer explainer(e);
  ASSERT_EQ(one.size(), 300u);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].phi, many[i].phi);
    EXPECT_EQ(one[i].phi, explainer.explain(m.row(i)).phi);
  }
}

TEST(Explanations, CsvLayout) {
  const auto e = stump();
  const FeatureMatrix m(e.feature_names, {0.2, 1.0, 0.9, kMissing});
  const auto ex = explain_set(e, m);
  const std::vector<std::string> ids{"a", "b,c"};
  const auto csv = format_explanations_csv(ids, e.feature_names, ex);
  EXPECT_EQ(csv,
            "sample_id,phi_x,phi_y,base_value,margin\n"
            "a,0.75,0,0.25,1\n"
            "\"b,c\",-2.25,0,0.25,-2\n");
}

std::vector<Explanation> constant_explanations(std::size_t n, std::vector<double> phi) {
  std::vector<Explanation> out(n);
  for (auto& e : out) e.phi = phi;
  return out;
}

FeatureMatrix ramp(std::size_t n, std::size_t cols) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("f" + std::to_string(c));
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols; ++c) v.push_back(static_cast<double>(i));
  }
  return FeatureMatrix(names, v);
}

TEST(Beeswarm, RowsOrderedByMeanAbsPhi) {
  const auto ex = constant_explanations(10, {0.1, -0.5, 0.3});
  const auto layout = beeswarm(ex, ramp(10, 3));
  ASSERT_EQ(layout.rows.size(), 3u);
  EXPECT_EQ(layout.rows[0].feature, 1u);
  EXPECT_EQ(layout.rows[1].feature, 2u);
  EXPECT_EQ(layout.rows[2].feature, 0u);
  EXPECT_DOUBLE_EQ(layout.rows[0].mean_abs_phi, 0.5);
  EXPECT_EQ(layout.rows[0].label, "f1");
  EXPECT_EQ(layout.point_count(), 30u);
}

TEST(Beeswarm, JitterSeparatesEqualValues) {
  const auto ex = constant_explanations(50, {0.2});
  const auto layout = beeswarm(ex, ramp(50, 1));
  std::set<double> jitters;
  for (const auto& p : layout.rows[0].points) {
    EXPECT_EQ(p.x, 0.2);
    EXPECT_LE(std::abs(p.jitter), kMaxJitter + 1e-12);
    jitters.insert(p.jitter);
  }
  EXPECT_GT(jitters.size(), 1u);
}

TEST(Beeswarm, ColorsFollowFeatureRank) {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> z;
  std::vector<Explanation> ex(200);
  std::vector<double> v;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const double x = i == 5 ? kMissing : z(gen);
    v.push_back(x);
    ex[i].phi = {std::isnan(x) ? 0.0 : x};
  }
  const auto layout = beeswarm(ex, FeatureMatrix({"f"}, v));
  for (const auto& p : layout.rows[0].points) {
    EXPECT_GE(p.color, 0.0);
    EXPECT_LE(p.color, 1.0);
    EXPECT_EQ(p.missing, p.sample == 5);
    for (const auto& q : layout.rows[0].points) {
      if (p.missing || q.missing) continue;
      if (v[p.sample] < v[q.sample]) {
        EXPECT_LE(p.color, q.color);
      }
    }
  }
}

TEST(Beeswarm, ShapeMismatchThrows) {
  const auto ex = constant_explanations(3, {0.1, 0.2});
  EXPECT_THROW(beeswarm(ex, ramp(4, 2)), Error);
  EXPECT_THROW(beeswarm(ex, ramp(3, 1)), Error);
}

TEST(Beeswarm, SvgIsDeterministicAndComplete) {
  std::mt19937_64 gen(8);
  const auto e = random_ensemble(gen, 6, 4, 4);
  std::vector<double> values;
  for (int i = 0; i < 120; ++i) {
    const auto x = random_sample(gen, 4);
    values.insert(values.end(), x.begin(), x.end());
  }
  const FeatureMatrix m(e.feature_names, values);
  const auto layout = beeswarm(explain_set(e, m), m);
  const auto svg = render_svg(layout);
  EXPECT_EQ(svg, render_svg(beeswarm(explain_set(e, m), m)));
  EXPECT_NE(svg.find("<svg "), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("SHAP value"), std::string::npos);
  const std::regex circle("<circle ");
  const auto count = std::distance(std::sregex_iterator(svg.begin(), svg.end(), circle),
                                   std::sregex_iterator());
  EXPECT_EQ(static_cast<std::size_t>(count), layout.point_count());
  EXPECT_EQ(layout.point_count(), 480u);
}

TEST(Beeswarm, EmptyLayoutRenders) {
  const BeeswarmLayout empty;
  const auto svg = render_svg(empty);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
}

}  // namespace
}  // namespace ecgdx
