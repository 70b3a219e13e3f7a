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

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgdx/gbm.h"

namespace ecgdx {

namespace {

using nlohmann::json;

json node_to_json(const Tree& tree, int index) {
  const TreeNode& node = tree.node(index);
  json out = json::object();
  if (node.is_leaf()) {
    out["leaf"] = node.leaf_value;
  } else {
    out["feature"] = node.feature;
    out["threshold"] = node.threshold;
    out["default"] = node.default_left ? "left" : "right";
  }
  if (std::isfinite(node.cover)) out["cover"] = node.cover;
  if (std::isfinite(node.sum_grad)) out["sum_grad"] = node.sum_grad;
  if (std::isfinite(node.sum_hess)) out["sum_hess"] = node.sum_hess;
  if (!node.is_leaf()) {
    out["left"] = node_to_json(tree, node.left);
    out["right"] = node_to_json(tree, node.right);
  }
  return out;
}

double optional_number(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return kMissing;
  return it->get<double>();
}

// Pre-order flattening keeps children after their parent.
int node_from_json(const json& j, std::vector<TreeNode>& nodes, std::size_t num_features) {
  if (!j.is_object()) throw Error("model: tree node must be an object");
  const int index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  TreeNode node;
  node.cover = optional_number(j, "cover");
  node.sum_grad = optional_number(j, "sum_grad");
  node.sum_hess = optional_number(j, "sum_hess");
  if (j.contains("leaf")) {
    node.leaf_value = j.at("leaf").get<double>();
    nodes[index] = node;
    return index;
  }
  node.feature = j.at("feature").get<int>();
  if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= num_features) {
    throw Error("model: split feature index out of range");
  }
  node.threshold = j.at("threshold").get<double>();
  const auto direction = j.at("default").get<std::string>();
  if (direction != "left" && direction != "right") {
    throw Error("model: default must be \"left\" or \"right\"");
  }
  node.default_left = direction == "left";
  node.left = node_from_json(j.at("left"), nodes, num_features);
  node.right = node_from_json(j.at("right"), nodes, num_features);
  nodes[index] = node;
  return index;
}

json config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"max_depth", c.max_depth},
              {"reg_lambda", c.reg_lambda},
              {"gamma", c.gamma},
              {"min_child_weight", c.min_child_weight},
              {"max_rounds", c.max_rounds},
              {"patience", c.patience},
              {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.reg_lambda = j.value("reg_lambda", c.reg_lambda);
  c.gamma = j.value("gamma", c.gamma);
  c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
  c.max_rounds = j.value("max_rounds", c.max_rounds);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  return c;
}

}  // namespace

std::string serialize_model(const TreeEnsemble& ensemble) {
  json trees = json::array();
  for (const auto& tree : ensemble.trees) trees.push_back(node_to_json(tree, 0));
  json doc = {
      {"version", kModelFormatVersion},
      {"schema_fingerprint", ensemble.fingerprint},
      {"feature_names", ensemble.feature_names},
      {"config", config_to_json(ensemble.config)},
      {"base_margin", ensemble.base_margin},
      {"best_iteration", ensemble.best_iteration},
      {"trees", std::move(trees)},
  };
  return doc.dump(1) + "\n";
}

TreeEnsemble parse_model(std::string_view json_text) {
  try {
    const json doc = json::parse(json_text);
    if (doc.at("version").get<std::string>() != kModelFormatVersion) {
      throw Error("model: unsupported version " + doc.at("version").get<std::string>());
    }
    TreeEnsemble ensemble;
    ensemble.fingerprint = doc.at("schema_fingerprint").get<std::string>();
    ensemble.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    if (schema_fingerprint(ensemble.feature_names) != ensemble.fingerprint) {
      throw Error("model: schema fingerprint does not match feature names");
    }
    ensemble.config = config_from_json(doc.at("config"));
    ensemble.base_margin = doc.at("base_margin").get<double>();
    ensemble.best_iteration = doc.at("best_iteration").get<std::size_t>();
    for (const auto& t : doc.at("trees")) {
      std::vector<TreeNode> nodes;
      node_from_json(t, nodes, ensemble.feature_names.size());
      ensemble.trees.emplace_back(std::move(nodes));
    }
    if (ensemble.best_iteration > ensemble.trees.size()) {
      throw Error("model: best_iteration exceeds the number of trees");
    }
    return ensemble;
  } catch (const json::exception& e) {
    throw Error(std::string("model: malformed JSON: ") + e.what());
  }
}

void save_model(const TreeEnsemble& ensemble, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path.string());
  out << serialize_model(ensemble);
  if (!out) throw Error("failed writing model file " + path.string());
}

TreeEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::string format_train_log(const TrainLog& log) {
  std::ostringstream os;
  os << "round\ttrain_loss\tvalid_auroc\n";
  for (const auto& r : log.rounds) {
    os << r.round << '\t' << format_shortest(r.train_loss) << '\t'
       << format_shortest(r.valid_auroc) << '\n';
  }
  os << "# best_iteration\t" << log.best_iteration << '\n';
  return os.str();
}

TrainLog parse_train_log(std::string_view tsv) {
  TrainLog log;
  std::istringstream in{std::string(tsv)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    if (header) {
      if (trim(line) != "round\ttrain_loss\tvalid_auroc") throw Error("train log: bad header");
      header = false;
      continue;
    }
    const auto fields = split(line, '\t');
    if (line.rfind("# best_iteration", 0) == 0) {
      if (fields.size() != 2 || !parse_int(fields[1])) throw Error("train log: bad footer");
      log.best_iteration = static_cast<std::size_t>(*parse_int(fields[1]));
      continue;
    }
    if (fields.size() != 3) throw Error("train log: expected 3 columns");
    auto round = parse_int(fields[0]);
    auto loss = parse_double(fields[1]);
    auto auc = parse_double(fields[2]);
    if (!round || !loss || !auc) throw Error("train log: malformed row '" + line + "'");
    log.rounds.push_back({static_cast<int>(*round), *loss, *auc});
  }
  return log;
}

}  // namespace ecgdx
