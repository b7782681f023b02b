// Copyright 2026 the longiseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/rng.hpp"

#include <json.hpp>

namespace longiseg {

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 2;
  int features_per_split = 3;
  std::uint64_t seed = 0;
};

/// Binary classification dataset: rows of equal-width feature vectors with
/// 0/1 labels.
struct Dataset {
  std::size_t n_features = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  void add(std::vector<double> row, int label) {
    if (n_features == 0) n_features = row.size();
    if (row.size() != n_features)
      throw invalid_argument_error("dataset: inconsistent feature width");
    if (label != 0 && label != 1) throw invalid_argument_error("dataset: labels must be 0 or 1");
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  std::size_t size() const { return rows.size(); }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_fraction = 0.0;  // positive fraction at the leaf
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int i = 0;
    for (;;) {
      const TreeNode& n = nodes[i];
      if (n.feature < 0) return n.leaf_fraction;
      i = x[n.feature] < n.threshold ? n.left : n.right;
    }
  }
};

namespace detail {

inline double gini(std::size_t pos, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(pos) / static_cast<double>(total);
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

// CART split search on one node's samples. Candidate thresholds are the
// midpoints between consecutive distinct values of each selected feature;
// ties in Gini gain resolve to the lower feature index, then the lower
// threshold, which together with the canonical dataset pre-sort makes
// training independent of input ordering.
struct SplitResult {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

inline SplitResult best_split(const Dataset& data, std::span<const std::uint32_t> samples,
                              std::span<const std::size_t> features, int min_leaf) {
  std::size_t pos_total = 0;
  for (std::uint32_t s : samples) pos_total += data.labels[s];
  const double parent = gini(pos_total, samples.size());

  SplitResult best;
  std::vector<std::pair<double, int>> vals;
  vals.reserve(samples.size());

  for (std::size_t f : features) {
    vals.clear();
    for (std::uint32_t s : samples) vals.emplace_back(data.rows[s][f], data.labels[s]);
    std::sort(vals.begin(), vals.end());

    std::size_t left_n = 0, left_pos = 0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      ++left_n;
      left_pos += vals[i].second;
      if (vals[i].first == vals[i + 1].first) continue;
      const std::size_t right_n = vals.size() - left_n;
      if (left_n < static_cast<std::size_t>(min_leaf) ||
          right_n < static_cast<std::size_t>(min_leaf))
        continue;
      const double w_left = static_cast<double>(left_n) / vals.size();
      const double w_right = 1.0 - w_left;
      const double gain = parent - w_left * gini(left_pos, left_n) -
                          w_right * gini(pos_total - left_pos, right_n);
      if (gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

inline int build_node(DecisionTree& tree, const Dataset& data, std::vector<std::uint32_t>& samples,
                      std::size_t begin, std::size_t end, int depth, const ForestConfig& cfg,
                      Rng& rng) {
  const std::span<std::uint32_t> span(samples.data() + begin, end - begin);
  std::size_t pos = 0;
  for (std::uint32_t s : span) pos += data.labels[s];

  const int node_idx = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});

  auto make_leaf = [&] {
    tree.nodes[node_idx].feature = -1;
    tree.nodes[node_idx].leaf_fraction = static_cast<double>(pos) / span.size();
    return node_idx;
  };

  if (depth >= cfg.max_depth || pos == 0 || pos == span.size() ||
      span.size() < 2 * static_cast<std::size_t>(cfg.min_leaf))
    return make_leaf();

  // Random feature subset, evaluated in ascending index order.
  auto feats = rng.sample_without_replacement(data.n_features, cfg.features_per_split);
  std::sort(feats.begin(), feats.end());
  const SplitResult split = best_split(data, span, feats, cfg.min_leaf);
  if (!split.found) return make_leaf();

  const auto mid = std::stable_partition(span.begin(), span.end(), [&](std::uint32_t s) {
    return data.rows[s][split.feature] < split.threshold;
  });
  const std::size_t n_left = static_cast<std::size_t>(mid - span.begin());

  tree.nodes[node_idx].feature = split.feature;
  tree.nodes[node_idx].threshold = split.threshold;
  const int left = build_node(tree, data, samples, begin, begin + n_left, depth + 1, cfg, rng);
  const int right = build_node(tree, data, samples, begin + n_left, end, depth + 1, cfg, rng);
  tree.nodes[node_idx].left = left;
  tree.nodes[node_idx].right = right;
  return node_idx;
}

}  // namespace detail

/// A CART/Gini random forest for binary classification, fully deterministic
/// given its seed: per-tree generators derive from the master seed, and the
/// dataset is canonically pre-sorted so input order cannot matter.
class RandomForest {
 public:
  RandomForest() = default;

  const ForestConfig& config() const { return config_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

  static RandomForest train(const Dataset& dataset, const ForestConfig& cfg) {
    if (dataset.size() == 0) throw training_error("training set is empty");
    if (cfg.n_trees < 1 || cfg.min_leaf < 1 || cfg.max_depth < 0)
      throw invalid_argument_error("forest config: n_trees/min_leaf/max_depth invalid");
    if (cfg.features_per_split < 1 ||
        static_cast<std::size_t>(cfg.features_per_split) > dataset.n_features)
      throw invalid_argument_error("forest config: features_per_split out of range");

    const std::size_t n = dataset.size();
    bool has_pos = false, has_neg = false;
    for (int l : dataset.labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
      throw training_error("training set holds a single class; need both labels");

    // Canonical order: lexicographic over features, then label.
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (dataset.rows[a] != dataset.rows[b]) return dataset.rows[a] < dataset.rows[b];
      return dataset.labels[a] < dataset.labels[b];
    });
    Dataset sorted;
    sorted.n_features = dataset.n_features;
    sorted.rows.reserve(n);
    sorted.labels.reserve(n);
    for (std::uint32_t i : order) {
      sorted.rows.push_back(dataset.rows[i]);
      sorted.labels.push_back(dataset.labels[i]);
    }

    RandomForest forest;
    forest.config_ = cfg;
    forest.n_features_ = sorted.n_features;
    forest.trees_.resize(cfg.n_trees);
    for (int t = 0; t < cfg.n_trees; ++t) {
      Rng rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(t));
      std::vector<std::uint32_t> bootstrap(n);
      for (std::size_t i = 0; i < n; ++i)
        bootstrap[i] = static_cast<std::uint32_t>(rng.next_below(n));
      std::sort(bootstrap.begin(), bootstrap.end());
      detail::build_node(forest.trees_[t], sorted, bootstrap, 0, n, 0, cfg, rng);
    }
    return forest;
  }

  /// Mean of the per-tree leaf fractions; always in [0,1].
  double predict_proba(std::span<const double> x) const {
    if (trees_.empty()) throw invalid_argument_error("predict on an empty forest");
    if (x.size() != n_features_)
      throw invalid_argument_error("predict: expected " + std::to_string(n_features_) +
                                   " features, got " + std::to_string(x.size()));
    double sum = 0.0;
    for (const DecisionTree& t : trees_) sum += t.predict(x);
    return sum / static_cast<double>(trees_.size());
  }

  nlohmann::json to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const DecisionTree& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const TreeNode& n : t.nodes)
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"fraction", n.leaf_fraction}});
      trees.push_back({{"nodes", nodes}});
    }
    return {{"version", 1},
            {"config",
             {{"n_trees", config_.n_trees},
              {"max_depth", config_.max_depth},
              {"min_leaf", config_.min_leaf},
              {"features_per_split", config_.features_per_split},
              {"seed", config_.seed}}},
            {"n_features", n_features_},
            {"trees", trees}};
  }

  static RandomForest from_json(const nlohmann::json& j) {
    if (!j.contains("version")) throw format_error("forest: missing \"version\"");
    if (j.at("version").get<int>() != 1)
      throw format_error("forest: unknown version " + j.at("version").dump());
    if (!j.contains("trees") || !j.at("trees").is_array())
      throw format_error("forest: missing \"trees\" array");
    if (!j.contains("config") || !j.contains("n_features"))
      throw format_error("forest: missing \"config\" or \"n_features\"");

    RandomForest out;
    const auto& jc = j.at("config");
    out.config_.n_trees = jc.at("n_trees").get<int>();
    out.config_.max_depth = jc.at("max_depth").get<int>();
    out.config_.min_leaf = jc.at("min_leaf").get<int>();
    out.config_.features_per_split = jc.at("features_per_split").get<int>();
    out.config_.seed = jc.at("seed").get<std::uint64_t>();
    out.n_features_ = j.at("n_features").get<std::size_t>();

    for (const auto& jt : j.at("trees")) {
      if (!jt.contains("nodes") || !jt.at("nodes").is_array())
        throw format_error("forest: tree missing \"nodes\"");
      DecisionTree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.leaf_fraction = jn.at("fraction").get<double>();
        if (n.feature >= static_cast<int>(out.n_features_))
          throw format_error("forest: node feature index out of range");
        if (n.feature < 0 && !(n.leaf_fraction >= 0.0 && n.leaf_fraction <= 1.0))
          throw format_error("forest: leaf fraction outside [0,1]");
        tree.nodes.push_back(n);
      }
      if (tree.nodes.empty()) throw format_error("forest: tree has no nodes");
      out.trees_.push_back(std::move(tree));
    }
    if (out.trees_.empty()) throw format_error("forest: no trees");
    return out;
  }

 private:
  ForestConfig config_;
  std::size_t n_features_ = 0;
  std::vector<DecisionTree> trees_;
};

inline void save_forest(const RandomForest& forest, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw format_error("cannot open forest file for write: " + path.string());
  f << forest.to_json().dump(1) << "\n";
}

inline RandomForest load_forest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw format_error("cannot open forest file: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path.string() + ": invalid JSON: " + e.what());
  }
  return RandomForest::from_json(j);
}

}  // namespace longiseg
