// huc/dimreduce.hpp

// Copyright 2026  huc-lab authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// One-vs-rest gradient-boosted regression trees used to rank context-vector
// dimensions by how well they predict pseudo-phoneme labels.

#ifndef HUC_DIMREDUCE_HPP_
#define HUC_DIMREDUCE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "huc/common.hpp"
#include "json.hpp"

namespace huc {

struct BoostConfig {
  int rounds = 20;
  int max_depth = 3;
  double learning_rate = 0.3;
  double min_split_gain = 0.0;
  double row_subsample = 1.0;  // 1 disables subsampling
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  double gain = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before shrinkage
  int count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Row>
  double predict(const Row &x) const {
    int i = 0;
    while (!nodes[i].is_leaf())
      i = x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left
                                                    : nodes[i].right;
    return nodes[i].value;
  }
};

struct Forest {
  int num_features = 0;
  double learning_rate = 0.0;
  std::vector<int> classes;          // label value per one-vs-rest model
  std::vector<double> base_score;    // initial log-odds per class
  std::vector<std::vector<RegressionTree>> trees;  // [class][round]
  std::vector<double> loss_history;  // mean summed binary log-loss per round

  /// Raw per-class scores, rows(X) x classes.size().
  FrameMatrix decision_function(const FrameMatrix &x) const;
  Labels predict(const FrameMatrix &x) const;
};

/// Per round and per class: residual y - sigmoid(F), a depth-limited
/// least-squares tree on it (exact greedy split search over sorted feature
/// values, gain = SSE reduction, a split needs gain > max(min_split_gain,
/// 1e-12)), leaf value = mean residual, F += learning_rate * leaf.
Forest train_gbdt(const FrameMatrix &x, const Labels &y,
                  const BoostConfig &cfg);

/// Total split gain per feature.
std::vector<double> feature_gains(const Forest &forest);

/// Features by decreasing total gain, ties to the lower index.
std::vector<int> feature_importance(const Forest &forest);

/// Columns ranking[0..D) of x, in ranking order.
FrameMatrix project_top_d(const FrameMatrix &x, const std::vector<int> &ranking,
                          int d);

nlohmann::json forest_to_json(const Forest &forest);
Forest forest_from_json(const nlohmann::json &j);

}  // namespace huc

#endif  // HUC_DIMREDUCE_HPP_
