// src/dimreduce.cpp

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

#include "huc/dimreduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace huc {

std::vector<std::string> BoostConfig::violations() const {
  std::vector<std::string> out;
  if (rounds < 1) out.push_back("boost.rounds must be >= 1");
  if (max_depth < 1) out.push_back("boost.max_depth must be >= 1");
  if (!(learning_rate > 0.0)) out.push_back("boost.learning_rate must be > 0");
  if (!(min_split_gain >= 0.0))
    out.push_back("boost.min_split_gain must be >= 0");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0))
    out.push_back("boost.row_subsample must lie in (0, 1]");
  return out;
}

namespace {

constexpr double kMinGain = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FrameMatrix &x,
              const std::vector<std::vector<int>> &sorted, int max_depth,
              double min_split_gain)
      : x_(x), sorted_(sorted), max_depth_(max_depth),
        min_gain_(std::max(min_split_gain, kMinGain)),
        owner_(static_cast<std::size_t>(x.rows()), -1) {}

  RegressionTree build(const std::vector<double> &residual,
                       const std::vector<int> &rows) {
    residual_ = &residual;
    tree_ = RegressionTree{};
    tree_.nodes.emplace_back();
    grow(0, rows, 0);
    for (int r : rows) owner_[r] = -1;
    return std::move(tree_);
  }

 private:
  Split best_split(int node, const std::vector<int> &rows) const {
    const auto &res = *residual_;
    double sum = 0.0;
    for (int r : rows) sum += res[r];
    const double n = static_cast<double>(rows.size());
    const double parent = sum * sum / n;
    Split best;
    for (int f = 0; f < static_cast<int>(x_.cols()); ++f) {
      double left_sum = 0.0;
      long left_n = 0;
      double prev = 0.0;
      for (int r : sorted_[f]) {
        if (owner_[r] != node) continue;
        const double v = x_(r, f);
        if (left_n > 0 && v > prev) {
          const double right_sum = sum - left_sum;
          const double right_n = n - static_cast<double>(left_n);
          const double gain = left_sum * left_sum / left_n +
                              right_sum * right_sum / right_n - parent;
          if (gain > min_gain_ && gain > best.gain) {
            double thr = prev + (v - prev) / 2.0;
            if (!(thr < v)) thr = prev;
            best = {f, thr, gain};
          }
        }
        left_sum += res[r];
        ++left_n;
        prev = v;
      }
    }
    return best;
  }

  void grow(int node, const std::vector<int> &rows, int depth) {
    const auto &res = *residual_;
    for (int r : rows) owner_[r] = node;
    double sum = 0.0;
    for (int r : rows) sum += res[r];
    tree_.nodes[node].count = static_cast<int>(rows.size());
    tree_.nodes[node].value = sum / static_cast<double>(rows.size());
    if (depth >= max_depth_ || rows.size() < 2) return;
    const Split s = best_split(node, rows);
    if (s.feature < 0) return;
    std::vector<int> left, right;
    for (int r : rows)
      (x_(r, s.feature) <= s.threshold ? left : right).push_back(r);
    const int li = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    auto &n = tree_.nodes[node];
    n.feature = s.feature;
    n.threshold = s.threshold;
    n.gain = s.gain;
    n.left = li;
    n.right = li + 1;
    grow(li, left, depth + 1);
    grow(li + 1, right, depth + 1);
  }

  const FrameMatrix &x_;
  const std::vector<std::vector<int>> &sorted_;
  int max_depth_;
  double min_gain_;
  std::vector<int> owner_;
  const std::vector<double> *residual_ = nullptr;
  RegressionTree tree_;
};

double log1pexp(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

}  // namespace

Forest train_gbdt(const FrameMatrix &x, const Labels &y,
                  const BoostConfig &cfg) {
  auto problems = cfg.violations();
  if (!problems.empty()) fail(ErrorCode::kInvalidConfig, problems.front());
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(y.size()) != n)
    fail(ErrorCode::kShapeMismatch, std::to_string(y.size()) +
                                        " labels for " + std::to_string(n) +
                                        " rows");
  if (!x.allFinite()) fail(ErrorCode::kNonFinite, "GBDT input");

  Forest forest;
  forest.num_features = static_cast<int>(x.cols());
  forest.learning_rate = cfg.learning_rate;
  forest.classes = y;
  std::sort(forest.classes.begin(), forest.classes.end());
  forest.classes.erase(
      std::unique(forest.classes.begin(), forest.classes.end()),
      forest.classes.end());
  if (forest.classes.size() < 2)
    fail(ErrorCode::kSingleClass, "GBDT needs at least two distinct labels");

  std::vector<std::vector<int>> sorted(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto &idx = sorted[f];
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return x(a, f) < x(b, f); });
  }

  const std::size_t num_classes = forest.classes.size();
  std::vector<std::vector<double>> target(num_classes,
                                          std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> score(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    long pos = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (y[i] == forest.classes[c]) {
        target[c][i] = 1.0;
        ++pos;
      }
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    forest.base_score.push_back(std::log(p / (1.0 - p)));
    score[c].assign(static_cast<std::size_t>(n), forest.base_score.back());
  }
  forest.trees.resize(num_classes);

  TreeBuilder builder(x, sorted, cfg.max_depth, cfg.min_split_gain);
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> all_rows(static_cast<std::size_t>(n));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::vector<double> residual(static_cast<std::size_t>(n));
  for (int round = 0; round < cfg.rounds; ++round) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (Eigen::Index i = 0; i < n; ++i)
        residual[i] = target[c][i] - 1.0 / (1.0 + std::exp(-score[c][i]));
      std::vector<int> rows;
      if (cfg.row_subsample < 1.0) {
        std::bernoulli_distribution keep(cfg.row_subsample);
        for (int r : all_rows)
          if (keep(rng)) rows.push_back(r);
        if (rows.empty()) rows = all_rows;
      } else {
        rows = all_rows;
      }
      RegressionTree tree = builder.build(residual, rows);
      for (Eigen::Index i = 0; i < n; ++i)
        score[c][i] += cfg.learning_rate * tree.predict(x.row(i));
      forest.trees[c].push_back(std::move(tree));
    }
    double loss = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c)
      for (Eigen::Index i = 0; i < n; ++i)
        loss += log1pexp(score[c][i]) - target[c][i] * score[c][i];
    forest.loss_history.push_back(loss / static_cast<double>(n));
  }
  return forest;
}

FrameMatrix Forest::decision_function(const FrameMatrix &x) const {
  if (x.cols() != num_features)
    fail(ErrorCode::kDimensionMismatch, "forest expects " +
                                            std::to_string(num_features) +
                                            " features");
  FrameMatrix out(x.rows(), static_cast<Eigen::Index>(classes.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (std::size_t c = 0; c < classes.size(); ++c) {
      double s = base_score[c];
      for (const auto &t : trees[c]) s += learning_rate * t.predict(x.row(i));
      out(i, static_cast<Eigen::Index>(c)) = s;
    }
  return out;
}

Labels Forest::predict(const FrameMatrix &x) const {
  const FrameMatrix s = decision_function(x);
  Labels out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index arg;
    s.row(i).maxCoeff(&arg);
    out[i] = classes[arg];
  }
  return out;
}

std::vector<double> feature_gains(const Forest &forest) {
  std::vector<double> gains(static_cast<std::size_t>(forest.num_features),
                            0.0);
  for (const auto &per_class : forest.trees)
    for (const auto &tree : per_class)
      for (const auto &node : tree.nodes)
        if (!node.is_leaf()) gains[node.feature] += node.gain;
  return gains;
}

std::vector<int> feature_importance(const Forest &forest) {
  const auto gains = feature_gains(forest);
  std::vector<int> order(gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return gains[a] > gains[b]; });
  return order;
}

FrameMatrix project_top_d(const FrameMatrix &x, const std::vector<int> &ranking,
                          int d) {
  if (d < 1 || d > static_cast<int>(x.cols()) ||
      d > static_cast<int>(ranking.size()))
    fail(ErrorCode::kInvalidArgument, "D = " + std::to_string(d) +
                                          " outside [1, " +
                                          std::to_string(x.cols()) + "]");
  FrameMatrix out(x.rows(), d);
  for (int j = 0; j < d; ++j) {
    const int src = ranking[j];
    if (src < 0 || src >= x.cols())
      fail(ErrorCode::kInvalidArgument, "ranking entry out of range");
    out.col(j) = x.col(src);
  }
  return out;
}

nlohmann::json forest_to_json(const Forest &forest) {
  nlohmann::json j;
  j["num_features"] = forest.num_features;
  j["learning_rate"] = forest.learning_rate;
  j["classes"] = forest.classes;
  j["base_score"] = forest.base_score;
  j["loss_history"] = forest.loss_history;
  auto &trees = j["trees"] = nlohmann::json::array();
  for (const auto &per_class : forest.trees) {
    auto cls = nlohmann::json::array();
    for (const auto &tree : per_class) {
      auto nodes = nlohmann::json::array();
      for (const auto &n : tree.nodes) {
        if (n.is_leaf())
          nodes.push_back({{"value", n.value}, {"count", n.count}});
        else
          nodes.push_back({{"feature", n.feature},
                           {"threshold", n.threshold},
                           {"gain", n.gain},
                           {"left", n.left},
                           {"right", n.right},
                           {"value", n.value},
                           {"count", n.count}});
      }
      cls.push_back(std::move(nodes));
    }
    trees.push_back(std::move(cls));
  }
  return j;
}

Forest forest_from_json(const nlohmann::json &j) {
  Forest f;
  f.num_features = j.at("num_features").get<int>();
  f.learning_rate = j.at("learning_rate").get<double>();
  f.classes = j.at("classes").get<std::vector<int>>();
  f.base_score = j.at("base_score").get<std::vector<double>>();
  f.loss_history = j.at("loss_history").get<std::vector<double>>();
  for (const auto &cls : j.at("trees")) {
    auto &per_class = f.trees.emplace_back();
    for (const auto &nodes : cls) {
      auto &tree = per_class.emplace_back();
      for (const auto &n : nodes) {
        TreeNode node;
        node.value = n.at("value").get<double>();
        node.count = n.at("count").get<int>();
        if (n.contains("feature")) {
          node.feature = n.at("feature").get<int>();
          node.threshold = n.at("threshold").get<double>();
          node.gain = n.at("gain").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        }
        tree.nodes.push_back(node);
      }
    }
  }
  return f;
}

}  // namespace huc
