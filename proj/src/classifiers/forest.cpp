/* Copyright 2026 The dstage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dstage/classifiers.hpp"

namespace dstage {

namespace {

struct Tree {
  // Internal nodes have feature >= 0; leaves carry a label.
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> label;

  int leaf_for(std::span<const double> x) const {
    int node = 0;
    while (feature[static_cast<std::size_t>(node)] >= 0) {
      const auto k = static_cast<std::size_t>(node);
      node = x[static_cast<std::size_t>(feature[k])] <= threshold[k] ? left[k] : right[k];
    }
    return node;
  }
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::uint64_t seed)
      : data_(data), rng_(seed), order_(data.d) {
    std::iota(order_.begin(), order_.end(), 0);
    mtry_ = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(data.d)))) + 1;
    mtry_ = std::min(mtry_, data.d);
  }

  Tree build() {
    std::vector<std::size_t> sample(data_.n);
    std::uniform_int_distribution<std::size_t> pick(0, data_.n - 1);
    for (auto& s : sample) s = pick(rng_);

    Tree tree;
    struct Pending {
      int node;
      std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    stack.push_back({new_node(tree), std::move(sample)});
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      const auto k = static_cast<std::size_t>(p.node);
      const auto counts = class_counts(p.rows);
      tree.label[k] = argmax_count(counts);
      if (is_pure(counts)) continue;
      const Split split = best_split(p.rows, counts);
      if (split.feature < 0) continue;
      std::vector<std::size_t> lrows, rrows;
      for (std::size_t r : p.rows) {
        (value(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? lrows : rrows)
            .push_back(r);
      }
      const int l = new_node(tree);
      const int r = new_node(tree);
      tree.feature[k] = split.feature;
      tree.threshold[k] = split.threshold;
      tree.left[k] = l;
      tree.right[k] = r;
      stack.push_back({r, std::move(rrows)});
      stack.push_back({l, std::move(lrows)});
    }
    return tree;
  }

 private:
  double value(std::size_t row, std::size_t f) const { return data_.X[row * data_.d + f]; }

  static int new_node(Tree& t) {
    t.feature.push_back(-1);
    t.threshold.push_back(0.0);
    t.left.push_back(-1);
    t.right.push_back(-1);
    t.label.push_back(0);
    return static_cast<int>(t.feature.size() - 1);
  }

  std::vector<double> class_counts(const std::vector<std::size_t>& rows) const {
    std::vector<double> c(data_.n_classes(), 0.0);
    for (std::size_t r : rows) c[static_cast<std::size_t>(data_.y[r])] += 1.0;
    return c;
  }

  static int argmax_count(const std::vector<double>& c) { return argmax(c); }

  static bool is_pure(const std::vector<double>& c) {
    return std::count_if(c.begin(), c.end(), [](double v) { return v > 0.0; }) <= 1;
  }

  // Sum over children of n_child * gini(child), minimized.
  Split best_split_on(std::size_t f, const std::vector<std::size_t>& rows,
                      const std::vector<double>& total) {
    sorted_.assign(rows.begin(), rows.end());
    std::sort(sorted_.begin(), sorted_.end(), [&](std::size_t a, std::size_t b) {
      return value(a, f) < value(b, f);
    });
    Split best;
    std::vector<double> left(total.size(), 0.0);
    const double n = static_cast<double>(rows.size());
    for (std::size_t i = 0; i + 1 < sorted_.size(); ++i) {
      left[static_cast<std::size_t>(data_.y[sorted_[i]])] += 1.0;
      const double a = value(sorted_[i], f);
      const double b = value(sorted_[i + 1], f);
      if (!(a < b)) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      double sl = 0.0, sr = 0.0;
      for (std::size_t c = 0; c < total.size(); ++c) {
        sl += left[c] * left[c];
        const double rc = total[c] - left[c];
        sr += rc * rc;
      }
      const double impurity = (nl - sl / nl) + (nr - sr / nr);
      if (best.feature < 0 || impurity < best.impurity) {
        double t = a + 0.5 * (b - a);
        if (!(t < b)) t = a;
        best = {static_cast<int>(f), t, impurity};
      }
    }
    return best;
  }

  Split best_split(const std::vector<std::size_t>& rows,
                   const std::vector<double>& counts) {
    // Lazy Fisher-Yates over the feature indices: the first mtry draws are
    // the split candidates; further draws only when all of them are constant.
    Split best;
    std::size_t tried = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (tried >= mtry_ && best.feature >= 0) break;
      std::uniform_int_distribution<std::size_t> pick(i, order_.size() - 1);
      std::swap(order_[i], order_[pick(rng_)]);
      const Split s = best_split_on(order_[i], rows, counts);
      ++tried;
      if (s.feature >= 0 && (best.feature < 0 || s.impurity < best.impurity)) best = s;
    }
    return best;
  }

  const Dataset& data_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> sorted_;
  std::size_t mtry_ = 1;
};

class Forest final : public Estimator {
 public:
  Forest(std::size_t n_classes, std::vector<Tree> trees)
      : n_classes_(n_classes), trees_(std::move(trees)) {}

  std::vector<double> predict_proba(std::span<const double> x) const override {
    std::vector<double> votes(n_classes_, 1.0);
    for (const auto& t : trees_) {
      votes[static_cast<std::size_t>(t.label[static_cast<std::size_t>(t.leaf_for(x))])] += 1.0;
    }
    const double denom = static_cast<double>(trees_.size() + n_classes_);
    for (double& v : votes) v /= denom;
    return votes;
  }

  nlohmann::json params() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      trees.push_back({{"feature", t.feature},
                       {"threshold", t.threshold},
                       {"left", t.left},
                       {"right", t.right},
                       {"label", t.label}});
    }
    return {{"n_classes", n_classes_}, {"trees", trees}};
  }

 private:
  std::size_t n_classes_;
  std::vector<Tree> trees_;
};

}  // namespace

std::shared_ptr<const Estimator> train_forest(const Dataset& data,
                                              std::uint64_t seed,
                                              const TrainOptions& options) {
  const int n_trees = std::max(1, options.forest_trees);
  std::vector<Tree> trees(static_cast<std::size_t>(n_trees));
  const auto grow = [&](int t) {
    TreeBuilder builder(data, seed + static_cast<std::uint64_t>(t));
    trees[static_cast<std::size_t>(t)] = builder.build();
  };
  if (options.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < n_trees; ++t) grow(t);
  } else {
    for (int t = 0; t < n_trees; ++t) grow(t);
  }
  return std::make_shared<Forest>(data.n_classes(), std::move(trees));
}

std::shared_ptr<const Estimator> load_forest(const nlohmann::json& params) {
  std::vector<Tree> trees;
  for (const auto& j : params.at("trees")) {
    Tree t;
    t.feature = j.at("feature").get<std::vector<int>>();
    t.threshold = j.at("threshold").get<std::vector<double>>();
    t.left = j.at("left").get<std::vector<int>>();
    t.right = j.at("right").get<std::vector<int>>();
    t.label = j.at("label").get<std::vector<int>>();
    trees.push_back(std::move(t));
  }
  return std::make_shared<Forest>(params.at("n_classes").get<std::size_t>(),
                                  std::move(trees));
}

}  // namespace dstage
