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

#ifndef DSTAGE_CLASSIFIERS_HPP_
#define DSTAGE_CLASSIFIERS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dstage/error.hpp"
#include "dstage/parallel.hpp"

namespace dstage {

enum class ModelKind { kRandomForest, kNaiveBayes, kLogistic, kLinearSvm, kMlp };

std::string_view kind_name(ModelKind kind);
std::optional<ModelKind> parse_kind(std::string_view name);

// Labeled rows. Labels are indices into class_order.
struct Dataset {
  std::vector<double> X;  // n x d, row-major
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<int> y;
  std::vector<std::string> class_order;
  std::vector<std::string> feature_names;

  std::span<const double> row(std::size_t i) const { return {X.data() + i * d, d}; }
  std::size_t n_classes() const { return class_order.size(); }
  std::vector<std::size_t> class_counts() const;
  // Throws kNonFiniteFeature / kDimensionMismatch on a malformed dataset.
  void validate() const;
};

Dataset subset_rows(const Dataset& data, std::span<const std::size_t> rows);
Dataset subset_cols(const Dataset& data, std::span<const std::size_t> cols);

struct TrainOptions {
  int forest_trees = 100;
  Exec exec = Exec::kParallel;
  double nb_var_floor = 1e-6;
  double logistic_l2 = 1e-4;
  double logistic_tol = 1e-6;
  int logistic_max_iter = 5000;
  double svm_c = 1.0;
  int svm_epochs = 2000;
  int mlp_epochs = 500;
  double mlp_learning_rate = 0.3;
  double mlp_momentum = 0.2;
};

// Kind-specific parameters behind the common interface.
class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;
  virtual nlohmann::json params() const = 0;
};

// Immutable trained classifier; copies share parameters.
class Model {
 public:
  Model() = default;
  Model(ModelKind kind, std::vector<std::string> class_order, std::size_t dim,
        std::uint64_t seed, std::shared_ptr<const Estimator> impl);

  ModelKind kind() const { return kind_; }
  const std::vector<std::string>& class_order() const { return class_order_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Throws kDimensionMismatch when x has the wrong length.
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Argmax of predict_proba, ties to the earliest class.
  int predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);
  std::string serialize() const;
  static Model deserialize(std::string_view text);

 private:
  ModelKind kind_ = ModelKind::kRandomForest;
  std::vector<std::string> class_order_;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::shared_ptr<const Estimator> impl_;
};

// Throws kDegenerateLabels when fewer than two classes are present.
Model train(ModelKind kind, const Dataset& data, std::uint64_t seed,
            const TrainOptions& options = {});

// Index of the largest entry, earliest on ties.
int argmax(std::span<const double> v);

// Per-column mean/std with std 0 replaced by 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data);
  void apply(std::span<const double> x, std::span<double> out) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

// Kind-specific trainers and loaders.
std::shared_ptr<const Estimator> train_forest(const Dataset& data,
                                              std::uint64_t seed,
                                              const TrainOptions& options);
std::shared_ptr<const Estimator> load_forest(const nlohmann::json& params);
std::shared_ptr<const Estimator> train_naive_bayes(const Dataset& data,
                                                   const TrainOptions& options);
std::shared_ptr<const Estimator> load_naive_bayes(const nlohmann::json& params);
std::shared_ptr<const Estimator> train_logistic(const Dataset& data,
                                                const TrainOptions& options);
std::shared_ptr<const Estimator> load_logistic(const nlohmann::json& params);
std::shared_ptr<const Estimator> train_linear_svm(const Dataset& data,
                                                  const TrainOptions& options);
std::shared_ptr<const Estimator> load_linear_svm(const nlohmann::json& params);
std::shared_ptr<const Estimator> train_mlp(const Dataset& data,
                                           std::uint64_t seed,
                                           const TrainOptions& options);
std::shared_ptr<const Estimator> load_mlp(const nlohmann::json& params);

// Builds a logistic model from explicit weights, one row of d + 1 values
// (bias last) per class, applied to standardized inputs.
Model logistic_from_weights(std::vector<std::string> class_order,
                            Standardizer standardizer,
                            std::vector<std::vector<double>> weights);

// Numerically stable in-place softmax.
void softmax(std::span<double> v);

}  // namespace dstage

#endif  // DSTAGE_CLASSIFIERS_HPP_
