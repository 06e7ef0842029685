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
#include <set>

#include "dstage/classifiers.hpp"

namespace dstage {

namespace {

constexpr int kFormatVersion = 1;

}  // namespace

std::string_view kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRandomForest: return "random_forest";
    case ModelKind::kNaiveBayes: return "naive_bayes";
    case ModelKind::kLogistic: return "logistic";
    case ModelKind::kLinearSvm: return "linear_svm";
    case ModelKind::kMlp: return "mlp";
  }
  return "?";
}

std::optional<ModelKind> parse_kind(std::string_view name) {
  for (auto k : {ModelKind::kRandomForest, ModelKind::kNaiveBayes,
                 ModelKind::kLogistic, ModelKind::kLinearSvm, ModelKind::kMlp}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> c(n_classes(), 0);
  for (int label : y) ++c[static_cast<std::size_t>(label)];
  return c;
}

void Dataset::validate() const {
  if (X.size() != n * d || y.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset shape is inconsistent");
  }
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes()) {
      throw Error(ErrorCode::kLabelOutOfVocabulary,
                  "label index " + std::to_string(label) + " outside class order");
    }
  }
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (!std::isfinite(X[i])) {
      throw Error(ErrorCode::kNonFiniteFeature,
                  "row " + std::to_string(i / std::max<std::size_t>(d, 1)) +
                      " column " + std::to_string(i % std::max<std::size_t>(d, 1)));
    }
  }
}

Dataset subset_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  out.d = data.d;
  out.n = rows.size();
  out.class_order = data.class_order;
  out.feature_names = data.feature_names;
  out.X.reserve(out.n * out.d);
  out.y.reserve(out.n);
  for (std::size_t r : rows) {
    const auto src = data.row(r);
    out.X.insert(out.X.end(), src.begin(), src.end());
    out.y.push_back(data.y[r]);
  }
  return out;
}

Dataset subset_cols(const Dataset& data, std::span<const std::size_t> cols) {
  Dataset out;
  out.n = data.n;
  out.d = cols.size();
  out.y = data.y;
  out.class_order = data.class_order;
  out.X.reserve(out.n * out.d);
  for (std::size_t c : cols) {
    out.feature_names.push_back(c < data.feature_names.size()
                                    ? data.feature_names[c]
                                    : std::to_string(c));
  }
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t c : cols) out.X.push_back(data.X[i * data.d + c]);
  }
  return out;
}

int argmax(std::span<const double> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void softmax(std::span<double> v) {
  if (v.empty()) return;
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

Standardizer Standardizer::fit(const Dataset& data) {
  Standardizer s;
  s.mean.assign(data.d, 0.0);
  s.scale.assign(data.d, 0.0);
  const double n = static_cast<double>(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.d; ++j) s.mean[j] += data.X[i * data.d + j];
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.d; ++j) {
      const double dv = data.X[i * data.d + j] - s.mean[j];
      s.scale[j] += dv * dv;
    }
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
}

nlohmann::json Standardizer::to_json() const {
  return {{"mean", mean}, {"scale", scale}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  return s;
}

Model::Model(ModelKind kind, std::vector<std::string> class_order,
             std::size_t dim, std::uint64_t seed,
             std::shared_ptr<const Estimator> impl)
    : kind_(kind),
      class_order_(std::move(class_order)),
      dim_(dim),
      seed_(seed),
      impl_(std::move(impl)) {}

std::vector<double> Model::predict_proba(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects " + std::to_string(dim_) + " features, got " +
                    std::to_string(x.size()));
  }
  if (!impl_) throw Error(ErrorCode::kInvalidConfig, "model is not trained");
  return impl_->predict_proba(x);
}

int Model::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return argmax(p);
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["format"] = "dstage-model";
  j["version"] = kFormatVersion;
  j["kind"] = std::string(kind_name(kind_));
  j["class_order"] = class_order_;
  j["dim"] = dim_;
  j["seed"] = seed_;
  j["params"] = impl_ ? impl_->params() : nlohmann::json::object();
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "dstage-model" || j.at("version") != kFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported model format");
    }
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kParse, "unknown model kind");
    const auto& p = j.at("params");
    std::shared_ptr<const Estimator> impl;
    switch (*kind) {
      case ModelKind::kRandomForest: impl = load_forest(p); break;
      case ModelKind::kNaiveBayes: impl = load_naive_bayes(p); break;
      case ModelKind::kLogistic: impl = load_logistic(p); break;
      case ModelKind::kLinearSvm: impl = load_linear_svm(p); break;
      case ModelKind::kMlp: impl = load_mlp(p); break;
    }
    return Model(*kind, j.at("class_order").get<std::vector<std::string>>(),
                 j.at("dim").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
                 std::move(impl));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model json: ") + e.what());
  }
}

std::string Model::serialize() const { return to_json().dump(); }

Model Model::deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model json: ") + e.what());
  }
  return from_json(j);
}

Model train(ModelKind kind, const Dataset& data, std::uint64_t seed,
            const TrainOptions& options) {
  data.validate();
  if (data.d == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "dataset has no features");
  }
  const std::set<int> present(data.y.begin(), data.y.end());
  if (present.size() < 2) {
    throw Error(ErrorCode::kDegenerateLabels,
                "training data holds fewer than two classes");
  }
  std::shared_ptr<const Estimator> impl;
  switch (kind) {
    case ModelKind::kRandomForest: impl = train_forest(data, seed, options); break;
    case ModelKind::kNaiveBayes: impl = train_naive_bayes(data, options); break;
    case ModelKind::kLogistic: impl = train_logistic(data, options); break;
    case ModelKind::kLinearSvm: impl = train_linear_svm(data, options); break;
    case ModelKind::kMlp: impl = train_mlp(data, seed, options); break;
  }
  return Model(kind, data.class_order, data.d, seed, std::move(impl));
}

}  // namespace dstage
