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
#include <numbers>

#include "dstage/classifiers.hpp"

namespace dstage {

namespace {

class GaussianNaiveBayes final : public Estimator {
 public:
  GaussianNaiveBayes(std::vector<double> log_prior,
                     std::vector<std::vector<double>> mean,
                     std::vector<std::vector<double>> var)
      : log_prior_(std::move(log_prior)), mean_(std::move(mean)), var_(std::move(var)) {}

  std::vector<double> predict_proba(std::span<const double> x) const override {
    std::vector<double> score(log_prior_.size());
    for (std::size_t c = 0; c < score.size(); ++c) {
      double s = log_prior_[c];
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - mean_[c][j];
        s -= 0.5 * (std::log(2.0 * std::numbers::pi * var_[c][j]) + d * d / var_[c][j]);
      }
      score[c] = s;
    }
    softmax(score);
    return score;
  }

  nlohmann::json params() const override {
    return {{"log_prior", log_prior_}, {"mean", mean_}, {"var", var_}};
  }

 private:
  std::vector<double> log_prior_;
  std::vector<std::vector<double>> mean_;
  std::vector<std::vector<double>> var_;
};

}  // namespace

std::shared_ptr<const Estimator> train_naive_bayes(const Dataset& data,
                                                   const TrainOptions& options) {
  const std::size_t k = data.n_classes();
  const auto counts = data.class_counts();
  std::vector<std::vector<double>> mean(k, std::vector<double>(data.d, 0.0));
  std::vector<std::vector<double>> var(k, std::vector<double>(data.d, 0.0));
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    for (std::size_t j = 0; j < data.d; ++j) mean[c][j] += data.X[i * data.d + j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (double& m : mean[c]) m /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto c = static_cast<std::size_t>(data.y[i]);
    for (std::size_t j = 0; j < data.d; ++j) {
      const double dv = data.X[i * data.d + j] - mean[c][j];
      var[c][j] += dv * dv;
    }
  }
  std::vector<double> log_prior(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (double& v : var[c]) {
      v = counts[c] > 0 ? v / static_cast<double>(counts[c]) : 1.0;
      v = std::max(v, options.nb_var_floor);
    }
    // Classes absent from training keep a vanishing prior.
    log_prior[c] = counts[c] > 0 ? std::log(static_cast<double>(counts[c]) /
                                            static_cast<double>(data.n))
                                 : -1e3;
  }
  return std::make_shared<GaussianNaiveBayes>(std::move(log_prior), std::move(mean),
                                              std::move(var));
}

std::shared_ptr<const Estimator> load_naive_bayes(const nlohmann::json& params) {
  return std::make_shared<GaussianNaiveBayes>(
      params.at("log_prior").get<std::vector<double>>(),
      params.at("mean").get<std::vector<std::vector<double>>>(),
      params.at("var").get<std::vector<std::vector<double>>>());
}

}  // namespace dstage
