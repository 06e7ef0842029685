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

#include "dstage/classifiers.hpp"

namespace dstage {

namespace {

// softmax(W [z; 1]) over standardized inputs z. Shared by the logistic and
// linear SVM kinds, which differ only in training.
class LinearSoftmax final : public Estimator {
 public:
  LinearSoftmax(Standardizer s, std::vector<std::vector<double>> w)
      : standardizer_(std::move(s)), weights_(std::move(w)) {}

  std::vector<double> predict_proba(std::span<const double> x) const override {
    std::vector<double> z(x.size());
    standardizer_.apply(x, z);
    std::vector<double> score(weights_.size());
    for (std::size_t c = 0; c < weights_.size(); ++c) {
      const auto& w = weights_[c];
      double s = w[z.size()];
      for (std::size_t j = 0; j < z.size(); ++j) s += w[j] * z[j];
      score[c] = s;
    }
    softmax(score);
    return score;
  }

  nlohmann::json params() const override {
    return {{"standardizer", standardizer_.to_json()}, {"weights", weights_}};
  }

  static std::shared_ptr<const Estimator> load(const nlohmann::json& p) {
    return std::make_shared<LinearSoftmax>(
        Standardizer::from_json(p.at("standardizer")),
        p.at("weights").get<std::vector<std::vector<double>>>());
  }

 private:
  Standardizer standardizer_;
  std::vector<std::vector<double>> weights_;
};

// Standardized design matrix with a trailing column of ones.
std::vector<double> augmented(const Dataset& data, const Standardizer& s) {
  const std::size_t w = data.d + 1;
  std::vector<double> z(data.n * w, 1.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    s.apply(data.row(i), std::span<double>(z.data() + i * w, data.d));
  }
  return z;
}

// Largest eigenvalue of Z^T Z / n by power iteration.
double gram_spectral_norm(const std::vector<double>& z, std::size_t n,
                          std::size_t w) {
  std::vector<double> v(w, 1.0 / std::sqrt(static_cast<double>(w)));
  std::vector<double> zv(n);
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < w; ++j) s += z[i * w + j] * v[j];
      zv[i] = s;
    }
    std::vector<double> next(w, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < w; ++j) next[j] += z[i * w + j] * zv[i];
    }
    double norm = 0.0;
    for (double& x : next) {
      x /= static_cast<double>(n);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t j = 0; j < w; ++j) v[j] = next[j] / norm;
    if (std::abs(norm - lambda) <= 1e-10 * norm) {
      lambda = norm;
      break;
    }
    lambda = norm;
  }
  return lambda;
}

}  // namespace

std::shared_ptr<const Estimator> train_logistic(const Dataset& data,
                                                const TrainOptions& options) {
  const Standardizer s = Standardizer::fit(data);
  const std::size_t w = data.d + 1;
  const std::size_t k = data.n_classes();
  const auto z = augmented(data, s);
  const double lam = options.logistic_l2;
  const double lipschitz = 0.5 * gram_spectral_norm(z, data.n, w) + lam;
  const double lr = 1.0 / lipschitz;

  std::vector<std::vector<double>> weights(k, std::vector<double>(w, 0.0));
  std::vector<std::vector<double>> grad(k, std::vector<double>(w, 0.0));
  std::vector<double> p(k);
  const double inv_n = 1.0 / static_cast<double>(data.n);
  for (int it = 0; it < options.logistic_max_iter; ++it) {
    for (auto& g : grad) std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
      const double* zi = z.data() + i * w;
      for (std::size_t c = 0; c < k; ++c) {
        double sc = 0.0;
        for (std::size_t j = 0; j < w; ++j) sc += weights[c][j] * zi[j];
        p[c] = sc;
      }
      softmax(p);
      p[static_cast<std::size_t>(data.y[i])] -= 1.0;
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t j = 0; j < w; ++j) grad[c][j] += p[c] * zi[j];
      }
    }
    double norm2 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < w; ++j) {
        grad[c][j] *= inv_n;
        if (j < data.d) grad[c][j] += lam * weights[c][j];
        norm2 += grad[c][j] * grad[c][j];
      }
    }
    if (std::sqrt(norm2) < options.logistic_tol) break;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < w; ++j) weights[c][j] -= lr * grad[c][j];
    }
  }
  return std::make_shared<LinearSoftmax>(s, std::move(weights));
}

std::shared_ptr<const Estimator> load_logistic(const nlohmann::json& params) {
  return LinearSoftmax::load(params);
}

// One-vs-rest Pegasos on the full batch, bias as an augmented feature.
std::shared_ptr<const Estimator> train_linear_svm(const Dataset& data,
                                                  const TrainOptions& options) {
  const Standardizer s = Standardizer::fit(data);
  const std::size_t w = data.d + 1;
  const std::size_t k = data.n_classes();
  const auto z = augmented(data, s);
  const double lam = 1.0 / (options.svm_c * static_cast<double>(data.n));
  const double radius = 1.0 / std::sqrt(lam);
  const double inv_n = 1.0 / static_cast<double>(data.n);

  std::vector<std::vector<double>> weights(k, std::vector<double>(w, 0.0));
  std::vector<double> grad(w);
  for (std::size_t c = 0; c < k; ++c) {
    auto& wc = weights[c];
    for (int t = 1; t <= options.svm_epochs; ++t) {
      const double eta = 1.0 / (lam * t);
      for (std::size_t j = 0; j < w; ++j) grad[j] = lam * wc[j];
      for (std::size_t i = 0; i < data.n; ++i) {
        const double* zi = z.data() + i * w;
        const double yi = static_cast<std::size_t>(data.y[i]) == c ? 1.0 : -1.0;
        double m = 0.0;
        for (std::size_t j = 0; j < w; ++j) m += wc[j] * zi[j];
        if (yi * m < 1.0) {
          for (std::size_t j = 0; j < w; ++j) grad[j] -= inv_n * yi * zi[j];
        }
      }
      double norm2 = 0.0;
      for (std::size_t j = 0; j < w; ++j) {
        wc[j] -= eta * grad[j];
        norm2 += wc[j] * wc[j];
      }
      const double norm = std::sqrt(norm2);
      if (norm > radius) {
        for (double& v : wc) v *= radius / norm;
      }
    }
  }
  return std::make_shared<LinearSoftmax>(s, std::move(weights));
}

std::shared_ptr<const Estimator> load_linear_svm(const nlohmann::json& params) {
  return LinearSoftmax::load(params);
}

Model logistic_from_weights(std::vector<std::string> class_order,
                            Standardizer standardizer,
                            std::vector<std::vector<double>> weights) {
  const std::size_t dim = standardizer.mean.size();
  for (const auto& row : weights) {
    if (row.size() != dim + 1) {
      throw Error(ErrorCode::kDimensionMismatch, "weight row must hold d + 1 values");
    }
  }
  return Model(ModelKind::kLogistic, std::move(class_order), dim, 0,
               std::make_shared<LinearSoftmax>(std::move(standardizer),
                                               std::move(weights)));
}

}  // namespace dstage
