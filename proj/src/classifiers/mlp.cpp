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

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// One sigmoid hidden layer, softmax output. Weight rows carry the bias last.
class Mlp final : public Estimator {
 public:
  Mlp(Standardizer s, std::vector<std::vector<double>> hidden,
      std::vector<std::vector<double>> output)
      : standardizer_(std::move(s)), hidden_(std::move(hidden)), output_(std::move(output)) {}

  std::vector<double> predict_proba(std::span<const double> x) const override {
    std::vector<double> z(x.size());
    standardizer_.apply(x, z);
    std::vector<double> h;
    std::vector<double> out;
    forward(hidden_, output_, z, h, out);
    return out;
  }

  nlohmann::json params() const override {
    return {{"standardizer", standardizer_.to_json()},
            {"hidden", hidden_},
            {"output", output_}};
  }

  static void forward(const std::vector<std::vector<double>>& hidden,
                      const std::vector<std::vector<double>>& output,
                      std::span<const double> z, std::vector<double>& h,
                      std::vector<double>& out) {
    h.resize(hidden.size());
    for (std::size_t u = 0; u < hidden.size(); ++u) {
      const auto& w = hidden[u];
      double s = w[z.size()];
      for (std::size_t j = 0; j < z.size(); ++j) s += w[j] * z[j];
      h[u] = sigmoid(s);
    }
    out.resize(output.size());
    for (std::size_t c = 0; c < output.size(); ++c) {
      const auto& w = output[c];
      double s = w[h.size()];
      for (std::size_t u = 0; u < h.size(); ++u) s += w[u] * h[u];
      out[c] = s;
    }
    softmax(out);
  }

 private:
  Standardizer standardizer_;
  std::vector<std::vector<double>> hidden_;
  std::vector<std::vector<double>> output_;
};

}  // namespace

// Online backpropagation with momentum, one seeded permutation per epoch.
std::shared_ptr<const Estimator> train_mlp(const Dataset& data, std::uint64_t seed,
                                           const TrainOptions& options) {
  const Standardizer s = Standardizer::fit(data);
  const std::size_t d = data.d;
  const std::size_t k = data.n_classes();
  const std::size_t units = std::max<std::size_t>(1, (d + k) / 2);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.05, 0.05);
  std::vector<std::vector<double>> hidden(units, std::vector<double>(d + 1));
  std::vector<std::vector<double>> output(k, std::vector<double>(units + 1));
  for (auto& row : hidden) for (double& v : row) v = init(rng);
  for (auto& row : output) for (double& v : row) v = init(rng);
  auto hidden_step = hidden;
  auto output_step = output;
  for (auto& row : hidden_step) std::fill(row.begin(), row.end(), 0.0);
  for (auto& row : output_step) std::fill(row.begin(), row.end(), 0.0);

  std::vector<double> z(data.n * d);
  for (std::size_t i = 0; i < data.n; ++i) {
    s.apply(data.row(i), std::span<double>(z.data() + i * d, d));
  }
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> h, out, delta_out(k), delta_hidden(units);
  const double lr = options.mlp_learning_rate;
  const double mom = options.mlp_momentum;

  for (int epoch = 0; epoch < options.mlp_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const std::span<const double> zi(z.data() + i * d, d);
      Mlp::forward(hidden, output, zi, h, out);
      for (std::size_t c = 0; c < k; ++c) {
        delta_out[c] = out[c] - (static_cast<std::size_t>(data.y[i]) == c ? 1.0 : 0.0);
      }
      for (std::size_t u = 0; u < units; ++u) {
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) acc += delta_out[c] * output[c][u];
        delta_hidden[u] = acc * h[u] * (1.0 - h[u]);
      }
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t u = 0; u <= units; ++u) {
          const double g = delta_out[c] * (u < units ? h[u] : 1.0);
          output_step[c][u] = -lr * g + mom * output_step[c][u];
          output[c][u] += output_step[c][u];
        }
      }
      for (std::size_t u = 0; u < units; ++u) {
        for (std::size_t j = 0; j <= d; ++j) {
          const double g = delta_hidden[u] * (j < d ? zi[j] : 1.0);
          hidden_step[u][j] = -lr * g + mom * hidden_step[u][j];
          hidden[u][j] += hidden_step[u][j];
        }
      }
    }
  }
  return std::make_shared<Mlp>(s, std::move(hidden), std::move(output));
}

std::shared_ptr<const Estimator> load_mlp(const nlohmann::json& params) {
  return std::make_shared<Mlp>(Standardizer::from_json(params.at("standardizer")),
                               params.at("hidden").get<std::vector<std::vector<double>>>(),
                               params.at("output").get<std::vector<std::vector<double>>>());
}

}  // namespace dstage
