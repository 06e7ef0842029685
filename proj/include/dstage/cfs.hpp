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

#ifndef DSTAGE_CFS_HPP_
#define DSTAGE_CFS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dstage/classifiers.hpp"

namespace dstage {

inline constexpr int kCfsBins = 10;
inline constexpr double kCfsMinGain = 1e-9;

// Equal-frequency cut points: edges[k] = sorted[floor(k n / bins)] for
// k = 1..bins-1, deduplicated. A value's code is the number of edges <= it.
std::vector<double> equal_frequency_edges(std::span<const double> column,
                                          int bins = kCfsBins);
std::vector<int> discretize(std::span<const double> column,
                            std::span<const double> edges);

// 2 I(a;b) / (H(a) + H(b)) with base-2 logs; 0 when either entropy is 0.
// Codes must be non-negative. Throws kLengthMismatch.
double symmetrical_uncertainty(std::span<const int> a, std::span<const int> b);

// Feature-class correlations computed up front; feature-feature
// correlations computed on demand and memoized.
class CorrelationCache {
 public:
  explicit CorrelationCache(const Dataset& data, int bins = kCfsBins,
                            Exec exec = Exec::kParallel);

  std::size_t n_features() const { return codes_.size(); }
  double class_corr(std::size_t f) const { return class_corr_[f]; }
  const std::vector<double>& edges(std::size_t f) const { return edges_[f]; }

  double pair_corr(std::size_t a, std::size_t b);
  // Correlations of `f` with every feature in `others`, filling the memo in
  // one data-parallel batch.
  std::vector<double> pair_row(std::size_t f, std::span<const std::size_t> others);
  // Number of feature-feature correlations actually computed.
  std::size_t pair_evaluations() const { return evaluations_; }

 private:
  double compute(std::size_t a, std::size_t b) const;
  static std::uint64_t key(std::size_t a, std::size_t b);

  std::vector<std::vector<int>> codes_;
  std::vector<std::vector<double>> edges_;
  std::vector<double> class_corr_;
  std::unordered_map<std::uint64_t, double> pairs_;
  std::size_t evaluations_ = 0;
  Exec exec_;
};

// Hall's merit: k r_cf / sqrt(k + k (k - 1) r_ff). Throws kEmptySubset.
double merit(std::span<const std::size_t> subset, CorrelationCache& cache);

struct SelectionStep {
  std::size_t added;
  double merit;
};

struct SelectionResult {
  std::vector<std::size_t> indices;  // ascending
  std::vector<std::string> names;    // parallel to indices
  double merit = 0.0;
  std::vector<SelectionStep> trace;  // in order of addition

  nlohmann::json to_json() const;
  static SelectionResult from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SelectionResult load(const std::filesystem::path& path);
};

// Forward selection from the empty set; each step adds the feature with the
// highest merit (lowest index on ties) until no addition gains > 1e-9.
// Throws kDegenerateLabels when fewer than two classes are present.
SelectionResult greedy_stepwise(const Dataset& data, Exec exec = Exec::kParallel);
SelectionResult greedy_stepwise(CorrelationCache& cache,
                                const std::vector<std::string>& names = {});

}  // namespace dstage

#endif  // DSTAGE_CFS_HPP_
