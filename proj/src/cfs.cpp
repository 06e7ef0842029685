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

#include "dstage/cfs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dstage {

namespace {

double entropy_bits(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

std::vector<double> equal_frequency_edges(std::span<const double> column, int bins) {
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  const std::size_t n = sorted.size();
  if (n == 0 || bins < 2) return edges;
  for (int k = 1; k < bins; ++k) {
    const std::size_t at = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins);
    const double e = sorted[std::min(at, n - 1)];
    if (e > sorted.front() && (edges.empty() || e > edges.back())) edges.push_back(e);
  }
  return edges;
}

std::vector<int> discretize(std::span<const double> column, std::span<const double> edges) {
  std::vector<int> codes(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    codes[i] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), column[i]) -
                                edges.begin());
  }
  return codes;
}

double symmetrical_uncertainty(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "symmetrical_uncertainty needs equal, non-empty inputs");
  }
  const int na = *std::max_element(a.begin(), a.end()) + 1;
  const int nb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<double> ca(static_cast<std::size_t>(na), 0.0);
  std::vector<double> cb(static_cast<std::size_t>(nb), 0.0);
  std::vector<double> cab(static_cast<std::size_t>(na) * static_cast<std::size_t>(nb), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ai = static_cast<std::size_t>(a[i]);
    const auto bi = static_cast<std::size_t>(b[i]);
    ca[ai] += 1.0;
    cb[bi] += 1.0;
    cab[ai * static_cast<std::size_t>(nb) + bi] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  const double ha = entropy_bits(ca, n);
  const double hb = entropy_bits(cb, n);
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  const double hab = entropy_bits(cab, n);
  const double su = 2.0 * (ha + hb - hab) / (ha + hb);
  return std::clamp(su, 0.0, 1.0);
}

CorrelationCache::CorrelationCache(const Dataset& data, int bins, Exec exec)
    : codes_(data.d), edges_(data.d), class_corr_(data.d, 0.0), exec_(exec) {
  const auto d = static_cast<std::ptrdiff_t>(data.d);
  const auto fill = [&](std::ptrdiff_t f) {
    const auto k = static_cast<std::size_t>(f);
    std::vector<double> column(data.n);
    for (std::size_t i = 0; i < data.n; ++i) column[i] = data.X[i * data.d + k];
    edges_[k] = equal_frequency_edges(column, bins);
    codes_[k] = discretize(column, edges_[k]);
    class_corr_[k] = symmetrical_uncertainty(codes_[k], data.y);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t f = 0; f < d; ++f) fill(f);
  } else {
    for (std::ptrdiff_t f = 0; f < d; ++f) fill(f);
  }
}

std::uint64_t CorrelationCache::key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

double CorrelationCache::compute(std::size_t a, std::size_t b) const {
  return a == b ? 1.0 : symmetrical_uncertainty(codes_[a], codes_[b]);
}

double CorrelationCache::pair_corr(std::size_t a, std::size_t b) {
  if (a == b) return 1.0;
  const auto k = key(a, b);
  const auto it = pairs_.find(k);
  if (it != pairs_.end()) return it->second;
  const double v = compute(a, b);
  pairs_.emplace(k, v);
  ++evaluations_;
  return v;
}

std::vector<double> CorrelationCache::pair_row(std::size_t f,
                                               std::span<const std::size_t> others) {
  std::vector<double> out(others.size(), 0.0);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < others.size(); ++i) {
    if (others[i] == f) {
      out[i] = 1.0;
      continue;
    }
    const auto it = pairs_.find(key(f, others[i]));
    if (it != pairs_.end()) {
      out[i] = it->second;
    } else {
      missing.push_back(i);
    }
  }
  const auto m = static_cast<std::ptrdiff_t>(missing.size());
  const auto fill = [&](std::ptrdiff_t j) {
    const std::size_t i = missing[static_cast<std::size_t>(j)];
    out[i] = compute(f, others[i]);
  };
  if (exec_ == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < m; ++j) fill(j);
  } else {
    for (std::ptrdiff_t j = 0; j < m; ++j) fill(j);
  }
  for (std::size_t i : missing) pairs_.emplace(key(f, others[i]), out[i]);
  evaluations_ += missing.size();
  return out;
}

double merit(std::span<const std::size_t> subset, CorrelationCache& cache) {
  if (subset.empty()) throw Error(ErrorCode::kEmptySubset, "merit of an empty subset");
  const double k = static_cast<double>(subset.size());
  double cf = 0.0;
  for (std::size_t f : subset) cf += cache.class_corr(f);
  double ff = 0.0;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    for (std::size_t j = i + 1; j < subset.size(); ++j) {
      ff += cache.pair_corr(subset[i], subset[j]);
    }
  }
  const double r_cf = cf / k;
  const double r_ff = subset.size() > 1 ? ff / (k * (k - 1.0) / 2.0) : 0.0;
  const double denom = std::sqrt(k + k * (k - 1.0) * r_ff);
  return denom > 0.0 ? k * r_cf / denom : 0.0;
}

SelectionResult greedy_stepwise(const Dataset& data, Exec exec) {
  data.validate();
  const std::set<int> present(data.y.begin(), data.y.end());
  if (present.size() < 2) {
    throw Error(ErrorCode::kDegenerateLabels, "selection needs at least two classes");
  }
  CorrelationCache cache(data, kCfsBins, exec);
  return greedy_stepwise(cache, data.feature_names);
}

SelectionResult greedy_stepwise(CorrelationCache& cache,
                                const std::vector<std::string>& names) {
  const std::size_t d = cache.n_features();
  SelectionResult result;
  // Running sums: selected feature-class SU, SU within the selected set, and
  // for every candidate its SU summed over the selected set.
  double sum_cf = 0.0;
  double sum_pairs = 0.0;
  std::vector<double> sum_with(d, 0.0);
  std::vector<std::size_t> candidates(d);
  for (std::size_t f = 0; f < d; ++f) candidates[f] = f;

  double current = 0.0;
  std::vector<std::size_t> selected;
  while (!candidates.empty()) {
    const double k = static_cast<double>(selected.size() + 1);
    std::size_t best = d;
    double best_merit = 0.0;
    for (std::size_t f : candidates) {
      const double denom = std::sqrt(k + 2.0 * (sum_pairs + sum_with[f]));
      const double m = denom > 0.0 ? (sum_cf + cache.class_corr(f)) / denom : 0.0;
      if (best == d || m > best_merit) {
        best = f;
        best_merit = m;
      }
    }
    if (best == d || !(best_merit > current + kCfsMinGain)) break;
    selected.push_back(best);
    sum_cf += cache.class_corr(best);
    sum_pairs += sum_with[best];
    current = best_merit;
    result.trace.push_back({best, best_merit});
    candidates.erase(std::find(candidates.begin(), candidates.end(), best));
    const auto row = cache.pair_row(best, candidates);
    for (std::size_t i = 0; i < candidates.size(); ++i) sum_with[candidates[i]] += row[i];
  }
  result.indices = selected;
  std::sort(result.indices.begin(), result.indices.end());
  for (std::size_t f : result.indices) {
    result.names.push_back(f < names.size() ? names[f] : std::to_string(f));
  }
  result.merit = current;
  return result;
}

nlohmann::json SelectionResult::to_json() const {
  nlohmann::json trace_j = nlohmann::json::array();
  for (const auto& s : trace) trace_j.push_back({{"added", s.added}, {"merit", s.merit}});
  return {{"indices", indices}, {"names", names}, {"merit", merit}, {"trace", trace_j}};
}

SelectionResult SelectionResult::from_json(const nlohmann::json& j) {
  SelectionResult r;
  try {
    r.indices = j.at("indices").get<std::vector<std::size_t>>();
    r.names = j.at("names").get<std::vector<std::string>>();
    r.merit = j.at("merit").get<double>();
    for (const auto& s : j.at("trace")) {
      r.trace.push_back({s.at("added").get<std::size_t>(), s.at("merit").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("selection json: ") + e.what());
  }
  return r;
}

void SelectionResult::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_json().dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

SelectionResult SelectionResult::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(nlohmann::json::parse(ss.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("selection json: ") + e.what());
  }
}

}  // namespace dstage
