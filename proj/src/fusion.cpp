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

#include "dstage/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace dstage {

namespace {

void check_distinct(const std::vector<FeatureSetId>& ids) {
  std::set<FeatureSetId> seen;
  for (auto id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicateMember,
                  "feature set " + std::string(set_name(id)) + " listed twice");
    }
  }
}

std::string prefixed(FeatureSetId id, const std::string& name) {
  return std::string(set_name(id)) + "." + name;
}

}  // namespace

std::string_view mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::kConcat: return "concat";
    case FusionMode::kConcatThenSelect: return "concat_then_select";
    case FusionMode::kSelectThenConcat: return "select_then_concat";
    case FusionMode::kLateSum: return "late_sum";
    case FusionMode::kLateDecision: return "late_decision";
  }
  return "?";
}

std::optional<FusionMode> parse_mode(std::string_view name) {
  for (auto m : {FusionMode::kConcat, FusionMode::kConcatThenSelect,
                 FusionMode::kSelectThenConcat, FusionMode::kLateSum,
                 FusionMode::kLateDecision}) {
    if (mode_name(m) == name) return m;
  }
  return std::nullopt;
}

void FusionPlan::validate() const {
  if (members.empty()) throw Error(ErrorCode::kInvalidConfig, "fusion plan has no members");
  for (auto id : members) {
    if (id == FeatureSetId::kFused) {
      throw Error(ErrorCode::kInvalidConfig, "fusion members must be base feature sets");
    }
  }
  check_distinct(members);
  if ((mode == FusionMode::kLateDecision) != decision_kind.has_value()) {
    throw Error(ErrorCode::kInvalidConfig,
                "decision_kind must be given exactly when mode is late_decision");
  }
}

FeatureVector early_concat(std::span<const FeatureVector> members) {
  std::vector<FeatureSetId> ids;
  for (const auto& m : members) ids.push_back(m.set_id);
  check_distinct(ids);
  FeatureVector out;
  out.set_id = FeatureSetId::kFused;
  for (const auto& m : members) {
    out.values.insert(out.values.end(), m.values.begin(), m.values.end());
    for (const auto& n : m.names) out.names.push_back(prefixed(m.set_id, n));
  }
  return out;
}

FusedMatrix early_concat(std::span<const FeatureMatrix> members) {
  std::vector<FeatureSetId> ids;
  for (const auto& m : members) ids.push_back(m.set_id);
  check_distinct(ids);
  FusedMatrix out;
  out.matrix.set_id = FeatureSetId::kFused;
  if (members.empty()) return out;
  const auto& first = members.front();
  for (const auto& m : members) {
    if (m.ids != first.ids) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature set " + std::string(set_name(m.set_id)) +
                      " lists different utterances");
    }
    out.blocks.push_back({m.set_id, out.matrix.names.size(), m.cols()});
    for (const auto& n : m.names) out.matrix.names.push_back(prefixed(m.set_id, n));
  }
  out.matrix.ids = first.ids;
  out.matrix.labels = first.labels;
  out.matrix.values.reserve(first.rows() * out.matrix.names.size());
  for (std::size_t r = 0; r < first.rows(); ++r) {
    for (const auto& m : members) {
      const auto row = m.row(r);
      out.matrix.values.insert(out.matrix.values.end(), row.begin(), row.end());
    }
  }
  return out;
}

Dataset to_dataset(const FeatureMatrix& m, const std::vector<std::string>& class_order) {
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < class_order.size(); ++c) {
    index[class_order[c]] = static_cast<int>(c);
  }
  Dataset d;
  d.n = m.rows();
  d.d = m.cols();
  d.X = m.values;
  d.class_order = class_order;
  d.feature_names = m.names;
  d.y.reserve(d.n);
  for (const auto& label : m.labels) {
    const auto it = index.find(label);
    if (it == index.end()) {
      throw Error(ErrorCode::kLabelOutOfVocabulary, "label '" + label + "'");
    }
    d.y.push_back(it->second);
  }
  return d;
}

EarlySelection concat_then_select(const Dataset& fused, Exec exec) {
  EarlySelection out;
  out.per_block.push_back(greedy_stepwise(fused, exec));
  out.columns = out.per_block.back().indices;
  return out;
}

EarlySelection select_then_concat(const Dataset& fused, std::span<const Block> blocks,
                                  Exec exec, Warnings* warnings) {
  EarlySelection out;
  for (const auto& b : blocks) {
    std::vector<std::size_t> cols(b.size);
    for (std::size_t j = 0; j < b.size; ++j) cols[j] = b.offset + j;
    SelectionResult r = greedy_stepwise(subset_cols(fused, cols), exec);
    for (auto& i : r.indices) i += b.offset;
    for (auto& s : r.trace) s.added += b.offset;
    if (r.indices.empty()) {
      warn(warnings, "selection on " + std::string(set_name(b.set)) +
                         " kept no features; block contributes no columns");
    }
    out.columns.insert(out.columns.end(), r.indices.begin(), r.indices.end());
    out.per_block.push_back(std::move(r));
  }
  return out;
}

int late_sum(const PosteriorBundle& bundle) {
  if (bundle.empty()) throw Error(ErrorCode::kMissingPosterior, "empty posterior bundle");
  const auto& order = bundle.front().class_order;
  std::vector<double> sum(order.size(), 0.0);
  for (const auto& m : bundle) {
    if (m.class_order != order || m.probs.size() != order.size()) {
      throw Error(ErrorCode::kClassOrderMismatch, "members disagree on class order");
    }
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += m.probs[c];
  }
  // Sums equal up to rounding are ties; member order must not break them.
  const double top = *std::max_element(sum.begin(), sum.end());
  const double tol = kLateSumTieTolerance * static_cast<double>(bundle.size()) * std::max(1.0, std::abs(top));
  for (std::size_t c = 0; c < sum.size(); ++c) {
    if (sum[c] >= top - tol) return static_cast<int>(c);
  }
  return 0;
}

std::vector<double> stack_posteriors(const PosteriorBundle& bundle) {
  std::vector<double> out;
  for (const auto& m : bundle) out.insert(out.end(), m.probs.begin(), m.probs.end());
  return out;
}

Dataset build_decision_dataset(
    const std::vector<std::vector<std::vector<double>>>& posteriors,
    const std::vector<int>& y, const std::vector<std::string>& class_order) {
  const std::size_t k = class_order.size();
  Dataset d;
  d.n = y.size();
  d.d = posteriors.size() * k;
  d.y = y;
  d.class_order = class_order;
  for (std::size_t m = 0; m < posteriors.size(); ++m) {
    for (const auto& c : class_order) {
      d.feature_names.push_back("m" + std::to_string(m) + "_p_" + c);
    }
  }
  d.X.reserve(d.n * d.d);
  for (std::size_t i = 0; i < d.n; ++i) {
    for (std::size_t m = 0; m < posteriors.size(); ++m) {
      if (i >= posteriors[m].size() || posteriors[m][i].size() != k) {
        throw Error(ErrorCode::kMissingPosterior,
                    "member " + std::to_string(m) + " has no posterior for row " +
                        std::to_string(i));
      }
      d.X.insert(d.X.end(), posteriors[m][i].begin(), posteriors[m][i].end());
    }
  }
  return d;
}

int late_decision(const PosteriorBundle& bundle, const Model& decision_model) {
  const auto x = stack_posteriors(bundle);
  if (x.size() != decision_model.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "decision model expects " + std::to_string(decision_model.dim()) +
                    " stacked values, got " + std::to_string(x.size()));
  }
  for (const auto& m : bundle) {
    if (m.class_order != decision_model.class_order()) {
      throw Error(ErrorCode::kClassOrderMismatch, "member class order differs from model");
    }
  }
  return decision_model.predict(x);
}

}  // namespace dstage
