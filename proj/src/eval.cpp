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

#include "dstage/eval.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

namespace dstage {

namespace {

bool standardizes(ModelKind kind) {
  return kind == ModelKind::kLogistic || kind == ModelKind::kLinearSvm ||
         kind == ModelKind::kMlp;
}

std::vector<std::size_t> pick(std::span<const std::size_t> outer,
                              std::span<const std::size_t> inner) {
  std::vector<std::size_t> out;
  out.reserve(inner.size());
  for (std::size_t i : inner) out.push_back(outer[i]);
  return out;
}

std::vector<int> labels_of(const std::vector<int>& y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

struct FoldOutcome {
  std::vector<std::pair<std::size_t, int>> predictions;
  std::vector<AccessRecord> audit;
  std::vector<std::string> warnings;
  std::vector<std::size_t> train_counts;
};

class FoldRunner {
 public:
  FoldRunner(const ExperimentSpec& spec, std::span<const Dataset> members,
             const Dataset* fused, std::span<const Block> blocks,
             const std::vector<std::string>& ids,
             const std::optional<std::vector<std::size_t>>& global_columns)
      : spec_(spec),
        members_(members),
        fused_(fused),
        blocks_(blocks),
        ids_(ids),
        global_columns_(global_columns) {}

  FoldOutcome run(int fold, const FoldPlan& plan) const {
    FoldOutcome out;
    const Dataset& any = fused_ != nullptr ? *fused_ : members_.front();
    std::vector<std::size_t> train_rows = plan.train_rows(fold);
    const std::vector<std::size_t> test_rows = plan.test_rows(fold);

    if (spec_.balance_scope == BalanceScope::kTrainOnly) {
      record(out, fold, Phase::kBalance, train_rows);
      const auto kept = spread_subsample_rows(labels_of(any.y, train_rows), any.n_classes(),
                                              derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 1));
      train_rows = pick(train_rows, kept);
    }
    out.train_counts.assign(any.n_classes(), 0);
    for (std::size_t r : train_rows) ++out.train_counts[static_cast<std::size_t>(any.y[r])];

    TrainOptions options = spec_.train_options;
    options.exec = spec_.exec;
    if (spec_.plan.is_late()) {
      run_late(fold, train_rows, test_rows, options, out);
    } else {
      run_early(fold, train_rows, test_rows, options, out);
    }
    return out;
  }

 private:
  void record(FoldOutcome& out, int fold, Phase phase,
              std::span<const std::size_t> rows) const {
    for (std::size_t r : rows) out.audit.push_back({fold, phase, ids_[r]});
  }

  Model fit(int fold, ModelKind kind, const Dataset& data, std::span<const std::size_t> rows,
            std::uint64_t seed, const TrainOptions& options, FoldOutcome& out,
            Phase phase) const {
    if (standardizes(kind)) record(out, fold, Phase::kStandardize, rows);
    record(out, fold, phase, rows);
    return train(kind, data, seed, options);
  }

  void run_early(int fold, const std::vector<std::size_t>& train_rows,
                 const std::vector<std::size_t>& test_rows, const TrainOptions& options,
                 FoldOutcome& out) const {
    const Dataset train_full = subset_rows(*fused_, train_rows);
    std::vector<std::size_t> columns;
    const FusionMode mode = spec_.plan.mode;
    if (mode == FusionMode::kConcat) {
      columns.resize(fused_->d);
      std::iota(columns.begin(), columns.end(), 0);
    } else if (global_columns_) {
      columns = *global_columns_;
    } else {
      record(out, fold, Phase::kSelect, train_rows);
      Warnings w;
      const EarlySelection sel = mode == FusionMode::kConcatThenSelect
                                     ? concat_then_select(train_full, spec_.exec)
                                     : select_then_concat(train_full, blocks_, spec_.exec, &w);
      for (auto& s : w) out.warnings.push_back("fold " + std::to_string(fold) + ": " + s);
      columns = sel.columns;
    }
    if (columns.empty()) {
      out.warnings.push_back("fold " + std::to_string(fold) +
                             ": selection kept no features; predicting the majority class");
      const auto counts = train_full.class_counts();
      const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      record(out, fold, Phase::kPredict, test_rows);
      for (std::size_t r : test_rows) out.predictions.push_back({r, majority});
      return;
    }
    const Dataset train_sel = subset_cols(train_full, columns);
    const Model model = fit(fold, spec_.classifier, train_sel, train_rows,
                            derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 2),
                            options, out, Phase::kTrain);
    record(out, fold, Phase::kPredict, test_rows);
    std::vector<double> x(columns.size());
    for (std::size_t r : test_rows) {
      const auto row = fused_->row(r);
      for (std::size_t j = 0; j < columns.size(); ++j) x[j] = row[columns[j]];
      out.predictions.push_back({r, model.predict(x)});
    }
  }

  // Out-of-fold (or in-sample) member posteriors for every training row.
  std::vector<std::vector<std::vector<double>>> stack_inputs(
      int fold, const std::vector<std::size_t>& train_rows, const TrainOptions& options,
      FoldOutcome& out) const {
    const std::size_t n_members = members_.size();
    std::vector<std::vector<std::vector<double>>> post(
        n_members, std::vector<std::vector<double>>(train_rows.size()));
    if (spec_.stacking_resubstitution) {
      for (std::size_t m = 0; m < n_members; ++m) {
        const Model model = fit(fold, spec_.classifier, subset_rows(members_[m], train_rows),
                                train_rows, derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 30 + m),
                                options, out, Phase::kStack);
        record(out, fold, Phase::kStack, train_rows);
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
          post[m][i] = model.predict_proba(members_[m].row(train_rows[i]));
        }
      }
      return post;
    }
    const Dataset& any = members_.front();
    Warnings w;
    const FoldPlan inner = stratified_kfold(labels_of(any.y, train_rows), any.n_classes(),
                                            spec_.inner_folds,
                                            derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 3), &w);
    for (auto& s : w) out.warnings.push_back("fold " + std::to_string(fold) + " inner: " + s);
    for (int g = 0; g < inner.k; ++g) {
      const auto in_train = pick(train_rows, inner.train_rows(g));
      const auto in_test_local = inner.test_rows(g);
      const auto in_test = pick(train_rows, in_test_local);
      for (std::size_t m = 0; m < n_members; ++m) {
        const Model model = fit(fold, spec_.classifier, subset_rows(members_[m], in_train),
                                in_train,
                                derive_seed(spec_.seed, static_cast<std::uint64_t>(fold * 64 + g), 40 + m),
                                options, out, Phase::kStack);
        record(out, fold, Phase::kStack, in_test);
        for (std::size_t i = 0; i < in_test_local.size(); ++i) {
          post[m][in_test_local[i]] = model.predict_proba(members_[m].row(in_test[i]));
        }
      }
    }
    return post;
  }

  void run_late(int fold, const std::vector<std::size_t>& train_rows,
                const std::vector<std::size_t>& test_rows, const TrainOptions& options,
                FoldOutcome& out) const {
    const std::size_t n_members = members_.size();
    std::vector<Model> models;
    for (std::size_t m = 0; m < n_members; ++m) {
      models.push_back(fit(fold, spec_.classifier, subset_rows(members_[m], train_rows),
                           train_rows, derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 10 + m),
                           options, out, Phase::kTrain));
    }
    std::optional<Model> decision;
    if (spec_.plan.mode == FusionMode::kLateDecision) {
      const auto post = stack_inputs(fold, train_rows, options, out);
      const Dataset& any = members_.front();
      const Dataset stacked =
          build_decision_dataset(post, labels_of(any.y, train_rows), any.class_order);
      decision = fit(fold, *spec_.plan.decision_kind, stacked, train_rows,
                     derive_seed(spec_.seed, static_cast<std::uint64_t>(fold), 4), options, out,
                     Phase::kStack);
    }
    record(out, fold, Phase::kPredict, test_rows);
    for (std::size_t r : test_rows) {
      PosteriorBundle bundle;
      for (std::size_t m = 0; m < n_members; ++m) {
        bundle.push_back({models[m].class_order(), models[m].predict_proba(members_[m].row(r))});
      }
      const int label = decision ? late_decision(bundle, *decision) : late_sum(bundle);
      out.predictions.push_back({r, label});
    }
  }

  const ExperimentSpec& spec_;
  std::span<const Dataset> members_;
  const Dataset* fused_;
  std::span<const Block> blocks_;
  const std::vector<std::string>& ids_;
  const std::optional<std::vector<std::size_t>>& global_columns_;
};

FoldPlan deal(const std::vector<std::vector<std::size_t>>& strata_units,
              const std::vector<std::vector<std::size_t>>& unit_rows, std::size_t n_rows,
              int k, std::uint64_t seed) {
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n_rows, -1);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < strata_units.size(); ++c) {
    std::vector<std::size_t> units = strata_units[c];
    std::mt19937_64 rng(derive_seed(seed, c));
    std::shuffle(units.begin(), units.end(), rng);
    for (std::size_t i = 0; i < units.size(); ++i) {
      const int fold = static_cast<int>((offset + i) % static_cast<std::size_t>(k));
      for (std::size_t r : unit_rows[units[i]]) plan.assignments[r] = fold;
    }
    offset += units.size();
  }
  return plan;
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold && assignments[i] >= 0) out.push_back(i);
  }
  return out;
}

FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t n_classes, int k,
                          std::uint64_t seed, Warnings* warnings) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t smallest = labels.size();
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (by_class[c].empty()) {
      throw Error(ErrorCode::kTooFewSamples, "class index " + std::to_string(c) + " has no samples");
    }
    smallest = std::min(smallest, by_class[c].size());
  }
  if (k < 2) throw Error(ErrorCode::kInvalidConfig, "k must be at least 2");
  if (static_cast<std::size_t>(k) > smallest) {
    warn(warnings, "k reduced from " + std::to_string(k) + " to " + std::to_string(smallest) +
                       " (smallest class size)");
    k = static_cast<int>(smallest);
  }
  if (k < 2) throw Error(ErrorCode::kTooFewSamples, "a class has fewer than 2 samples");
  std::vector<std::vector<std::size_t>> unit_rows(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) unit_rows[i] = {i};
  return deal(by_class, unit_rows, labels.size(), k, seed);
}

FoldPlan grouped_kfold(const std::vector<int>& labels, const std::vector<std::string>& groups,
                       std::size_t n_classes, int k, std::uint64_t seed, Warnings* warnings) {
  if (groups.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one group per row required");
  }
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> unit_rows;
  std::vector<int> unit_label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, fresh] = index.emplace(groups[i], unit_rows.size());
    if (fresh) {
      unit_rows.emplace_back();
      unit_label.push_back(labels[i]);
    }
    unit_rows[it->second].push_back(i);
  }
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t u = 0; u < unit_rows.size(); ++u) {
    by_class[static_cast<std::size_t>(unit_label[u])].push_back(u);
  }
  if (k < 2) throw Error(ErrorCode::kInvalidConfig, "k must be at least 2");
  if (static_cast<std::size_t>(k) > unit_rows.size()) {
    warn(warnings, "k reduced to the number of groups");
    k = static_cast<int>(unit_rows.size());
  }
  if (k < 2) throw Error(ErrorCode::kTooFewSamples, "fewer than 2 groups");
  return deal(by_class, unit_rows, labels.size(), k, seed);
}

std::vector<std::size_t> spread_subsample_rows(const std::vector<int>& labels,
                                               std::size_t n_classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t minority = labels.size();
  for (const auto& rows : by_class) {
    if (!rows.empty()) minority = std::min(minority, rows.size());
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> kept;
  for (auto rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    kept.insert(kept.end(), rows.begin(),
                rows.begin() + static_cast<std::ptrdiff_t>(std::min(minority, rows.size())));
  }
  std::shuffle(kept.begin(), kept.end(), rng);
  return kept;
}

Dataset spread_subsample(const Dataset& data, std::uint64_t seed) {
  const auto rows = spread_subsample_rows(data.y, data.n_classes(), seed);
  return subset_rows(data, rows);
}

Metrics metrics(const Confusion& confusion, const std::vector<std::string>& class_order,
                Warnings* warnings) {
  const std::size_t k = class_order.size();
  if (confusion.size() != k) {
    throw Error(ErrorCode::kDimensionMismatch, "confusion matrix size differs from class count");
  }
  for (const auto& row : confusion) {
    if (row.size() != k) throw Error(ErrorCode::kDimensionMismatch, "confusion matrix is not square");
  }
  Metrics m;
  std::size_t total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics cm;
    cm.label = class_order[c];
    const double tp = static_cast<double>(confusion[c][c]);
    std::size_t predicted = 0;
    for (std::size_t r = 0; r < k; ++r) predicted += confusion[r][c];
    for (std::size_t p = 0; p < k; ++p) cm.support += confusion[c][p];
    if (predicted == 0) {
      warn(warnings, "class " + cm.label + " was never predicted; precision set to 0");
    } else {
      cm.precision = tp / static_cast<double>(predicted);
    }
    if (cm.support > 0) cm.recall = tp / static_cast<double>(cm.support);
    const double pr = cm.precision + cm.recall;
    cm.f_score = pr > 0.0 ? 2.0 * cm.precision * cm.recall / pr : 0.0;
    total += cm.support;
    m.per_class.push_back(cm);
  }
  for (const auto& cm : m.per_class) {
    const double w = total > 0 ? static_cast<double>(cm.support) / static_cast<double>(total) : 0.0;
    m.weighted.precision += w * cm.precision;
    m.weighted.recall += w * cm.recall;
    m.weighted.f_score += w * cm.f_score;
    m.macro.precision += cm.precision / static_cast<double>(k);
    m.macro.recall += cm.recall / static_cast<double>(k);
    m.macro.f_score += cm.f_score / static_cast<double>(k);
  }
  return m;
}

std::string_view scope_name(SelectionScope s) {
  switch (s) {
    case SelectionScope::kNone: return "none";
    case SelectionScope::kGlobal: return "global";
    case SelectionScope::kPerFold: return "per_fold";
  }
  return "?";
}

std::string_view scope_name(BalanceScope s) {
  switch (s) {
    case BalanceScope::kNone: return "none";
    case BalanceScope::kTrainOnly: return "train_only";
    case BalanceScope::kWholeDataset: return "whole_dataset";
  }
  return "?";
}

std::optional<SelectionScope> parse_selection_scope(std::string_view s) {
  for (auto v : {SelectionScope::kNone, SelectionScope::kGlobal, SelectionScope::kPerFold}) {
    if (scope_name(v) == s) return v;
  }
  return std::nullopt;
}

std::optional<BalanceScope> parse_balance_scope(std::string_view s) {
  for (auto v : {BalanceScope::kNone, BalanceScope::kTrainOnly, BalanceScope::kWholeDataset}) {
    if (scope_name(v) == s) return v;
  }
  return std::nullopt;
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kBalance: return "balance";
    case Phase::kSelect: return "select";
    case Phase::kStandardize: return "standardize";
    case Phase::kTrain: return "train";
    case Phase::kStack: return "stack";
    case Phase::kPredict: return "predict";
  }
  return "?";
}

std::string ExperimentSpec::canonical() const {
  std::string s = "mode=" + std::string(mode_name(plan.mode)) + ";members=";
  for (std::size_t i = 0; i < plan.members.size(); ++i) {
    s += (i ? "," : "") + std::string(set_name(plan.members[i]));
  }
  s += ";decision=" + (plan.decision_kind ? std::string(kind_name(*plan.decision_kind)) : "-");
  s += ";classifier=" + std::string(kind_name(classifier));
  s += ";selection=" + std::string(scope_name(selection_scope));
  s += ";balance=" + std::string(scope_name(balance_scope));
  s += ";k=" + std::to_string(k_folds) + ";inner=" + std::to_string(inner_folds);
  s += ";seed=" + std::to_string(seed);
  s += ";resubstitution=" + std::to_string(stacking_resubstitution ? 1 : 0);
  s += ";group_by_speaker=" + std::to_string(group_by_speaker ? 1 : 0);
  s += ";trees=" + std::to_string(train_options.forest_trees);
  return s;
}

void ExperimentSpec::validate() const {
  plan.validate();
  if (k_folds < 2) throw Error(ErrorCode::kInvalidConfig, "k_folds must be at least 2");
  if (plan.mode == FusionMode::kLateDecision && !stacking_resubstitution && inner_folds < 2) {
    throw Error(ErrorCode::kInvalidConfig, "inner_folds must be at least 2");
  }
  const bool selects = plan.mode == FusionMode::kConcatThenSelect ||
                       plan.mode == FusionMode::kSelectThenConcat;
  if (selects && selection_scope == SelectionScope::kNone) {
    throw Error(ErrorCode::kInvalidConfig,
                "selection_scope: mode " + std::string(mode_name(plan.mode)) +
                    " needs global or per_fold");
  }
}

void AccessAudit::record(int fold, Phase phase, const std::vector<std::string>& ids,
                         std::span<const std::size_t> rows) {
  for (std::size_t r : rows) records.push_back({fold, phase, ids[r]});
}

std::size_t AccessAudit::test_leaks(const FoldPlan& plan,
                                    const std::vector<std::string>& ids) const {
  std::vector<std::unordered_set<std::string>> test(static_cast<std::size_t>(plan.k));
  std::unordered_set<std::string> any_test;
  for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
    if (plan.assignments[i] < 0) continue;
    test[static_cast<std::size_t>(plan.assignments[i])].insert(ids[i]);
    any_test.insert(ids[i]);
  }
  std::size_t leaks = 0;
  for (const auto& r : records) {
    if (r.phase == Phase::kPredict) continue;
    const bool hit = r.fold < 0 ? any_test.count(r.utterance_id) > 0
                                : test[static_cast<std::size_t>(r.fold)].count(r.utterance_id) > 0;
    leaks += hit ? 1 : 0;
  }
  return leaks;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                std::span<const FeatureMatrix> members,
                                const std::vector<std::string>& class_order,
                                const std::vector<std::string>& speakers) {
  spec.validate();
  if (members.size() != spec.plan.members.size()) {
    throw Error(ErrorCode::kInvalidConfig, "one feature matrix per plan member required");
  }
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (members[m].set_id != spec.plan.members[m]) {
      throw Error(ErrorCode::kInvalidConfig, "feature matrices out of plan order");
    }
  }
  ExperimentResult result;
  ExperimentReport& report = result.report;
  report.config_hash = hex64(fnv1a(spec.canonical().data(), spec.canonical().size()));
  report.description = spec.canonical();
  report.class_order = class_order;

  FusedMatrix fused = early_concat(members);
  std::vector<std::string> ids = fused.matrix.ids;
  std::vector<std::string> groups = speakers;
  std::vector<std::size_t> corpus_rows(ids.size());
  std::iota(corpus_rows.begin(), corpus_rows.end(), 0);

  Dataset fused_ds = to_dataset(fused.matrix, class_order);
  fused_ds.validate();
  std::vector<Dataset> member_ds;
  for (const auto& m : members) member_ds.push_back(to_dataset(m, class_order));

  if (spec.balance_scope == BalanceScope::kWholeDataset) {
    result.audit.record(-1, Phase::kBalance, ids, corpus_rows);
    const auto kept = spread_subsample_rows(fused_ds.y, class_order.size(),
                                            derive_seed(spec.seed, 0xba1a));
    std::vector<std::size_t> sorted_kept = kept;
    std::sort(sorted_kept.begin(), sorted_kept.end());
    fused_ds = subset_rows(fused_ds, sorted_kept);
    for (auto& d : member_ds) d = subset_rows(d, sorted_kept);
    std::vector<std::string> kept_ids, kept_groups;
    for (std::size_t r : sorted_kept) {
      kept_ids.push_back(ids[r]);
      if (!groups.empty()) kept_groups.push_back(groups[r]);
    }
    ids = std::move(kept_ids);
    groups = std::move(kept_groups);
    corpus_rows = std::move(sorted_kept);
  }

  Warnings warnings;
  result.folds = spec.group_by_speaker
                     ? grouped_kfold(fused_ds.y, groups, class_order.size(), spec.k_folds,
                                     spec.seed, &warnings)
                     : stratified_kfold(fused_ds.y, class_order.size(), spec.k_folds,
                                        spec.seed, &warnings);
  const FoldPlan& plan = result.folds;

  std::optional<std::vector<std::size_t>> global_columns;
  const bool selects = spec.plan.mode == FusionMode::kConcatThenSelect ||
                       spec.plan.mode == FusionMode::kSelectThenConcat;
  if (selects && spec.selection_scope == SelectionScope::kGlobal) {
    std::vector<std::size_t> all(fused_ds.n);
    std::iota(all.begin(), all.end(), 0);
    result.audit.record(-1, Phase::kSelect, ids, all);
    const EarlySelection sel = spec.plan.mode == FusionMode::kConcatThenSelect
                                   ? concat_then_select(fused_ds, spec.exec)
                                   : select_then_concat(fused_ds, fused.blocks, spec.exec, &warnings);
    global_columns = sel.columns;
  }

  const FoldRunner runner(spec, member_ds, &fused_ds, fused.blocks, ids, global_columns);
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(plan.k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(plan.k));
  const auto run_fold = [&](int f) {
    try {
      outcomes[static_cast<std::size_t>(f)] = runner.run(f, plan);
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  };
  if (spec.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  } else {
    for (int f = 0; f < plan.k; ++f) run_fold(f);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const std::size_t k = class_order.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  result.ids = ids;
  result.corpus_ids = fused.matrix.ids;
  result.predictions.assign(result.corpus_ids.size(), -1);
  for (auto& o : outcomes) {
    for (const auto& [row, label] : o.predictions) {
      ++report.confusion[static_cast<std::size_t>(fused_ds.y[row])][static_cast<std::size_t>(label)];
      result.predictions[corpus_rows[row]] = label;
    }
    result.audit.records.insert(result.audit.records.end(), o.audit.begin(), o.audit.end());
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
    result.train_class_counts.push_back(std::move(o.train_counts));
  }
  report.n_utterances = fused_ds.n;
  report.metrics = metrics(report.confusion, class_order, &warnings);
  report.warnings = std::move(warnings);
  return result;
}

}  // namespace dstage
