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

#ifndef DSTAGE_EVAL_HPP_
#define DSTAGE_EVAL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dstage/classifiers.hpp"
#include "dstage/features.hpp"
#include "dstage/fusion.hpp"

namespace dstage {

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per row
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_rows(int fold) const;
  std::vector<std::size_t> train_rows(int fold) const;
};

// Seeded shuffle within each class, then round-robin dealing continued
// across classes. k shrinks to the smallest class size with a warning.
// Throws kTooFewSamples when a class in [0, n_classes) is empty or k < 2
// would result.
FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t n_classes,
                          int k, std::uint64_t seed, Warnings* warnings = nullptr);

// Like stratified_kfold, but every group (e.g. speaker) lands in a single
// fold. Groups are stratified by the label of their first row.
FoldPlan grouped_kfold(const std::vector<int>& labels,
                       const std::vector<std::string>& groups,
                       std::size_t n_classes, int k, std::uint64_t seed,
                       Warnings* warnings = nullptr);

// Rows kept by uniform spread subsampling: every present class cut down to
// the minority count without replacement, then shuffled.
std::vector<std::size_t> spread_subsample_rows(const std::vector<int>& labels,
                                               std::size_t n_classes,
                                               std::uint64_t seed);
Dataset spread_subsample(const Dataset& data, std::uint64_t seed);

using Confusion = std::vector<std::vector<std::size_t>>;  // [true][predicted]

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::size_t support = 0;
};

struct Summary {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  Summary weighted;
  Summary macro;
};

// Throws kDimensionMismatch when the matrix is not |classes| square.
Metrics metrics(const Confusion& confusion, const std::vector<std::string>& class_order,
                Warnings* warnings = nullptr);

enum class SelectionScope { kNone, kGlobal, kPerFold };
enum class BalanceScope { kNone, kTrainOnly, kWholeDataset };

std::string_view scope_name(SelectionScope s);
std::string_view scope_name(BalanceScope s);
std::optional<SelectionScope> parse_selection_scope(std::string_view s);
std::optional<BalanceScope> parse_balance_scope(std::string_view s);

struct ExperimentSpec {
  FusionPlan plan;
  ModelKind classifier = ModelKind::kRandomForest;
  SelectionScope selection_scope = SelectionScope::kPerFold;
  BalanceScope balance_scope = BalanceScope::kTrainOnly;
  int k_folds = 10;
  int inner_folds = 5;
  std::uint64_t seed = 0;
  // Decision classifier trained on in-sample member posteriors instead of
  // out-of-fold ones.
  bool stacking_resubstitution = false;
  bool group_by_speaker = false;
  TrainOptions train_options;
  Exec exec = Exec::kParallel;

  // Canonical one-line description, the source of config_hash.
  std::string canonical() const;
  void validate() const;
};

enum class Phase { kBalance, kSelect, kStandardize, kTrain, kStack, kPredict };
std::string_view phase_name(Phase p);

struct AccessRecord {
  int fold;  // -1 for corpus-wide steps
  Phase phase;
  std::string utterance_id;
};

// Every utterance id touched by every phase, in fold order.
struct AccessAudit {
  std::vector<AccessRecord> records;

  void record(int fold, Phase phase, const std::vector<std::string>& ids,
              std::span<const std::size_t> rows);
  // Accesses to a fold's test utterances outside kPredict, including
  // corpus-wide steps.
  std::size_t test_leaks(const FoldPlan& plan, const std::vector<std::string>& ids) const;
};

struct ExperimentReport {
  std::string config_hash;
  std::string description;
  std::vector<std::string> class_order;
  Metrics metrics;
  Confusion confusion;
  std::size_t n_utterances = 0;
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
  std::string to_json_text() const;
  std::string to_text() const;
};

struct ExperimentResult {
  ExperimentReport report;
  FoldPlan folds;
  AccessAudit audit;
  std::vector<std::vector<std::size_t>> train_class_counts;  // per fold
  std::vector<std::string> ids;  // rows the fold plan indexes
  std::vector<std::string> corpus_ids;
  std::vector<int> predictions;  // per corpus row; -1 if dropped by balancing
};

// members: one matrix per plan member, in plan order, all listing the same
// utterances. `speakers` is consulted only with group_by_speaker.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                std::span<const FeatureMatrix> members,
                                const std::vector<std::string>& class_order,
                                const std::vector<std::string>& speakers = {});

std::string hex64(std::uint64_t v);

}  // namespace dstage

#endif  // DSTAGE_EVAL_HPP_
