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

#ifndef DSTAGE_FUSION_HPP_
#define DSTAGE_FUSION_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dstage/cfs.hpp"
#include "dstage/classifiers.hpp"
#include "dstage/features.hpp"

namespace dstage {

enum class FusionMode {
  kConcat,
  kConcatThenSelect,
  kSelectThenConcat,
  kLateSum,
  kLateDecision,
};

std::string_view mode_name(FusionMode mode);
std::optional<FusionMode> parse_mode(std::string_view name);

struct FusionPlan {
  FusionMode mode = FusionMode::kConcat;
  std::vector<FeatureSetId> members;
  std::optional<ModelKind> decision_kind;

  bool is_late() const {
    return mode == FusionMode::kLateSum || mode == FusionMode::kLateDecision;
  }
  // Throws kInvalidConfig or kDuplicateMember.
  void validate() const;
};

// Concatenation of feature vectors in member order. Names gain a "<set>."
// prefix. Throws kDuplicateMember.
FeatureVector early_concat(std::span<const FeatureVector> members);

// Column range of one member inside a fused matrix.
struct Block {
  FeatureSetId set;
  std::size_t offset;
  std::size_t size;
};

struct FusedMatrix {
  FeatureMatrix matrix;
  std::vector<Block> blocks;
};

// Row-aligned concatenation; all members must list the same utterance ids in
// the same order. Throws kDuplicateMember / kDimensionMismatch.
FusedMatrix early_concat(std::span<const FeatureMatrix> members);

// Labels mapped onto class_order. Throws kLabelOutOfVocabulary.
Dataset to_dataset(const FeatureMatrix& m, const std::vector<std::string>& class_order);

struct EarlySelection {
  std::vector<SelectionResult> per_block;
  std::vector<std::size_t> columns;  // fused column indices, ascending
};

// One CFS run over all fused columns.
EarlySelection concat_then_select(const Dataset& fused, Exec exec = Exec::kParallel);
// Independent CFS per block; survivors concatenated in block order. An empty
// block selection contributes nothing and warns.
EarlySelection select_then_concat(const Dataset& fused, std::span<const Block> blocks,
                                  Exec exec = Exec::kParallel,
                                  Warnings* warnings = nullptr);

struct MemberPosterior {
  std::vector<std::string> class_order;
  std::vector<double> probs;
};
using PosteriorBundle = std::vector<MemberPosterior>;

inline constexpr double kLateSumTieTolerance = 1e-12;

// argmax over classes of the member-wise posterior sum, lowest index on ties.
// Sums within kLateSumTieTolerance x members (relative) of the maximum tie.
// Throws kMissingPosterior for an empty bundle, kClassOrderMismatch.
int late_sum(const PosteriorBundle& bundle);

// Member posteriors laid side by side, member-major.
std::vector<double> stack_posteriors(const PosteriorBundle& bundle);

// posteriors[m][i] is member m's posterior for row i; an empty vector marks
// a missing posterior (kMissingPosterior).
Dataset build_decision_dataset(
    const std::vector<std::vector<std::vector<double>>>& posteriors,
    const std::vector<int>& y, const std::vector<std::string>& class_order);

// Throws kDimensionMismatch when the stacked layout does not fit the model.
int late_decision(const PosteriorBundle& bundle, const Model& decision_model);

}  // namespace dstage

#endif  // DSTAGE_FUSION_HPP_
