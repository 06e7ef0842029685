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

#ifndef DSTAGE_CONFIG_HPP_
#define DSTAGE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dstage/eval.hpp"

namespace dstage {

// Flat "section.key" -> value view of a line-oriented config file:
//
//   [protocol]
//   seed = 7        # comment
//
// Keys before any section header have no prefix.
using Settings = std::map<std::string, std::string>;

// Throws kParse with the offending line number.
Settings parse_settings(std::string_view text);
Settings read_settings(const std::filesystem::path& path);

struct ExperimentConfig {
  std::filesystem::path manifest_path;
  std::vector<FeatureSetId> feature_sets;
  FusionPlan fusion;
  ModelKind classifier = ModelKind::kRandomForest;
  SelectionScope selection_scope = SelectionScope::kPerFold;
  BalanceScope balance_scope = BalanceScope::kTrainOnly;
  int k_folds = 10;
  int inner_folds = 5;
  std::optional<std::uint64_t> seed;
  std::filesystem::path emotion_model_path;
  std::filesystem::path output_dir;
  std::filesystem::path cache_dir;  // empty: <output_dir>/cache
  int forest_trees = 100;
  bool group_by_speaker = false;
  bool stacking_resubstitution = false;

  // Every problem as "<section.key>: <message>"; empty when valid.
  std::vector<std::string> problems(bool check_paths = true) const;
  // Throws kInvalidConfig listing all problems.
  void validate(bool check_paths = true) const;

  ExperimentSpec spec() const;
  // Resolved settings in canonical key order.
  std::string to_text() const;
};

// Relative paths are resolved against `base_dir`. Unknown keys and
// malformed values throw kInvalidConfig naming the key.
ExperimentConfig config_from_settings(const Settings& settings,
                                      const std::filesystem::path& base_dir = {});

}  // namespace dstage

#endif  // DSTAGE_CONFIG_HPP_
