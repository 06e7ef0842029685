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

#ifndef DSTAGE_EMOTION_HPP_
#define DSTAGE_EMOTION_HPP_

#include <filesystem>
#include <string>

#include "dstage/chat.hpp"
#include "dstage/classifiers.hpp"
#include "dstage/features.hpp"

namespace dstage {

// Seven-class emotion classifier over f1 features. Its posteriors form f4.
struct EmotionModel {
  Model inner;
  std::string version = std::string(kRecipeVersion);
  std::uint64_t recipe = recipe_hash();

  std::string serialize() const;
  // Throws kRecipeMismatch when the file was built by another recipe.
  static EmotionModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static EmotionModel load(const std::filesystem::path& path);
};

std::vector<std::string> emotion_class_order();

// Trains on precomputed f1 rows. Labels must come from the frozen seven and
// each class needs at least two rows.
EmotionModel train_emotion_model(const FeatureMatrix& f1, ModelKind kind,
                                 std::uint64_t seed,
                                 const TrainOptions& options = {});

// Extracts f1 for every manifest entry, then trains.
EmotionModel train_emotion_model(const Manifest& corpus, ModelKind kind,
                                 std::uint64_t seed,
                                 const TrainOptions& options = {},
                                 Exec exec = Exec::kParallel);

FeatureVector f4_from_f1(const FeatureVector& f1, const EmotionModel& model);
FeatureVector f4_vector(const UtteranceAnalysis& a, const EmotionModel& model);
FeatureVector f4_vector(const AudioBuffer& audio, const EmotionModel& model);

}  // namespace dstage

#endif  // DSTAGE_EMOTION_HPP_
