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

#include "dstage/emotion.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>

namespace dstage {

namespace {

void check_recipe(std::uint64_t recipe) {
  if (recipe != recipe_hash()) {
    throw Error(ErrorCode::kRecipeMismatch,
                "emotion model was trained with feature recipe " +
                    std::to_string(recipe) + ", current is " +
                    std::to_string(recipe_hash()));
  }
}

}  // namespace

std::vector<std::string> emotion_class_order() {
  return {kEmotionClasses.begin(), kEmotionClasses.end()};
}

std::string EmotionModel::serialize() const {
  nlohmann::json j;
  j["format"] = "dstage-emotion";
  j["recipe_version"] = version;
  j["recipe_hash"] = recipe;
  j["model"] = inner.to_json();
  return j.dump();
}

EmotionModel EmotionModel::deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("emotion model: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "dstage-emotion") {
    throw Error(ErrorCode::kParse, "not an emotion model file");
  }
  EmotionModel m;
  try {
    m.version = j.at("recipe_version").get<std::string>();
    m.recipe = j.at("recipe_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("emotion model: ") + e.what());
  }
  check_recipe(m.recipe);
  m.inner = Model::from_json(j.at("model"));
  if (m.inner.class_order() != emotion_class_order()) {
    throw Error(ErrorCode::kClassOrderMismatch, "emotion classes out of order");
  }
  return m;
}

void EmotionModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << serialize();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

EmotionModel EmotionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

EmotionModel train_emotion_model(const FeatureMatrix& f1, ModelKind kind,
                                 std::uint64_t seed, const TrainOptions& options) {
  const auto classes = emotion_class_order();
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index[classes[c]] = static_cast<int>(c);

  Dataset data;
  data.n = f1.rows();
  data.d = f1.cols();
  data.X = f1.values;
  data.class_order = classes;
  data.feature_names = f1.names;
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& label : f1.labels) {
    const auto it = index.find(label);
    if (it == index.end()) {
      throw Error(ErrorCode::kLabelOutOfVocabulary, "emotion label '" + label + "'");
    }
    data.y.push_back(it->second);
    ++counts[static_cast<std::size_t>(it->second)];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (counts[c] < 2) {
      throw Error(ErrorCode::kInsufficientClassCoverage,
                  "emotion class '" + classes[c] + "' has " +
                      std::to_string(counts[c]) + " examples, need 2");
    }
  }
  if (data.d != kF1Dim) {
    throw Error(ErrorCode::kDimensionMismatch, "emotion training expects f1 rows");
  }
  EmotionModel m;
  m.inner = train(kind, data, seed, options);
  return m;
}

EmotionModel train_emotion_model(const Manifest& corpus, ModelKind kind,
                                 std::uint64_t seed, const TrainOptions& options,
                                 Exec exec) {
  const auto classes = emotion_class_order();
  for (const auto& e : corpus.entries) {
    if (std::find(classes.begin(), classes.end(), e.label) == classes.end()) {
      throw Error(ErrorCode::kLabelOutOfVocabulary, "emotion label '" + e.label + "'");
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(corpus.entries.size());
  std::vector<std::vector<double>> rows(corpus.entries.size());
  std::vector<std::exception_ptr> errors(corpus.entries.size());
  const auto extract = [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      rows[k] = f1_vector(load_audio(corpus.entries[k].wav_path)).values;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) extract(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) extract(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  FeatureMatrix m;
  m.set_id = FeatureSetId::kF1;
  m.names = feature_names(FeatureSetId::kF1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.append(corpus.entries[i].utterance_id, corpus.entries[i].label, rows[i]);
  }
  return train_emotion_model(m, kind, seed, options);
}

FeatureVector f4_from_f1(const FeatureVector& f1, const EmotionModel& model) {
  check_recipe(model.recipe);
  FeatureVector v;
  v.set_id = FeatureSetId::kF4;
  v.values = model.inner.predict_proba(f1.values);
  v.names = feature_names(FeatureSetId::kF4);
  return v;
}

FeatureVector f4_vector(const UtteranceAnalysis& a, const EmotionModel& model) {
  return f4_from_f1(f1_vector(a), model);
}

FeatureVector f4_vector(const AudioBuffer& audio, const EmotionModel& model) {
  return f4_from_f1(f1_vector(audio), model);
}

}  // namespace dstage
