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

#include <cmath>
#include <random>

#include <doctest.h>
#include <json.hpp>

#include "dstage/emotion.hpp"
#include "dstage/synth.hpp"

using namespace dstage;

namespace {

FeatureMatrix emotion_f1(std::size_t per_class, std::uint64_t seed) {
  FeatureMatrix m;
  m.set_id = FeatureSetId::kF1;
  m.names = feature_names(FeatureSetId::kF1);
  for (const auto& label : emotion_class_order()) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const auto id = label + std::to_string(i);
      const auto u = synth_emotion_utterance(label, id, seed);
      m.append(id, label, f1_vector(u.audio).values);
    }
  }
  return m;
}

const FeatureMatrix& corpus() {
  static const FeatureMatrix m = emotion_f1(6, 100);
  return m;
}

const EmotionModel& model() {
  static const EmotionModel m = [] {
    TrainOptions opt;
    opt.forest_trees = 60;
    return train_emotion_model(corpus(), ModelKind::kRandomForest, 3, opt);
  }();
  return m;
}

FeatureMatrix without(const FeatureMatrix& m, const std::string& label) {
  FeatureMatrix out;
  out.set_id = m.set_id;
  out.names = m.names;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (m.labels[i] != label) out.append(m.ids[i], m.labels[i], m.row(i));
  }
  return out;
}

}  // namespace

TEST_CASE("class order is frozen") {
  CHECK(emotion_class_order() ==
        std::vector<std::string>{"anger", "happy", "neutral", "sad", "disgust", "boredom", "anxiety"});
}

TEST_CASE("resubstitution accuracy") {
  const auto& m = corpus();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    FeatureVector f1{FeatureSetId::kF1, {m.row(i).begin(), m.row(i).end()}, {}};
    const auto f4 = f4_from_f1(f1, model());
    const auto& classes = emotion_class_order();
    hits += classes[static_cast<std::size_t>(argmax(f4.values))] == m.labels[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(m.rows()) >= 0.95);
}

TEST_CASE("training preconditions") {
  try {
    train_emotion_model(without(corpus(), "boredom"), ModelKind::kRandomForest, 1);
    FAIL("expected InsufficientClassCoverage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInsufficientClassCoverage);
  }
  auto bad = corpus();
  bad.labels[0] = "surprise";
  try {
    train_emotion_model(bad, ModelKind::kRandomForest, 1);
    FAIL("expected LabelOutOfVocabulary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLabelOutOfVocabulary);
  }
}

TEST_CASE("same corpus and seed give the same model") {
  TrainOptions opt;
  opt.forest_trees = 60;
  const auto again = train_emotion_model(corpus(), ModelKind::kRandomForest, 3, opt);
  CHECK(again.serialize() == model().serialize());
}

TEST_CASE("f4 lies on the simplex") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 0.2);
  for (int trial = 0; trial < 8; ++trial) {
    AudioBuffer a;
    const int n = 2000 + static_cast<int>(rng() % 20000);
    for (int i = 0; i < n; ++i) a.samples.push_back(trial % 2 ? g(rng) : 0.0);
    const auto v = f4_vector(a, model());
    REQUIRE(v.values.size() == 7);
    double sum = 0.0;
    for (double p : v.values) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(v.names == feature_names(FeatureSetId::kF4));
  }
}

TEST_CASE("held-out anger is recognised") {
  for (int i = 0; i < 3; ++i) {
    const auto u = synth_emotion_utterance("anger", "probe" + std::to_string(i), 555);
    const auto v = f4_vector(u.audio, model());
    CHECK(argmax(v.values) == 0);
  }
}

TEST_CASE("serialized model reproduces posteriors bit-exactly") {
  const auto back = EmotionModel::deserialize(model().serialize());
  for (const std::string label : {"sad", "happy", "boredom"}) {
    const auto u = synth_emotion_utterance(label, "rt", 9);
    CHECK(f4_vector(u.audio, back).values == f4_vector(u.audio, model()).values);
  }

  auto j = nlohmann::json::parse(model().serialize());
  j["recipe_hash"] = j["recipe_hash"].get<std::uint64_t>() ^ 1u;
  try {
    EmotionModel::deserialize(j.dump());
    FAIL("expected RecipeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRecipeMismatch);
  }

  auto stale = model();
  stale.recipe ^= 1u;
  CHECK_THROWS_AS(f4_vector(synth_emotion_utterance("sad", "x", 1).audio, stale), Error);
}
