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
#include <numbers>
#include <random>

#include <doctest.h>

#include "dstage/prosody.hpp"
#include "dstage/synth.hpp"

using namespace dstage;

namespace {

AudioBuffer concat(const AudioBuffer& a, const AudioBuffer& b) {
  AudioBuffer out = a;
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  return out;
}

double field(const FeatureVector& v, std::string_view name) {
  for (std::size_t i = 0; i < kProsodyFields.size(); ++i) {
    if (kProsodyFields[i] == name) return v.values[i];
  }
  FAIL("no field " << name);
  return 0.0;
}

}  // namespace

TEST_CASE("three bursts") {
  const auto a = burst_train(3, 0.2, 0.3);
  const auto nuclei = detect_syllables(a);
  REQUIRE(nuclei.size() == 3);
  for (int k = 0; k < 3; ++k) {
    const double lo = 0.3 + k * 0.5;
    CHECK(nuclei[k] >= lo);
    CHECK(nuclei[k] <= lo + 0.2);
  }
  const auto pauses = detect_pauses(a);
  REQUIRE(pauses.size() == 2);
  for (const auto& p : pauses) CHECK(std::abs((p.end_ms - p.start_ms) - 300) <= 20);

  const auto v = f3_vector(a, 3);
  REQUIRE(v.values.size() == 7);
  CHECK(field(v, "n_syllables") == 3.0);
  CHECK(field(v, "n_pauses") == 2.0);
  CHECK(field(v, "articulation_rate") == doctest::Approx(5.0).epsilon(0.05));
  CHECK(field(v, "avg_syllable_duration_s") == doctest::Approx(0.2).epsilon(0.05));
  CHECK(field(v, "phonation_time_s") == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("silence has no nuclei and no pauses") {
  AudioBuffer a;
  a.samples.assign(32000, 0.0);
  CHECK(detect_syllables(a).empty());
  CHECK(detect_pauses(a).empty());
  const auto v = f3_vector(a, 0);
  for (double x : v.values) CHECK(x == 0.0);
}

TEST_CASE("repeating the pattern doubles the count") {
  for (int n : {2, 3, 5}) {
    const auto a = burst_train(n, 0.15, 0.35);
    CHECK(detect_syllables(concat(a, a)).size() == 2 * detect_syllables(a).size());
    CHECK(detect_syllables(a).size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("pause length threshold") {
  CHECK(detect_pauses(burst_train(4, 0.2, 0.2)).empty());
  CHECK(detect_pauses(burst_train(4, 0.2, 0.4)).size() == 3);
  CHECK(detect_pauses(burst_train(4, 0.2, 0.2), 150.0).size() == 3);
}

TEST_CASE("continuous tone has no pauses") {
  AudioBuffer a;
  for (int i = 0; i < 32000; ++i) a.samples.push_back(0.3 * std::sin(2.0 * std::numbers::pi * 150.0 * i / 16000.0));
  CHECK(detect_pauses(a).empty());
}

TEST_CASE("words per minute") {
  AudioBuffer a;
  for (int i = 0; i < 60 * 16000; ++i) {
    a.samples.push_back(0.3 * std::sin(2.0 * std::numbers::pi * 150.0 * i / 16000.0));
  }
  CHECK(field(f3_vector(a, 120), "words_per_minute") == doctest::Approx(120.0).epsilon(1e-9));

  Warnings w;
  const auto est = prosody_profile(burst_train(3, 0.2, 0.3), std::nullopt, &w);
  CHECK(w.size() == 1);
  CHECK(est.words_per_minute > 0.0);
}

TEST_CASE("stretching time halves the articulation rate") {
  const auto a = burst_train(4, 0.2, 0.3, 180.0);
  AudioBuffer relabeled = a;
  relabeled.sample_rate = a.sample_rate / 2;
  const auto stretched = resample(relabeled, a.sample_rate);
  const auto p = prosody_profile(a, 4);
  const auto q = prosody_profile(stretched, 4);
  CHECK(q.n_syllables == p.n_syllables);
  CHECK(q.articulation_rate == doctest::Approx(p.articulation_rate / 2.0).epsilon(0.10));
}

TEST_CASE("values are finite and non-negative on arbitrary input") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    AudioBuffer a;
    const int n = static_cast<int>(rng() % 40000);
    const int kind = trial % 4;
    for (int i = 0; i < n; ++i) {
      double v = u(rng);
      if (kind == 1) v *= (i / 1600) % 2 ? 1.0 : 0.0;
      if (kind == 2) v = 0.5 * std::sin(i * 0.05) * ((i / 4000) % 3 ? 1.0 : 0.0);
      if (kind == 3) v *= 1e-6;
      a.samples.push_back(v);
    }
    const auto v = f3_vector(a, static_cast<std::size_t>(rng() % 50));
    REQUIRE(v.values.size() == 7);
    for (double x : v.values) {
      CHECK(std::isfinite(x));
      CHECK(x >= 0.0);
    }
  }
}

TEST_CASE("generated speech orders articulation rate by class") {
  double rate[3] = {0, 0, 0};
  const auto& labels = dementia_labels();
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (int i = 0; i < 4; ++i) {
      const auto u = synth_dementia_utterance(labels[c], "p" + std::to_string(i), "s" + std::to_string(i), 21);
      rate[c] += prosody_profile(u.audio, u.par_words).articulation_rate / 4.0;
    }
  }
  REQUIRE(labels == std::vector<std::string>{"HC", "MCI", "AD"});
  CHECK(rate[0] > rate[1]);
  CHECK(rate[1] > rate[2]);
}
