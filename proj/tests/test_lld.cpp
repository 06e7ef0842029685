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

#include "dstage/features.hpp"
#include "dstage/lld.hpp"
#include "oracles.hpp"

using namespace dstage;

namespace {

AudioBuffer tone(double hz, double seconds, double amp = 0.5) {
  AudioBuffer a;
  for (std::size_t i = 0; i < static_cast<std::size_t>(seconds * a.sample_rate); ++i) {
    a.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * hz * i / a.sample_rate));
  }
  return a;
}

FrameSequence frames_of(const AudioBuffer& a) { return frame_signal(a, 20.0, 10.0, Window::kHamming); }

double mean_over(const std::vector<double>& v, const std::vector<bool>& mask) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) {
      s += v[i];
      ++n;
    }
  }
  return n ? s / n : 0.0;
}

}  // namespace

TEST_CASE("descriptor census") {
  const auto a = tone(220.0, 0.5);
  const auto fr = frames_of(a);
  CHECK(mfcc(fr).size() == 13);
  CHECK(spectral_llds(fr).size() == 35);
  CHECK(energy_llds(fr).size() == 5);
  const auto pt = pitch_track(a, fr);
  CHECK(voicing_llds(pt).size() == 3);
  CHECK(jitter_shimmer_llds(pt).size() == 3);
  CHECK(f1_llds(analyze(a)).size() == 56);
  CHECK(kNumCepstra + kNumSpectral + kNumEnergy + kNumVoicing == 56);
}

TEST_CASE("mfcc of silence is the DCT of the floor") {
  AudioBuffer a;
  a.samples.assign(3200, 0.0);
  const auto c = mfcc(frames_of(a));
  for (int k = 1; k < 13; ++k) {
    for (double v : c[k].values) CHECK(std::abs(v) < 1e-9);
  }
  const double c0 = std::sqrt(26.0) * std::log(kLogFloor);
  for (double v : c[0].values) CHECK(v == doctest::Approx(c0).epsilon(1e-12));
}

TEST_CASE("mfcc matches the brute-force oracle") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 0.2);
  auto check = [](const AudioBuffer& a) {
    const auto fr = frames_of(a);
    const auto c = mfcc(fr);
    for (std::size_t i = 0; i < fr.n_frames; ++i) {
      const auto span = fr.frame(i);
      const auto ref = oracle::mfcc_frame({span.begin(), span.end()}, fr.sample_rate);
      for (int k = 0; k < 13; ++k) CHECK(std::abs(c[k].values[i] - ref[k]) < 1e-6);
    }
  };
  check(tone(1000.0, 0.06));
  for (int trial = 0; trial < 10; ++trial) {
    AudioBuffer a;
    for (int i = 0; i < 800; ++i) a.samples.push_back(g(rng));
    check(a);
  }
}

TEST_CASE("spectral descriptors") {
  const auto fr = frames_of(tone(1000.0, 0.3));
  const auto s = spectral_llds(fr);
  const auto find = [&](const std::string& n) -> const LldTrajectory& {
    for (const auto& t : s) {
      if (t.name == n) return t;
    }
    FAIL("missing " << n);
    return s.front();
  };
  const double bin = 16000.0 / 512.0;
  for (double v : find("spectralCentroid").values) CHECK(std::abs(v - 1000.0) <= bin);

  // Identical frames: flux zero after the first.
  AudioBuffer periodic;
  for (int i = 0; i < 8000; ++i) periodic.samples.push_back(std::sin(2.0 * std::numbers::pi * 500.0 * i / 16000.0));
  const auto pf = spectral_llds(frame_signal(periodic, 20.0, 10.0, Window::kHamming));
  for (const auto& t : pf) {
    if (t.name != "spectralFlux") continue;
    for (std::size_t i = 1; i < t.values.size(); ++i) CHECK(std::abs(t.values[i]) < 1e-6);
  }
}

TEST_CASE("energy descriptors") {
  AudioBuffer silence;
  silence.samples.assign(3200, 0.0);
  const auto e = energy_llds(frames_of(silence));
  for (const auto& t : e) {
    if (t.name == "rmsEnergy" || t.name == "zcr") {
      for (double v : t.values) CHECK(v == 0.0);
    }
    if (t.name == "logEnergy") {
      for (double v : t.values) CHECK(v == doctest::Approx(std::log(kLogFloor)));
    }
  }

  AudioBuffer square;
  for (int i = 0; i < 16000; ++i) {
    // Half-sample phase offset keeps samples off zero.
    square.samples.push_back(std::sin(2.0 * std::numbers::pi * 100.0 * (i + 0.5) / 16000.0) >= 0 ? 1.0 : -1.0);
  }
  const auto rect = frame_signal(square, 20.0, 10.0, Window::kRect);
  for (const auto& t : energy_llds(rect)) {
    if (t.name != "zcr") continue;
    for (double v : t.values) CHECK(std::abs(v - 200.0) <= 0.02 * 200.0);
  }
}

TEST_CASE("pitch tracking") {
  SUBCASE("pure tone") {
    const auto a = tone(200.0, 0.5);
    const auto pt = pitch_track(a, frames_of(a));
    for (std::size_t i = 0; i < pt.n_frames(); ++i) {
      CHECK(pt.voiced(i));
      CHECK(std::abs(pt.f0_hz[i] - 200.0) <= 2.0);
    }
    const auto v = voicing_llds(pt);
    for (double h : v[2].values) CHECK(h == doctest::Approx(40.0).epsilon(0.05));
  }
  SUBCASE("white noise is mostly unvoiced") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 0.3);
    AudioBuffer a;
    for (int i = 0; i < 16000; ++i) a.samples.push_back(g(rng));
    const auto pt = pitch_track(a, frames_of(a));
    std::size_t unvoiced = 0;
    for (std::size_t i = 0; i < pt.n_frames(); ++i) unvoiced += pt.voiced(i) ? 0 : 1;
    CHECK(unvoiced >= 0.9 * pt.n_frames());
  }
  SUBCASE("silence") {
    AudioBuffer a;
    a.samples.assign(8000, 0.0);
    const auto pt = pitch_track(a, frames_of(a));
    for (double f : pt.f0_hz) CHECK(f == 0.0);
    const auto v = voicing_llds(pt);
    for (double h : v[2].values) CHECK(h == -10.0);
  }
}

TEST_CASE("jitter and shimmer") {
  SUBCASE("periodic pulses") {
    std::vector<double> t;
    for (double x = 0.01; x < 0.99; x += 0.005) t.push_back(x);
    const auto a = oracle::gaussian_pulses(t, 1.0);
    const auto pt = pitch_track(a, frames_of(a));
    const auto js = jitter_shimmer_llds(pt);
    REQUIRE(js[0].voiced_mask);
    CHECK(mean_over(js[0].values, *js[0].voiced_mask) < 1e-3);
    CHECK(mean_over(js[2].values, *js[2].voiced_mask) < 1e-3);
  }
  SUBCASE("alternating 5.0 / 5.2 ms periods") {
    std::vector<double> t;
    double x = 0.01;
    for (int k = 0; x < 0.99; ++k) {
      t.push_back(x);
      x += (k % 2 ? 0.0052 : 0.0050);
    }
    const auto a = oracle::gaussian_pulses(t, 1.0);
    const auto pt = pitch_track(a, frames_of(a));
    // Cycle-level check: every measured period is one of the two.
    for (double p : pt.periods_ms()) CHECK((std::abs(p - 5.0) < 0.05 || std::abs(p - 5.2) < 0.05));
    const auto js = jitter_shimmer_llds(pt);
    const double j = mean_over(js[0].values, *js[0].voiced_mask);
    CHECK(std::abs(j - 0.2 / 5.1) <= 0.05 * (0.2 / 5.1));
  }
  SUBCASE("values vanish outside the voiced mask") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.2);
    auto a = tone(150.0, 0.6);
    for (std::size_t i = 4000; i < 8000; ++i) a.samples[i] = g(rng);
    const auto js = jitter_shimmer_llds(pitch_track(a, frames_of(a)));
    for (const auto& traj : js) {
      for (std::size_t i = 0; i < traj.values.size(); ++i) {
        if (!(*traj.voiced_mask)[i]) CHECK(traj.values[i] == 0.0);
      }
    }
  }
}

TEST_CASE("deltas") {
  LldTrajectory c{"c", std::vector<double>(20, 3.0), {}};
  for (double v : deltas(c).values) CHECK(v == 0.0);
  LldTrajectory ramp{"r", {}, {}};
  for (int i = 0; i < 20; ++i) ramp.values.push_back(i);
  const auto d = deltas(ramp);
  CHECK(d.values.size() == 20);
  for (int i = 2; i < 18; ++i) CHECK(d.values[i] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("all descriptors stay finite on arbitrary input") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    AudioBuffer a;
    const int n = 400 + static_cast<int>(rng() % 6000);
    const int kind = trial % 3;
    for (int i = 0; i < n; ++i) {
      a.samples.push_back(kind == 0 ? u(rng) : kind == 1 ? (i % 97 == 0 ? 1.0 : 0.0) : 1e-9 * u(rng));
    }
    const auto an = analyze(a, {false, {}});
    for (const auto& t : f1_llds(an)) {
      for (double v : t.values) CHECK(std::isfinite(v));
    }
  }
}
