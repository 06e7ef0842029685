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

#include "dstage/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dstage {

namespace {

constexpr double kBlockMs = 10.0;
constexpr int kSmoothBlocks = 5;
constexpr double kPowerFloor = 1e-12;

AudioBuffer at_canonical_rate(const AudioBuffer& audio) {
  return audio.sample_rate == kCanonicalRate ? audio
                                             : resample(audio, kCanonicalRate);
}

std::size_t block_len(int sample_rate) {
  return static_cast<std::size_t>(std::lround(sample_rate * kBlockMs / 1000.0));
}

std::vector<double> block_power(const AudioBuffer& audio) {
  const std::size_t len = block_len(audio.sample_rate);
  const std::size_t n = audio.size() / len;
  std::vector<double> p(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      const double v = audio.samples[b * len + j];
      acc += v * v;
    }
    p[b] = acc / static_cast<double>(len);
  }
  return p;
}

double to_db(double power) { return 10.0 * std::log10(std::max(power, kPowerFloor)); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

struct Segmentation {
  std::vector<bool> sounding;
  std::ptrdiff_t first = -1;
  std::ptrdiff_t last = -1;
};

Segmentation segment(const std::vector<double>& db) {
  Segmentation s;
  const double threshold =
      std::max(kPauseFloorDb, median(db) - kPauseBelowMedianDb);
  s.sounding.resize(db.size());
  for (std::size_t b = 0; b < db.size(); ++b) {
    s.sounding[b] = db[b] > threshold;
    if (s.sounding[b]) {
      if (s.first < 0) s.first = static_cast<std::ptrdiff_t>(b);
      s.last = static_cast<std::ptrdiff_t>(b);
    }
  }
  return s;
}

std::vector<Interval> pauses_from(const Segmentation& s, double min_pause_ms) {
  std::vector<Interval> out;
  if (s.first < 0) return out;
  std::ptrdiff_t b = s.first;
  while (b <= s.last) {
    if (s.sounding[static_cast<std::size_t>(b)]) {
      ++b;
      continue;
    }
    std::ptrdiff_t e = b;
    while (e <= s.last && !s.sounding[static_cast<std::size_t>(e)]) ++e;
    const double ms = static_cast<double>(e - b) * kBlockMs;
    if (ms >= min_pause_ms) {
      out.push_back({static_cast<std::int64_t>(b * 10),
                     static_cast<std::int64_t>(e * 10)});
    }
    b = e;
  }
  return out;
}

}  // namespace

std::vector<double> ProsodyProfile::as_vector() const {
  return {words_per_minute,
          static_cast<double>(n_syllables),
          speech_duration_s,
          phonation_time_s,
          static_cast<double>(n_pauses),
          articulation_rate,
          avg_syllable_duration_s};
}

std::vector<double> block_energy_db(const AudioBuffer& audio) {
  auto p = block_power(audio);
  for (double& v : p) v = to_db(v);
  return p;
}

std::vector<double> detect_syllables(const AudioBuffer& input,
                                     const PitchTrack* pitch) {
  const AudioBuffer audio = at_canonical_rate(input);
  const auto power = block_power(audio);
  const std::size_t n = power.size();
  if (n < 3) return {};

  PitchTrack own;
  if (pitch == nullptr) {
    const auto frames = frame_signal(audio, 20.0, 10.0, Window::kHamming);
    own = pitch_track(audio, frames);
    pitch = &own;
  }
  if (pitch->n_frames() == 0) return {};

  std::vector<double> raw_db(n);
  for (std::size_t b = 0; b < n; ++b) raw_db[b] = to_db(power[b]);
  const double peak_floor = median(raw_db) + kPeakAboveMedianDb;

  std::vector<double> smooth(n);
  const auto half = static_cast<std::ptrdiff_t>(kSmoothBlocks / 2);
  for (std::size_t b = 0; b < n; ++b) {
    const auto c = static_cast<std::ptrdiff_t>(b);
    const auto lo = std::max<std::ptrdiff_t>(0, c - half);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, c + half);
    double acc = 0.0;
    for (auto k = lo; k <= hi; ++k) acc += power[static_cast<std::size_t>(k)];
    smooth[b] = to_db(acc / static_cast<double>(hi - lo + 1));
  }

  // Block b is centered at 10 b + 5 ms, between pitch frames b - 1 and b.
  const auto voiced_at = [&](std::size_t b) {
    const std::size_t last = pitch->n_frames() - 1;
    return pitch->voiced(std::min(b, last)) ||
           (b > 0 && pitch->voiced(std::min(b - 1, last)));
  };

  std::vector<std::size_t> kept;
  for (std::size_t b = 1; b + 1 < n; ++b) {
    if (!(smooth[b] > smooth[b - 1] && smooth[b] >= smooth[b + 1])) continue;
    if (smooth[b] < peak_floor || !voiced_at(b)) continue;
    if (kept.empty()) {
      kept.push_back(b);
      continue;
    }
    const std::size_t q = kept.back();
    const double dip = *std::min_element(smooth.begin() + static_cast<std::ptrdiff_t>(q),
                                         smooth.begin() + static_cast<std::ptrdiff_t>(b) + 1);
    if (std::min(smooth[q], smooth[b]) - dip >= kMinDipDb) {
      kept.push_back(b);
    } else if (smooth[b] > smooth[q]) {
      kept.back() = b;
    }
  }
  std::vector<double> times;
  times.reserve(kept.size());
  for (std::size_t b : kept) times.push_back((static_cast<double>(b) + 0.5) * kBlockMs / 1000.0);
  return times;
}

std::vector<Interval> detect_pauses(const AudioBuffer& input,
                                    double min_pause_ms) {
  if (!(min_pause_ms > 0.0)) {
    throw std::invalid_argument("detect_pauses: min_pause_ms must be > 0");
  }
  return pauses_from(segment(block_energy_db(at_canonical_rate(input))),
                     min_pause_ms);
}

ProsodyProfile prosody_profile(const AudioBuffer& input,
                               std::optional<std::size_t> word_count,
                               Warnings* warnings, const PitchTrack* pitch) {
  const AudioBuffer audio = at_canonical_rate(input);
  ProsodyProfile p;
  const auto seg = segment(block_energy_db(audio));
  const auto pauses = pauses_from(seg, kDefaultMinPauseMs);
  const auto syllables = detect_syllables(audio, pitch);

  if (seg.first >= 0) {
    p.speech_duration_s =
        static_cast<double>(seg.last - seg.first + 1) * kBlockMs / 1000.0;
  }
  double pause_s = 0.0;
  for (const auto& iv : pauses) pause_s += static_cast<double>(iv.length_ms()) / 1000.0;
  p.n_pauses = pauses.size();
  p.phonation_time_s = std::max(0.0, p.speech_duration_s - pause_s);
  p.n_syllables = syllables.size();

  double words = 0.0;
  if (word_count) {
    words = static_cast<double>(*word_count);
  } else {
    words = static_cast<double>(p.n_syllables) / kSyllablesPerWord;
    warn(warnings, "no transcript word count; words estimated from syllables");
  }
  p.words_per_minute =
      p.speech_duration_s > 0.0 ? 60.0 * words / p.speech_duration_s : 0.0;
  p.articulation_rate = p.phonation_time_s > 0.0
                            ? static_cast<double>(p.n_syllables) / p.phonation_time_s
                            : 0.0;
  p.avg_syllable_duration_s =
      p.n_syllables > 0 ? p.phonation_time_s / static_cast<double>(p.n_syllables)
                        : 0.0;
  return p;
}

FeatureVector f3_vector(const AudioBuffer& audio,
                        std::optional<std::size_t> word_count,
                        Warnings* warnings) {
  FeatureVector v;
  v.set_id = FeatureSetId::kF3;
  v.values = prosody_profile(audio, word_count, warnings).as_vector();
  v.names = feature_names(FeatureSetId::kF3);
  return v;
}

FeatureVector f3_vector(const UtteranceAnalysis& a,
                        std::optional<std::size_t> word_count,
                        Warnings* warnings) {
  FeatureVector v;
  v.set_id = FeatureSetId::kF3;
  v.values = prosody_profile(a.clean, word_count, warnings, &a.pitch).as_vector();
  v.names = feature_names(FeatureSetId::kF3);
  return v;
}

}  // namespace dstage
