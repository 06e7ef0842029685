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

#ifndef DSTAGE_PROSODY_HPP_
#define DSTAGE_PROSODY_HPP_

#include <optional>
#include <vector>

#include "dstage/audio.hpp"
#include "dstage/chat.hpp"
#include "dstage/error.hpp"
#include "dstage/features.hpp"
#include "dstage/lld.hpp"

namespace dstage {

inline constexpr double kPauseFloorDb = -50.0;
inline constexpr double kPauseBelowMedianDb = 25.0;
inline constexpr double kPeakAboveMedianDb = 2.0;
inline constexpr double kMinDipDb = 2.0;
inline constexpr double kDefaultMinPauseMs = 250.0;
inline constexpr double kSyllablesPerWord = 1.5;

struct ProsodyProfile {
  double words_per_minute = 0.0;
  std::size_t n_syllables = 0;
  double speech_duration_s = 0.0;
  double phonation_time_s = 0.0;
  std::size_t n_pauses = 0;
  double articulation_rate = 0.0;
  double avg_syllable_duration_s = 0.0;

  // Frozen f3 order.
  std::vector<double> as_vector() const;
};

// 10 ms block energies in dB full scale.
std::vector<double> block_energy_db(const AudioBuffer& audio);

// Syllable nuclei (seconds) from intensity peaks of the 50 ms smoothed
// energy contour inside voiced frames. `pitch` may be supplied when already
// computed on the same 16 kHz signal.
std::vector<double> detect_syllables(const AudioBuffer& audio,
                                     const PitchTrack* pitch = nullptr);

// Sub-threshold runs of at least `min_pause_ms`, excluding leading and
// trailing silence.
std::vector<Interval> detect_pauses(const AudioBuffer& audio,
                                    double min_pause_ms = kDefaultMinPauseMs);

// Without a word count, words are estimated from syllables with a warning.
ProsodyProfile prosody_profile(const AudioBuffer& audio,
                               std::optional<std::size_t> word_count,
                               Warnings* warnings = nullptr,
                               const PitchTrack* pitch = nullptr);

FeatureVector f3_vector(const AudioBuffer& audio,
                        std::optional<std::size_t> word_count,
                        Warnings* warnings = nullptr);
FeatureVector f3_vector(const UtteranceAnalysis& a,
                        std::optional<std::size_t> word_count,
                        Warnings* warnings = nullptr);

}  // namespace dstage

#endif  // DSTAGE_PROSODY_HPP_
