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

#ifndef DSTAGE_SYNTH_HPP_
#define DSTAGE_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dstage/audio.hpp"
#include "dstage/chat.hpp"

namespace dstage {

// Source-filter voice: a jittered glottal pulse train exciting two damped
// resonances.
struct VoiceParams {
  double f0_hz = 150.0;
  double f0_variability = 0.1;  // relative depth of the slow F0 drift
  double jitter = 0.01;         // relative cycle-to-cycle period spread
  double shimmer = 0.05;        // relative cycle-to-cycle amplitude spread
  double formant1_hz = 600.0;
  double formant2_hz = 1500.0;
  double amplitude = 0.3;
};

// Timing of one speaker's phrases.
struct StyleParams {
  double syllables_per_s = 4.0;
  double pause_min_s = 0.3;
  double pause_max_s = 0.5;
  int phrases_per_turn = 2;
  int syllables_min = 3;
  int syllables_max = 6;
  double filler_rate = 0.1;  // chance of a &uh per phrase
};

// One rendered utterance plus its CHAT transcript (empty for emotion data).
struct SynthUtterance {
  std::string utterance_id;
  std::string label;
  std::string speaker_id;
  AudioBuffer audio;
  std::string cha;
  std::size_t par_words = 0;
};

inline constexpr double kSynthNoiseRms = 0.0007;

std::vector<std::string> dementia_labels();  // HC, MCI, AD

// Label must be one of dementia_labels().
StyleParams dementia_style(const std::string& label);
VoiceParams dementia_voice(const std::string& label, double speaker_f0);

SynthUtterance synth_dementia_utterance(const std::string& label,
                                        const std::string& utterance_id,
                                        const std::string& speaker_id,
                                        std::uint64_t seed);
// Label must be one of the seven emotion classes.
SynthUtterance synth_emotion_utterance(const std::string& label,
                                       const std::string& utterance_id,
                                       std::uint64_t seed);

// Writes wav/, cha/ and manifest.csv under out_dir. Utterances are grouped
// by class in the given order; every speaker contributes two utterances.
Manifest write_dementia_corpus(
    const std::filesystem::path& out_dir,
    const std::vector<std::pair<std::string, std::size_t>>& counts,
    std::uint64_t seed);
Manifest write_dementia_corpus(const std::filesystem::path& out_dir,
                               std::size_t n_per_class, std::uint64_t seed);
Manifest write_emotion_corpus(const std::filesystem::path& out_dir,
                              std::size_t n_per_class, std::uint64_t seed);

// Bursts of a harmonic vowel-like tone separated by silence, starting and
// ending with `gap_s` of silence. Ramps are 5 ms.
AudioBuffer burst_train(int n_bursts, double burst_s, double gap_s,
                        double f0_hz = 150.0, double amplitude = 0.3);

}  // namespace dstage

#endif  // DSTAGE_SYNTH_HPP_
