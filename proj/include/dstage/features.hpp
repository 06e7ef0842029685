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

#ifndef DSTAGE_FEATURES_HPP_
#define DSTAGE_FEATURES_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dstage/audio.hpp"
#include "dstage/functionals.hpp"
#include "dstage/lld.hpp"

namespace dstage {

enum class FeatureSetId { kF1, kF2, kF3, kF4, kFused };

std::string_view set_name(FeatureSetId id);
std::optional<FeatureSetId> parse_set_id(std::string_view name);

inline constexpr std::size_t kF1BaseLlds =
    kNumCepstra + kNumSpectral + kNumEnergy + kNumVoicing;
inline constexpr std::size_t kF1Dim = kF1BaseLlds * 3 * 39;
inline constexpr std::size_t kF2Dim = kNumJitterShimmer * 2 * 19;
inline constexpr std::size_t kF3Dim = 7;
inline constexpr std::size_t kF4Dim = 7;
static_assert(kF1BaseLlds == 56);
static_assert(kF1Dim == 6552);
static_assert(kF2Dim == 114);

// Frozen f3 and f4 member orders.
inline constexpr std::array<std::string_view, kF3Dim> kProsodyFields = {
    "words_per_minute", "n_syllables",       "speech_duration_s",
    "phonation_time_s", "n_pauses",          "articulation_rate",
    "avg_syllable_duration_s"};
inline constexpr std::array<std::string_view, kF4Dim> kEmotionClasses = {
    "anger", "happy", "neutral", "sad", "disgust", "boredom", "anxiety"};

// Bumped whenever any extraction parameter or layout changes. Caches and
// emotion models are keyed on recipe_hash().
inline constexpr std::string_view kRecipeVersion = "dstage-recipe-1";
std::uint64_t recipe_hash();

// Fixed dimension of a base set; 0 for kFused.
std::size_t set_dimension(FeatureSetId id);

struct FeatureVector {
  FeatureSetId set_id = FeatureSetId::kFused;
  std::vector<double> values;
  std::vector<std::string> names;
};

// Contiguous descriptor-family block inside f1.
struct FeatureBlock {
  std::string_view family;
  std::size_t offset;
  std::size_t size;
};
std::array<FeatureBlock, 4> f1_blocks();

// Frozen per-dimension names, e.g. "mfcc3_de_percentile95".
const std::vector<std::string>& feature_names(FeatureSetId id);
// Inverse of feature_names; throws std::out_of_range for unknown names.
std::size_t feature_index(FeatureSetId id, std::string_view name);

struct ExtractOptions {
  bool denoise = true;
  SpectralSubtraction denoiser;
};

// Signal-level analysis shared by the acoustic feature sets: the denoised
// 16 kHz signal, its 20 ms Hamming frames at a 10 ms hop, their power
// spectra, and the pitch track.
struct UtteranceAnalysis {
  AudioBuffer clean;
  FrameSequence frames;
  PowerSpectra spectra;
  PitchTrack pitch;
};

// Throws kAudioTooShort when not even one frame fits.
UtteranceAnalysis analyze(const AudioBuffer& audio,
                          const ExtractOptions& options = {});

// The 56 f1 descriptors in layout order (cepstral, spectral, energy, voicing).
std::vector<LldTrajectory> f1_llds(const UtteranceAnalysis& a);

FeatureVector f1_vector(const UtteranceAnalysis& a);
FeatureVector f1_vector(const AudioBuffer& audio,
                        const ExtractOptions& options = {});

// NoVoicedFrames yields the zero vector with a warning.
FeatureVector f2_vector(const UtteranceAnalysis& a,
                        Warnings* warnings = nullptr);
FeatureVector f2_vector(const AudioBuffer& audio,
                        const ExtractOptions& options = {},
                        Warnings* warnings = nullptr);

// Row-per-utterance feature table.
struct FeatureMatrix {
  FeatureSetId set_id = FeatureSetId::kFused;
  std::vector<std::string> names;
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  std::vector<double> values;  // rows() x cols(), row-major

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return names.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  void append(std::string id, std::string label, std::span<const double> v);
};

// CSV: header "utterance_id,label,<names...>", one row per utterance.
// Values are written in shortest round-trip form.
void write_feature_matrix(const std::filesystem::path& path,
                          const FeatureMatrix& m);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path,
                                  FeatureSetId set_id = FeatureSetId::kFused);

std::string format_double(double v);

}  // namespace dstage

#endif  // DSTAGE_FEATURES_HPP_
