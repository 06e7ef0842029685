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

#ifndef DSTAGE_AUDIO_HPP_
#define DSTAGE_AUDIO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dstage/error.hpp"

namespace dstage {

// All feature extraction runs at this rate; inputs are resampled on load.
inline constexpr int kCanonicalRate = 16000;

// Mono PCM at a known rate. Samples nominally lie in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

enum class Window { kHamming, kHann, kRect };

std::vector<double> make_window(Window kind, std::size_t length);

// Row-major matrix of windowed frames.
struct FrameSequence {
  std::vector<double> data;
  std::size_t n_frames = 0;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = kCanonicalRate;
  // Set when the signal is shorter than one frame; the sequence is empty.
  bool too_short = false;

  std::span<const double> frame(std::size_t i) const {
    return {data.data() + i * frame_len, frame_len};
  }
  double frame_period_s() const {
    return static_cast<double>(hop) / sample_rate;
  }
};

// floor((len - frame_len) / hop) + 1 for len >= frame_len, 0 otherwise.
std::size_t frame_count(std::size_t len, std::size_t frame_len,
                        std::size_t hop);

// Decodes a RIFF/WAVE image (PCM16 or IEEE float32, 1 or 2 channels).
// Stereo is averaged to mono. The native rate is kept.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
AudioBuffer read_wav(const std::filesystem::path& path);

// Reads a WAV file and resamples it to kCanonicalRate.
AudioBuffer load_audio(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio);
void write_wav_pcm16(const std::filesystem::path& path,
                     const AudioBuffer& audio);

// Kaiser-windowed sinc interpolation. Equal rates return a copy.
AudioBuffer resample(const AudioBuffer& audio, int target_rate);

FrameSequence frame_signal(const AudioBuffer& audio, double frame_ms,
                           double hop_ms, Window window);

struct SpectralSubtraction {
  double oversubtraction = 2.0;
  double floor = 0.02;
  int noise_frames = 10;
};

// Magnitude spectral subtraction with overlap-add resynthesis:
//   |Y| = max(|X| - alpha * |N|, beta * |X|), phase of X kept.
// |N| is the mean magnitude of the `noise_frames` lowest-energy frames.
// Throws kAudioTooShort when the input is shorter than one 20 ms frame.
AudioBuffer spectral_subtract(const AudioBuffer& audio,
                              const SpectralSubtraction& params = {});

}  // namespace dstage

#endif  // DSTAGE_AUDIO_HPP_
