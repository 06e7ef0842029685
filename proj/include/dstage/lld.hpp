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

#ifndef DSTAGE_LLD_HPP_
#define DSTAGE_LLD_HPP_

#include <optional>
#include <string>
#include <vector>

#include "dstage/audio.hpp"

namespace dstage {

// One per-frame descriptor contour.
struct LldTrajectory {
  std::string name;
  std::vector<double> values;
  std::optional<std::vector<bool>> voiced_mask;
};

inline constexpr double kLogFloor = 1e-10;
inline constexpr int kNumMels = 26;
inline constexpr int kNumCepstra = 13;
inline constexpr int kNumSpectral = 35;
inline constexpr int kNumEnergy = 5;
inline constexpr int kNumVoicing = 3;
inline constexpr int kNumJitterShimmer = 3;
inline constexpr double kMelLowHz = 20.0;
inline constexpr double kMelHighHz = 8000.0;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters on the FFT bin grid, centers equally spaced in mel.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, std::size_t nfft, int sample_rate,
                double low_hz = kMelLowHz, double high_hz = kMelHighHz);

  int n_mels() const { return n_mels_; }
  std::size_t n_bins() const { return n_bins_; }
  // Row-major n_mels x n_bins weight matrix.
  const std::vector<double>& weights() const { return weights_; }

  void apply(std::span<const double> power, std::span<double> out) const;

 private:
  int n_mels_;
  std::size_t n_bins_;
  std::vector<double> weights_;
  std::vector<std::size_t> first_;
  std::vector<std::size_t> last_;
};

// |X_k|^2 of every frame, FFT size = next power of two >= frame_len.
struct PowerSpectra {
  std::vector<double> data;  // n_frames x n_bins
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::size_t nfft = 0;
  int sample_rate = kCanonicalRate;

  std::span<const double> frame(std::size_t i) const {
    return {data.data() + i * n_bins, n_bins};
  }
  double bin_hz(std::size_t k) const {
    return static_cast<double>(k) * sample_rate / static_cast<double>(nfft);
  }
};

PowerSpectra power_spectra(const FrameSequence& frames);

// Log mel energies (floored) per frame, n_frames x kNumMels.
std::vector<double> log_mel_energies(const PowerSpectra& spectra);

// 13 ortho-normalized DCT-II cepstra of 26 log mel energies.
std::vector<LldTrajectory> mfcc(const FrameSequence& frames);
std::vector<LldTrajectory> mfcc(const PowerSpectra& spectra);

// 26 log mel bands, centroid, flux, entropy, roll-off 25/50/75/90 %,
// frequency of the spectral minimum and maximum.
std::vector<LldTrajectory> spectral_llds(const FrameSequence& frames);
std::vector<LldTrajectory> spectral_llds(const PowerSpectra& spectra);

// Log energy, RMS, zero-crossing rate (crossings/s), 0-650 Hz and 4-8 kHz
// energy ratios.
std::vector<LldTrajectory> energy_llds(const FrameSequence& frames);
std::vector<LldTrajectory> energy_llds(const FrameSequence& frames,
                                       const PowerSpectra& spectra);

inline constexpr double kMinF0Hz = 55.0;
inline constexpr double kMaxF0Hz = 500.0;
inline constexpr double kVoicingThreshold = 0.45;

// Peaks of consecutive glottal cycles inside one voiced region.
struct CycleRun {
  std::vector<double> peak_times_s;
  std::vector<double> peak_amplitudes;
};

struct PitchTrack {
  std::vector<double> f0_hz;         // 0 when unvoiced
  std::vector<double> voicing_prob;  // normalized autocorrelation peak
  std::vector<CycleRun> runs;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = kCanonicalRate;

  std::size_t n_frames() const { return f0_hz.size(); }
  bool voiced(std::size_t i) const { return f0_hz[i] > 0.0; }
  std::vector<double> periods_ms() const;
  std::vector<double> cycle_peaks() const;
};

PitchTrack pitch_track(const AudioBuffer& audio, const FrameSequence& frames);

// {F0, voicing probability, HNR dB clamped to [-10, 40]}.
std::vector<LldTrajectory> voicing_llds(const PitchTrack& pt);

// {jitter local, jitter DDP, shimmer local}, carrying the voiced mask.
std::vector<LldTrajectory> jitter_shimmer_llds(const PitchTrack& pt);

// Regression deltas over +-half_window frames with replicated edges.
LldTrajectory deltas(const LldTrajectory& t, int half_window = 2);

}  // namespace dstage

#endif  // DSTAGE_LLD_HPP_
