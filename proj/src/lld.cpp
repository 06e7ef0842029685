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

#include "dstage/lld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dstage/fft.hpp"

namespace dstage {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(int n_mels, std::size_t nfft, int sample_rate,
                             double low_hz, double high_hz)
    : n_mels_(n_mels),
      n_bins_(nfft / 2 + 1),
      weights_(static_cast<std::size_t>(n_mels) * (nfft / 2 + 1), 0.0),
      first_(static_cast<std::size_t>(n_mels), 0),
      last_(static_cast<std::size_t>(n_mels), 0) {
  high_hz = std::min(high_hz, sample_rate / 2.0);
  const double mel_lo = hz_to_mel(low_hz);
  const double mel_hi = hz_to_mel(high_hz);
  std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }
  for (std::size_t m = 0; m < static_cast<std::size_t>(n_mels); ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    bool seen = false;
    for (std::size_t k = 0; k < n_bins_; ++k) {
      const double f = static_cast<double>(k) * sample_rate /
                       static_cast<double>(nfft);
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      weights_[m * n_bins_ + k] = w;
      if (w > 0.0) {
        if (!seen) first_[m] = k;
        seen = true;
        last_[m] = k;
      }
    }
  }
}

void MelFilterbank::apply(std::span<const double> power,
                          std::span<double> out) const {
  for (std::size_t m = 0; m < static_cast<std::size_t>(n_mels_); ++m) {
    double acc = 0.0;
    const double* w = weights_.data() + m * n_bins_;
    for (std::size_t k = first_[m]; k <= last_[m]; ++k) acc += w[k] * power[k];
    out[m] = acc;
  }
}

PowerSpectra power_spectra(const FrameSequence& frames) {
  PowerSpectra ps;
  ps.n_frames = frames.n_frames;
  ps.nfft = next_pow2(std::max<std::size_t>(frames.frame_len, 2));
  ps.n_bins = ps.nfft / 2 + 1;
  ps.sample_rate = frames.sample_rate;
  ps.data.resize(ps.n_frames * ps.n_bins);
  const Fft fft(ps.nfft);
  std::vector<double> buf;
  for (std::size_t i = 0; i < frames.n_frames; ++i) {
    fft.power_spectrum(frames.frame(i), buf);
    std::copy(buf.begin(), buf.end(), ps.data.begin() + i * ps.n_bins);
  }
  return ps;
}

std::vector<double> log_mel_energies(const PowerSpectra& spectra) {
  const MelFilterbank bank(kNumMels, spectra.nfft, spectra.sample_rate);
  std::vector<double> out(spectra.n_frames * kNumMels);
  for (std::size_t i = 0; i < spectra.n_frames; ++i) {
    std::span<double> row(out.data() + i * kNumMels, kNumMels);
    bank.apply(spectra.frame(i), row);
    for (double& v : row) v = std::log(std::max(v, kLogFloor));
  }
  return out;
}

std::vector<LldTrajectory> mfcc(const FrameSequence& frames) {
  return mfcc(power_spectra(frames));
}

std::vector<LldTrajectory> mfcc(const PowerSpectra& spectra) {
  const auto logmel = log_mel_energies(spectra);
  // DCT-II basis with orthonormal scaling.
  std::vector<double> basis(kNumCepstra * kNumMels);
  for (int c = 0; c < kNumCepstra; ++c) {
    const double scale = std::sqrt((c == 0 ? 1.0 : 2.0) / kNumMels);
    for (int m = 0; m < kNumMels; ++m) {
      basis[c * kNumMels + m] =
          scale * std::cos(std::numbers::pi * c * (m + 0.5) / kNumMels);
    }
  }
  std::vector<LldTrajectory> out(kNumCepstra);
  for (int c = 0; c < kNumCepstra; ++c) {
    out[c].name = "mfcc" + std::to_string(c);
    out[c].values.resize(spectra.n_frames);
  }
  for (std::size_t i = 0; i < spectra.n_frames; ++i) {
    const double* row = logmel.data() + i * kNumMels;
    for (int c = 0; c < kNumCepstra; ++c) {
      double acc = 0.0;
      for (int m = 0; m < kNumMels; ++m) acc += basis[c * kNumMels + m] * row[m];
      out[c].values[i] = acc;
    }
  }
  return out;
}

std::vector<LldTrajectory> spectral_llds(const FrameSequence& frames) {
  return spectral_llds(power_spectra(frames));
}

std::vector<LldTrajectory> spectral_llds(const PowerSpectra& spectra) {
  const std::size_t n = spectra.n_frames;
  std::vector<LldTrajectory> out;
  out.reserve(kNumSpectral);
  const auto logmel = log_mel_energies(spectra);
  for (int m = 0; m < kNumMels; ++m) {
    LldTrajectory t{"melband" + std::to_string(m), std::vector<double>(n), {}};
    for (std::size_t i = 0; i < n; ++i) t.values[i] = logmel[i * kNumMels + m];
    out.push_back(std::move(t));
  }
  const char* names[] = {"spectralCentroid",   "spectralFlux",
                         "spectralEntropy",    "spectralRollOff25",
                         "spectralRollOff50",  "spectralRollOff75",
                         "spectralRollOff90",  "spectralMinPos",
                         "spectralMaxPos"};
  const std::size_t first_extra = out.size();
  for (const char* name : names) {
    out.push_back({name, std::vector<double>(n, 0.0), {}});
  }
  auto col = [&](std::size_t j) -> std::vector<double>& {
    return out[first_extra + j].values;
  };

  const std::size_t nb = spectra.n_bins;
  std::vector<double> prev_mag(nb, 0.0);
  std::vector<double> mag(nb);
  constexpr double kRollOff[] = {0.25, 0.50, 0.75, 0.90};
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = spectra.frame(i);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);

    double mag_sum = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      mag[k] = std::sqrt(p[k]);
      mag_sum += mag[k];
    }
    if (mag_sum > 0.0) {
      for (double& v : mag) v /= mag_sum;
    }
    if (i > 0) {
      double flux = 0.0;
      for (std::size_t k = 0; k < nb; ++k) {
        const double d = mag[k] - prev_mag[k];
        flux += d * d;
      }
      col(1)[i] = std::sqrt(flux);
    }
    prev_mag = mag;

    if (total > 0.0) {
      double centroid = 0.0;
      double entropy = 0.0;
      for (std::size_t k = 0; k < nb; ++k) {
        centroid += spectra.bin_hz(k) * p[k];
        const double q = p[k] / total;
        if (q > 0.0) entropy -= q * std::log2(q);
      }
      col(0)[i] = centroid / total;
      col(2)[i] = entropy;
      double cum = 0.0;
      std::size_t r = 0;
      for (std::size_t k = 0; k < nb && r < 4; ++k) {
        cum += p[k];
        while (r < 4 && cum >= kRollOff[r] * total) {
          col(3 + r)[i] = spectra.bin_hz(k);
          ++r;
        }
      }
    }
    const auto mn = std::min_element(p.begin(), p.end());
    const auto mx = std::max_element(p.begin(), p.end());
    col(7)[i] = spectra.bin_hz(static_cast<std::size_t>(mn - p.begin()));
    col(8)[i] = spectra.bin_hz(static_cast<std::size_t>(mx - p.begin()));
  }
  return out;
}

std::vector<LldTrajectory> energy_llds(const FrameSequence& frames) {
  return energy_llds(frames, power_spectra(frames));
}

std::vector<LldTrajectory> energy_llds(const FrameSequence& frames,
                                       const PowerSpectra& spectra) {
  const std::size_t n = frames.n_frames;
  std::vector<LldTrajectory> out = {
      {"logEnergy", std::vector<double>(n), {}},
      {"rmsEnergy", std::vector<double>(n), {}},
      {"zcr", std::vector<double>(n), {}},
      {"lowBandRatio", std::vector<double>(n), {}},
      {"highBandRatio", std::vector<double>(n), {}},
  };
  const double frame_s =
      static_cast<double>(frames.frame_len) / frames.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = frames.frame(i);
    double energy = 0.0;
    std::size_t crossings = 0;
    // The frame is read circularly so N samples give N intervals.
    for (std::size_t j = 0; j < x.size(); ++j) {
      energy += x[j] * x[j];
      const double prev = x[j > 0 ? j - 1 : x.size() - 1];
      if ((prev < 0.0 && x[j] > 0.0) || (prev > 0.0 && x[j] < 0.0)) ++crossings;
    }
    out[0].values[i] = std::log(std::max(energy, kLogFloor));
    out[1].values[i] = std::sqrt(energy / static_cast<double>(x.size()));
    out[2].values[i] = static_cast<double>(crossings) / frame_s;

    const auto p = spectra.frame(i);
    double total = 0.0;
    double low = 0.0;
    double high = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double f = spectra.bin_hz(k);
      total += p[k];
      if (f <= 650.0) low += p[k];
      if (f >= 4000.0 && f <= 8000.0) high += p[k];
    }
    if (total > 0.0) {
      out[3].values[i] = low / total;
      out[4].values[i] = high / total;
    }
  }
  return out;
}

LldTrajectory deltas(const LldTrajectory& t, int half_window) {
  if (half_window < 1) {
    throw std::invalid_argument("deltas: half_window must be >= 1");
  }
  LldTrajectory d;
  const bool second = t.name.size() >= 3 &&
                      t.name.compare(t.name.size() - 3, 3, "_de") == 0;
  d.name = second ? t.name.substr(0, t.name.size() - 3) + "_dede"
                  : t.name + "_de";
  d.voiced_mask = t.voiced_mask;
  const auto n = static_cast<std::ptrdiff_t>(t.values.size());
  d.values.assign(t.values.size(), 0.0);
  if (n == 0) return d;
  double norm = 0.0;
  for (int k = 1; k <= half_window; ++k) norm += static_cast<double>(k) * k;
  norm *= 2.0;
  const auto at = [&](std::ptrdiff_t i) {
    return t.values[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))];
  };
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 1; k <= half_window; ++k) acc += k * (at(i + k) - at(i - k));
    d.values[static_cast<std::size_t>(i)] = acc / norm;
  }
  return d;
}

}  // namespace dstage
