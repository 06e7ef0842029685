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

#include "dstage/audio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "dstage/fft.hpp"

namespace dstage {

namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

double bessel_i0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

std::vector<double> make_window(Window kind, std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2 || kind == Window::kRect) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n) {
    const double c = std::cos(2.0 * std::numbers::pi * n / denom);
    w[n] = kind == Window::kHamming ? 0.54 - 0.46 * c : 0.5 - 0.5 * c;
  }
  return w;
}

std::size_t frame_count(std::size_t len, std::size_t frame_len,
                        std::size_t hop) {
  if (frame_len == 0 || hop == 0 || len < frame_len) return 0;
  return (len - frame_len) / hop + 1;
}

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") ||
      !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kMalformedWav, "missing RIFF/WAVE header");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (chunk_size > bytes.size() - body) {
      throw Error(ErrorCode::kMalformedWav, "truncated chunk");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16) {
        throw Error(ErrorCode::kMalformedWav, "fmt chunk too small");
      }
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 26) {
          throw Error(ErrorCode::kMalformedWav, "extensible fmt too small");
        }
        format = read_u16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, chunk_size);
      have_data = true;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt || !have_data) {
    throw Error(ErrorCode::kMalformedWav, "missing fmt or data chunk");
  }
  if (channels != 1 && channels != 2) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "unsupported channel count " + std::to_string(channels));
  }
  if (rate == 0) throw Error(ErrorCode::kMalformedWav, "zero sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    throw Error(ErrorCode::kUnsupportedEncoding,
                "format " + std::to_string(format) + " with " +
                    std::to_string(bits) + " bits");
  }
  const std::size_t sample_bytes = bits / 8;
  const std::size_t frame_bytes = sample_bytes * channels;
  if (data.size() % frame_bytes != 0) {
    throw Error(ErrorCode::kMalformedWav, "partial sample frame in data");
  }
  const std::size_t n = data.size() / frame_bytes;

  AudioBuffer out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = i * frame_bytes + c * sample_bytes;
      if (pcm16) {
        const auto v = static_cast<std::int16_t>(read_u16(data, at));
        acc += v / 32768.0;
      } else {
        const std::uint32_t u = read_u32(data, at);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += static_cast<double>(f);
      }
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

AudioBuffer load_audio(const std::filesystem::path& path) {
  return resample(read_wav(path), kCanonicalRate);
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioBuffer& audio) {
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : audio.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

void write_wav_pcm16(const std::filesystem::path& path,
                     const AudioBuffer& audio) {
  const auto bytes = encode_wav_pcm16(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioBuffer resample(const AudioBuffer& audio, int target_rate) {
  if (target_rate <= 0) {
    throw std::invalid_argument("resample: target_rate must be positive");
  }
  if (target_rate == audio.sample_rate) return audio;

  const double ratio = static_cast<double>(target_rate) / audio.sample_rate;
  const double cutoff = std::min(1.0, ratio) * 0.97;
  constexpr double kZeroCrossings = 16.0;
  constexpr double kBeta = 8.6;
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = bessel_i0(kBeta);

  const auto& x = audio.samples;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * ratio));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::ptrdiff_t>(
        0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(
        n_in - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double d = t - static_cast<double>(k);
      const double arg = cutoff * d;
      const double sinc =
          std::abs(arg) < 1e-12
              ? 1.0
              : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double r = d / half_width;
      const double win = bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                         i0_beta;
      acc += x[static_cast<std::size_t>(k)] * sinc * win;
    }
    out.samples[n] = cutoff * acc;
  }
  return out;
}

FrameSequence frame_signal(const AudioBuffer& audio, double frame_ms,
                           double hop_ms, Window window) {
  if (!(hop_ms > 0.0) || frame_ms < hop_ms) {
    throw std::invalid_argument("frame_signal: need frame_ms >= hop_ms > 0");
  }
  FrameSequence fs;
  fs.sample_rate = audio.sample_rate;
  fs.frame_len = static_cast<std::size_t>(
      std::llround(frame_ms * audio.sample_rate / 1000.0));
  fs.hop = static_cast<std::size_t>(
      std::llround(hop_ms * audio.sample_rate / 1000.0));
  fs.hop = std::max<std::size_t>(fs.hop, 1);
  fs.frame_len = std::max(fs.frame_len, fs.hop);
  fs.n_frames = frame_count(audio.size(), fs.frame_len, fs.hop);
  if (fs.n_frames == 0) {
    fs.too_short = true;
    return fs;
  }
  const auto w = make_window(window, fs.frame_len);
  fs.data.resize(fs.n_frames * fs.frame_len);
  for (std::size_t i = 0; i < fs.n_frames; ++i) {
    const double* src = audio.samples.data() + i * fs.hop;
    double* dst = fs.data.data() + i * fs.frame_len;
    for (std::size_t j = 0; j < fs.frame_len; ++j) dst[j] = src[j] * w[j];
  }
  return fs;
}

AudioBuffer spectral_subtract(const AudioBuffer& audio,
                              const SpectralSubtraction& params) {
  if (params.oversubtraction < 1.0 || !(params.floor > 0.0) ||
      params.floor > 1.0 || params.noise_frames < 1) {
    throw std::invalid_argument("spectral_subtract: invalid parameters");
  }
  // 20 ms periodic-Hann analysis at 50% overlap sums to one, so plain
  // overlap-add of the modified frames resynthesizes the signal.
  const auto frame_len = static_cast<std::size_t>(
      std::llround(0.020 * audio.sample_rate));
  const std::size_t hop = frame_len / 2;
  if (frame_len < 2 || audio.size() < frame_len) {
    throw Error(ErrorCode::kAudioTooShort,
                "spectral_subtract needs at least one 20 ms frame");
  }

  std::vector<double> window(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n) {
    window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n /
                                     static_cast<double>(frame_len));
  }

  const std::size_t len = audio.size();
  std::vector<double> padded(hop, 0.0);
  padded.insert(padded.end(), audio.samples.begin(), audio.samples.end());
  padded.resize(padded.size() + frame_len + hop, 0.0);
  const std::size_t n_frames = frame_count(padded.size(), frame_len, hop);

  const Fft fft(next_pow2(frame_len));
  const std::size_t nfft = fft.size();
  const std::size_t n_bins = nfft / 2 + 1;

  std::vector<std::vector<std::complex<double>>> spectra(n_frames);
  std::vector<double> energy(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto& spec = spectra[f];
    spec.assign(nfft, {0.0, 0.0});
    for (std::size_t n = 0; n < frame_len; ++n) {
      const double v = padded[f * hop + n] * window[n];
      spec[n] = v;
      energy[f] += v * v;
    }
    fft.forward(spec);
  }

  // Noise frames are drawn from frames lying wholly inside the signal so the
  // zero padding does not masquerade as silence.
  std::vector<std::size_t> candidates;
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t start = f * hop;
    if (start >= hop && start + frame_len <= hop + len) candidates.push_back(f);
  }
  if (candidates.empty()) {
    candidates.resize(n_frames);
    std::iota(candidates.begin(), candidates.end(), 0);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) {
                     return energy[a] < energy[b];
                   });
  const std::size_t n_noise =
      std::min<std::size_t>(candidates.size(),
                            static_cast<std::size_t>(params.noise_frames));
  std::vector<double> noise_mag(n_bins, 0.0);
  for (std::size_t i = 0; i < n_noise; ++i) {
    const auto& spec = spectra[candidates[i]];
    for (std::size_t k = 0; k < n_bins; ++k) noise_mag[k] += std::abs(spec[k]);
  }
  for (double& m : noise_mag) m /= static_cast<double>(n_noise);

  std::vector<double> out(padded.size(), 0.0);
  std::vector<double> wsum(padded.size(), 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    auto& spec = spectra[f];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double mag = std::abs(spec[k]);
      const double kept = std::max(mag - params.oversubtraction * noise_mag[k],
                                   params.floor * mag);
      const double gain = mag > 0.0 ? kept / mag : 0.0;
      spec[k] *= gain;
      if (k != 0 && k != nfft / 2) spec[nfft - k] = std::conj(spec[k]);
    }
    fft.inverse(spec);
    for (std::size_t n = 0; n < frame_len; ++n) {
      out[f * hop + n] += spec[n].real() / static_cast<double>(nfft);
      wsum[f * hop + n] += window[n];
    }
  }

  AudioBuffer result;
  result.sample_rate = audio.sample_rate;
  result.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double w = wsum[hop + i];
    result.samples[i] = w > 1e-9 ? out[hop + i] / w : 0.0;
  }
  return result;
}

}  // namespace dstage
