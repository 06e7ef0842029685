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

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "dstage/lld.hpp"

namespace dstage {

namespace {

constexpr double kSilenceMeanSquare = 1e-10;
// First correlation peak within this fraction of the global maximum wins,
// which keeps period doubling out of the estimate.
constexpr double kPeakPreference = 0.9;
constexpr double kCycleFloor = 0.3;

struct PeakEstimate {
  double lag = 0.0;
  double height = 0.0;
};

PeakEstimate best_lag(const std::vector<double>& seg, std::size_t window,
                      std::size_t lag_min, std::size_t lag_max) {
  double e0 = 0.0;
  for (std::size_t n = 0; n < window; ++n) e0 += seg[n] * seg[n];
  if (e0 / static_cast<double>(window) < kSilenceMeanSquare) return {};

  // r(lag) for lag in [lag_min - 1, lag_max + 1]
  const std::size_t lo = lag_min - 1;
  const std::size_t hi = lag_max + 1;
  std::vector<double> r(hi - lo + 1, 0.0);
  double e_lag = 0.0;
  for (std::size_t n = 0; n < window; ++n) e_lag += seg[lo + n] * seg[lo + n];
  for (std::size_t lag = lo; lag <= hi; ++lag) {
    if (lag > lo) {
      const double out = seg[lag - 1];
      const double in = seg[lag - 1 + window];
      e_lag += in * in - out * out;
    }
    double num = 0.0;
    for (std::size_t n = 0; n < window; ++n) num += seg[n] * seg[n + lag];
    const double den = std::sqrt(e0 * std::max(e_lag, 0.0));
    r[lag - lo] = den > 0.0 ? num / den : 0.0;
  }

  double r_max = 0.0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    r_max = std::max(r_max, r[lag - lo]);
  }
  if (r_max <= 0.0) return {};

  std::size_t chosen = 0;
  for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
    const double v = r[lag - lo];
    if (v >= kPeakPreference * r_max && v >= r[lag - lo - 1] &&
        v >= r[lag - lo + 1]) {
      chosen = lag;
      break;
    }
  }
  if (chosen == 0) {
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag - lo] == r_max) {
        chosen = lag;
        break;
      }
    }
  }
  const double a = r[chosen - lo - 1];
  const double b = r[chosen - lo];
  const double c = r[chosen - lo + 1];
  const double curvature = a - 2.0 * b + c;
  double delta = curvature < 0.0 ? 0.5 * (a - c) / curvature : 0.0;
  delta = std::clamp(delta, -0.5, 0.5);
  return {static_cast<double>(chosen) + delta, b};
}

// Sub-sample location and height of the maximum of x[lo, hi).
std::pair<double, double> refine_peak(const std::vector<double>& x,
                                      std::size_t lo, std::size_t hi) {
  std::size_t k = lo;
  for (std::size_t i = lo; i < hi; ++i) {
    if (x[i] > x[k]) k = i;
  }
  if (k == 0 || k + 1 >= x.size()) return {static_cast<double>(k), x[k]};
  const double a = x[k - 1];
  const double b = x[k];
  const double c = x[k + 1];
  const double curvature = a - 2.0 * b + c;
  if (curvature >= 0.0) return {static_cast<double>(k), b};
  const double delta = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
  return {static_cast<double>(k) + delta, b - 0.25 * (a - c) * delta};
}

}  // namespace

std::vector<double> PitchTrack::periods_ms() const {
  std::vector<double> out;
  for (const auto& run : runs) {
    for (std::size_t j = 1; j < run.peak_times_s.size(); ++j) {
      out.push_back(1000.0 * (run.peak_times_s[j] - run.peak_times_s[j - 1]));
    }
  }
  return out;
}

std::vector<double> PitchTrack::cycle_peaks() const {
  std::vector<double> out;
  for (const auto& run : runs) {
    out.insert(out.end(), run.peak_amplitudes.begin(),
               run.peak_amplitudes.end());
  }
  return out;
}

PitchTrack pitch_track(const AudioBuffer& audio, const FrameSequence& frames) {
  PitchTrack pt;
  pt.frame_len = frames.frame_len;
  pt.hop = frames.hop;
  pt.sample_rate = audio.sample_rate;
  const std::size_t n_frames = frames.n_frames;
  pt.f0_hz.assign(n_frames, 0.0);
  pt.voicing_prob.assign(n_frames, 0.0);
  if (n_frames == 0) return pt;

  const double sr = audio.sample_rate;
  const auto lag_min = static_cast<std::size_t>(std::floor(sr / kMaxF0Hz));
  const auto lag_max = static_cast<std::size_t>(std::ceil(sr / kMinF0Hz));
  const std::size_t window = frames.frame_len;
  const std::size_t span = window + lag_max + 2;
  const auto& x = audio.samples;
  const auto len = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> seg(span);
  for (std::size_t i = 0; i < n_frames; ++i) {
    // Analysis span centered on the frame center.
    const auto center =
        static_cast<std::ptrdiff_t>(i * frames.hop + frames.frame_len / 2);
    std::ptrdiff_t start =
        center - static_cast<std::ptrdiff_t>(window / 2 + lag_max / 2) - 1;
    // Slide the span back inside the signal when it fits.
    if (len >= static_cast<std::ptrdiff_t>(span)) {
      start = std::clamp<std::ptrdiff_t>(start, 0, len - static_cast<std::ptrdiff_t>(span));
    }
    double mean = 0.0;
    for (std::size_t n = 0; n < span; ++n) {
      const std::ptrdiff_t at = start + static_cast<std::ptrdiff_t>(n);
      seg[n] = (at >= 0 && at < len) ? x[static_cast<std::size_t>(at)] : 0.0;
      mean += seg[n];
    }
    mean /= static_cast<double>(span);
    for (double& v : seg) v -= mean;

    const PeakEstimate peak = best_lag(seg, window, lag_min, lag_max);
    const double prob = std::clamp(peak.height, 0.0, 1.0);
    pt.voicing_prob[i] = prob;
    if (peak.lag > 0.0 && prob >= kVoicingThreshold) {
      pt.f0_hz[i] = std::clamp(sr / peak.lag, kMinF0Hz, kMaxF0Hz);
    }
  }

  // Cycle peaks inside each run of voiced frames.
  std::size_t i = 0;
  while (i < n_frames) {
    if (!pt.voiced(i)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n_frames && pt.voiced(j + 1)) ++j;
    const std::size_t region_lo = i * frames.hop;
    const std::size_t region_hi =
        std::min(x.size(), j * frames.hop + frames.frame_len);
    const auto local_period = [&](double pos) {
      const double idx =
          (pos - static_cast<double>(frames.frame_len) / 2.0) / frames.hop;
      const auto f = static_cast<std::size_t>(std::clamp(
          std::llround(idx), static_cast<long long>(i), static_cast<long long>(j)));
      return sr / pt.f0_hz[f];
    };

    // Track outward from the strongest peak; windows whose maximum falls
    // below a fraction of it hold no cycle.
    auto [anchor, anchor_amp] = refine_peak(x, region_lo, region_hi);
    const double floor_amp = kCycleFloor * anchor_amp;
    std::vector<std::pair<double, double>> back;
    double pos = anchor;
    for (;;) {
      const double period = local_period(pos);
      const double a = std::floor(pos - 1.25 * period);
      if (a < static_cast<double>(region_lo)) break;
      const auto lo = static_cast<std::size_t>(a);
      const auto end = static_cast<std::size_t>(std::ceil(pos - 0.75 * period));
      if (lo >= end) break;
      const auto [p, amp] = refine_peak(x, lo, end);
      if (amp < floor_amp) break;
      back.emplace_back(p, amp);
      pos = p;
    }
    CycleRun run;
    for (auto it = back.rbegin(); it != back.rend(); ++it) {
      run.peak_times_s.push_back(it->first / sr);
      run.peak_amplitudes.push_back(it->second);
    }
    run.peak_times_s.push_back(anchor / sr);
    run.peak_amplitudes.push_back(anchor_amp);
    pos = anchor;
    for (;;) {
      const double period = local_period(pos);
      const auto lo = static_cast<std::size_t>(std::ceil(pos + 0.75 * period));
      const auto end = static_cast<std::size_t>(std::floor(pos + 1.25 * period)) + 1;
      if (end > region_hi || lo >= end) break;
      const auto [p, amp] = refine_peak(x, lo, end);
      if (amp < floor_amp) break;
      run.peak_times_s.push_back(p / sr);
      run.peak_amplitudes.push_back(amp);
      pos = p;
    }
    pt.runs.push_back(std::move(run));
    i = j + 1;
  }
  return pt;
}

std::vector<LldTrajectory> voicing_llds(const PitchTrack& pt) {
  const std::size_t n = pt.n_frames();
  std::vector<LldTrajectory> out = {
      {"F0", pt.f0_hz, {}},
      {"voicingProb", pt.voicing_prob, {}},
      {"HNR", std::vector<double>(n, -10.0), {}},
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (!pt.voiced(i)) continue;
    const double r = pt.voicing_prob[i];
    double hnr = r >= 1.0 ? 40.0 : 10.0 * std::log10(r / (1.0 - r));
    out[2].values[i] = std::clamp(hnr, -10.0, 40.0);
  }
  return out;
}

std::vector<LldTrajectory> jitter_shimmer_llds(const PitchTrack& pt) {
  const std::size_t n = pt.n_frames();
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < n; ++i) mask[i] = pt.voiced(i);
  std::vector<LldTrajectory> out = {
      {"jitterLocal", std::vector<double>(n, 0.0), mask},
      {"jitterDDP", std::vector<double>(n, 0.0), mask},
      {"shimmerLocal", std::vector<double>(n, 0.0), mask},
  };
  const double sr = pt.sample_rate;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double fs = static_cast<double>(i * pt.hop) / sr;
    const double fe = static_cast<double>(i * pt.hop + pt.frame_len) / sr;
    for (const auto& run : pt.runs) {
      const auto& t = run.peak_times_s;
      if (t.size() < 2 || t.back() <= fs || t.front() >= fe) continue;
      // Periods [t_k, t_k+1] overlapping the frame.
      std::size_t k0 = static_cast<std::size_t>(
          std::upper_bound(t.begin(), t.end(), fs) - t.begin());
      k0 = k0 > 0 ? k0 - 1 : 0;
      std::size_t k1 = static_cast<std::size_t>(
          std::lower_bound(t.begin(), t.end(), fe) - t.begin());
      k1 = std::min(k1, t.size() - 1);
      if (k1 <= k0) continue;
      std::vector<double> periods;
      for (std::size_t k = k0; k < k1; ++k) periods.push_back(t[k + 1] - t[k]);
      double mean_t = 0.0;
      for (double p : periods) mean_t += p;
      mean_t /= static_cast<double>(periods.size());
      if (periods.size() >= 2 && mean_t > 0.0) {
        double acc = 0.0;
        for (std::size_t k = 1; k < periods.size(); ++k) {
          acc += std::abs(periods[k] - periods[k - 1]);
        }
        out[0].values[i] = acc / static_cast<double>(periods.size() - 1) / mean_t;
      }
      if (periods.size() >= 3 && mean_t > 0.0) {
        double acc = 0.0;
        for (std::size_t k = 1; k + 1 < periods.size(); ++k) {
          acc += std::abs((periods[k + 1] - periods[k]) -
                          (periods[k] - periods[k - 1]));
        }
        out[1].values[i] = acc / static_cast<double>(periods.size() - 2) / mean_t;
      }
      double mean_a = 0.0;
      for (std::size_t k = k0; k <= k1; ++k) mean_a += std::abs(run.peak_amplitudes[k]);
      mean_a /= static_cast<double>(k1 - k0 + 1);
      if (mean_a > 0.0) {
        double acc = 0.0;
        for (std::size_t k = k0 + 1; k <= k1; ++k) {
          acc += std::abs(run.peak_amplitudes[k] - run.peak_amplitudes[k - 1]);
        }
        out[2].values[i] = acc / static_cast<double>(k1 - k0) / mean_a;
      }
      break;
    }
  }
  return out;
}

}  // namespace dstage
