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

#include "dstage/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dstage {

namespace {

const std::vector<std::string> kLarge39Names = {
    "mean",          "absMean",       "quadMean",      "stddev",
    "variance",      "skewness",      "kurtosis",      "min",
    "max",           "range",         "minPos",        "maxPos",
    "percentile1",   "percentile5",   "percentile25",  "percentile50",
    "percentile75",  "percentile95",  "percentile99",  "iqr25_75",
    "iqr5_95",       "linSlope",      "linOffset",     "linErrQ",
    "linErrA",       "qregA",         "qregB",         "qregC",
    "qregErrQ",      "qregErrA",      "upLevelTime25", "upLevelTime50",
    "upLevelTime75", "upLevelTime90", "riseTime",      "fallTime",
    "contourZcr",    "peaksPerSec",   "peakMeanAmp",
};

// Positions of the voiced19 members inside the large39 list.
constexpr std::array<std::size_t, 19> kVoiced19 = {
    0, 3, 5, 6, 7, 8, 9, 10, 11, 12, 14, 15, 16, 18, 19, 21, 22, 23, 36};

std::vector<std::string> voiced_names() {
  std::vector<std::string> names;
  for (std::size_t i : kVoiced19) names.push_back(kLarge39Names[i]);
  return names;
}

double percentile(const std::vector<double>& sorted, double p) {
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Solves the 3x3 system a * x = b in place by partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    std::swap(m[col], m[pivot]);
    if (std::abs(m[col][col]) < 1e-300) return {0.0, 0.0, 0.0};
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

std::array<double, 39> large39(const std::vector<double>& x,
                               double frame_rate_hz) {
  std::array<double, 39> f{};
  const std::size_t n = x.size();
  const double dn = static_cast<double>(n);

  const auto min_it = std::min_element(x.begin(), x.end());
  const auto max_it = std::max_element(x.begin(), x.end());
  const double mn = *min_it;
  const double mx = *max_it;
  const bool constant = mn == mx;
  const auto min_idx = static_cast<std::size_t>(min_it - x.begin());
  const auto max_idx = static_cast<std::size_t>(max_it - x.begin());

  double sum = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  for (double v : x) {
    sum += v;
    abs_sum += std::abs(v);
    sq_sum += v * v;
  }
  const double mean = constant ? mn : sum / dn;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  if (!constant) {
    for (double v : x) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
  }
  const double sd = std::sqrt(m2);
  f[0] = mean;
  f[1] = abs_sum / dn;
  f[2] = std::sqrt(sq_sum / dn);
  f[3] = sd;
  f[4] = m2;
  f[5] = sd > 0.0 ? m3 / (m2 * sd) : 0.0;
  f[6] = sd > 0.0 ? m4 / (m2 * m2) : 0.0;
  f[7] = mn;
  f[8] = mx;
  f[9] = mx - mn;
  const double last = n > 1 ? static_cast<double>(n - 1) : 1.0;
  f[10] = n > 1 ? static_cast<double>(min_idx) / last : 0.0;
  f[11] = n > 1 ? static_cast<double>(max_idx) / last : 0.0;

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  constexpr double kPercentiles[] = {0.01, 0.05, 0.25, 0.50, 0.75, 0.95, 0.99};
  for (std::size_t i = 0; i < 7; ++i) f[12 + i] = percentile(sorted, kPercentiles[i]);
  f[19] = f[16] - f[14];
  f[20] = f[17] - f[13];

  // Linear regression against t = 0..n-1.
  const double t_mean = (dn - 1.0) / 2.0;
  double stt = 0.0, stx = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    stt += dt * dt;
    stx += dt * (x[t] - mean);
  }
  const double slope = (constant || stt == 0.0) ? 0.0 : stx / stt;
  const double offset = mean - slope * t_mean;
  double lin_q = 0.0, lin_a = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double r = x[t] - (offset + slope * static_cast<double>(t));
    lin_q += r * r;
    lin_a += std::abs(r);
  }
  f[21] = slope;
  f[22] = offset;
  f[23] = lin_q / dn;
  f[24] = lin_a / dn;

  // Quadratic regression, solved on a centered and scaled abscissa.
  if (n >= 3 && !constant) {
    const double scale = std::max(t_mean, 1.0);
    std::array<double, 5> su{};
    std::array<double, 3> sux{};
    for (std::size_t t = 0; t < n; ++t) {
      const double u = (static_cast<double>(t) - t_mean) / scale;
      double p = 1.0;
      for (int k = 0; k < 5; ++k) {
        su[k] += p;
        if (k < 3) sux[k] += p * x[t];
        p *= u;
      }
    }
    // Unknowns ordered (alpha, beta, gamma) for u^2, u, 1.
    const auto sol = solve3({{{su[4], su[3], su[2], sux[2]},
                              {su[3], su[2], su[1], sux[1]},
                              {su[2], su[1], su[0], sux[0]}}});
    const double alpha = sol[0], beta = sol[1], gamma = sol[2];
    double q_q = 0.0, q_a = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double u = (static_cast<double>(t) - t_mean) / scale;
      const double r = x[t] - (alpha * u * u + beta * u + gamma);
      q_q += r * r;
      q_a += std::abs(r);
    }
    const double s2 = scale * scale;
    f[25] = alpha / s2;
    f[26] = beta / scale - 2.0 * alpha * t_mean / s2;
    f[27] = gamma - beta * t_mean / scale + alpha * t_mean * t_mean / s2;
    f[28] = q_q / dn;
    f[29] = q_a / dn;
  } else {
    f[25] = 0.0;
    f[26] = slope;
    f[27] = offset;
    f[28] = f[23];
    f[29] = f[24];
  }

  constexpr double kLevels[] = {0.25, 0.50, 0.75, 0.90};
  const double range = mx - mn;
  for (std::size_t i = 0; i < 4; ++i) {
    if (range <= 0.0) continue;
    const double level = mn + kLevels[i] * range;
    std::size_t above = 0;
    for (double v : x) above += v > level ? 1 : 0;
    f[30 + i] = static_cast<double>(above) / dn;
  }

  if (n >= 2) {
    std::size_t rises = 0, falls = 0, crossings = 0;
    int prev_sign = 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) {
        rises += x[t] > x[t - 1] ? 1 : 0;
        falls += x[t] < x[t - 1] ? 1 : 0;
      }
      const double d = constant ? 0.0 : x[t] - mean;
      const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
      if (sign != 0) {
        if (prev_sign != 0 && sign != prev_sign) ++crossings;
        prev_sign = sign;
      }
    }
    f[34] = static_cast<double>(rises) / (dn - 1.0);
    f[35] = static_cast<double>(falls) / (dn - 1.0);
    f[36] = static_cast<double>(crossings) / (dn - 1.0);
  }

  std::size_t peaks = 0;
  double peak_sum = 0.0;
  for (std::size_t t = 1; t + 1 < n; ++t) {
    if (x[t] > x[t - 1] && x[t] >= x[t + 1]) {
      ++peaks;
      peak_sum += x[t];
    }
  }
  f[37] = static_cast<double>(peaks) / (dn / frame_rate_hz);
  f[38] = peaks > 0 ? peak_sum / static_cast<double>(peaks) : 0.0;
  return f;
}

}  // namespace

const std::vector<std::string>& functional_names(FunctionalSet set) {
  static const std::vector<std::string> voiced = voiced_names();
  return set == FunctionalSet::kLarge39 ? kLarge39Names : voiced;
}

std::size_t functional_count(FunctionalSet set) {
  return set == FunctionalSet::kLarge39 ? kLarge39Names.size()
                                        : kVoiced19.size();
}

std::vector<double> apply_functionals(const LldTrajectory& t,
                                      FunctionalSet set, bool voiced_only,
                                      double frame_rate_hz,
                                      Warnings* warnings) {
  if (t.values.empty()) {
    throw Error(ErrorCode::kEmptyTrajectory, t.name + " has no frames");
  }
  std::vector<double> seq;
  if (voiced_only) {
    if (!t.voiced_mask || t.voiced_mask->size() != t.values.size()) {
      throw std::invalid_argument("apply_functionals: " + t.name +
                                  " lacks a voiced mask");
    }
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      if ((*t.voiced_mask)[i]) seq.push_back(t.values[i]);
    }
  } else {
    seq = t.values;
  }
  const std::size_t count = functional_count(set);
  if (seq.empty()) {
    warn(warnings, t.name + ": no voiced frames, functionals set to 0");
    return std::vector<double>(count, 0.0);
  }
  const auto all = large39(seq, frame_rate_hz);
  if (set == FunctionalSet::kLarge39) return {all.begin(), all.end()};
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i : kVoiced19) out.push_back(all[i]);
  return out;
}

}  // namespace dstage
