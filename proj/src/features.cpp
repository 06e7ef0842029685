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

#include "dstage/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "dstage/parallel.hpp"

namespace dstage {

namespace {

std::vector<std::string> f1_base_names() {
  std::vector<std::string> n;
  for (int c = 0; c < kNumCepstra; ++c) n.push_back("mfcc" + std::to_string(c));
  for (int m = 0; m < kNumMels; ++m) n.push_back("melband" + std::to_string(m));
  for (const char* s :
       {"spectralCentroid", "spectralFlux", "spectralEntropy",
        "spectralRollOff25", "spectralRollOff50", "spectralRollOff75",
        "spectralRollOff90", "spectralMinPos", "spectralMaxPos", "logEnergy",
        "rmsEnergy", "zcr", "lowBandRatio", "highBandRatio", "F0",
        "voicingProb", "HNR"}) {
    n.emplace_back(s);
  }
  return n;
}

std::vector<std::string> expand(const std::vector<std::string>& base,
                                bool second_order, FunctionalSet fs) {
  std::vector<std::string> out;
  for (const auto& b : base) {
    std::vector<std::string> variants = {b, b + "_de"};
    if (second_order) variants.push_back(b + "_dede");
    for (const auto& v : variants) {
      for (const auto& f : functional_names(fs)) out.push_back(v + "_" + f);
    }
  }
  return out;
}

std::vector<std::string> build_names(FeatureSetId id) {
  switch (id) {
    case FeatureSetId::kF1:
      return expand(f1_base_names(), true, FunctionalSet::kLarge39);
    case FeatureSetId::kF2:
      return expand({"jitterLocal", "jitterDDP", "shimmerLocal"}, false,
                    FunctionalSet::kVoiced19);
    case FeatureSetId::kF3:
      return {kProsodyFields.begin(), kProsodyFields.end()};
    case FeatureSetId::kF4: {
      std::vector<std::string> out;
      for (auto c : kEmotionClasses) out.push_back("p_" + std::string(c));
      return out;
    }
    case FeatureSetId::kFused:
      break;
  }
  return {};
}

void append_functionals(const LldTrajectory& t, FunctionalSet fs,
                        bool voiced_only, double frame_rate,
                        FeatureVector& v, Warnings* warnings) {
  const auto values = apply_functionals(t, fs, voiced_only, frame_rate, warnings);
  for (std::size_t k = 0; k < values.size(); ++k) {
    v.values.push_back(values[k]);
    v.names.push_back(t.name + "_" + functional_names(fs)[k]);
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string_view set_name(FeatureSetId id) {
  switch (id) {
    case FeatureSetId::kF1: return "f1";
    case FeatureSetId::kF2: return "f2";
    case FeatureSetId::kF3: return "f3";
    case FeatureSetId::kF4: return "f4";
    case FeatureSetId::kFused: return "fused";
  }
  return "?";
}

std::optional<FeatureSetId> parse_set_id(std::string_view name) {
  for (auto id : {FeatureSetId::kF1, FeatureSetId::kF2, FeatureSetId::kF3,
                  FeatureSetId::kF4, FeatureSetId::kFused}) {
    if (set_name(id) == name) return id;
  }
  return std::nullopt;
}

std::size_t set_dimension(FeatureSetId id) {
  switch (id) {
    case FeatureSetId::kF1: return kF1Dim;
    case FeatureSetId::kF2: return kF2Dim;
    case FeatureSetId::kF3: return kF3Dim;
    case FeatureSetId::kF4: return kF4Dim;
    case FeatureSetId::kFused: return 0;
  }
  return 0;
}

std::array<FeatureBlock, 4> f1_blocks() {
  constexpr std::size_t per_lld = 3 * 39;
  return {{{"cepstral", 0, kNumCepstra * per_lld},
           {"spectral", kNumCepstra * per_lld, kNumSpectral * per_lld},
           {"energy", (kNumCepstra + kNumSpectral) * per_lld,
            kNumEnergy * per_lld},
           {"voicing", (kNumCepstra + kNumSpectral + kNumEnergy) * per_lld,
            kNumVoicing * per_lld}}};
}

const std::vector<std::string>& feature_names(FeatureSetId id) {
  static const std::array<std::vector<std::string>, 5> all = {
      build_names(FeatureSetId::kF1), build_names(FeatureSetId::kF2),
      build_names(FeatureSetId::kF3), build_names(FeatureSetId::kF4),
      std::vector<std::string>{}};
  static_assert(kF1Dim == 168 * 39 && kF2Dim == 6 * 19);
  return all[static_cast<std::size_t>(id)];
}

std::size_t feature_index(FeatureSetId id, std::string_view name) {
  static const auto maps = [] {
    std::array<std::unordered_map<std::string, std::size_t>, 5> m;
    for (std::size_t s = 0; s < 4; ++s) {
      const auto& names = feature_names(static_cast<FeatureSetId>(s));
      for (std::size_t i = 0; i < names.size(); ++i) m[s].emplace(names[i], i);
    }
    return m;
  }();
  const auto& m = maps[static_cast<std::size_t>(id)];
  const auto it = m.find(std::string(name));
  if (it == m.end()) {
    throw std::out_of_range("unknown feature name: " + std::string(name));
  }
  return it->second;
}

std::uint64_t recipe_hash() {
  static const std::uint64_t h = [] {
    std::uint64_t acc = fnv1a(kRecipeVersion.data(), kRecipeVersion.size());
    for (auto id : {FeatureSetId::kF1, FeatureSetId::kF2, FeatureSetId::kF3,
                    FeatureSetId::kF4}) {
      for (const auto& n : feature_names(id)) {
        acc = fnv1a(n.data(), n.size(), acc);
        acc = fnv1a(",", 1, acc);
      }
    }
    return acc;
  }();
  return h;
}

UtteranceAnalysis analyze(const AudioBuffer& audio,
                          const ExtractOptions& options) {
  UtteranceAnalysis a;
  const AudioBuffer at_rate = audio.sample_rate == kCanonicalRate
                                  ? audio
                                  : resample(audio, kCanonicalRate);
  a.clean = options.denoise ? spectral_subtract(at_rate, options.denoiser)
                            : at_rate;
  a.frames = frame_signal(a.clean, 20.0, 10.0, Window::kHamming);
  if (a.frames.n_frames == 0) {
    throw Error(ErrorCode::kAudioTooShort, "audio shorter than one frame");
  }
  a.spectra = power_spectra(a.frames);
  a.pitch = pitch_track(a.clean, a.frames);
  return a;
}

std::vector<LldTrajectory> f1_llds(const UtteranceAnalysis& a) {
  std::vector<LldTrajectory> out = mfcc(a.spectra);
  auto spectral = spectral_llds(a.spectra);
  auto energy = energy_llds(a.frames, a.spectra);
  auto voicing = voicing_llds(a.pitch);
  for (auto* group : {&spectral, &energy, &voicing}) {
    for (auto& t : *group) out.push_back(std::move(t));
  }
  return out;
}

FeatureVector f1_vector(const UtteranceAnalysis& a) {
  FeatureVector v;
  v.set_id = FeatureSetId::kF1;
  v.values.reserve(kF1Dim);
  v.names.reserve(kF1Dim);
  const double rate = 1.0 / a.frames.frame_period_s();
  for (const auto& t : f1_llds(a)) {
    const LldTrajectory d1 = deltas(t);
    const LldTrajectory d2 = deltas(d1);
    for (const auto* traj : {&t, &d1, &d2}) {
      append_functionals(*traj, FunctionalSet::kLarge39, false, rate, v,
                         nullptr);
    }
  }
  if (v.values.size() != kF1Dim) {
    throw std::logic_error("f1 layout size drifted");
  }
  return v;
}

FeatureVector f1_vector(const AudioBuffer& audio,
                        const ExtractOptions& options) {
  return f1_vector(analyze(audio, options));
}

FeatureVector f2_vector(const UtteranceAnalysis& a, Warnings* warnings) {
  FeatureVector v;
  v.set_id = FeatureSetId::kF2;
  bool any_voiced = false;
  for (std::size_t i = 0; i < a.pitch.n_frames(); ++i) {
    any_voiced = any_voiced || a.pitch.voiced(i);
  }
  if (!any_voiced) {
    warn(warnings, "NoVoicedFrames: f2 set to zeros");
    v.values.assign(kF2Dim, 0.0);
    v.names = feature_names(FeatureSetId::kF2);
    return v;
  }
  const double rate = 1.0 / a.frames.frame_period_s();
  for (const auto& t : jitter_shimmer_llds(a.pitch)) {
    append_functionals(t, FunctionalSet::kVoiced19, true, rate, v, warnings);
    append_functionals(deltas(t), FunctionalSet::kVoiced19, true, rate, v,
                       warnings);
  }
  if (v.values.size() != kF2Dim) {
    throw std::logic_error("f2 layout size drifted");
  }
  return v;
}

FeatureVector f2_vector(const AudioBuffer& audio,
                        const ExtractOptions& options, Warnings* warnings) {
  return f2_vector(analyze(audio, options), warnings);
}

void FeatureMatrix::append(std::string id, std::string label,
                           std::span<const double> v) {
  if (v.size() != cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "row " + id + " has " + std::to_string(v.size()) +
                    " values, expected " + std::to_string(cols()));
  }
  ids.push_back(std::move(id));
  labels.push_back(std::move(label));
  values.insert(values.end(), v.begin(), v.end());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_feature_matrix(const std::filesystem::path& path,
                          const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "utterance_id,label";
  for (const auto& n : m.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << m.ids[r] << ',' << m.labels[r];
    for (double v : m.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path,
                                  FeatureSetId set_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  FeatureMatrix m;
  m.set_id = set_id;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kParse, path.string() + ": empty matrix file");
  }
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "utterance_id" || header[1] != "label") {
    throw Error(ErrorCode::kParse,
                path.string() + ": header must start with utterance_id,label");
  }
  m.names.assign(header.begin() + 2, header.end());
  std::size_t line_no = 1;
  std::vector<double> row(m.cols());
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": wrong column count");
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const auto& c = cells[j + 2];
      const auto res = std::from_chars(c.data(), c.data() + c.size(), row[j]);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw Error(ErrorCode::kParse, path.string() + ":" +
                                           std::to_string(line_no) +
                                           ": bad number '" + c + "'");
      }
    }
    m.append(cells[0], cells[1], row);
  }
  return m;
}

}  // namespace dstage
