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

#include "dstage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dstage/emotion.hpp"
#include "dstage/parallel.hpp"

namespace dstage {

namespace {

constexpr double kKernelS = 0.025;
constexpr double kLeadS = 0.4;
constexpr double kTurnGapS = 0.45;

struct Word {
  const char* text;
  int syllables;
};

constexpr Word kVocabulary[] = {
    {"the", 1},      {"boy", 1},       {"girl", 1},       {"jar", 1},
    {"sink", 1},     {"stool", 1},     {"cup", 1},        {"plate", 1},
    {"falls", 1},    {"reach", 1},     {"wet", 1},        {"floor", 1},
    {"cookie", 2},   {"mother", 2},    {"water", 2},      {"window", 2},
    {"kitchen", 2},  {"over", 2},      {"dishes", 2},     {"curtain", 2},
    {"taking", 2},   {"sister", 2},    {"underneath", 3}, {"everything", 3},
    {"accident", 3}, {"dangerous", 3},
};

struct Renderer {
  std::vector<double>& out;
  int rate;
  std::mt19937_64& rng;

  double gauss() { return std::normal_distribution<double>(0.0, 1.0)(rng); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }

  void ensure(double t_end) {
    const auto need = static_cast<std::size_t>(std::ceil(t_end * rate)) + 1;
    if (out.size() < need) out.resize(need, 0.0);
  }

  // Adds the two-resonance impulse response at fractional time t0.
  void pulse(double t0, double amp, const VoiceParams& v) {
    ensure(t0 + kKernelS);
    const auto first = static_cast<std::size_t>(std::ceil(t0 * rate));
    const auto last = static_cast<std::size_t>(std::floor((t0 + kKernelS) * rate));
    const double b1 = std::numbers::pi * 90.0;
    const double b2 = std::numbers::pi * 130.0;
    for (std::size_t n = first; n <= last && n < out.size(); ++n) {
      const double tau = static_cast<double>(n) / rate - t0;
      out[n] += amp * (std::exp(-b1 * tau) * std::sin(2.0 * std::numbers::pi * v.formant1_hz * tau) +
                       0.6 * std::exp(-b2 * tau) *
                           std::sin(2.0 * std::numbers::pi * v.formant2_hz * tau));
    }
  }

  // One voiced syllable of `dur` seconds starting at t; F0 follows a slow
  // drift shared by the whole utterance plus a per-syllable offset.
  void syllable(double t, double dur, const VoiceParams& v, double phase) {
    const double offset = 1.0 + 0.5 * v.f0_variability * uniform(-1.0, 1.0);
    const double gain = v.amplitude * uniform(0.85, 1.15);
    double tp = t;
    while (tp < t + dur) {
      const double u = (tp - t) / dur;
      const double env = std::sin(std::numbers::pi * u);
      const double amp = gain * env * std::max(0.0, 1.0 + v.shimmer * gauss());
      pulse(tp, amp, v);
      const double f0 =
          v.f0_hz * offset * (1.0 + v.f0_variability * std::sin(2.0 * std::numbers::pi * 0.7 * tp + phase));
      tp += std::max(0.3, 1.0 + v.jitter * gauss()) / f0;
    }
  }
};

struct Phrase {
  std::vector<std::string> tokens;  // CHAT tokens
  std::vector<int> syllables;       // one entry per spoken unit
  bool filler_first = false;
  std::size_t words = 0;
};

Phrase make_phrase(const StyleParams& style, std::mt19937_64& rng) {
  Phrase p;
  std::uniform_int_distribution<int> target_dist(style.syllables_min, style.syllables_max);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kVocabulary) - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < style.filler_rate) {
    p.tokens.push_back("&uh");
    p.filler_first = true;
  }
  const int target = target_dist(rng);
  int total = 0;
  while (total < target) {
    const Word& w = kVocabulary[pick(rng)];
    if (total + w.syllables > target + 1) continue;
    p.tokens.push_back(w.text);
    p.syllables.push_back(w.syllables);
    total += w.syllables;
    ++p.words;
    if (total < target && coin(rng) < 0.5 * style.filler_rate) {
      p.tokens.push_back("[/]");
      p.tokens.push_back(w.text);
      p.syllables.push_back(w.syllables);
      total += w.syllables;
      ++p.words;
    }
  }
  return p;
}

struct TurnAudio {
  double start = 0.0;
  double end = 0.0;
  std::string body;
  std::size_t words = 0;
};

TurnAudio render_turn(Renderer& r, double t, int phrases, const StyleParams& style,
                      const VoiceParams& voice, double phase, double rate_scale) {
  TurnAudio turn;
  turn.start = t;
  const double syl = rate_scale / style.syllables_per_s;
  for (int k = 0; k < phrases; ++k) {
    if (k > 0) {
      t += r.uniform(style.pause_min_s, style.pause_max_s);
      turn.body += " (..) ";
    }
    Phrase p = make_phrase(style, r.rng);
    if (p.filler_first) {
      r.syllable(t, 1.5 * 0.65 * syl, voice, phase);
      t += 1.5 * syl;
    }
    for (int n : p.syllables) {
      for (int s = 0; s < n; ++s) {
        r.syllable(t, 0.65 * syl, voice, phase);
        t += syl;
      }
    }
    t -= 0.35 * syl;  // no trailing gap after the last nucleus
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      if (i > 0) turn.body += ' ';
      turn.body += p.tokens[i];
    }
    turn.words += p.words;
  }
  turn.end = t;
  turn.body += " .";
  return turn;
}

std::string bullet(double start_s, double end_s) {
  const auto a = static_cast<long long>(std::floor(start_s * 1000.0));
  const auto b = static_cast<long long>(std::ceil(end_s * 1000.0));
  return " \x15" + std::to_string(a) + "_" + std::to_string(b) + "\x15";
}

void add_noise(std::vector<double>& x, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, kSynthNoiseRms);
  for (auto& v : x) v += noise(rng);
}

void clip(std::vector<double>& x) {
  for (auto& v : x) v = std::clamp(v, -0.99, 0.99);
}

std::size_t label_index(const std::vector<std::string>& labels, const std::string& label) {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) {
    throw Error(ErrorCode::kLabelOutOfVocabulary, "unknown synthetic class '" + label + "'");
  }
  return static_cast<std::size_t>(it - labels.begin());
}

struct EmotionProfile {
  double f0;
  double rate;
  double amplitude;
  double f1;
  double f2;
  double variability;
  double jitter;
};

// anger, happy, neutral, sad, disgust, boredom, anxiety
constexpr EmotionProfile kEmotionProfiles[] = {
    {210.0, 5.5, 0.70, 800.0, 1800.0, 0.15, 0.020},
    {260.0, 5.0, 0.50, 700.0, 1700.0, 0.25, 0.008},
    {150.0, 4.0, 0.30, 600.0, 1500.0, 0.06, 0.006},
    {115.0, 2.5, 0.15, 500.0, 1200.0, 0.04, 0.012},
    {165.0, 3.0, 0.40, 650.0, 1100.0, 0.10, 0.030},
    {100.0, 3.2, 0.22, 550.0, 1400.0, 0.03, 0.006},
    {300.0, 6.5, 0.35, 750.0, 2100.0, 0.12, 0.025},
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace

std::vector<std::string> dementia_labels() { return {"HC", "MCI", "AD"}; }

StyleParams dementia_style(const std::string& label) {
  StyleParams s;
  switch (label_index(dementia_labels(), label)) {
    case 0:
      s.syllables_per_s = 5.0;
      s.pause_min_s = 0.3;
      s.pause_max_s = 0.5;
      s.filler_rate = 0.1;
      break;
    case 1:
      s.syllables_per_s = 3.5;
      s.pause_min_s = 0.6;
      s.pause_max_s = 0.9;
      s.filler_rate = 0.3;
      break;
    default:
      s.syllables_per_s = 2.0;
      s.pause_min_s = 1.0;
      s.pause_max_s = 1.5;
      s.filler_rate = 0.6;
      break;
  }
  return s;
}

VoiceParams dementia_voice(const std::string& label, double speaker_f0) {
  VoiceParams v;
  v.f0_hz = speaker_f0;
  switch (label_index(dementia_labels(), label)) {
    case 0:
      v.f0_variability = 0.20;
      v.jitter = 0.005;
      v.shimmer = 0.03;
      break;
    case 1:
      v.f0_variability = 0.12;
      v.jitter = 0.015;
      v.shimmer = 0.06;
      break;
    default:
      v.f0_variability = 0.05;
      v.jitter = 0.03;
      v.shimmer = 0.10;
      break;
  }
  return v;
}

SynthUtterance synth_dementia_utterance(const std::string& label,
                                        const std::string& utterance_id,
                                        const std::string& speaker_id,
                                        std::uint64_t seed) {
  std::mt19937_64 speaker_rng(fnv1a(speaker_id.data(), speaker_id.size(), seed));
  const double speaker_f0 = std::uniform_real_distribution<double>(100.0, 220.0)(speaker_rng);

  std::mt19937_64 rng(derive_seed(seed, fnv1a(utterance_id.data(), utterance_id.size())));
  std::vector<double> samples;
  Renderer r{samples, kCanonicalRate, rng};

  const StyleParams style = dementia_style(label);
  const VoiceParams voice = dementia_voice(label, speaker_f0);
  StyleParams inv_style;
  inv_style.syllables_per_s = 4.0;
  inv_style.filler_rate = 0.0;
  VoiceParams inv_voice;
  inv_voice.f0_hz = 118.0;
  inv_voice.formant1_hz = 550.0;
  inv_voice.formant2_hz = 1650.0;

  const double phase = r.uniform(0.0, 2.0 * std::numbers::pi);
  const double rate_scale = r.uniform(0.92, 1.08);

  std::vector<std::pair<std::string, TurnAudio>> turns;
  double t = kLeadS;
  for (int k = 0; k < 2; ++k) {
    TurnAudio inv = render_turn(r, t, 1, inv_style, inv_voice, 0.0, 1.0);
    t = inv.end + kTurnGapS;
    turns.emplace_back("INV", std::move(inv));
    TurnAudio par = render_turn(r, t, style.phrases_per_turn, style, voice, phase, rate_scale);
    t = par.end + kTurnGapS;
    turns.emplace_back("PAR", std::move(par));
  }
  r.ensure(t + kLeadS);
  add_noise(samples, rng);
  clip(samples);

  SynthUtterance u;
  u.utterance_id = utterance_id;
  u.label = label;
  u.speaker_id = speaker_id;
  u.audio.samples = std::move(samples);
  u.audio.sample_rate = kCanonicalRate;

  std::ostringstream cha;
  cha << "@UTF8\n@Begin\n@Languages:\teng\n"
      << "@Participants:\tPAR Participant, INV Investigator\n"
      << "@ID:\teng|synth|PAR|||||Participant|||\n"
      << "@ID:\teng|synth|INV|||||Investigator|||\n"
      << "@Media:\t" << utterance_id << ", audio\n";
  for (const auto& [speaker, turn] : turns) {
    cha << '*' << speaker << ":\t" << turn.body << bullet(turn.start, turn.end) << "\n";
    if (speaker == "PAR") u.par_words += turn.words;
  }
  cha << "@End\n";
  u.cha = cha.str();
  return u;
}

SynthUtterance synth_emotion_utterance(const std::string& label,
                                       const std::string& utterance_id,
                                       std::uint64_t seed) {
  std::vector<std::string> classes = emotion_class_order();
  const EmotionProfile& e = kEmotionProfiles[label_index(classes, label)];
  std::mt19937_64 rng(derive_seed(seed, fnv1a(utterance_id.data(), utterance_id.size())));
  std::vector<double> samples;
  Renderer r{samples, kCanonicalRate, rng};

  VoiceParams v;
  v.f0_hz = e.f0 * r.uniform(0.95, 1.05);
  v.f0_variability = e.variability;
  v.jitter = e.jitter;
  v.shimmer = 0.04;
  v.formant1_hz = e.f1;
  v.formant2_hz = e.f2;
  v.amplitude = e.amplitude * r.uniform(0.9, 1.1);
  StyleParams s;
  s.syllables_per_s = e.rate;
  s.pause_min_s = 0.25;
  s.pause_max_s = 0.4;
  s.filler_rate = 0.0;

  const double phase = r.uniform(0.0, 2.0 * std::numbers::pi);
  TurnAudio turn = render_turn(r, 0.2, 2, s, v, phase, r.uniform(0.95, 1.05));
  r.ensure(turn.end + 0.2);
  add_noise(samples, rng);
  clip(samples);

  SynthUtterance u;
  u.utterance_id = utterance_id;
  u.label = label;
  u.speaker_id = utterance_id;
  u.audio.samples = std::move(samples);
  return u;
}

Manifest write_dementia_corpus(const std::filesystem::path& out_dir,
                               const std::vector<std::pair<std::string, std::size_t>>& counts,
                               std::uint64_t seed) {
  std::filesystem::create_directories(out_dir / "wav");
  std::filesystem::create_directories(out_dir / "cha");
  Manifest m;
  for (const auto& [label, n] : counts) {
    label_index(dementia_labels(), label);
    for (std::size_t i = 0; i < n; ++i) {
      ManifestEntry e;
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03zu", label.c_str(), i);
      e.utterance_id = id;
      e.label = label;
      std::snprintf(id, sizeof(id), "spk_%s_%03zu", label.c_str(), i / 2);
      e.speaker_id = id;
      e.wav_path = out_dir / "wav" / (e.utterance_id + ".wav");
      e.cha_path = out_dir / "cha" / (e.utterance_id + ".cha");
      m.entries.push_back(std::move(e));
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(m.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& e = m.entries[static_cast<std::size_t>(i)];
    const SynthUtterance u = synth_dementia_utterance(e.label, e.utterance_id, e.speaker_id, seed);
    write_wav_pcm16(e.wav_path, u.audio);
    write_text(e.cha_path, u.cha);
  }
  write_manifest(out_dir / "manifest.csv", m);
  return read_manifest(out_dir / "manifest.csv");
}

Manifest write_dementia_corpus(const std::filesystem::path& out_dir, std::size_t n_per_class,
                               std::uint64_t seed) {
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& l : dementia_labels()) counts.emplace_back(l, n_per_class);
  return write_dementia_corpus(out_dir, counts, seed);
}

Manifest write_emotion_corpus(const std::filesystem::path& out_dir, std::size_t n_per_class,
                              std::uint64_t seed) {
  std::filesystem::create_directories(out_dir / "wav");
  Manifest m;
  for (const auto& label : emotion_class_order()) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      ManifestEntry e;
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03zu", label.c_str(), i);
      e.utterance_id = id;
      e.label = label;
      e.speaker_id = id;
      e.wav_path = out_dir / "wav" / (e.utterance_id + ".wav");
      m.entries.push_back(std::move(e));
    }
  }
  const auto n = static_cast<std::ptrdiff_t>(m.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& e = m.entries[static_cast<std::size_t>(i)];
    const SynthUtterance u = synth_emotion_utterance(e.label, e.utterance_id, seed);
    write_wav_pcm16(e.wav_path, u.audio);
  }
  write_manifest(out_dir / "manifest.csv", m);
  return read_manifest(out_dir / "manifest.csv");
}

AudioBuffer burst_train(int n_bursts, double burst_s, double gap_s, double f0_hz,
                        double amplitude) {
  AudioBuffer a;
  const double ramp = 0.005;
  const auto total = static_cast<std::size_t>(
      std::llround((n_bursts * burst_s + (n_bursts + 1) * gap_s) * kCanonicalRate));
  a.samples.assign(total, 0.0);
  for (int b = 0; b < n_bursts; ++b) {
    const double t0 = gap_s + b * (burst_s + gap_s);
    const auto first = static_cast<std::size_t>(std::llround(t0 * kCanonicalRate));
    const auto len = static_cast<std::size_t>(std::llround(burst_s * kCanonicalRate));
    for (std::size_t n = 0; n < len && first + n < total; ++n) {
      const double t = static_cast<double>(n) / kCanonicalRate;
      const double env = std::min({1.0, t / ramp, (burst_s - t) / ramp});
      double s = 0.0;
      for (int h = 1; h <= 5; ++h) {
        s += std::sin(2.0 * std::numbers::pi * f0_hz * h * t) / h;
      }
      a.samples[first + n] = amplitude * env * s / 1.5;
    }
  }
  return a;
}

}  // namespace dstage
