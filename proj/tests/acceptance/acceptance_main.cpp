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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "dstage/cfs.hpp"
#include "dstage/chat.hpp"
#include "dstage/emotion.hpp"
#include "dstage/eval.hpp"
#include "dstage/features.hpp"
#include "dstage/fusion.hpp"
#include "dstage/lld.hpp"
#include "dstage/pipeline.hpp"
#include "dstage/prosody.hpp"
#include "dstage/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dstage;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int number;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

const fs::path& tmp_root() {
  static const fs::path root = [] {
    fs::path p = DSTAGE_TEST_TMP;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

const std::vector<FeatureSetId> kAllSets = {FeatureSetId::kF1, FeatureSetId::kF2, FeatureSetId::kF3,
                                            FeatureSetId::kF4};

const EmotionModel& emotion_model() {
  static const EmotionModel model = [] {
    const auto manifest = write_emotion_corpus(tmp_root() / "emotion", 4, 17);
    TrainOptions opt;
    opt.forest_trees = 60;
    return train_emotion_model(manifest, ModelKind::kRandomForest, 17, opt);
  }();
  return model;
}

const fs::path& emotion_model_file() {
  static const fs::path path = [] {
    const fs::path p = tmp_root() / "emotion_model.json";
    emotion_model().save(p);
    return p;
  }();
  return path;
}

struct Corpus {
  Manifest manifest;
  ExtractResult extracted;
  std::vector<std::string> labels;
};

// Balanced corpus (n per class) per seed, all four sets extracted once.
const Corpus& corpus(std::uint64_t seed) {
  static std::map<std::uint64_t, Corpus> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  Corpus c;
  c.manifest = write_dementia_corpus(tmp_root() / ("corpus_" + std::to_string(seed)), 20, seed);
  ExtractRequest req;
  req.sets = kAllSets;
  req.emotion = &emotion_model();
  c.extracted = extract_corpus(c.manifest, req);
  if (!c.extracted.failures.empty()) {
    throw Error(ErrorCode::kIo, "extraction failed for " + c.extracted.failures.front().utterance_id);
  }
  c.labels = c.manifest.label_order();
  return cache.emplace(seed, std::move(c)).first->second;
}

std::vector<FeatureMatrix> pick(const Corpus& c, const std::vector<FeatureSetId>& sets) {
  std::vector<FeatureMatrix> out;
  for (auto s : sets) {
    for (const auto& m : c.extracted.matrices) {
      if (m.set_id == s) out.push_back(m);
    }
  }
  return out;
}

ExperimentSpec spec_for(const std::vector<FeatureSetId>& sets, FusionMode mode, std::uint64_t seed) {
  ExperimentSpec s;
  s.plan.mode = mode;
  s.plan.members = sets;
  if (mode == FusionMode::kLateDecision) s.plan.decision_kind = ModelKind::kRandomForest;
  s.classifier = ModelKind::kRandomForest;
  s.selection_scope = SelectionScope::kPerFold;
  s.balance_scope = BalanceScope::kTrainOnly;
  s.k_folds = 10;
  s.seed = seed;
  s.train_options.forest_trees = 100;
  return s;
}

std::size_t support(const ExperimentReport& r) {
  std::size_t n = 0;
  for (const auto& row : r.confusion) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

AudioBuffer tone(double hz, double seconds, double amp = 0.5) {
  AudioBuffer a;
  for (std::size_t i = 0; i < static_cast<std::size_t>(seconds * a.sample_rate); ++i) {
    a.samples.push_back(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / a.sample_rate));
  }
  return a;
}

// ---- 1

Outcome dimensional_fidelity() {
  std::vector<std::pair<std::string, AudioBuffer>> inputs;
  AudioBuffer silence;
  silence.samples.assign(16000, 0.0);
  inputs.emplace_back("silence", silence);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.3);
  AudioBuffer noise;
  for (int i = 0; i < 24000; ++i) noise.samples.push_back(std::clamp(g(rng), -1.0, 1.0));
  inputs.emplace_back("noise", noise);
  inputs.emplace_back("tone", tone(180.0, 1.0));
  AudioBuffer square;
  for (int i = 0; i < 8000; ++i) square.samples.push_back((i / 40) % 2 ? 1.0 : -1.0);
  inputs.emplace_back("square", square);
  AudioBuffer short_clip = tone(220.0, 0.12);
  inputs.emplace_back("short", short_clip);
  for (const auto& label : dementia_labels()) {
    inputs.emplace_back(label, synth_dementia_utterance(label, "dim_" + label, "spk", 8).audio);
  }

  const auto blocks = f1_blocks();
  const std::array<std::size_t, 4> want_blocks = {1521, 4095, 585, 351};
  Outcome o;
  for (std::size_t b = 0; b < 4; ++b) o.pass = o.pass && blocks[b].size == want_blocks[b];
  for (auto [id, d] : std::vector<std::pair<FeatureSetId, std::size_t>>{
           {FeatureSetId::kF1, 6552}, {FeatureSetId::kF2, 114}, {FeatureSetId::kF3, 7}, {FeatureSetId::kF4, 7}}) {
    o.pass = o.pass && set_dimension(id) == d && feature_names(id).size() == d;
  }
  for (const auto& [name, audio] : inputs) {
    const auto a = analyze(audio);
    const auto v1 = f1_vector(a);
    const auto v2 = f2_vector(a);
    const auto v3 = f3_vector(a, std::nullopt);
    const auto v3w = f3_vector(a, std::size_t{12});
    const auto v4 = f4_vector(a, emotion_model());
    const bool ok = v1.values.size() == 6552 && v2.values.size() == 114 && v3.values.size() == 7 &&
                    v3w.values.size() == 7 && v4.values.size() == 7;
    const std::vector<FeatureVector> early3 = {v1, v2, v3};
    const std::vector<FeatureVector> early4 = {v1, v2, v3, v4};
    const bool fused = early_concat(early3).values.size() == 6673 && early_concat(early4).values.size() == 6680;
    if (!ok || !fused) {
      o.pass = false;
      o.detail += " " + name;
    }
  }
  o.detail = o.pass ? std::to_string(inputs.size()) + " inputs: 6552/114/7/7, blocks 1521/4095/585/351, fused 6673/6680"
                    : "dimension mismatch on:" + o.detail;
  return o;
}

// ---- 2

Outcome dsp_oracles() {
  Outcome o;
  std::mt19937_64 rng(2025);
  std::uniform_int_distribution<int> len(320, 2400);
  std::uniform_real_distribution<double> amp(0.001, 0.9);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::normal_distribution<double> g(0.0, amp(rng));
    AudioBuffer a;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) a.samples.push_back(std::clamp(g(rng), -1.0, 1.0));
    const auto fr = frame_signal(a, 20.0, 10.0, Window::kHamming);
    const auto c = mfcc(fr);
    for (std::size_t i = 0; i < fr.n_frames; ++i) {
      const auto span = fr.frame(i);
      const auto ref = oracle::mfcc_frame({span.begin(), span.end()}, fr.sample_rate);
      for (int k = 0; k < 13; ++k) worst = std::max(worst, std::abs(c[static_cast<std::size_t>(k)].values[i] - ref[static_cast<std::size_t>(k)]));
    }
  }
  const bool mfcc_ok = worst <= 1e-6;

  std::vector<double> pulses;
  double x = 0.01;
  for (int k = 0; x < 0.99; ++k) {
    pulses.push_back(x);
    x += k % 2 ? 0.0052 : 0.0050;
  }
  const auto pa = oracle::gaussian_pulses(pulses, 1.0);
  const auto js = jitter_shimmer_llds(pitch_track(pa, frame_signal(pa, 20.0, 10.0, Window::kHamming)));
  double jsum = 0.0;
  int jn = 0;
  for (std::size_t i = 0; i < js[0].values.size(); ++i) {
    if ((*js[0].voiced_mask)[i]) {
      jsum += js[0].values[i];
      ++jn;
    }
  }
  const double jitter = jn ? jsum / jn : 0.0;
  const bool jitter_ok = jn > 0 && std::abs(jitter - 0.0392) <= 0.05 * 0.0392;

  double f0_err = 0.0;
  bool all_voiced = true;
  for (double hz : {90.0, 120.0, 150.0, 200.0, 250.0, 300.0, 400.0}) {
    const auto a = tone(hz, 0.5);
    const auto pt = pitch_track(a, frame_signal(a, 20.0, 10.0, Window::kHamming));
    for (std::size_t i = 0; i < pt.n_frames(); ++i) {
      all_voiced = all_voiced && pt.voiced(i);
      f0_err = std::max(f0_err, std::abs(pt.f0_hz[i] - hz));
    }
  }
  const bool f0_ok = all_voiced && f0_err <= 2.0;

  o.pass = mfcc_ok && jitter_ok && f0_ok;
  o.detail = "mfcc max err " + fmt("%.2e", worst) + ", jitter " + fmt("%.5f", jitter) + " (target 0.0392), f0 max err " +
             fmt("%.3f", f0_err) + " Hz" + (all_voiced ? "" : ", unvoiced tone frame");
  return o;
}

// ---- 3

Dataset cfs_instance(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds;
  ds.n = n;
  ds.d = d;
  ds.class_order = {"a", "b", "c"};
  std::vector<double> signal(d), copy_of(d, -1.0);
  for (std::size_t j = 0; j < d; ++j) {
    signal[j] = u(rng) < 0.5 ? 0.0 : 2.0 * u(rng);
    if (j > 0 && u(rng) < 0.3) copy_of[j] = static_cast<double>(rng() % j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % 3);
    ds.y.push_back(y);
    for (std::size_t j = 0; j < d; ++j) {
      double v = signal[j] * y + g(rng);
      if (copy_of[j] >= 0) v = ds.X[i * d + static_cast<std::size_t>(copy_of[j])] + 0.3 * g(rng);
      ds.X.push_back(v);
    }
  }
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  return ds;
}

std::vector<std::vector<double>> columns(const Dataset& ds) {
  std::vector<std::vector<double>> cols(ds.d);
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) cols[j].push_back(ds.X[i * ds.d + j]);
  }
  return cols;
}

Outcome cfs_oracle() {
  int optimal = 0;
  double worst_ratio = 1.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t d = 4 + seed % 9;
    const auto ds = cfs_instance(60 + 10 * (seed % 7), d, 5000 + seed);
    const auto r = greedy_stepwise(ds);
    const double best = oracle::exhaustive_best_merit(oracle::cfs_tables(columns(ds), ds.y));
    optimal += std::abs(r.merit - best) <= 1e-12 * std::max(1.0, best) ? 1 : 0;
    worst_ratio = std::min(worst_ratio, best > 0.0 ? r.merit / best : 1.0);
  }
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(7000 + seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t d = 12;
    const std::size_t planted = rng() % d;
    Dataset ds;
    ds.n = 90;
    ds.d = d;
    ds.class_order = {"a", "b", "c"};
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    for (std::size_t i = 0; i < ds.n; ++i) {
      const int y = static_cast<int>(i % 3);
      ds.y.push_back(y);
      for (std::size_t j = 0; j < d; ++j) ds.X.push_back(g(rng) * (j == planted ? 0.3 : 1.0) + (j == planted ? y : 0));
    }
    const auto r = greedy_stepwise(ds);
    recovered += std::find(r.indices.begin(), r.indices.end(), planted) != r.indices.end() ? 1 : 0;
  }
  Outcome o;
  o.pass = optimal >= 45 && worst_ratio >= 0.95 && recovered == 20;
  o.detail = "optimum on " + std::to_string(optimal) + "/50, worst ratio " + fmt("%.4f", worst_ratio) +
             ", planted recovered " + std::to_string(recovered) + "/20";
  return o;
}

// ---- 4

Outcome fusion_rules() {
  std::vector<std::array<int, 3>> grid;
  for (int a = 0; a <= 10; ++a) {
    for (int b = 0; a + b <= 10; ++b) grid.push_back({a, b, 10 - a - b});
  }
  const std::vector<std::string> classes = {"HC", "MCI", "AD"};
  const auto member = [&](const std::array<int, 3>& p) {
    return MemberPosterior{classes, {p[0] / 10.0, p[1] / 10.0, p[2] / 10.0}};
  };
  std::size_t cases = 0, wrong = 0, order_dependent = 0, ties = 0;
  std::array<std::array<int, 3>, 6> perms = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (const auto& p : grid) {
    for (const auto& q : grid) {
      for (const auto& r : grid) {
        ++cases;
        std::array<int, 3> sum{};
        for (int c = 0; c < 3; ++c) sum[static_cast<std::size_t>(c)] = p[static_cast<std::size_t>(c)] + q[static_cast<std::size_t>(c)] + r[static_cast<std::size_t>(c)];
        const int top = *std::max_element(sum.begin(), sum.end());
        const int expected = static_cast<int>(std::find(sum.begin(), sum.end(), top) - sum.begin());
        ties += std::count(sum.begin(), sum.end(), top) > 1 ? 1 : 0;
        const std::array<MemberPosterior, 3> ms = {member(p), member(q), member(r)};
        for (const auto& perm : perms) {
          const PosteriorBundle bundle = {ms[static_cast<std::size_t>(perm[0])], ms[static_cast<std::size_t>(perm[1])],
                                          ms[static_cast<std::size_t>(perm[2])]};
          const int got = late_sum(bundle);
          if (got != expected) {
            if (&perm == &perms[0]) {
              ++wrong;
            } else {
              ++order_dependent;
            }
          }
          if (late_sum(bundle) != got) ++order_dependent;
        }
      }
    }
  }
  Outcome o;
  o.pass = wrong == 0 && order_dependent == 0;
  o.detail = std::to_string(cases) + " grids (" + std::to_string(ties) + " with ties): " + std::to_string(wrong) +
             " argmax errors, " + std::to_string(order_dependent) + " order/tie deviations";
  return o;
}

// ---- 5

Outcome leakage_audit() {
  const Corpus& c = corpus(0);
  const std::size_t n = c.manifest.entries.size();
  std::vector<ExperimentSpec> specs;
  auto sel = spec_for({FeatureSetId::kF2, FeatureSetId::kF3, FeatureSetId::kF4}, FusionMode::kSelectThenConcat, 1);
  sel.classifier = ModelKind::kLogistic;
  specs.push_back(sel);
  auto cts = spec_for({FeatureSetId::kF1, FeatureSetId::kF3}, FusionMode::kConcatThenSelect, 2);
  specs.push_back(cts);
  auto dec = spec_for({FeatureSetId::kF2, FeatureSetId::kF3, FeatureSetId::kF4}, FusionMode::kLateDecision, 3);
  dec.classifier = ModelKind::kLogistic;
  dec.plan.decision_kind = ModelKind::kLogistic;
  specs.push_back(dec);

  Outcome o;
  std::map<Phase, std::size_t> seen;
  std::size_t leaks = 0;
  for (const auto& spec : specs) {
    const auto members = pick(c, spec.plan.members);
    const auto r = run_experiment(spec, members, c.labels, c.extracted.speakers);
    leaks += r.audit.test_leaks(r.folds, r.ids);
    for (const auto& rec : r.audit.records) ++seen[rec.phase];
    if (support(r.report) != n) {
      o.pass = false;
      o.detail += "support " + std::to_string(support(r.report)) + " != " + std::to_string(n) + " in " +
                  std::string(mode_name(spec.plan.mode)) + "; ";
    }
  }
  for (auto p : {Phase::kBalance, Phase::kSelect, Phase::kStandardize, Phase::kStack}) {
    if (seen[p] == 0) {
      o.pass = false;
      o.detail += "phase " + std::string(phase_name(p)) + " never audited; ";
    }
  }
  o.pass = o.pass && leaks == 0;
  o.detail += std::to_string(leaks) + " test accesses over balance " + std::to_string(seen[Phase::kBalance]) +
              ", select " + std::to_string(seen[Phase::kSelect]) + ", standardize " +
              std::to_string(seen[Phase::kStandardize]) + ", stack " + std::to_string(seen[Phase::kStack]) +
              " records; support " + std::to_string(n);
  return o;
}

// ---- 6

double recall_of(const ExperimentReport& r, const std::string& label) {
  for (const auto& c : r.metrics.per_class) {
    if (c.label == label) return c.recall;
  }
  return 0.0;
}

Outcome synthetic_reproduction() {
  constexpr int kSeeds = 5;
  std::map<FeatureSetId, std::vector<double>> single;
  std::vector<double> early, late_sum_f, late_dec_f, sum_gain, dec_gain;
  std::vector<double> mci_none, mci_balanced;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const Corpus& c = corpus(seed);
    const auto f = [&](const ExperimentSpec& s) {
      return run_experiment(s, pick(c, s.plan.members), c.labels, c.extracted.speakers).report.metrics.weighted.f_score;
    };
    for (auto s : kAllSets) single[s].push_back(f(spec_for({s}, FusionMode::kConcat, seed)));
    early.push_back(f(spec_for(kAllSets, FusionMode::kSelectThenConcat, seed)));
    late_sum_f.push_back(f(spec_for(kAllSets, FusionMode::kLateSum, seed)));
    late_dec_f.push_back(f(spec_for(kAllSets, FusionMode::kLateDecision, seed)));
    sum_gain.push_back(late_sum_f.back() - early.back());
    dec_gain.push_back(late_dec_f.back() - early.back());

    const auto m = write_dementia_corpus(tmp_root() / ("skewed_" + std::to_string(seed)),
                                         {{"HC", 20}, {"MCI", 10}, {"AD", 20}}, 100 + seed);
    ExtractRequest req;
    req.sets = {FeatureSetId::kF2, FeatureSetId::kF3};
    const auto ex = extract_corpus(m, req);
    for (auto scope : {BalanceScope::kNone, BalanceScope::kTrainOnly}) {
      auto s = spec_for({FeatureSetId::kF2, FeatureSetId::kF3}, FusionMode::kConcat, seed);
      s.balance_scope = scope;
      const auto r = run_experiment(s, ex.matrices, m.label_order(), ex.speakers);
      (scope == BalanceScope::kNone ? mci_none : mci_balanced).push_back(recall_of(r.report, "MCI"));
    }
  }
  const bool a = mean(single[FeatureSetId::kF3]) >= 0.90;
  bool b = true;
  for (const auto& [s, v] : single) b = b && mean(early) >= mean(v);
  const bool c_sum = mean(sum_gain) >= -std_error(sum_gain);
  const bool c_dec = mean(dec_gain) >= -std_error(dec_gain);
  const bool d = mean(mci_balanced) >= mean(mci_none);

  Outcome o;
  o.pass = a && b && c_sum && c_dec && d;
  std::ostringstream s;
  s << "(a)" << (a ? "ok" : "FAIL") << " f3 " << fmt("%.3f", mean(single[FeatureSetId::kF3]));
  s << "; (b)" << (b ? "ok" : "FAIL") << " early " << fmt("%.3f", mean(early)) << " vs f1/f2/f3/f4 "
    << fmt("%.3f", mean(single[FeatureSetId::kF1])) << "/" << fmt("%.3f", mean(single[FeatureSetId::kF2])) << "/"
    << fmt("%.3f", mean(single[FeatureSetId::kF3])) << "/" << fmt("%.3f", mean(single[FeatureSetId::kF4]));
  s << "; (c)" << (c_sum && c_dec ? "ok" : "FAIL") << " late_sum " << fmt("%.3f", mean(late_sum_f)) << " (gain "
    << fmt("%+.3f", mean(sum_gain)) << " se " << fmt("%.3f", std_error(sum_gain)) << "), late_decision "
    << fmt("%.3f", mean(late_dec_f)) << " (gain " << fmt("%+.3f", mean(dec_gain)) << " se "
    << fmt("%.3f", std_error(dec_gain)) << ")";
  s << "; (d)" << (d ? "ok" : "FAIL") << " MCI recall none " << fmt("%.3f", mean(mci_none)) << " vs train_only "
    << fmt("%.3f", mean(mci_balanced));
  o.detail = s.str();
  return o;
}

// ---- 7

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + DSTAGE_CLI_PATH + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path dir = tmp_root() / "determinism";
  fs::create_directories(dir);
  const auto manifest = write_dementia_corpus(dir / "corpus", 6, 31);
  struct Variant {
    const char* name;
    const char* flags;
  };
  const Variant variants[] = {
      {"concat_f3", "--sets f3 --mode concat"},
      {"select_then_concat", "--sets f1,f2,f3 --mode select_then_concat --selection-scope per_fold"},
      {"late_sum", "--sets f2,f3,f4 --mode late_sum --classifier naive_bayes"},
      {"late_decision", "--sets f2,f3,f4 --mode late_decision --classifier logistic --decision logistic"},
  };
  Outcome o;
  int identical = 0;
  for (const auto& v : variants) {
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (std::string(v.name) + "_" + std::to_string(run));
      const std::string args = std::string("evaluate --manifest \"") + (dir / "corpus" / "manifest.csv").string() +
                               "\" --emotion-model \"" + emotion_model_file().string() + "\" --out \"" + out.string() +
                               "\" --cache-dir \"" + (out / "cache").string() + "\" --seed 42 --k-folds 3 --trees 30 " +
                               v.flags;
      const int code = run_cli(args, dir / (std::string(v.name) + "_" + std::to_string(run) + ".log"));
      if (code != 0) {
        o.pass = false;
        o.detail += std::string(v.name) + " exited " + std::to_string(code) + "; ";
      }
      reports[run] = slurp(out / "report.json");
    }
    if (!reports[0].empty() && reports[0] == reports[1]) {
      ++identical;
    } else {
      o.pass = false;
      o.detail += std::string(v.name) + " reports differ; ";
    }
  }
  o.detail += std::to_string(identical) + "/" + std::to_string(std::size(variants)) +
              " configurations byte-identical across two cold runs";
  return o;
}

// ---- 8

Outcome parser_robustness() {
  std::vector<std::string> seeds;
  std::size_t generated = 0, warned = 0;
  for (const auto& label : dementia_labels()) {
    for (int i = 0; i < 20; ++i) {
      const auto u = synth_dementia_utterance(label, label + std::to_string(i), "spk" + std::to_string(i), 300 + i);
      ++generated;
      warned += parse_cha(u.cha).warnings.empty() ? 0 : 1;
      if (i < 2) seeds.push_back(u.cha);
    }
  }
  for (const auto& label : emotion_class_order()) {
    const auto u = synth_emotion_utterance(label, "emo_" + label, 9);
    ++generated;
    warned += parse_cha(u.cha).warnings.empty() ? 0 : 1;
  }

  std::mt19937_64 rng(8);
  const std::string alphabet = "\x15\t\n\r*%@:[]<>&_()+/=0123456789 .,|PARINVxwh\"'";
  std::size_t exceptions = 0, invariant_breaks = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::string s = seeds[rng() % seeds.size()];
    const int edits = 1 + static_cast<int>(rng() % 30);
    for (int e = 0; e < edits; ++e) {
      if (s.empty()) s = "@";
      const std::size_t at = rng() % s.size();
      switch (rng() % 5) {
        case 0: s.erase(at, 1 + rng() % 16); break;
        case 1: s.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
        case 2: s[at] = static_cast<char>(rng() % 256); break;
        case 3: s.insert(at, s.substr(rng() % s.size(), rng() % 60)); break;
        default: s.resize(at); break;
      }
    }
    try {
      const auto p = parse_cha(s);
      for (const auto& t : p.transcript.turns) {
        if (t.interval && t.interval->start_ms > t.interval->end_ms) ++invariant_breaks;
      }
      const auto iv = participant_intervals(p.transcript, "PAR").intervals;
      for (std::size_t i = 1; i < iv.size(); ++i) {
        if (iv[i].start_ms <= iv[i - 1].end_ms) ++invariant_breaks;
      }
      (void)word_count(p.transcript, "PAR");
    } catch (...) {
      ++exceptions;
    }
  }
  Outcome o;
  o.pass = exceptions == 0 && invariant_breaks == 0 && warned == 0;
  o.detail = "10000 mutated inputs: " + std::to_string(exceptions) + " exceptions, " + std::to_string(invariant_breaks) +
             " invariant breaks; " + std::to_string(generated) + " generated transcripts, " + std::to_string(warned) +
             " with warnings";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "dimensional fidelity", 60, dimensional_fidelity},
      {2, "DSP oracles", 120, dsp_oracles},
      {3, "CFS oracle", 300, cfs_oracle},
      {4, "fusion rules", 60, fusion_rules},
      {5, "leakage audit", 120, leakage_audit},
      {6, "synthetic reproduction", 900, synthetic_reproduction},
      {7, "determinism", 300, determinism},
      {8, "parser robustness", 120, parser_robustness},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.number, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
