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

#include "dstage/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dstage/parallel.hpp"
#include "dstage/prosody.hpp"

namespace dstage {

namespace {

constexpr const char* kCacheMagic = "dstage-cache 1";

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CachedSet {
  std::vector<double> values;
  Warnings warnings;
};

std::filesystem::path cache_file(const std::filesystem::path& dir, FeatureSetId set,
                                 std::uint64_t key) {
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.txt", static_cast<unsigned long long>(key));
  return dir / std::string(set_name(set)) / name;
}

std::optional<CachedSet> cache_read(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string line;
  if (!std::getline(in, line) || line != kCacheMagic) return std::nullopt;
  CachedSet c;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      c.warnings.push_back(line.substr(1));
      continue;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) return std::nullopt;
    c.values.push_back(v);
  }
  if (c.values.size() != dim) return std::nullopt;
  return c;
}

void cache_write(const std::filesystem::path& path, const CachedSet& c) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) return;
    out << kCacheMagic << '\n';
    for (double v : c.values) out << format_double(v) << '\n';
    for (const auto& w : c.warnings) out << '#' << w << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

struct Outcome {
  std::vector<std::vector<double>> rows;  // per requested set
  Warnings warnings;
  std::optional<std::string> failure;
  std::size_t computed = 0;
  std::size_t cached = 0;
};

Outcome process(const ManifestEntry& entry, const ExtractRequest& req, std::uint64_t model_hash) {
  Outcome out;
  const std::size_t n_sets = req.sets.size();
  out.rows.resize(n_sets);
  std::vector<std::uint64_t> keys(n_sets, 0);
  std::vector<bool> have(n_sets, false);
  const bool use_cache = !req.cache_dir.empty();
  try {
    if (use_cache) {
      for (std::size_t s = 0; s < n_sets; ++s) {
        keys[s] = cache_key(entry, req.sets[s], model_hash);
        if (auto c = cache_read(cache_file(req.cache_dir, req.sets[s], keys[s]),
                                set_dimension(req.sets[s]))) {
          out.rows[s] = std::move(c->values);
          out.warnings.insert(out.warnings.end(), c->warnings.begin(), c->warnings.end());
          have[s] = true;
          ++out.cached;
        }
      }
    }
    bool complete = true;
    for (bool h : have) complete = complete && h;
    if (complete) return out;

    Warnings prep_warnings;
    PreparedUtterance prepared = prepare_utterance(entry, &prep_warnings);
    out.warnings.insert(out.warnings.end(), prep_warnings.begin(), prep_warnings.end());
    const UtteranceAnalysis a = analyze(prepared.audio, req.options);

    std::optional<FeatureVector> f1;
    const auto get_f1 = [&]() -> const FeatureVector& {
      if (!f1) {
        for (std::size_t s = 0; s < n_sets; ++s) {
          if (req.sets[s] == FeatureSetId::kF1 && have[s]) {
            f1 = FeatureVector{FeatureSetId::kF1, out.rows[s], feature_names(FeatureSetId::kF1)};
          }
        }
        if (!f1) f1 = f1_vector(a);
      }
      return *f1;
    };

    for (std::size_t s = 0; s < n_sets; ++s) {
      if (have[s]) continue;
      Warnings w;
      switch (req.sets[s]) {
        case FeatureSetId::kF1: out.rows[s] = get_f1().values; break;
        case FeatureSetId::kF2: out.rows[s] = f2_vector(a, &w).values; break;
        case FeatureSetId::kF3: out.rows[s] = f3_vector(a, prepared.word_count, &w).values; break;
        case FeatureSetId::kF4: out.rows[s] = f4_from_f1(get_f1(), *req.emotion).values; break;
        case FeatureSetId::kFused: break;
      }
      ++out.computed;
      if (use_cache) cache_write(cache_file(req.cache_dir, req.sets[s], keys[s]), {out.rows[s], w});
      out.warnings.insert(out.warnings.end(), w.begin(), w.end());
    }
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

PreparedUtterance prepare_utterance(const ManifestEntry& entry, Warnings* warnings) {
  PreparedUtterance p;
  AudioBuffer audio = load_audio(entry.wav_path);
  if (entry.cha_path.empty()) {
    p.audio = std::move(audio);
    return p;
  }
  const ParsedTranscript parsed = read_cha(entry.cha_path);
  for (const auto& w : parsed.warnings) {
    warn(warnings, entry.cha_path.filename().string() + ":" + std::to_string(w.line) + ": " +
                       w.message);
  }
  const std::string speaker =
      parsed.transcript.participant_id.empty() ? "PAR" : parsed.transcript.participant_id;
  p.word_count = word_count(parsed.transcript, speaker);
  const SpeakerIntervals iv = participant_intervals(parsed.transcript, speaker);
  if (iv.untimed_turns > 0) {
    warn(warnings, std::to_string(iv.untimed_turns) + " untimed " + speaker + " turns kept out");
  }
  if (iv.intervals.empty()) {
    warn(warnings, "no timed " + speaker + " turns; using the whole recording");
    p.audio = std::move(audio);
    return p;
  }
  p.audio = excise_segments(audio, iv.intervals, warnings);
  return p;
}

std::uint64_t cache_key(const ManifestEntry& entry, FeatureSetId set, std::uint64_t model_hash) {
  std::uint64_t h = fnv1a(entry.utterance_id.data(), entry.utterance_id.size());
  const std::string wav = read_bytes(entry.wav_path);
  h = fnv1a(wav.data(), wav.size(), h);
  if (!entry.cha_path.empty()) {
    const std::string cha = read_bytes(entry.cha_path);
    h = fnv1a(cha.data(), cha.size(), h);
  }
  const std::uint64_t recipe = recipe_hash();
  h = fnv1a(&recipe, sizeof(recipe), h);
  const auto name = set_name(set);
  h = fnv1a(name.data(), name.size(), h);
  if (set == FeatureSetId::kF4) h = fnv1a(&model_hash, sizeof(model_hash), h);
  return h;
}

ExtractResult extract_corpus(const Manifest& manifest, const ExtractRequest& request) {
  for (auto s : request.sets) {
    if (s == FeatureSetId::kFused) {
      throw Error(ErrorCode::kInvalidConfig, "only base feature sets can be extracted");
    }
    if (s == FeatureSetId::kF4 && request.emotion == nullptr) {
      throw Error(ErrorCode::kInvalidConfig, "f4 requires an emotion model");
    }
  }
  std::uint64_t model_hash = 0;
  if (request.emotion != nullptr) {
    const std::string text = request.emotion->serialize();
    model_hash = fnv1a(text.data(), text.size());
  }

  const auto n = static_cast<std::ptrdiff_t>(manifest.entries.size());
  std::vector<Outcome> outcomes(manifest.entries.size());
  if (request.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      outcomes[i] = process(manifest.entries[i], request, model_hash);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      outcomes[i] = process(manifest.entries[i], request, model_hash);
    }
  }

  ExtractResult result;
  for (auto s : request.sets) {
    FeatureMatrix m;
    m.set_id = s;
    m.names = feature_names(s);
    result.matrices.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& e = manifest.entries[i];
    auto& o = outcomes[i];
    result.computed += o.computed;
    result.cached += o.cached;
    for (const auto& w : o.warnings) result.warnings.push_back(e.utterance_id + ": " + w);
    if (o.failure) {
      result.failures.push_back({e.utterance_id, *o.failure});
      continue;
    }
    for (std::size_t s = 0; s < request.sets.size(); ++s) {
      result.matrices[s].append(e.utterance_id, e.label, o.rows[s]);
    }
    result.speakers.push_back(e.speaker_id);
  }
  return result;
}

}  // namespace dstage
