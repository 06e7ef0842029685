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

#ifndef DSTAGE_PIPELINE_HPP_
#define DSTAGE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dstage/chat.hpp"
#include "dstage/emotion.hpp"
#include "dstage/features.hpp"

namespace dstage {

// Participant-only audio plus the transcript word count, when a transcript
// is available.
struct PreparedUtterance {
  AudioBuffer audio;
  std::optional<std::size_t> word_count;
};

// Loads the wav, and with a transcript keeps only the PAR intervals.
// Transcripts without timed PAR turns fall back to the whole recording.
PreparedUtterance prepare_utterance(const ManifestEntry& entry, Warnings* warnings = nullptr);

struct ExtractRequest {
  std::vector<FeatureSetId> sets;
  const EmotionModel* emotion = nullptr;  // required for f4
  ExtractOptions options;
  std::filesystem::path cache_dir;  // empty disables caching
  Exec exec = Exec::kParallel;
};

struct ExtractFailure {
  std::string utterance_id;
  std::string message;
};

struct ExtractResult {
  std::vector<FeatureMatrix> matrices;  // one per requested set, request order
  std::vector<std::string> speakers;    // aligned with matrix rows
  std::vector<ExtractFailure> failures;
  std::vector<std::string> warnings;    // "<utterance_id>: <message>"
  std::size_t computed = 0;             // (utterance, set) pairs extracted
  std::size_t cached = 0;               // (utterance, set) pairs read from cache
};

// Rows keep manifest order; utterances that fail are left out and listed in
// `failures`. Throws kInvalidConfig for f4 without an emotion model or a
// fused set id.
ExtractResult extract_corpus(const Manifest& manifest, const ExtractRequest& request);

// Cache key of one (utterance, set): utterance id, wav and cha bytes, the
// recipe hash and, for f4, the emotion model.
std::uint64_t cache_key(const ManifestEntry& entry, FeatureSetId set,
                        std::uint64_t model_hash = 0);

}  // namespace dstage

#endif  // DSTAGE_PIPELINE_HPP_
