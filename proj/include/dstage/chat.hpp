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

#ifndef DSTAGE_CHAT_HPP_
#define DSTAGE_CHAT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dstage/audio.hpp"

namespace dstage {

// Millisecond interval from a CHAT media bullet; start_ms <= end_ms.
struct Interval {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  std::int64_t length_ms() const { return end_ms - start_ms; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct Turn {
  std::string speaker;               // three-character code, e.g. PAR, INV
  std::vector<std::string> tokens;   // cleaned words
  std::optional<Interval> interval;
  // %xxx dependent tiers attached to this turn, tier name without '%'.
  std::vector<std::pair<std::string, std::string>> dependent_tiers;
};

struct Transcript {
  std::vector<Turn> turns;
  std::string participant_id;
  // Header lines (@Key: value) in file order; repeated keys are kept.
  std::vector<std::pair<std::string, std::string>> metadata;
};

enum class ChatWarningKind { kMalformedTier, kBadBullet, kOutOfOrder, kUntimed };

struct ChatWarning {
  ChatWarningKind kind;
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct ParsedTranscript {
  Transcript transcript;
  std::vector<ChatWarning> warnings;
};

// Total over any input: malformed material becomes warnings, never throws.
ParsedTranscript parse_cha(std::string_view text);
ParsedTranscript read_cha(const std::filesystem::path& path);

// Strips CHAT codes from one main-tier body and returns the spoken words.
std::vector<std::string> clean_tokens(std::string_view body);

// Intervals merged when they overlap or are separated by <= this gap.
inline constexpr std::int64_t kMergeGapMs = 50;

struct SpeakerIntervals {
  std::vector<Interval> intervals;  // sorted, pairwise disjoint
  std::size_t untimed_turns = 0;
};

SpeakerIntervals participant_intervals(const Transcript& t,
                                       std::string_view speaker);

std::size_t word_count(const Transcript& t, std::string_view speaker);

// Concatenates the parts of `audio` covered by `keep`. Intervals are clamped
// to the buffer (with a warning); throws kEmptySelection when nothing
// survives.
AudioBuffer excise_segments(const AudioBuffer& audio,
                            const std::vector<Interval>& keep,
                            Warnings* warnings = nullptr);

// Corpus manifest row. Paths are resolved relative to the manifest file.
struct ManifestEntry {
  std::string utterance_id;
  std::filesystem::path wav_path;
  std::filesystem::path cha_path;  // empty when absent
  std::string label;
  std::string speaker_id;  // optional column
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  // Labels in order of first appearance.
  std::vector<std::string> label_order() const;
};

// Delimiter-separated (comma or tab, detected from the header) with columns
// utterance_id, wav_path, cha_path, label and optionally speaker_id.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

}  // namespace dstage

#endif  // DSTAGE_CHAT_HPP_
