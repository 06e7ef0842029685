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

#include "dstage/chat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace dstage {

namespace {

constexpr char kBullet = '\x15';

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(delim, start);
    if (at == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, at - start));
    start = at + 1;
  }
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool is_code_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9');
}

// Characters that never survive token cleaning.
bool is_stripped_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u < 0x20 || u == 0x7f) return true;
  switch (c) {
    case '[': case ']': case '<': case '>': case '&': case '+':
    case '.': case ',': case '?': case '!': case ';': case ':':
    case '"': case '(': case ')': case '/': case '=': case '^':
    case '*': case '%': case '@': case '$': case '#': case '~':
    case '{': case '}': case '|':
      return true;
    default:
      return false;
  }
}

struct BulletScan {
  std::string body;  // text with bullets removed
  std::optional<Interval> interval;
  std::vector<std::string> problems;
};

BulletScan scan_bullets(std::string_view text) {
  BulletScan scan;
  std::optional<std::int64_t> lo;
  std::optional<std::int64_t> hi;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find(kBullet, pos);
    if (open == std::string_view::npos) {
      scan.body.append(text.substr(pos));
      break;
    }
    scan.body.append(text.substr(pos, open - pos));
    const auto close = text.find(kBullet, open + 1);
    if (close == std::string_view::npos) {
      scan.problems.push_back("unterminated media bullet");
      break;
    }
    const auto content = text.substr(open + 1, close - open - 1);
    // Accept "start_end" and the older "%snd:"file"_start_end" form.
    const auto parts = split(content, '_');
    std::optional<std::int64_t> start;
    std::optional<std::int64_t> end;
    if (parts.size() >= 2) {
      start = parse_int(parts[parts.size() - 2]);
      end = parse_int(parts[parts.size() - 1]);
    }
    if (!start || !end || *start < 0) {
      scan.problems.push_back("non-numeric bullet '" + std::string(content) +
                              "'");
    } else if (*start > *end) {
      scan.problems.push_back("reversed bullet " + std::to_string(*start) +
                              "_" + std::to_string(*end));
    } else {
      lo = lo ? std::min(*lo, *start) : *start;
      hi = hi ? std::max(*hi, *end) : *end;
    }
    pos = close + 1;
  }
  if (lo && hi && scan.problems.empty()) scan.interval = Interval{*lo, *hi};
  return scan;
}

}  // namespace

std::vector<std::string> clean_tokens(std::string_view body) {
  // Drop bracketed codes ([/], [: word], [+ exc] ...) and bullets wholesale.
  std::string text;
  text.reserve(body.size());
  int bracket_depth = 0;
  bool in_bullet = false;
  for (char c : body) {
    if (c == kBullet) {
      in_bullet = !in_bullet;
      continue;
    }
    if (in_bullet) continue;
    if (c == '[') {
      ++bracket_depth;
      continue;
    }
    if (c == ']') {
      if (bracket_depth > 0) --bracket_depth;
      continue;
    }
    if (bracket_depth > 0) continue;
    text.push_back(c);
  }

  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string raw;
  while (in >> raw) {
    // Retraction brackets only delimit words; the words themselves stay.
    std::string tok;
    for (char c : raw) {
      if (c != '<' && c != '>') tok.push_back(c);
    }
    if (tok.empty() || tok.front() == '&' || tok.front() == '+') continue;
    if (const auto at = tok.find('@'); at != std::string::npos) tok.resize(at);
    std::string clean;
    for (char c : tok) {
      if (!is_stripped_char(c)) clean.push_back(c);
    }
    if (!clean.empty()) tokens.push_back(std::move(clean));
  }
  return tokens;
}

ParsedTranscript parse_cha(std::string_view text) {
  ParsedTranscript result;
  Transcript& t = result.transcript;

  // Join tab-indented continuation lines onto their logical line.
  struct Logical {
    std::string text;
    std::size_t line;
  };
  std::vector<Logical> lines;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (!raw.empty() && raw.front() == '\t' && !lines.empty()) {
      lines.back().text.push_back(' ');
      lines.back().text.append(trim(raw));
      continue;
    }
    if (trim(raw).empty()) continue;
    lines.push_back({std::string(raw), line_no});
  }

  std::optional<std::int64_t> last_start;
  bool have_turn = false;
  for (const auto& [line, at] : lines) {
    const char lead = line.front();
    if (lead == '@') {
      const auto colon = line.find(':');
      std::string key =
          line.substr(1, colon == std::string::npos ? std::string::npos
                                                    : colon - 1);
      std::string value = colon == std::string::npos
                              ? std::string()
                              : std::string(trim(std::string_view(line).substr(colon + 1)));
      t.metadata.emplace_back(std::string(trim(key)), std::move(value));
      continue;
    }
    if (lead == '%') {
      const auto colon = line.find(':');
      std::string name = line.substr(
          1, colon == std::string::npos ? std::string::npos : colon - 1);
      std::string value = colon == std::string::npos
                              ? std::string()
                              : std::string(trim(std::string_view(line).substr(colon + 1)));
      if (have_turn) {
        t.turns.back().dependent_tiers.emplace_back(std::move(name),
                                                    std::move(value));
      } else {
        t.metadata.emplace_back("%" + name, std::move(value));
      }
      continue;
    }
    if (lead != '*') {
      result.warnings.push_back({ChatWarningKind::kMalformedTier, at,
                                 "line outside any tier"});
      continue;
    }
    const auto colon = line.find(':');
    const std::string_view code =
        colon == std::string::npos
            ? std::string_view()
            : std::string_view(line).substr(1, colon - 1);
    if (code.size() != 3 || !std::all_of(code.begin(), code.end(), is_code_char)) {
      result.warnings.push_back({ChatWarningKind::kMalformedTier, at,
                                 "main tier without a speaker code"});
      have_turn = false;
      continue;
    }
    Turn turn;
    turn.speaker = std::string(code);
    auto scan = scan_bullets(std::string_view(line).substr(colon + 1));
    for (auto& p : scan.problems) {
      result.warnings.push_back({ChatWarningKind::kBadBullet, at, std::move(p)});
    }
    turn.interval = scan.interval;
    turn.tokens = clean_tokens(scan.body);
    if (turn.interval) {
      if (last_start && turn.interval->start_ms < *last_start) {
        result.warnings.push_back({ChatWarningKind::kOutOfOrder, at,
                                   "turn starts before the previous one"});
      }
      last_start = turn.interval->start_ms;
    }
    t.turns.push_back(std::move(turn));
    have_turn = true;
  }

  for (const auto& [key, value] : t.metadata) {
    if (key == "PID") t.participant_id = value;
  }
  if (t.participant_id.empty()) {
    for (const auto& [key, value] : t.metadata) {
      if (key != "ID") continue;
      const auto fields = split(value, '|');
      if (fields.size() > 7 && trim(fields[7]) == "Participant") {
        t.participant_id = std::string(trim(fields[2]));
        break;
      }
    }
  }
  return result;
}

ParsedTranscript read_cha(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cha(ss.str());
}

SpeakerIntervals participant_intervals(const Transcript& t,
                                       std::string_view speaker) {
  SpeakerIntervals out;
  std::vector<Interval> raw;
  for (const auto& turn : t.turns) {
    if (turn.speaker != speaker) continue;
    if (turn.interval) {
      raw.push_back(*turn.interval);
    } else {
      ++out.untimed_turns;
    }
  }
  std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) {
    return a.start_ms != b.start_ms ? a.start_ms < b.start_ms
                                    : a.end_ms < b.end_ms;
  });
  for (const auto& iv : raw) {
    if (!out.intervals.empty() &&
        iv.start_ms <= out.intervals.back().end_ms + kMergeGapMs) {
      auto& last = out.intervals.back();
      last.end_ms = std::max(last.end_ms, iv.end_ms);
    } else {
      out.intervals.push_back(iv);
    }
  }
  return out;
}

std::size_t word_count(const Transcript& t, std::string_view speaker) {
  std::size_t n = 0;
  for (const auto& turn : t.turns) {
    if (turn.speaker == speaker) n += turn.tokens.size();
  }
  return n;
}

AudioBuffer excise_segments(const AudioBuffer& audio,
                            const std::vector<Interval>& keep,
                            Warnings* warnings) {
  const double ms_to_samples = audio.sample_rate / 1000.0;
  const auto duration_ms = static_cast<std::int64_t>(
      std::floor(audio.size() / ms_to_samples));
  AudioBuffer out;
  out.sample_rate = audio.sample_rate;
  bool any = false;
  for (const auto& iv : keep) {
    const std::int64_t s = std::clamp<std::int64_t>(iv.start_ms, 0, duration_ms);
    const std::int64_t e = std::clamp<std::int64_t>(iv.end_ms, 0, duration_ms);
    if (s != iv.start_ms || e != iv.end_ms) {
      warn(warnings, "interval " + std::to_string(iv.start_ms) + "_" +
                         std::to_string(iv.end_ms) + " clamped to audio");
    }
    if (e <= s) continue;
    const auto a = std::min<std::size_t>(
        audio.size(), static_cast<std::size_t>(std::llround(s * ms_to_samples)));
    const auto b = std::min<std::size_t>(
        audio.size(), static_cast<std::size_t>(std::llround(e * ms_to_samples)));
    if (b <= a) continue;
    out.samples.insert(out.samples.end(),
                       audio.samples.begin() + static_cast<std::ptrdiff_t>(a),
                       audio.samples.begin() + static_cast<std::ptrdiff_t>(b));
    any = true;
  }
  if (!any) {
    throw Error(ErrorCode::kEmptySelection, "no interval overlaps the audio");
  }
  return out;
}

std::vector<std::string> Manifest::label_order() const {
  std::vector<std::string> order;
  for (const auto& e : entries) {
    if (std::find(order.begin(), order.end(), e.label) == order.end()) {
      order.push_back(e.label);
    }
  }
  return order;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  Manifest m;
  std::string line;
  std::map<std::string, std::size_t> column;
  char delim = ',';
  std::size_t line_no = 0;
  const auto resolve = [&](std::string_view p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp{std::string(p)};
    return fp.is_absolute() ? fp : base / fp;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    if (column.empty()) {
      delim = line.find('\t') != std::string::npos ? '\t' : ',';
      const auto names = split(line, delim);
      for (std::size_t i = 0; i < names.size(); ++i) {
        column[std::string(trim(names[i]))] = i;
      }
      for (const char* required : {"utterance_id", "wav_path", "label"}) {
        if (!column.count(required)) {
          throw Error(ErrorCode::kParse, path.string() +
                                             ": manifest header lacks column " +
                                             required);
        }
      }
      continue;
    }
    const auto cells = split(line, delim);
    const auto get = [&](const char* name) -> std::string_view {
      const auto it = column.find(name);
      if (it == column.end() || it->second >= cells.size()) return {};
      return trim(cells[it->second]);
    };
    ManifestEntry e;
    e.utterance_id = std::string(get("utterance_id"));
    e.wav_path = resolve(get("wav_path"));
    e.cha_path = resolve(get("cha_path"));
    e.label = std::string(get("label"));
    e.speaker_id = std::string(get("speaker_id"));
    if (e.utterance_id.empty() || e.wav_path.empty() || e.label.empty()) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": missing required field");
    }
    m.entries.push_back(std::move(e));
  }
  if (column.empty()) {
    throw Error(ErrorCode::kParse, path.string() + ": empty manifest");
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  const auto base = path.parent_path();
  const auto rel = [&](const std::filesystem::path& p) {
    if (p.empty()) return std::string();
    return p.lexically_relative(base).generic_string();
  };
  bool speakers = std::any_of(m.entries.begin(), m.entries.end(),
                              [](const auto& e) { return !e.speaker_id.empty(); });
  out << "utterance_id,wav_path,cha_path,label" << (speakers ? ",speaker_id" : "")
      << '\n';
  for (const auto& e : m.entries) {
    out << e.utterance_id << ',' << rel(e.wav_path) << ',' << rel(e.cha_path)
        << ',' << e.label;
    if (speakers) out << ',' << e.speaker_id;
    out << '\n';
  }
}

}  // namespace dstage
