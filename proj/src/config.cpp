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

#include "dstage/config.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace dstage {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "data.manifest",          "data.emotion_model",       "data.output_dir",
      "data.cache_dir",         "features.sets",            "fusion.mode",
      "fusion.decision",        "model.classifier",         "model.trees",
      "protocol.selection_scope", "protocol.balance_scope", "protocol.k_folds",
      "protocol.inner_folds",   "protocol.seed",            "protocol.group_by_speaker",
      "protocol.stacking_resubstitution",
  };
  return keys;
}

[[noreturn]] void bad(const std::string& key, const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, key + ": " + message);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad(key, "'" + value + "' is not a valid number");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  bad(key, "expected true or false, got '" + value + "'");
}

ModelKind parse_kind_or_throw(const std::string& key, const std::string& value) {
  const auto k = parse_kind(value);
  if (!k) bad(key, "unknown classifier '" + value + "'");
  return *k;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

}  // namespace

Settings parse_settings(std::string_view text) {
  Settings out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty() || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty key");
    }
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    out[full] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_settings(text);
}

ExperimentConfig config_from_settings(const Settings& settings,
                                      const std::filesystem::path& base_dir) {
  for (const auto& [key, value] : settings) {
    if (!known_keys().count(key)) bad(key, "unknown key");
  }
  const auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = settings.find(key);
    if (it == settings.end() || it->second.empty()) return std::nullopt;
    return it->second;
  };

  ExperimentConfig c;
  if (auto v = get("data.manifest")) c.manifest_path = resolve(base_dir, *v);
  if (auto v = get("data.emotion_model")) c.emotion_model_path = resolve(base_dir, *v);
  if (auto v = get("data.output_dir")) c.output_dir = resolve(base_dir, *v);
  if (auto v = get("data.cache_dir")) c.cache_dir = resolve(base_dir, *v);

  if (auto v = get("features.sets")) {
    std::string item;
    std::istringstream in(*v);
    while (std::getline(in, item, ',')) {
      const auto name = std::string(trim(item));
      const auto id = parse_set_id(name);
      if (!id || *id == FeatureSetId::kFused) bad("features.sets", "unknown feature set '" + name + "'");
      c.feature_sets.push_back(*id);
    }
  }
  c.fusion.members = c.feature_sets;
  if (auto v = get("fusion.mode")) {
    const auto m = parse_mode(*v);
    if (!m) bad("fusion.mode", "unknown mode '" + *v + "'");
    c.fusion.mode = *m;
  }
  if (auto v = get("fusion.decision")) {
    c.fusion.decision_kind = parse_kind_or_throw("fusion.decision", *v);
  } else if (c.fusion.mode == FusionMode::kLateDecision) {
    c.fusion.decision_kind = ModelKind::kRandomForest;
  }
  if (auto v = get("model.classifier")) c.classifier = parse_kind_or_throw("model.classifier", *v);
  if (auto v = get("model.trees")) c.forest_trees = parse_number<int>("model.trees", *v);
  if (auto v = get("protocol.selection_scope")) {
    const auto s = parse_selection_scope(*v);
    if (!s) bad("protocol.selection_scope", "unknown scope '" + *v + "'");
    c.selection_scope = *s;
  }
  if (auto v = get("protocol.balance_scope")) {
    const auto s = parse_balance_scope(*v);
    if (!s) bad("protocol.balance_scope", "unknown scope '" + *v + "'");
    c.balance_scope = *s;
  }
  if (auto v = get("protocol.k_folds")) c.k_folds = parse_number<int>("protocol.k_folds", *v);
  if (auto v = get("protocol.inner_folds")) {
    c.inner_folds = parse_number<int>("protocol.inner_folds", *v);
  }
  if (auto v = get("protocol.seed")) c.seed = parse_number<std::uint64_t>("protocol.seed", *v);
  if (auto v = get("protocol.group_by_speaker")) {
    c.group_by_speaker = parse_bool("protocol.group_by_speaker", *v);
  }
  if (auto v = get("protocol.stacking_resubstitution")) {
    c.stacking_resubstitution = parse_bool("protocol.stacking_resubstitution", *v);
  }
  return c;
}

std::vector<std::string> ExperimentConfig::problems(bool check_paths) const {
  std::vector<std::string> p;
  const auto add = [&](const char* key, const std::string& msg) {
    p.push_back(std::string(key) + ": " + msg);
  };
  if (manifest_path.empty()) {
    add("data.manifest", "required");
  } else if (check_paths && !std::filesystem::is_regular_file(manifest_path)) {
    add("data.manifest", "no such file '" + manifest_path.string() + "'");
  }
  if (output_dir.empty()) add("data.output_dir", "required");
  if (feature_sets.empty()) add("features.sets", "at least one feature set is required");
  std::set<FeatureSetId> seen;
  for (auto s : feature_sets) {
    if (!seen.insert(s).second) add("features.sets", std::string(set_name(s)) + " listed twice");
  }
  const bool wants_f4 = seen.count(FeatureSetId::kF4) > 0;
  if (wants_f4 && emotion_model_path.empty()) {
    add("data.emotion_model", "required when features.sets contains f4");
  } else if (wants_f4 && check_paths && !std::filesystem::is_regular_file(emotion_model_path)) {
    add("data.emotion_model", "no such file '" + emotion_model_path.string() + "'");
  }
  if (!seed) add("protocol.seed", "required");
  if (k_folds < 2) add("protocol.k_folds", "must be at least 2");
  if (fusion.mode == FusionMode::kLateDecision && !stacking_resubstitution && inner_folds < 2) {
    add("protocol.inner_folds", "must be at least 2");
  }
  if (forest_trees < 1) add("model.trees", "must be positive");
  if (fusion.decision_kind && fusion.mode != FusionMode::kLateDecision) {
    add("fusion.decision", "only meaningful with mode late_decision");
  }
  const bool selects = fusion.mode == FusionMode::kConcatThenSelect ||
                       fusion.mode == FusionMode::kSelectThenConcat;
  if (selects && selection_scope == SelectionScope::kNone) {
    add("protocol.selection_scope", "mode " + std::string(mode_name(fusion.mode)) +
                                        " needs global or per_fold");
  }
  if (fusion.is_late() && feature_sets.size() < 2) {
    add("fusion.mode", "late fusion needs at least two feature sets");
  }
  return p;
}

void ExperimentConfig::validate(bool check_paths) const {
  const auto p = problems(check_paths);
  if (p.empty()) return;
  std::string msg = "invalid configuration";
  for (const auto& line : p) msg += "\n  " + line;
  throw Error(ErrorCode::kInvalidConfig, msg);
}

ExperimentSpec ExperimentConfig::spec() const {
  ExperimentSpec s;
  s.plan = fusion;
  s.plan.members = feature_sets;
  s.classifier = classifier;
  s.selection_scope = selection_scope;
  s.balance_scope = balance_scope;
  s.k_folds = k_folds;
  s.inner_folds = inner_folds;
  s.seed = seed.value_or(0);
  s.stacking_resubstitution = stacking_resubstitution;
  s.group_by_speaker = group_by_speaker;
  s.train_options.forest_trees = forest_trees;
  return s;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  std::string sets;
  for (std::size_t i = 0; i < feature_sets.size(); ++i) {
    sets += (i ? ", " : "") + std::string(set_name(feature_sets[i]));
  }
  out << "[data]\n"
      << "manifest = " << manifest_path.generic_string() << "\n"
      << "emotion_model = " << emotion_model_path.generic_string() << "\n"
      << "output_dir = " << output_dir.generic_string() << "\n"
      << "cache_dir = " << cache_dir.generic_string() << "\n\n"
      << "[features]\nsets = " << sets << "\n\n"
      << "[fusion]\nmode = " << mode_name(fusion.mode) << "\n"
      << "decision = " << (fusion.decision_kind ? kind_name(*fusion.decision_kind) : "") << "\n\n"
      << "[model]\nclassifier = " << kind_name(classifier) << "\n"
      << "trees = " << forest_trees << "\n\n"
      << "[protocol]\n"
      << "selection_scope = " << scope_name(selection_scope) << "\n"
      << "balance_scope = " << scope_name(balance_scope) << "\n"
      << "k_folds = " << k_folds << "\n"
      << "inner_folds = " << inner_folds << "\n"
      << "seed = " << (seed ? std::to_string(*seed) : "") << "\n"
      << "group_by_speaker = " << (group_by_speaker ? "true" : "false") << "\n"
      << "stacking_resubstitution = " << (stacking_resubstitution ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace dstage
