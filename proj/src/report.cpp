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

#include <cstdio>
#include <sstream>

#include "dstage/eval.hpp"

namespace dstage {

namespace {

nlohmann::ordered_json summary_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f_score"] = s.f_score;
  return j;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%6.1f", 100.0 * v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

nlohmann::ordered_json ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["description"] = description;
  j["class_order"] = class_order;
  j["n_utterances"] = n_utterances;
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& c : metrics.per_class) {
    nlohmann::ordered_json o;
    o["label"] = c.label;
    o["precision"] = c.precision;
    o["recall"] = c.recall;
    o["f_score"] = c.f_score;
    o["support"] = c.support;
    classes.push_back(std::move(o));
  }
  j["per_class"] = std::move(classes);
  nlohmann::ordered_json overall;
  overall["weighted"] = summary_json(metrics.weighted);
  overall["macro"] = summary_json(metrics.macro);
  j["overall"] = std::move(overall);
  j["confusion"] = confusion;
  j["warnings"] = warnings;
  return j;
}

std::string ExperimentReport::to_json_text() const { return to_json().dump(2) + "\n"; }

std::string ExperimentReport::to_text() const {
  std::ostringstream out;
  out << "config " << config_hash << "\n" << description << "\n\n";
  std::size_t width = 9;
  for (const auto& c : class_order) width = std::max(width, c.size() + 2);
  out << pad("Class", width) << "    Pr     Re  F-Score  Support\n";
  for (const auto& c : metrics.per_class) {
    out << pad(c.label, width) << pct(c.precision) << ' ' << pct(c.recall) << "   "
        << pct(c.f_score) << "  " << c.support << "\n";
  }
  out << pad("Overall", width) << pct(metrics.weighted.precision) << ' '
      << pct(metrics.weighted.recall) << "   " << pct(metrics.weighted.f_score) << "  "
      << n_utterances << "  (weighted)\n";
  out << pad("Macro", width) << pct(metrics.macro.precision) << ' '
      << pct(metrics.macro.recall) << "   " << pct(metrics.macro.f_score) << "\n\n";
  out << "Confusion (rows true, columns predicted)\n" << pad("", width);
  for (const auto& c : class_order) out << pad(c, width);
  out << "\n";
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    out << pad(class_order[r], width);
    for (std::size_t v : confusion[r]) out << pad(std::to_string(v), width);
    out << "\n";
  }
  if (!warnings.empty()) {
    out << "\nWarnings\n";
    for (const auto& w : warnings) out << "  " << w << "\n";
  }
  return out.str();
}

}  // namespace dstage
