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
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dstage/cfs.hpp"
#include "dstage/config.hpp"
#include "dstage/emotion.hpp"
#include "dstage/eval.hpp"
#include "dstage/fusion.hpp"
#include "dstage/parallel.hpp"
#include "dstage/pipeline.hpp"
#include "dstage/synth.hpp"

namespace fs = std::filesystem;
using namespace dstage;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<FeatureSetId> parse_sets(const std::string& list) {
  Settings s;
  s["features.sets"] = list;
  return config_from_settings(s).feature_sets;
}

void report_extraction(const ExtractResult& r) {
  for (const auto& f : r.failures) {
    std::cerr << "error: " << f.utterance_id << ": " << f.message << "\n";
  }
  std::cerr << "extracted " << r.computed << " (cached " << r.cached << "), "
            << r.failures.size() << " failed\n";
}

// ---- synth-corpus

struct SynthArgs {
  std::string kind = "dementia";
  std::size_t n_per_class = 20;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  if (a.n_per_class < 1) throw Error(ErrorCode::kInvalidConfig, "n-per-class: must be at least 1");
  Manifest m = a.kind == "dementia" ? write_dementia_corpus(a.out, a.n_per_class, a.seed)
                                    : write_emotion_corpus(a.out, a.n_per_class, a.seed);
  std::cout << "wrote " << m.entries.size() << " utterances to "
            << (fs::path(a.out) / "manifest.csv").string() << "\n";
  return kExitOk;
}

// ---- extract

struct ExtractArgs {
  std::string manifest;
  std::string sets = "f1,f2,f3";
  std::string out;
  std::string emotion_model;
  std::string cache_dir;
  bool no_cache = false;
  bool no_denoise = false;
};

int run_extract(const ExtractArgs& a) {
  const Manifest manifest = read_manifest(a.manifest);
  ExtractRequest req;
  req.sets = parse_sets(a.sets);
  std::optional<EmotionModel> model;
  if (!a.emotion_model.empty()) model = EmotionModel::load(a.emotion_model);
  req.emotion = model ? &*model : nullptr;
  req.options.denoise = !a.no_denoise;
  if (!a.no_cache) req.cache_dir = a.cache_dir.empty() ? fs::path(a.out) / "cache" : fs::path(a.cache_dir);
  fs::create_directories(a.out);
  const ExtractResult r = extract_corpus(manifest, req);
  for (const auto& m : r.matrices) {
    write_feature_matrix(fs::path(a.out) / (std::string(set_name(m.set_id)) + ".csv"), m);
  }
  std::string log;
  for (const auto& f : r.failures) log += "error " + f.utterance_id + ": " + f.message + "\n";
  for (const auto& w : r.warnings) log += "warning " + w + "\n";
  write_file(fs::path(a.out) / "extract.log", log);
  report_extraction(r);
  return r.failures.empty() ? kExitOk : kExitPartial;
}

// ---- evaluate

struct EvaluateArgs {
  std::string config;
  Settings flags;
};

int run_evaluate(const EvaluateArgs& a) {
  Settings settings;
  fs::path base;
  if (!a.config.empty()) {
    settings = read_settings(a.config);
    base = fs::absolute(a.config).parent_path();
    for (const char* key : {"data.manifest", "data.emotion_model", "data.output_dir", "data.cache_dir"}) {
      auto it = settings.find(key);
      if (it != settings.end() && !it->second.empty() && fs::path(it->second).is_relative()) {
        it->second = (base / it->second).lexically_normal().string();
      }
    }
  }
  for (const auto& [k, v] : a.flags) {
    const bool is_path = k.rfind("data.", 0) == 0;
    settings[k] = is_path && !v.empty() ? fs::absolute(v).lexically_normal().string() : v;
  }
  ExperimentConfig cfg = config_from_settings(settings);
  if (cfg.cache_dir.empty() && !cfg.output_dir.empty()) cfg.cache_dir = cfg.output_dir / "cache";
  cfg.validate();

  const Manifest manifest = read_manifest(cfg.manifest_path);
  std::optional<EmotionModel> model;
  bool wants_f4 = false;
  for (auto s : cfg.feature_sets) wants_f4 = wants_f4 || s == FeatureSetId::kF4;
  if (wants_f4) model = EmotionModel::load(cfg.emotion_model_path);

  ExtractRequest req;
  req.sets = cfg.feature_sets;
  req.emotion = model ? &*model : nullptr;
  req.cache_dir = cfg.cache_dir;
  const ExtractResult extracted = extract_corpus(manifest, req);
  report_extraction(extracted);

  const ExperimentSpec spec = cfg.spec();
  ExperimentResult result =
      run_experiment(spec, extracted.matrices, manifest.label_order(), extracted.speakers);
  for (const auto& f : extracted.failures) {
    result.report.warnings.push_back("extraction failed for " + f.utterance_id + ": " + f.message);
  }

  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "config.ini", cfg.to_text());
  write_file(cfg.output_dir / "report.json", result.report.to_json_text());
  write_file(cfg.output_dir / "report.txt", result.report.to_text());
  std::cout << result.report.to_text();
  return extracted.failures.empty() ? kExitOk : kExitPartial;
}

// ---- train-emotion

struct TrainEmotionArgs {
  std::string manifest;
  std::string out;
  std::uint64_t seed = 0;
  std::string classifier = "random_forest";
  int trees = 100;
};

int run_train_emotion(const TrainEmotionArgs& a) {
  const auto kind = parse_kind(a.classifier);
  if (!kind) throw Error(ErrorCode::kInvalidConfig, "classifier: unknown kind '" + a.classifier + "'");
  const Manifest manifest = read_manifest(a.manifest);
  TrainOptions options;
  options.forest_trees = a.trees;
  const EmotionModel model = train_emotion_model(manifest, *kind, a.seed, options);
  if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
  model.save(a.out);
  std::cout << "wrote " << a.out << "\n";
  return kExitOk;
}

// ---- select

struct SelectArgs {
  std::string matrix;
  std::string out;
};

int run_select(const SelectArgs& a) {
  const FeatureMatrix m = read_feature_matrix(a.matrix);
  std::vector<std::string> order;
  for (const auto& l : m.labels) {
    if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
  }
  const SelectionResult r = greedy_stepwise(to_dataset(m, order));
  if (!a.out.empty()) r.save(a.out);
  std::printf("merit %.6f, %zu of %zu features\n", r.merit, r.indices.size(), m.cols());
  for (const auto& n : r.names) std::printf("  %s\n", n.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dementia-stage classification from speech: extraction, fusion and evaluation"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs,-j", jobs, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Generate a synthetic corpus");
  synth_cmd->add_option("--kind", synth.kind, "Corpus kind")->check(CLI::IsMember({"dementia", "emotion"}));
  synth_cmd->add_option("--n-per-class", synth.n_per_class, "Utterances per class");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Extract feature matrices for a manifest");
  extract_cmd->add_option("--manifest", extract.manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--sets", extract.sets, "Comma-separated feature sets (f1,f2,f3,f4)");
  extract_cmd->add_option("--out", extract.out, "Output directory")->required();
  extract_cmd->add_option("--emotion-model", extract.emotion_model, "Emotion model (needed for f4)");
  extract_cmd->add_option("--cache-dir", extract.cache_dir, "Feature cache (default <out>/cache)");
  extract_cmd->add_flag("--no-cache", extract.no_cache, "Disable the feature cache");
  extract_cmd->add_flag("--no-denoise", extract.no_denoise, "Skip spectral subtraction");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validated experiment from a config file and flags");
  eval_cmd->add_option("--config", evaluate.config, "Config file; flags override its values")
      ->check(CLI::ExistingFile);
  struct FlagKey {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const FlagKey kEvalFlags[] = {
      {"--manifest", "data.manifest", "Manifest file"},
      {"--emotion-model", "data.emotion_model", "Emotion model (needed for f4)"},
      {"--out", "data.output_dir", "Output directory"},
      {"--cache-dir", "data.cache_dir", "Feature cache (default <out>/cache)"},
      {"--sets", "features.sets", "Comma-separated feature sets"},
      {"--mode", "fusion.mode", "concat|concat_then_select|select_then_concat|late_sum|late_decision"},
      {"--decision", "fusion.decision", "Decision classifier for late_decision (default random_forest)"},
      {"--classifier", "model.classifier", "random_forest|naive_bayes|logistic|linear_svm|mlp"},
      {"--trees", "model.trees", "Forest size (default 100)"},
      {"--selection-scope", "protocol.selection_scope", "none|global|per_fold (default per_fold)"},
      {"--balance-scope", "protocol.balance_scope", "none|train_only|whole_dataset (default train_only)"},
      {"--k-folds", "protocol.k_folds", "Outer folds (default 10)"},
      {"--inner-folds", "protocol.inner_folds", "Stacking folds (default 5)"},
      {"--seed", "protocol.seed", "Run seed (required)"},
      {"--group-by-speaker", "protocol.group_by_speaker", "true|false (default false)"},
      {"--stacking-resubstitution", "protocol.stacking_resubstitution", "true|false (default false)"},
  };
  static std::vector<std::string> eval_values(std::size(kEvalFlags));
  std::vector<CLI::Option*> eval_opts;
  for (std::size_t i = 0; i < std::size(kEvalFlags); ++i) {
    eval_opts.push_back(eval_cmd->add_option(kEvalFlags[i].flag, eval_values[i], kEvalFlags[i].help)
                            ->type_name("TEXT"));
  }

  TrainEmotionArgs train;
  auto* train_cmd = app.add_subcommand("train-emotion", "Train the emotion model behind f4");
  train_cmd->add_option("--manifest", train.manifest, "Emotion corpus manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--seed", train.seed, "Training seed")->required();
  train_cmd->add_option("--classifier", train.classifier, "Classifier kind");
  train_cmd->add_option("--trees", train.trees, "Forest size")->check(CLI::PositiveNumber);

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Standalone CFS on a feature matrix file");
  select_cmd->add_option("--matrix", select.matrix, "Feature matrix CSV")->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--out", select.out, "Selection JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }
  set_worker_count(jobs);

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (extract_cmd->parsed()) return run_extract(extract);
    if (eval_cmd->parsed()) {
      for (std::size_t i = 0; i < eval_opts.size(); ++i) {
        if (eval_opts[i]->count() > 0) evaluate.flags[kEvalFlags[i].key] = eval_values[i];
      }
      return run_evaluate(evaluate);
    }
    if (train_cmd->parsed()) return run_train_emotion(train);
    if (select_cmd->parsed()) return run_select(select);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? kExitInvalid : kExitPartial;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
