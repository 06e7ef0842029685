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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <doctest.h>

#include "dstage/eval.hpp"
#include "dstage/pipeline.hpp"
#include "dstage/synth.hpp"

using namespace dstage;

namespace {

const std::vector<std::string> kClasses = {"AD", "HC", "MCI"};

// Member `which` separates one class from the other two.
FeatureMatrix complementary(FeatureSetId id, int which, const std::vector<int>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix m;
  m.set_id = id;
  m.names = {"a", "b", "c"};
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double shift = y[i] == which ? 3.0 : 0.0;
    m.append("u" + std::to_string(i), kClasses[static_cast<std::size_t>(y[i])],
             std::vector<double>{g(rng) + shift, g(rng) + shift, g(rng)});
  }
  return m;
}

std::vector<int> labels(std::size_t per_class, std::uint64_t seed) {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c) y.insert(y.end(), per_class, c);
  std::mt19937_64 rng(seed);
  std::shuffle(y.begin(), y.end(), rng);
  return y;
}

ExperimentSpec base_spec(std::vector<FeatureSetId> members, FusionMode mode, std::uint64_t seed) {
  ExperimentSpec s;
  s.plan.mode = mode;
  s.plan.members = std::move(members);
  if (mode == FusionMode::kLateDecision) s.plan.decision_kind = ModelKind::kLogistic;
  s.seed = seed;
  s.k_folds = 5;
  s.train_options.forest_trees = 40;
  return s;
}

FeatureMatrix f3_matrix(const std::vector<int>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix m;
  m.set_id = FeatureSetId::kF3;
  for (auto n : kProsodyFields) m.names.emplace_back(n);
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<double> row;
    for (int j = 0; j < 7; ++j) row.push_back(g(rng) + (j < 3 ? 4.0 * y[i] : 0.0));
    m.append("u" + std::to_string(i), kClasses[static_cast<std::size_t>(y[i])], row);
  }
  return m;
}

}  // namespace

TEST_CASE("stratified folds") {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c) y.insert(y.end(), 10, c);
  const auto p = stratified_kfold(y, 3, 10, 42);
  CHECK(p.k == 10);
  for (int f = 0; f < 10; ++f) {
    const auto t = p.test_rows(f);
    REQUIRE(t.size() == 3);
    std::set<int> seen;
    for (auto r : t) seen.insert(y[r]);
    CHECK(seen.size() == 3);
  }
  CHECK(stratified_kfold(y, 3, 10, 42).assignments == p.assignments);
  CHECK(stratified_kfold(y, 3, 10, 43).assignments != p.assignments);

  std::vector<int> small = y;
  small.resize(24);  // class 2 keeps 4 members
  Warnings w;
  const auto r = stratified_kfold(small, 3, 10, 1, &w);
  CHECK(r.k == 4);
  CHECK(w.size() == 1);

  try {
    stratified_kfold({0, 0, 1, 1}, 3, 2, 1);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooFewSamples);
  }
}

TEST_CASE("fold plans partition and stratify") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> y;
    for (int c = 0; c < 3; ++c) y.insert(y.end(), 2 + rng() % 30, c);
    std::shuffle(y.begin(), y.end(), rng);
    const int k = 2 + static_cast<int>(rng() % 9);
    const auto p = stratified_kfold(y, 3, k, rng());
    std::vector<int> seen(y.size(), 0);
    for (int f = 0; f < p.k; ++f) {
      for (auto r : p.test_rows(f)) ++seen[r];
      const auto train = p.train_rows(f);
      CHECK(train.size() + p.test_rows(f).size() == y.size());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    for (int c = 0; c < 3; ++c) {
      std::vector<int> per(static_cast<std::size_t>(p.k), 0);
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == c) ++per[static_cast<std::size_t>(p.assignments[i])];
      }
      CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
    }
  }
}

TEST_CASE("grouped folds keep speakers together") {
  std::vector<int> y;
  std::vector<std::string> g;
  for (int s = 0; s < 30; ++s) {
    for (int r = 0; r < 2; ++r) {
      y.push_back(s % 3);
      g.push_back("spk" + std::to_string(s));
    }
  }
  const auto p = grouped_kfold(y, g, 3, 5, 9);
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto [it, fresh] = fold_of.emplace(g[i], p.assignments[i]);
    CHECK(it->second == p.assignments[i]);
  }
}

TEST_CASE("spread subsample") {
  Dataset ds;
  ds.class_order = kClasses;
  ds.d = 1;
  const std::size_t counts[] = {30, 25, 10};
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i) {
      ds.y.push_back(c);
      ds.X.push_back(c * 1000.0 + static_cast<double>(i));
    }
  }
  ds.n = ds.y.size();
  const auto out = spread_subsample(ds, 3);
  CHECK(out.class_counts() == std::vector<std::size_t>{10, 10, 10});
  std::set<double> original(ds.X.begin(), ds.X.end());
  std::set<double> kept(out.X.begin(), out.X.end());
  CHECK(kept.size() == 30);
  for (double v : out.X) CHECK(original.count(v) == 1);
  for (std::size_t i = 0; i < out.n; ++i) CHECK(static_cast<int>(out.X[i] / 1000.0) == out.y[i]);

  const auto again = spread_subsample(out, 4);
  CHECK(again.class_counts() == std::vector<std::size_t>{10, 10, 10});
  CHECK(spread_subsample(ds, 3).X == out.X);
}

TEST_CASE("metrics") {
  const Confusion c = {{8, 2, 0}, {1, 7, 2}, {0, 1, 9}};
  const auto m = metrics(c, kClasses);
  CHECK(m.per_class[0].precision == doctest::Approx(8.0 / 9.0));
  CHECK(m.per_class[0].recall == doctest::Approx(0.8));
  CHECK(m.per_class[0].f_score == doctest::Approx(2 * (8.0 / 9.0) * 0.8 / (8.0 / 9.0 + 0.8)));
  CHECK(m.per_class[0].f_score == doctest::Approx(0.8421).epsilon(1e-4));
  CHECK(m.per_class[1].support == 10);
  double wf = 0.0, mf = 0.0;
  for (const auto& pc : m.per_class) {
    wf += pc.f_score * static_cast<double>(pc.support) / 30.0;
    mf += pc.f_score / 3.0;
  }
  CHECK(m.weighted.f_score == doctest::Approx(wf));
  CHECK(m.macro.f_score == doctest::Approx(mf));

  const auto perfect = metrics({{3, 0, 0}, {0, 4, 0}, {0, 0, 5}}, kClasses);
  for (const auto& pc : perfect.per_class) {
    CHECK(pc.precision == 1.0);
    CHECK(pc.recall == 1.0);
    CHECK(pc.f_score == 1.0);
  }
  CHECK(perfect.weighted.f_score == 1.0);

  Warnings w;
  const auto z = metrics({{3, 1, 0}, {2, 4, 0}, {1, 1, 0}}, kClasses, &w);
  CHECK(z.per_class[2].precision == 0.0);
  CHECK(z.per_class[2].f_score == 0.0);
  CHECK(w.size() == 1);

  CHECK_THROWS_AS(metrics({{1, 0}, {0, 1}}, kClasses), Error);
}

TEST_CASE("experiment on a separable corpus") {
  const auto y = labels(20, 1);
  const std::vector<FeatureMatrix> members = {f3_matrix(y, 2)};
  auto spec = base_spec({FeatureSetId::kF3}, FusionMode::kConcat, 7);
  const auto r = run_experiment(spec, members, kClasses);
  CHECK(r.report.metrics.weighted.f_score >= 0.95);
  std::size_t support = 0;
  for (const auto& row : r.report.confusion) support += std::accumulate(row.begin(), row.end(), std::size_t{0});
  CHECK(support == 60);
  CHECK(r.audit.test_leaks(r.folds, r.ids) == 0);
  CHECK(run_experiment(spec, members, kClasses).report.to_json_text() == r.report.to_json_text());
  spec.exec = Exec::kSerial;
  CHECK(run_experiment(spec, members, kClasses).report.to_json_text() == r.report.to_json_text());
}

TEST_CASE("generated audio corpus with f3 alone") {
  const std::filesystem::path dir = std::filesystem::path(DSTAGE_TEST_TMP) / "f3corpus";
  std::filesystem::remove_all(dir);
  const auto manifest = write_dementia_corpus(dir, 20, 5);
  ExtractRequest req;
  req.sets = {FeatureSetId::kF3};
  const auto ex = extract_corpus(manifest, req);
  REQUIRE(ex.failures.empty());
  auto spec = base_spec({FeatureSetId::kF3}, FusionMode::kConcat, 3);
  spec.k_folds = 10;
  spec.train_options.forest_trees = 100;
  const auto r = run_experiment(spec, ex.matrices, dementia_labels());
  CHECK(r.report.metrics.weighted.f_score >= 0.95);
}

TEST_CASE("audit covers every scope") {
  const auto y = labels(12, 3);
  std::vector<int> skewed = y;
  // Make the corpus imbalanced so balancing does something.
  skewed.insert(skewed.end(), 8, 0);
  const std::vector<FeatureMatrix> members = {f3_matrix(skewed, 4)};
  for (auto mode : {FusionMode::kConcat, FusionMode::kConcatThenSelect, FusionMode::kSelectThenConcat}) {
    for (auto sel : {SelectionScope::kPerFold, SelectionScope::kGlobal}) {
      for (auto bal : {BalanceScope::kNone, BalanceScope::kTrainOnly, BalanceScope::kWholeDataset}) {
        auto spec = base_spec({FeatureSetId::kF3}, mode, 9);
        spec.selection_scope = mode == FusionMode::kConcat ? SelectionScope::kNone : sel;
        spec.balance_scope = bal;
        const auto r = run_experiment(spec, members, kClasses);
        const bool corpus_wide = bal == BalanceScope::kWholeDataset ||
                                 (mode != FusionMode::kConcat && sel == SelectionScope::kGlobal);
        INFO(mode_name(mode) << " " << scope_name(spec.selection_scope) << " " << scope_name(bal));
        if (corpus_wide) {
          CHECK(r.audit.test_leaks(r.folds, r.ids) > 0);
        } else {
          CHECK(r.audit.test_leaks(r.folds, r.ids) == 0);
        }
        if (bal == BalanceScope::kTrainOnly) {
          for (const auto& counts : r.train_class_counts) {
            CHECK(std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) == counts.end());
          }
        }
        std::size_t support = 0;
        for (const auto& row : r.report.confusion) support += std::accumulate(row.begin(), row.end(), std::size_t{0});
        CHECK(support == (bal == BalanceScope::kWholeDataset ? 36u : skewed.size()));
      }
    }
  }
}

TEST_CASE("late decision with stacking keeps test folds clean") {
  const auto y = labels(15, 6);
  const std::vector<FeatureMatrix> members = {complementary(FeatureSetId::kF2, 0, y, 1),
                                              complementary(FeatureSetId::kF3, 2, y, 2)};
  auto spec = base_spec({FeatureSetId::kF2, FeatureSetId::kF3}, FusionMode::kLateDecision, 4);
  spec.inner_folds = 3;
  const auto r = run_experiment(spec, members, kClasses);
  CHECK(r.audit.test_leaks(r.folds, r.ids) == 0);
  CHECK(r.report.metrics.weighted.f_score > 0.8);
  spec.stacking_resubstitution = true;
  CHECK(run_experiment(spec, members, kClasses).audit.test_leaks(r.folds, r.ids) == 0);
}

TEST_CASE("late sum beats single members on complementary features") {
  std::vector<double> fused, best_single;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto y = labels(15, 100 + seed);
    const auto a = complementary(FeatureSetId::kF2, 0, y, 200 + seed);
    const auto b = complementary(FeatureSetId::kF3, 2, y, 300 + seed);
    const std::vector<FeatureMatrix> both = {a, b};
    const std::vector<FeatureMatrix> only_a = {a};
    const std::vector<FeatureMatrix> only_b = {b};
    const double f_sum = run_experiment(base_spec({FeatureSetId::kF2, FeatureSetId::kF3}, FusionMode::kLateSum, seed),
                                        both, kClasses).report.metrics.weighted.f_score;
    const double f_a = run_experiment(base_spec({FeatureSetId::kF2}, FusionMode::kConcat, seed), only_a, kClasses)
                           .report.metrics.weighted.f_score;
    const double f_b = run_experiment(base_spec({FeatureSetId::kF3}, FusionMode::kConcat, seed), only_b, kClasses)
                           .report.metrics.weighted.f_score;
    fused.push_back(f_sum);
    best_single.push_back(std::max(f_a, f_b));
  }
  const auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  double var = 0.0;
  const double m = mean(fused);
  for (double v : fused) var += (v - m) * (v - m);
  const double se = std::sqrt(var / (fused.size() - 1) / fused.size());
  CHECK(m + se >= mean(best_single));
}

TEST_CASE("spec validation") {
  auto spec = base_spec({FeatureSetId::kF3}, FusionMode::kConcat, 1);
  spec.k_folds = 1;
  CHECK_THROWS_AS(spec.validate(), Error);
  const auto y = labels(5, 1);
  const std::vector<FeatureMatrix> members = {f3_matrix(y, 1)};
  auto wrong = base_spec({FeatureSetId::kF2}, FusionMode::kConcat, 1);
  CHECK_THROWS_AS(run_experiment(wrong, members, kClasses), Error);
  CHECK(base_spec({FeatureSetId::kF3}, FusionMode::kConcat, 1).canonical() !=
        base_spec({FeatureSetId::kF3}, FusionMode::kConcat, 2).canonical());
}
