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
#include <random>

#include <doctest.h>

#include "dstage/fusion.hpp"
#include "oracles.hpp"

using namespace dstage;

namespace {

FeatureVector filled(FeatureSetId id, double base) {
  FeatureVector v;
  v.set_id = id;
  v.names = feature_names(id);
  for (std::size_t i = 0; i < v.names.size(); ++i) v.values.push_back(base + static_cast<double>(i));
  return v;
}

MemberPosterior member(std::vector<double> p) { return {{"AD", "HC", "MCI"}, std::move(p)}; }

std::vector<double> noisy_posterior(int y, int classes, double strength, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(classes));
  double s = 0.0;
  for (int c = 0; c < classes; ++c) {
    p[static_cast<std::size_t>(c)] = g(rng) + (c == y ? strength : 0.0);
    s += p[static_cast<std::size_t>(c)];
  }
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

TEST_CASE("mode names and plan validation") {
  for (auto m : {FusionMode::kConcat, FusionMode::kConcatThenSelect, FusionMode::kSelectThenConcat,
                 FusionMode::kLateSum, FusionMode::kLateDecision}) {
    CHECK(parse_mode(mode_name(m)) == m);
  }
  FusionPlan p;
  p.members = {FeatureSetId::kF1, FeatureSetId::kF1};
  CHECK_THROWS_AS(p.validate(), Error);
  p.members = {};
  CHECK_THROWS_AS(p.validate(), Error);
  p.members = {FeatureSetId::kF1, FeatureSetId::kF3};
  p.mode = FusionMode::kLateSum;
  p.decision_kind = ModelKind::kLogistic;
  CHECK_THROWS_AS(p.validate(), Error);
  p.mode = FusionMode::kLateDecision;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("early concatenation of vectors") {
  const auto f1 = filled(FeatureSetId::kF1, 0.0);
  const auto f2 = filled(FeatureSetId::kF2, 1e4);
  const auto f3 = filled(FeatureSetId::kF3, 2e4);
  const auto f4 = filled(FeatureSetId::kF4, 3e4);
  const std::vector<FeatureVector> three = {f1, f2, f3};
  const std::vector<FeatureVector> four = {f1, f2, f3, f4};
  const auto a = early_concat(three);
  CHECK(a.values.size() == 6673);
  CHECK(a.set_id == FeatureSetId::kFused);
  const auto b = early_concat(four);
  CHECK(b.values.size() == 6680);
  CHECK(b.names.size() == 6680);
  // Every value sits at its member offset.
  std::size_t off = 0;
  for (const auto& m : four) {
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      CHECK(b.values[off + i] == m.values[i]);
      CHECK(b.names[off + i] == std::string(set_name(m.set_id)) + "." + m.names[i]);
    }
    off += m.values.size();
  }
  const std::vector<FeatureVector> one = {f3};
  CHECK(early_concat(one).values == f3.values);
  const std::vector<FeatureVector> dup = {f3, f3};
  try {
    early_concat(dup);
    FAIL("expected DuplicateMember");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDuplicateMember);
  }
}

TEST_CASE("early concatenation of matrices") {
  FeatureMatrix a, b;
  a.set_id = FeatureSetId::kF3;
  b.set_id = FeatureSetId::kF4;
  for (auto n : kProsodyFields) a.names.emplace_back(n);
  b.names = feature_names(FeatureSetId::kF4);
  for (int r = 0; r < 4; ++r) {
    a.append("u" + std::to_string(r), "AD", std::vector<double>(7, r));
    b.append("u" + std::to_string(r), "AD", std::vector<double>(7, -r));
  }
  const std::vector<FeatureMatrix> ms = {a, b};
  const auto fused = early_concat(ms);
  CHECK(fused.matrix.cols() == 14);
  CHECK(fused.matrix.rows() == 4);
  REQUIRE(fused.blocks.size() == 2);
  CHECK(fused.blocks[1].offset == 7);
  CHECK(fused.matrix.row(2)[8] == -2.0);

  b.ids[1] = "other";
  const std::vector<FeatureMatrix> bad = {a, b};
  CHECK_THROWS_AS(early_concat(bad), Error);
}

TEST_CASE("late sum") {
  CHECK(late_sum({member({0.5, 0.3, 0.2}), member({0.2, 0.6, 0.2}), member({0.4, 0.4, 0.2}),
                  member({0.1, 0.2, 0.7})}) == 1);
  CHECK(late_sum({member({0.2, 0.1, 0.7})}) == 2);
  CHECK(late_sum({member({0.5, 0.5, 0.0}), member({0.5, 0.5, 0.0})}) == 0);
  try {
    late_sum({});
    FAIL("expected MissingPosterior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPosterior);
  }
  PosteriorBundle mixed = {member({0.5, 0.3, 0.2}), {{"AD", "MCI", "HC"}, {0.2, 0.3, 0.5}}};
  try {
    late_sum(mixed);
    FAIL("expected ClassOrderMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kClassOrderMismatch);
  }
}

TEST_CASE("late sum is order and offset invariant") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    PosteriorBundle b;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int m = 0; m < n; ++m) b.push_back(member(noisy_posterior(static_cast<int>(rng() % 3), 3, 1.0, rng)));
    const int label = late_sum(b);
    auto shuffled = b;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(late_sum(shuffled) == label);
    const double shift = u(rng);
    auto shifted = b;
    for (auto& m : shifted) {
      for (double& p : m.probs) p += shift;
    }
    CHECK(late_sum(shifted) == label);
  }
}

TEST_CASE("decision dataset") {
  std::mt19937_64 rng(7);
  const std::size_t n = 30, members = 4;
  std::vector<std::vector<std::vector<double>>> post(members);
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(i % 3));
  for (auto& m : post) {
    for (std::size_t i = 0; i < n; ++i) m.push_back(noisy_posterior(y[i], 3, 0.5, rng));
  }
  const auto ds = build_decision_dataset(post, y, {"AD", "HC", "MCI"});
  CHECK(ds.d == 12);
  CHECK(ds.n == n);
  CHECK(ds.y == y);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t m = 0; m < members; ++m) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(ds.row(i)[m * 3 + c] == post[m][i][c]);
        s += ds.row(i)[m * 3 + c];
      }
    }
    CHECK(std::abs(s - static_cast<double>(members)) < 1e-8);
  }
  post[2][5].clear();
  try {
    build_decision_dataset(post, y, {"AD", "HC", "MCI"});
    FAIL("expected MissingPosterior");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingPosterior);
  }
}

TEST_CASE("late decision") {
  std::mt19937_64 rng(8);
  const std::vector<std::string> classes = {"AD", "HC", "MCI"};
  const auto make = [&](std::size_t n) {
    std::vector<std::vector<std::vector<double>>> post(3);
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(static_cast<int>(rng() % 3));
    for (auto& m : post) {
      for (std::size_t i = 0; i < n; ++i) m.push_back(noisy_posterior(y[i], 3, 4.0, rng));
    }
    return std::make_pair(post, y);
  };
  const auto [train_post, train_y] = make(150);
  const auto [test_post, test_y] = make(100);
  const auto model = train(ModelKind::kLogistic, build_decision_dataset(train_post, train_y, classes), 1);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_y.size(); ++i) {
    PosteriorBundle b;
    for (const auto& m : test_post) b.push_back({classes, m[i]});
    hits += late_decision(b, model) == test_y[i] ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(test_y.size()) >= 0.95);

  PosteriorBundle short_bundle;
  for (int m = 0; m < 2; ++m) short_bundle.push_back({classes, {0.3, 0.3, 0.4}});
  try {
    late_decision(short_bundle, model);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }

  Standardizer st;
  st.mean.assign(9, 0.0);
  st.scale.assign(9, 1.0);
  const auto flat = logistic_from_weights(classes, st, std::vector<std::vector<double>>(3, std::vector<double>(10, 0.0)));
  PosteriorBundle any;
  for (int m = 0; m < 3; ++m) any.push_back({classes, {0.1, 0.1, 0.8}});
  CHECK(late_decision(any, flat) == 0);
}

namespace {

// y = 2a + b over four classes; block A carries a, block B carries b, and
// a and b are exactly balanced and independent.
Dataset orthogonal(std::size_t noise_per_block, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset ds;
  ds.class_order = {"c0", "c1", "c2", "c3"};
  const std::size_t per = 1 + noise_per_block;
  ds.d = 2 * per;
  for (std::size_t j = 0; j < ds.d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (int rep = 0; rep < 20; ++rep) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        ds.y.push_back(2 * a + b);
        ds.X.push_back(a);
        for (std::size_t k = 0; k < noise_per_block; ++k) ds.X.push_back(g(rng));
        ds.X.push_back(b);
        for (std::size_t k = 0; k < noise_per_block; ++k) ds.X.push_back(g(rng));
      }
    }
  }
  ds.n = ds.y.size();
  return ds;
}

}  // namespace

TEST_CASE("selection compositions") {
  SUBCASE("only the informative block survives") {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset ds;
    ds.class_order = {"AD", "HC", "MCI"};
    ds.d = 21;
    for (std::size_t i = 0; i < 150; ++i) {
      const int y = static_cast<int>(i % 3);
      ds.y.push_back(y);
      for (std::size_t j = 0; j < 14; ++j) ds.X.push_back(g(rng));
      for (std::size_t j = 0; j < 7; ++j) ds.X.push_back(y + (j < 2 ? 0.05 * g(rng) : g(rng)));
    }
    ds.n = ds.y.size();
    for (std::size_t j = 0; j < ds.d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    const auto sel = concat_then_select(ds);
    REQUIRE_FALSE(sel.columns.empty());
    for (auto c : sel.columns) CHECK(c >= 14);
    CHECK(concat_then_select(ds).columns == sel.columns);
    CHECK(concat_then_select(ds, Exec::kSerial).columns == sel.columns);
    const auto& r = sel.per_block.at(0);
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.merit >= r.trace.front().merit);
  }
  SUBCASE("independent blocks select the same subset either way") {
    const auto ds = orthogonal(3, 11);
    const std::vector<Block> blocks = {{FeatureSetId::kF2, 0, 4}, {FeatureSetId::kF3, 4, 4}};
    const auto joint = concat_then_select(ds);
    const auto split = select_then_concat(ds, blocks);
    CHECK(split.columns == joint.columns);
    CHECK(split.columns == std::vector<std::size_t>{0, 4});
    const auto tables = oracle::cfs_tables(
        [&] {
          std::vector<std::vector<double>> cols(ds.d);
          for (std::size_t i = 0; i < ds.n; ++i) {
            for (std::size_t j = 0; j < ds.d; ++j) cols[j].push_back(ds.row(i)[j]);
          }
          return cols;
        }(),
        ds.y);
    CHECK(std::abs(oracle::merit(tables, split.columns) - joint.per_block.at(0).merit) < 1e-9);
  }
  SUBCASE("column counts add up and empty blocks warn") {
    const auto ds = orthogonal(3, 12);
    Dataset wide = ds;
    // Append a constant block.
    wide.d = ds.d + 3;
    wide.X.clear();
    for (std::size_t i = 0; i < ds.n; ++i) {
      for (double v : ds.row(i)) wide.X.push_back(v);
      for (int k = 0; k < 3; ++k) wide.X.push_back(1.0);
    }
    for (int k = 0; k < 3; ++k) wide.feature_names.push_back("c" + std::to_string(k));
    const std::vector<Block> blocks = {
        {FeatureSetId::kF1, 0, 4}, {FeatureSetId::kF2, 4, 4}, {FeatureSetId::kF3, 8, 3}};
    Warnings w;
    const auto s = select_then_concat(wide, blocks, Exec::kParallel, &w);
    REQUIRE(s.per_block.size() == 3);
    CHECK(s.columns.size() ==
          s.per_block[0].indices.size() + s.per_block[1].indices.size() + s.per_block[2].indices.size());
    CHECK(s.per_block[2].indices.empty());
    CHECK(w.size() == 1);
  }
}
