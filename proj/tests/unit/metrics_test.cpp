/*
 * Copyright 2026 The asymseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "asymseg/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "oracles.hpp"

namespace asymseg {
namespace {

Mask with_voxels(const Dims& d, std::initializer_list<Index3> on) {
  std::vector<std::uint8_t> v(d.count(), 0);
  for (const auto& c : on) v[d.index(c.x, c.y, c.z)] = 1;
  return Mask(d, std::move(v));
}

TEST(Confusion, CountsEachCell) {
  const Mask p({1, 1, 4}, {1, 1, 0, 0});
  const Mask g({1, 1, 4}, {1, 0, 1, 0});
  EXPECT_EQ(confusion(p, g), (ConfusionCounts{1, 1, 1, 1}));
  EXPECT_THROW(confusion(p, Mask({1, 4, 1})), std::invalid_argument);
}

TEST(VoxelMetrics, OneOfEachCell) {
  const auto m = voxel_metrics({1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(*m.dsc, 0.5);
  EXPECT_DOUBLE_EQ(*m.jaccard, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*m.f2, 0.5);
  EXPECT_DOUBLE_EQ(*m.ppv, 0.5);
  EXPECT_DOUBLE_EQ(*m.tpr, 0.5);
  EXPECT_DOUBLE_EQ(*m.specificity, 0.5);
  EXPECT_DOUBLE_EQ(*m.vd, 0.0);
}

TEST(VoxelMetrics, F2PunishesMissesMoreThanDice) {
  const auto m = voxel_metrics({1, 0, 1, 2});
  EXPECT_DOUBLE_EQ(*m.f2, 5.0 / 9.0);
  EXPECT_DOUBLE_EQ(*m.dsc, 2.0 / 3.0);
  EXPECT_LT(*m.f2, *m.dsc);
}

TEST(VoxelMetrics, UndefinedStaysUndefined) {
  const auto m = voxel_metrics({0, 0, 0, 8});
  EXPECT_FALSE(m.dsc.has_value());
  EXPECT_FALSE(m.ppv.has_value());
  EXPECT_FALSE(m.tpr.has_value());
  EXPECT_FALSE(m.vd.has_value());
  EXPECT_DOUBLE_EQ(*m.specificity, 1.0);
  const auto all = voxel_metrics({4, 0, 0, 0});
  EXPECT_FALSE(all.specificity.has_value());
  EXPECT_DOUBLE_EQ(*all.dsc, 1.0);
}

TEST(ConnectedComponents, DiagonalNeighboursJoin) {
  const Dims d{3, 3, 3};
  EXPECT_EQ(connected_components(with_voxels(d, {{0, 0, 0}, {1, 1, 1}})).count,
            1);
  EXPECT_EQ(connected_components(with_voxels(d, {{0, 0, 0}, {2, 2, 2}})).count,
            2);
  EXPECT_EQ(connected_components(with_voxels(d, {{0, 0, 0}, {2, 0, 0}})).count,
            2);
  const auto cc =
      connected_components(with_voxels(d, {{2, 2, 2}, {0, 0, 1}, {1, 2, 2}}));
  EXPECT_EQ(cc.count, 2);
  // Scan order: (0,0,1) is met first.
  EXPECT_EQ(cc.labels[d.index(0, 0, 1)], 1);
  EXPECT_EQ(cc.labels[d.index(2, 2, 2)], 2);
  EXPECT_EQ(cc.sizes, (std::vector<std::size_t>{1, 2}));
}

TEST(ConnectedComponents, MatchesUnionFind) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> side(1, 9);
  std::uniform_real_distribution<double> rate(0.05, 0.5);
  for (int trial = 0; trial < 60; ++trial) {
    const Dims d{side(rng), side(rng), side(rng)};
    const auto m = oracle::random_mask(rng, d, rate(rng));
    const auto cc = connected_components(m);
    const auto roots = oracle::component_roots(m);
    // Same partition: labels agree exactly when roots agree.
    std::map<long, std::int32_t> root_to_label;
    std::set<std::int32_t> labels;
    for (std::size_t i = 0; i < d.count(); ++i) {
      ASSERT_EQ(roots[i] < 0, cc.labels[i] == 0);
      if (roots[i] < 0) continue;
      auto [it, inserted] = root_to_label.emplace(roots[i], cc.labels[i]);
      ASSERT_EQ(it->second, cc.labels[i]);
      if (inserted) ASSERT_TRUE(labels.insert(cc.labels[i]).second);
    }
    EXPECT_EQ(static_cast<std::size_t>(cc.count), root_to_label.size());
  }
}

TEST(LesionMetrics, DetectionAndSpuriousCounts) {
  // Two true lesions; three predicted, one of which touches no truth.
  const Dims d{10, 10, 1};
  const auto g = with_voxels(d, {{1, 1, 0}, {1, 2, 0}, {6, 6, 0}});
  const auto p = with_voxels(d, {{1, 2, 0}, {6, 6, 0}, {6, 7, 0}, {9, 0, 0}});
  const auto m = lesion_metrics(p, g);
  EXPECT_EQ(m.truth_lesions, 2u);
  EXPECT_EQ(m.predicted_lesions, 3u);
  EXPECT_DOUBLE_EQ(*m.ltpr, 1.0);
  EXPECT_DOUBLE_EQ(*m.lfpr, 1.0 / 3.0);
}

TEST(LesionMetrics, MatchesOracle) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> side(1, 10);
  for (int trial = 0; trial < 60; ++trial) {
    const Dims d{side(rng), side(rng), side(rng)};
    const auto p = oracle::random_mask(rng, d, 0.15);
    const auto g = oracle::random_mask(rng, d, 0.15);
    const auto m = lesion_metrics(p, g);
    const auto o = oracle::lesion_counts(p, g);
    EXPECT_EQ(m.truth_lesions, o.truth);
    EXPECT_EQ(m.predicted_lesions, o.predicted);
    EXPECT_EQ(m.detected, o.detected);
    EXPECT_EQ(m.spurious, o.spurious);
    EXPECT_EQ(m.ltpr.has_value(), o.truth > 0);
    EXPECT_EQ(m.lfpr.has_value(), o.predicted > 0);
  }
}

TEST(SurfaceDistance, AnisotropicSpacing) {
  const Dims d{8, 4, 4};
  const auto p = with_voxels(d, {{1, 1, 1}});
  const auto g = with_voxels(d, {{4, 1, 1}});
  EXPECT_DOUBLE_EQ(*surface_distance(p, g, {2, 1, 1}), 6.0);
  EXPECT_DOUBLE_EQ(*surface_distance(p, g, {1, 1, 1}), 3.0);
  EXPECT_DOUBLE_EQ(*surface_distance(p, p, {2, 1, 1}), 0.0);
  EXPECT_FALSE(surface_distance(p, Mask(d), {1, 1, 1}).has_value());
}

TEST(SurfaceDistance, BoundaryExcludesInterior) {
  // Solid 3x3x3 block in a 5^3 volume: only the center is interior.
  const Dims d{5, 5, 5};
  std::vector<std::uint8_t> v(d.count(), 0);
  for (int x = 1; x < 4; ++x)
    for (int y = 1; y < 4; ++y)
      for (int z = 1; z < 4; ++z) v[d.index(x, y, z)] = 1;
  EXPECT_EQ(boundary_voxels(Mask(d, v)).size(), 26u);
  // A full volume is all border.
  EXPECT_EQ(boundary_voxels(Mask(d, std::vector<std::uint8_t>(d.count(), 1)))
                .size(),
            98u);
}

TEST(SurfaceDistance, SymmetricAndMatchesAllPairs) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> side(2, 12);
  for (int trial = 0; trial < 40; ++trial) {
    const Dims d{side(rng), side(rng), side(rng)};
    const Spacing s{0.5 + trial % 3, 1.0, 1.25};
    auto p = oracle::random_mask(rng, d, 0.1);
    auto g = oracle::random_mask(rng, d, 0.1);
    if (p.count() == 0 || g.count() == 0) continue;
    const double a = *surface_distance(p, g, s);
    EXPECT_NEAR(a, *surface_distance(g, p, s), 1e-12);
    EXPECT_NEAR(a, oracle::surface_distance_all_pairs(p, g, s), 1e-9);
  }
}

TEST(SurfaceDistance, BucketIndexMatchesBruteForce) {
  // Enough boundary voxels that the pair count passes the brute-force cap.
  std::mt19937_64 rng(24);
  const Dims d{34, 34, 34};
  const auto p = oracle::random_mask(rng, d, 0.22);
  const auto g = oracle::random_mask(rng, d, 0.22);
  const double pairs = static_cast<double>(boundary_voxels(p).size()) *
                       static_cast<double>(boundary_voxels(g).size());
  ASSERT_GT(pairs, 5e7);
  const Spacing s{1.0, 0.75, 2.0};
  EXPECT_NEAR(*surface_distance(p, g, s),
              oracle::surface_distance_all_pairs(p, g, s), 1e-9);
}

TEST(PrCurve, PerfectPredictionHasUnitArea) {
  const ProbabilityMap prob({1, 1, 6}, std::vector<double>{1, 1, 0, 0, 0, 0});
  const Mask g({1, 1, 6}, {1, 1, 0, 0, 0, 0});
  const auto c = pr_curve(prob, g, 10);
  EXPECT_DOUBLE_EQ(c.apr, 1.0);
  ASSERT_EQ(c.points.size(), 11u);
  EXPECT_DOUBLE_EQ(c.points.front().precision, 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(c.points.back().recall, 1.0);
}

TEST(PrCurve, ConstantMapAreaIsPrevalence) {
  const ProbabilityMap prob({2, 2, 5}, 0.37);
  std::vector<std::uint8_t> v(20, 0);
  v[3] = v[11] = v[17] = 1;
  const auto c = pr_curve(prob, Mask({2, 2, 5}, v));
  EXPECT_NEAR(c.apr, 3.0 / 20.0, 1e-15);
  EXPECT_THROW(pr_curve(prob, Mask({2, 2, 5})), std::invalid_argument);
}

TEST(PrCurve, QuantizedScoresMatchExhaustiveOracle) {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> level(0, 20);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d{4, 5, 6};
    std::vector<double> scores(d.count());
    for (auto& s : scores) s = level(rng) / 20.0;
    auto g = oracle::random_labels(rng, d.count(), 0.2);
    g[0] = 1;
    const ProbabilityMap prob(d, scores);
    const Mask truth(d, g);
    const double want = oracle::apr_exhaustive(scores, g);
    EXPECT_NEAR(pr_curve(prob, truth, 20).apr, want, 1e-12);
    EXPECT_NEAR(pr_curve_exhaustive(prob, truth).apr, want, 1e-12);
  }
}

TEST(PrCurve, ExhaustiveAreaIgnoresMonotoneTransforms) {
  std::mt19937_64 rng(26);
  const Dims d{6, 6, 6};
  const auto scores = oracle::random_probs(rng, d.count());
  auto g = oracle::random_labels(rng, d.count(), 0.1);
  g[5] = 1;
  std::vector<double> squashed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    squashed[i] = scores[i] * scores[i] * scores[i];
  }
  const Mask truth(d, g);
  const double a = pr_curve_exhaustive(ProbabilityMap(d, scores), truth).apr;
  const double b = pr_curve_exhaustive(ProbabilityMap(d, squashed), truth).apr;
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_NEAR(a, oracle::apr_exhaustive(scores, g), 1e-12);
}

TEST(AreaUnderPr, DuplicateRecallsKeepBestPrecision) {
  std::vector<PrPoint> pts{{0.1, 0.5, 0.5}, {0.2, 0.8, 0.5}, {0.3, 1.0, 0.25}};
  // Flat 1.0 on [0, .25], then trapezoid (1.0 + 0.8) / 2 on [.25, .5].
  EXPECT_DOUBLE_EQ(area_under_pr(pts), 0.25 + 0.225);
  EXPECT_EQ(area_under_pr({}), 0.0);
}

TEST(Evaluate, IdentitiesHold) {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 30; ++trial) {
    const Dims d{7, 8, 9};
    const auto g = oracle::random_mask(rng, d, 0.1);
    const auto p = oracle::random_mask(rng, d, 0.1);
    const auto r = evaluate(p, g, {1, 1, 1});
    EXPECT_EQ(r.counts.total(), d.count());
    EXPECT_EQ(r.seg_volume, p.count());
    if (r.dsc && r.jaccard) {
      EXPECT_NEAR(*r.jaccard, *r.dsc / (2.0 - *r.dsc), 1e-12);
    }
    const auto self = evaluate(g, g, {1, 1, 1});
    EXPECT_DOUBLE_EQ(*self.dsc, 1.0);
    EXPECT_DOUBLE_EQ(*self.sd_mm, 0.0);
    EXPECT_DOUBLE_EQ(*self.ltpr, 1.0);
    EXPECT_DOUBLE_EQ(*self.lfpr, 0.0);
  }
}

TEST(Evaluate, SerializesUndefinedAsNull) {
  const Dims d{2, 2, 2};
  const Mask empty(d);
  const auto r = evaluate(empty, empty, {1, 1, 1});
  const auto j = nlohmann::json::parse(to_json(r));
  EXPECT_TRUE(j["dsc"].is_null());
  EXPECT_TRUE(j["sd_mm"].is_null());
  EXPECT_TRUE(j["apr"].is_null());
  EXPECT_EQ(j["tn"], 8);
  const auto csv = to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "tp,fp,fn,tn,dsc,jaccard,ppv,tpr,specificity,f2,ltpr,lfpr,"
            "ltpr_voxel,lfpr_voxel,vd,sd_mm,apr,seg_volume");
  EXPECT_NE(csv.find(",null,"), std::string::npos);
}

TEST(Evaluate, CsvRoundTripsDoubles) {
  const Mask g({1, 1, 3}, {1, 1, 0});
  const Mask p({1, 1, 3}, {1, 0, 1});
  const auto r = evaluate(p, g, {1, 1, 1});
  const auto csv = to_csv(r);
  const auto row = csv.substr(csv.find('\n') + 1);
  // dsc is the fifth field.
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) pos = row.find(',', pos) + 1;
  EXPECT_EQ(std::stod(row.substr(pos)), *r.dsc);
}

}  // namespace
}  // namespace asymseg
