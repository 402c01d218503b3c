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

#include "asymseg/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "asymseg/metrics.hpp"
#include "asymseg/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace asymseg {
namespace {

Volume random_volume(std::mt19937_64& rng, const Dims& d, int channels) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(channels) * d.count());
  for (auto& f : data) f = n(rng);
  return Volume(d, channels, {}, std::move(data));
}

// Direct zero-padded cross-correlation.
std::vector<double> naive_probs(const StencilModel& m, const Volume& v) {
  const Dims& d = v.dims();
  std::vector<double> out(d.count());
  for (std::int64_t x = 0; x < d.nx; ++x)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t z = 0; z < d.nz; ++z) {
        double s = m.bias();
        for (int c = 0; c < m.channels(); ++c)
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dz = -1; dz <= 1; ++dz) {
                if (!d.contains(x + dx, y + dy, z + dz)) continue;
                s += m.weight(c, dx, dy, dz) * v.at(c, x + dx, y + dy, z + dz);
              }
        out[d.index(x, y, z)] = 1.0 / (1.0 + std::exp(-s));
      }
  return out;
}

double loss_oracle(const LossSpec& spec, const std::vector<double>& p,
                   const std::vector<std::uint8_t>& g) {
  switch (spec.kind()) {
    case LossKind::kFBeta:
      return 1.0 - oracle::f_beta_terms(p, g, spec.beta());
    case LossKind::kGdl:
      return oracle::gdl_direct(p, g);
    case LossKind::kFocal:
      return oracle::focal_direct(p, g, spec.alpha(), spec.gamma());
  }
  return 0.0;
}

TEST(StencilModel, ConstructionAndParameters) {
  EXPECT_THROW(StencilModel(0), std::invalid_argument);
  EXPECT_THROW(StencilModel(2, std::vector<double>(27), 0.0),
               std::invalid_argument);
  auto m = StencilModel::random(2, 5);
  EXPECT_EQ(m.parameter_count(), 55u);
  for (double w : m.kernel()) EXPECT_LE(std::abs(w), 0.05);
  EXPECT_EQ(m, StencilModel::random(2, 5));
  EXPECT_NE(m, StencilModel::random(2, 6));
  auto p = m.parameters();
  p.back() = 0.25;
  m.set_parameters(p);
  EXPECT_EQ(m.bias(), 0.25);
  EXPECT_EQ(StencilModel::tap(1, 1, -1, 0), 27 + 18 + 0 + 1);
}

TEST(Forward, MatchesDirectCorrelation) {
  std::mt19937_64 rng(31);
  const auto v = random_volume(rng, {5, 4, 6}, 2);
  const auto m = StencilModel::random(2, 8, 0.5);
  const auto p = forward(m, v);
  const auto want = naive_probs(m, v);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(p[i], want[i], 1e-14);
}

TEST(Forward, SimpleStencils) {
  std::mt19937_64 rng(32);
  const auto v = random_volume(rng, {4, 4, 4}, 1);
  StencilModel zero(1);
  const auto flat = forward(zero, v);
  for (double e : flat.data()) EXPECT_EQ(e, 0.5);
  StencilModel shift(1);
  shift.kernel()[StencilModel::tap(0, 1, 0, 0)] = 1.0;
  const auto p = forward(shift, v);
  const double z = v.at(0, 2, 2, 3);
  EXPECT_DOUBLE_EQ(p.at(1, 2, 3), 1.0 / (1.0 + std::exp(-z)));
  EXPECT_EQ(p.at(3, 2, 3), 0.5);  // reads padding
  EXPECT_THROW(forward(StencilModel(2), v), std::invalid_argument);
}

TEST(Forward, BiasOnly) {
  std::mt19937_64 rng(33);
  const auto v = random_volume(rng, {5, 3, 4}, 2);
  StencilModel big(2, std::vector<double>(54, 0.0), 50.0);
  const auto saturated = forward(big, v);
  for (double e : saturated.data()) EXPECT_GE(e, 1.0 - 1e-9);

  // A zero volume sees only the bias.
  const Volume zeros({5, 3, 4}, 2);
  const auto m = StencilModel::random(2, 9, 0.5);
  StencilModel biased(2, std::vector<double>(m.kernel().begin(), m.kernel().end()),
                      -1.25);
  const double want = 1.0 / (1.0 + std::exp(1.25));
  const auto p = forward(biased, zeros);
  for (double e : p.data()) EXPECT_DOUBLE_EQ(e, want);
}

TEST(Backward, ParameterGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(33);
  const Dims d{6, 5, 4};
  const auto v = random_volume(rng, d, 1);
  auto g = oracle::random_labels(rng, d.count(), 0.25);
  g[0] = 1;
  g[1] = 0;
  const auto m = StencilModel::random(1, 3, 0.3);
  for (const auto& spec : {LossSpec::f_beta(1.0), LossSpec::f_beta(1.5),
                           LossSpec::f_beta(3.0), LossSpec::gdl(),
                           LossSpec::focal()}) {
    const auto grad = backward(m, v, g, spec);
    const auto flat = grad.flat();
    ASSERT_EQ(flat.size(), 28u);
    auto f = [&](const std::vector<double>& params) {
      StencilModel probe(1);
      probe.set_parameters(params);
      return loss_oracle(spec, naive_probs(probe, v), g);
    };
    const auto params = m.parameters();
    EXPECT_NEAR(grad.loss, f(params), 1e-12);
    for (std::size_t k = 0; k < flat.size(); ++k) {
      EXPECT_LT(oracle::relative_error(flat[k],
                                       oracle::central_difference(f, params, k)),
                1e-4)
          << to_string(spec.kind()) << " parameter " << k;
    }
  }
}

TEST(Backward, SaturatedCorrectPredictionsPlateau) {
  const Dims d{4, 4, 4};
  std::vector<float> data(d.count(), -1.0f);
  std::vector<std::uint8_t> g(d.count(), 0);
  for (std::size_t i = 0; i < d.count(); i += 3) {
    data[i] = 1.0f;
    g[i] = 1;
  }
  const Volume v(d, 1, {}, data);
  StencilModel m(1);
  m.kernel()[StencilModel::tap(0, 0, 0, 0)] = 60.0;
  for (const auto& spec : {LossSpec::f_beta(1.5), LossSpec::gdl(),
                           LossSpec::focal()}) {
    const auto flat = backward(m, v, g, spec).flat();
    double norm = 0;
    for (double e : flat) norm += e * e;
    EXPECT_LT(std::sqrt(norm), 1e-6) << to_string(spec.kind());
  }
}

TEST(Backward, MirrorSymmetricInputGivesSymmetricGradient) {
  std::mt19937_64 rng(34);
  const Dims d{6, 5, 5};
  auto v = random_volume(rng, d, 1);
  std::vector<float> data(v.data().begin(), v.data().end());
  auto g = oracle::random_labels(rng, d.count(), 0.3);
  // Mirror along x.
  for (std::int64_t x = 0; x < d.nx / 2; ++x)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t z = 0; z < d.nz; ++z) {
        data[d.index(d.nx - 1 - x, y, z)] = data[d.index(x, y, z)];
        g[d.index(d.nx - 1 - x, y, z)] = g[d.index(x, y, z)];
      }
  g[d.index(0, 0, 0)] = g[d.index(5, 0, 0)] = 1;
  g[d.index(0, 1, 0)] = g[d.index(5, 1, 0)] = 0;
  const Volume sym(d, 1, {}, data);
  StencilModel m(1);
  m.kernel()[StencilModel::tap(0, 0, 0, 0)] = 0.7;
  m.kernel()[StencilModel::tap(0, 0, 1, 0)] = -0.2;
  for (const auto& spec : {LossSpec::f_beta(1.5), LossSpec::gdl(),
                           LossSpec::focal()}) {
    const auto grad = backward(m, sym, g, spec);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          EXPECT_NEAR(grad.kernel[StencilModel::tap(0, dx, dy, dz)],
                      grad.kernel[StencilModel::tap(0, -dx, dy, dz)], 1e-9);
        }
  }
}

TEST(Checkpoint, RoundTripsExactly) {
  test::TempDir dir;
  const auto m = StencilModel::random(3, 11, 2.0);
  save_model(m, dir.path() / "m.ckpt");
  EXPECT_EQ(load_model(dir.path() / "m.ckpt"), m);
  {
    std::ofstream out(dir.path() / "bad.ckpt", std::ios::binary);
    out << R"({"channels":1,"stencil":3,"bias":0.0})" << '\n' << "short";
  }
  EXPECT_THROW(load_model(dir.path() / "bad.ckpt"), std::runtime_error);
  EXPECT_THROW(load_model(dir.path() / "none.ckpt"), std::runtime_error);
}

TEST(LearningRateSchedule, StepDecayWithGrowingInterval) {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.lr_decay = 0.5;
  cfg.lr_interval = 2;
  cfg.lr_interval_growth = 2.0;
  cfg.lr_growth_every = 4;
  LearningRateSchedule s(cfg);
  const double want[] = {0.1,   0.1,   0.05,  0.05,  0.025,
                         0.025, 0.025, 0.025, 0.0125};
  for (double w : want) EXPECT_DOUBLE_EQ(s.next(), w);
}

TEST(LearningRateSchedule, NoDecayIsConstant) {
  TrainConfig cfg;
  cfg.lr_decay = 1.0;
  LearningRateSchedule s(cfg);
  for (int i = 0; i < 40000; ++i) ASSERT_EQ(s.next(), cfg.learning_rate);
  cfg.lr_decay = 0.0;
  EXPECT_THROW(LearningRateSchedule{cfg}, std::invalid_argument);
}

std::vector<LabeledVolume> separable_cases(int n, std::uint64_t seed) {
  std::vector<LabeledVolume> out;
  for (int i = 0; i < n; ++i) {
    SynthSpec s;
    s.dims = {32, 32, 32};
    s.lesion_fraction = 0.01;
    s.seed = seed + static_cast<std::uint64_t>(i);
    auto c = generate(s);
    out.push_back({std::move(c.volume), std::move(c.mask)});
  }
  return out;
}

TEST(Train, IsDeterministic) {
  const auto data = separable_cases(2, 40);
  TrainConfig cfg;
  cfg.steps = 40;
  cfg.seed = 3;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.log.size(), 40u);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  }
  cfg.seed = 4;
  EXPECT_NE(train(data, cfg).model, a.model);
}

TEST(Train, LossGoesDown) {
  const auto data = separable_cases(2, 60);
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.steps = 300;
  const auto r = train(data, cfg);
  double head = 0, tail = 0;
  for (int i = 0; i < 30; ++i) {
    head += r.log[static_cast<std::size_t>(i)].loss;
    tail += r.log[r.log.size() - 1 - static_cast<std::size_t>(i)].loss;
  }
  EXPECT_LT(tail, 0.5 * head);
  EXPECT_EQ(r.log.front().lr, 0.05);
}

TEST(Train, LearnsSeparableDataWithEveryLoss) {
  const auto data = separable_cases(2, 50);
  SynthSpec s;
  s.dims = {32, 32, 32};
  s.lesion_fraction = 0.01;
  s.seed = 77;
  const auto held_out = generate(s);
  for (const auto& spec : {LossSpec::f_beta(1.0), LossSpec::f_beta(1.5),
                           LossSpec::gdl(), LossSpec::focal()}) {
    TrainConfig cfg;
    cfg.loss = spec;
    cfg.learning_rate = 0.05;
    cfg.steps = 500;
    const auto r = train(data, cfg);
    const auto grid = build_grid(held_out.volume.dims(), 16, 0.5);
    const auto prob = predict(r.model, held_out.volume, grid, FusionMode::kSpline);
    const auto m = voxel_metrics(confusion(threshold(prob, 0.5), held_out.mask));
    ASSERT_TRUE(m.dsc.has_value());
    EXPECT_GE(*m.dsc, 0.95) << to_string(spec.kind());
  }
}

TEST(Train, ShortfallIsReported) {
  std::vector<LabeledVolume> data{{Volume({16, 16, 16}, 1), Mask({16, 16, 16})}};
  TrainConfig cfg;
  cfg.patch_size = 8;
  EXPECT_THROW(train(data, cfg), SelectionShortfall);
}

TEST(Predict, TilingMatchesWholeVolumeAwayFromSeams) {
  std::mt19937_64 rng(35);
  const Dims d{16, 16, 8};
  const auto v = random_volume(rng, d, 2);
  const auto m = StencilModel::random(2, 4, 0.4);
  const auto whole = forward(m, v);
  const auto tiled = predict(m, v, build_tiling_grid(d, 8), FusionMode::kTiling);
  auto interior = [](std::int64_t i) { return i % 8 != 0 && i % 8 != 7; };
  for (std::int64_t x = 0; x < d.nx; ++x)
    for (std::int64_t y = 0; y < d.ny; ++y)
      for (std::int64_t z = 0; z < d.nz; ++z) {
        if (!interior(x) || !interior(y) || !interior(z)) continue;
        EXPECT_NEAR(tiled.at(x, y, z), whole.at(x, y, z), 1e-12);
      }
}

TEST(Predict, ConstantModelIsConstantInEveryMode) {
  std::mt19937_64 rng(36);
  const Dims d{12, 10, 9};
  const auto v = random_volume(rng, d, 1);
  StencilModel m(1);
  m.set_bias(0.3);
  const double want = 1.0 / (1.0 + std::exp(-0.3));
  for (auto mode : {FusionMode::kUniform, FusionMode::kSpline}) {
    const auto p = predict(m, v, build_grid(d, 8, 0.5), mode);
    for (double e : p.data()) ASSERT_EQ(e, want);
  }
  const auto t = predict(m, v, build_tiling_grid(d, 8), FusionMode::kTiling);
  for (double e : t.data()) ASSERT_EQ(e, want);
}

TEST(Predict, ThreadCountDoesNotChangeOutput) {
  std::mt19937_64 rng(37);
  const Dims d{20, 12, 12};
  const auto v = random_volume(rng, d, 1);
  const auto m = StencilModel::random(1, 9, 0.5);
  const auto grid = build_grid(d, 8, 0.5);
  const auto a = predict(m, v, grid, FusionMode::kSpline, 1);
  const auto b = predict(m, v, grid, FusionMode::kSpline, 3);
  EXPECT_EQ(std::vector<double>(a.data().begin(), a.data().end()),
            std::vector<double>(b.data().begin(), b.data().end()));
}

}  // namespace
}  // namespace asymseg
