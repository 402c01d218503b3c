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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "asymseg/random.hpp"
#include "json.hpp"

namespace asymseg {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFFu);
    return r;
  }
  return v;
}

void check_channels(const StencilModel& m, const Volume& v) {
  if (m.channels() != v.channels()) {
    throw std::invalid_argument("model expects " +
                                std::to_string(m.channels()) +
                                " channels, volume has " +
                                std::to_string(v.channels()));
  }
}

// Calls fn(out_index, in_index) for every voxel whose neighbour at
// (dx, dy, dz) lies inside the volume.
template <typename Fn>
void for_each_shifted(const Dims& d, int dx, int dy, int dz, Fn&& fn) {
  const std::int64_t x0 = std::max(0, -dx), x1 = std::min(d.nx, d.nx - dx);
  const std::int64_t y0 = std::max(0, -dy), y1 = std::min(d.ny, d.ny - dy);
  const std::int64_t z0 = std::max(0, -dz), z1 = std::min(d.nz, d.nz - dz);
  for (std::int64_t x = x0; x < x1; ++x) {
    for (std::int64_t y = y0; y < y1; ++y) {
      const std::size_t out = d.index(x, y, z0);
      const std::size_t in = d.index(x + dx, y + dy, z0 + dz);
      for (std::int64_t z = 0; z < z1 - z0; ++z) {
        fn(out + static_cast<std::size_t>(z), in + static_cast<std::size_t>(z));
      }
    }
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

StencilModel::StencilModel(int channels)
    : StencilModel(channels,
                   std::vector<double>(
                       static_cast<std::size_t>(std::max(channels, 0)) *
                           kStencilTaps,
                       0.0),
                   0.0) {}

StencilModel::StencilModel(int channels, std::vector<double> kernel,
                           double bias)
    : channels_(channels), kernel_(std::move(kernel)), bias_(bias) {
  if (channels_ <= 0) throw std::invalid_argument("model channels must be > 0");
  if (kernel_.size() != static_cast<std::size_t>(channels_) * kStencilTaps) {
    throw std::invalid_argument("kernel must hold 27 weights per channel");
  }
  if (!std::isfinite(bias_) ||
      !std::all_of(kernel_.begin(), kernel_.end(),
                   [](double w) { return std::isfinite(w); })) {
    throw std::invalid_argument("model parameters must be finite");
  }
}

StencilModel StencilModel::random(int channels, std::uint64_t seed,
                                  double half_width) {
  StencilModel m(channels);
  Rng rng(seed);
  for (auto& w : m.kernel_) w = rng.uniform(-half_width, half_width);
  return m;
}

std::vector<double> StencilModel::parameters() const {
  std::vector<double> p(kernel_);
  p.push_back(bias_);
  return p;
}

void StencilModel::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) {
    throw std::invalid_argument("parameter vector has the wrong length");
  }
  std::copy(params.begin(), params.end() - 1, kernel_.begin());
  bias_ = params.back();
}

void save_model(const StencilModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  nlohmann::ordered_json j;
  j["channels"] = m.channels();
  j["stencil"] = 3;
  j["bias"] = m.bias();
  out << j.dump() << '\n';
  for (double w : m.kernel()) {
    std::uint64_t u;
    std::memcpy(&u, &w, 8);
    u = to_little_endian(u);
    char bytes[8];
    std::memcpy(bytes, &u, 8);
    out.write(bytes, 8);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

StencilModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("malformed checkpoint header: " + path.string());
  }
  int channels = 0;
  double bias = 0.0;
  try {
    const auto j = nlohmann::json::parse(line);
    if (j.size() != 3 || j.at("stencil").get<int>() != 3) {
      throw std::runtime_error("expected {channels, stencil:3, bias}");
    }
    channels = j.at("channels").get<int>();
    bias = j.at("bias").get<double>();
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed checkpoint header in " +
                             path.string() + ": " + e.what());
  }
  if (channels <= 0) {
    throw std::runtime_error("checkpoint channels must be > 0: " +
                             path.string());
  }
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>()};
  const std::size_t n = static_cast<std::size_t>(channels) * kStencilTaps;
  if (bytes.size() != 8 * n) {
    throw std::runtime_error("checkpoint payload has " +
                             std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(8 * n) + ": " + path.string());
  }
  std::vector<double> kernel(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t u;
    std::memcpy(&u, bytes.data() + 8 * i, 8);
    u = to_little_endian(u);
    std::memcpy(&kernel[i], &u, 8);
  }
  return StencilModel(channels, std::move(kernel), bias);
}

std::vector<double> logits(const StencilModel& m, const Volume& v) {
  check_channels(m, v);
  const Dims& d = v.dims();
  std::vector<double> z(d.count(), m.bias());
  for (int c = 0; c < m.channels(); ++c) {
    const auto src = v.channel(c);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const double w = m.weight(c, dx, dy, dz);
          for_each_shifted(d, dx, dy, dz, [&](std::size_t o, std::size_t i) {
            z[o] += w * src[i];
          });
        }
      }
    }
  }
  return z;
}

ProbabilityMap forward(const StencilModel& m, const Volume& v) {
  auto z = logits(m, v);
  for (auto& e : z) e = sigmoid(e);
  return ProbabilityMap(v.dims(), std::move(z));
}

std::vector<double> ModelGradient::flat() const {
  std::vector<double> g(kernel);
  g.push_back(bias);
  return g;
}

ModelGradient backward(const StencilModel& m, const Volume& v,
                       std::span<const std::uint8_t> truth,
                       const LossSpec& loss) {
  check_channels(m, v);
  if (truth.size() != v.dims().count()) {
    throw std::invalid_argument("ground truth does not match volume dims");
  }
  auto p = logits(m, v);
  for (auto& e : p) e = sigmoid(e);
  const LossResult lr = loss_with_grad(loss, p, truth);

  // dL/dz = dL/dp * p (1 - p)
  std::vector<double> dz(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    dz[i] = lr.gradient[i] * p[i] * (1.0 - p[i]);
  }

  ModelGradient g;
  g.loss = lr.value;
  g.kernel.assign(m.kernel().size(), 0.0);
  for (double e : dz) g.bias += e;
  const Dims& d = v.dims();
  for (int c = 0; c < m.channels(); ++c) {
    const auto src = v.channel(c);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz_ = -1; dz_ <= 1; ++dz_) {
          double acc = 0.0;
          for_each_shifted(d, dx, dy, dz_, [&](std::size_t o, std::size_t i) {
            acc += dz[o] * src[i];
          });
          g.kernel[static_cast<std::size_t>(
              StencilModel::tap(c, dx, dy, dz_))] = acc;
        }
      }
    }
  }
  return g;
}

ModelGradient backward(const StencilModel& m, const Volume& v,
                       const Mask& truth, const LossSpec& loss) {
  if (truth.dims() != v.dims()) {
    throw std::invalid_argument("ground truth does not match volume dims");
  }
  return backward(m, v, truth.data(), loss);
}

LearningRateSchedule::LearningRateSchedule(const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      decay_(cfg.lr_decay),
      interval_(cfg.lr_interval),
      growth_(cfg.lr_interval_growth),
      growth_every_(cfg.lr_growth_every) {
  if (!(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be > 0");
  }
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0)) {
    throw std::invalid_argument("lr_decay must lie in (0, 1]");
  }
  if (cfg.lr_interval <= 0 || cfg.lr_growth_every <= 0 ||
      !(cfg.lr_interval_growth >= 1.0)) {
    throw std::invalid_argument("lr interval settings must be positive");
  }
}

double LearningRateSchedule::next() {
  const double current = lr_;
  ++step_;
  ++since_decay_;
  if (static_cast<double>(since_decay_) >= interval_) {
    lr_ *= decay_;
    since_decay_ = 0;
  }
  if (step_ % growth_every_ == 0) interval_ *= growth_;
  return current;
}

TrainResult train(std::span<const LabeledVolume> data, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("no training volumes");
  if (cfg.steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (cfg.quota == 0) throw std::invalid_argument("quota must be >= 1");
  const int channels = data.front().volume.channels();

  std::vector<PatchGrid> grids;
  std::vector<std::vector<Index3>> selected;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& item = data[i];
    if (item.volume.channels() != channels) {
      throw std::invalid_argument("training volumes differ in channel count");
    }
    if (item.mask.dims() != item.volume.dims()) {
      throw std::invalid_argument("mask dims differ from volume dims");
    }
    grids.push_back(build_grid(item.volume.dims(), cfg.patch_size, cfg.overlap));
    selected.push_back(select_training_patches(
        item.mask, grids.back(), cfg.min_lesion_voxels, cfg.quota,
        derive_seed(cfg.seed, 100 + i)));
  }

  TrainResult result{StencilModel::random(channels, derive_seed(cfg.seed, 0),
                                          cfg.init_half_width),
                     {}};
  auto params = result.model.parameters();
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0);
  LearningRateSchedule schedule(cfg);
  Rng aug_rng(derive_seed(cfg.seed, 1));
  double b1t = 1.0, b2t = 1.0;
  result.log.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    const auto n_images = static_cast<int>(data.size());
    const auto image = static_cast<std::size_t>(step % n_images);
    const auto slot = static_cast<std::size_t>(step / n_images) % cfg.quota;
    const Index3 center = selected[image][slot];
    const int aug = cfg.augment
                        ? static_cast<int>(aug_rng.below(kNumAugmentations))
                        : 0;
    const auto patch = extract_patch(data[image].volume, grids[image], center, aug);
    const auto labels =
        extract_mask_patch(data[image].mask, grids[image], center, aug);
    const auto grad = backward(result.model, patch.data, labels, cfg.loss);
    const auto flat = grad.flat();

    const double lr = schedule.next();
    b1t *= cfg.adam_beta1;
    b2t *= cfg.adam_beta2;
    for (std::size_t k = 0; k < params.size(); ++k) {
      m1[k] = cfg.adam_beta1 * m1[k] + (1.0 - cfg.adam_beta1) * flat[k];
      m2[k] = cfg.adam_beta2 * m2[k] + (1.0 - cfg.adam_beta2) * flat[k] * flat[k];
      const double mhat = m1[k] / (1.0 - b1t);
      const double vhat = m2[k] / (1.0 - b2t);
      params[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
    result.model.set_parameters(params);
    result.log.push_back({step, lr, grad.loss});
  }
  return result;
}

ProbabilityMap predict(const StencilModel& m, const Volume& v,
                       const PatchGrid& grid, FusionMode mode, int threads) {
  check_channels(m, v);
  if (v.dims() != grid.volume_dims()) {
    throw std::invalid_argument("grid does not match volume dims");
  }
  const FusionSpec spec{mode, grid.patch_size(), grid.stride()};
  FusionAccumulator acc(v.dims(), spec);

  struct Task {
    Index3 center;
    int aug;
  };
  const int augs = mode == FusionMode::kTiling ? 1 : kNumAugmentations;
  std::vector<Task> tasks;
  for (const auto& c : grid.centers()) {
    for (int a = 0; a < augs; ++a) tasks.push_back({c, a});
  }

  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  const std::size_t batch = 32 * workers;
  std::vector<PatchPrediction> results(batch);
  auto run = [&](std::size_t begin, std::size_t end, std::size_t worker) {
    for (std::size_t t = begin + worker; t < end; t += workers) {
      const auto patch = extract_patch(v, grid, tasks[t].center, tasks[t].aug);
      auto p = forward(m, patch.data);
      results[t - begin] = {tasks[t].center, tasks[t].aug,
                            std::vector<double>(p.data().begin(),
                                                p.data().end())};
    }
  };
  for (std::size_t begin = 0; begin < tasks.size(); begin += batch) {
    const std::size_t end = std::min(tasks.size(), begin + batch);
    if (workers == 1) {
      run(begin, end, 0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(run, begin, end, w);
      }
    }
    for (std::size_t t = begin; t < end; ++t) acc.add(results[t - begin]);
  }
  return acc.finish();
}

}  // namespace asymseg
