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

// A single 3x3x3 convolution followed by a sigmoid: the smallest model
// that can be trained patch-wise with the similarity losses and fused with
// the patch machinery.

#ifndef ASYMSEG_MODEL_HPP_
#define ASYMSEG_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "asymseg/fusion.hpp"
#include "asymseg/losses.hpp"
#include "asymseg/patching.hpp"
#include "asymseg/volume.hpp"

namespace asymseg {

inline constexpr int kStencilTaps = 27;

class StencilModel {
 public:
  explicit StencilModel(int channels);
  StencilModel(int channels, std::vector<double> kernel, double bias);

  // Kernel uniform in [-half_width, half_width], bias 0.
  static StencilModel random(int channels, std::uint64_t seed,
                             double half_width = 0.05);

  int channels() const { return channels_; }
  // Index c * 27 + (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1).
  std::span<const double> kernel() const { return kernel_; }
  std::span<double> kernel() { return kernel_; }
  double weight(int c, int dx, int dy, int dz) const {
    return kernel_[static_cast<std::size_t>(tap(c, dx, dy, dz))];
  }
  double bias() const { return bias_; }
  void set_bias(double b) { bias_ = b; }

  // Kernel then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  std::size_t parameter_count() const { return kernel_.size() + 1; }

  static constexpr int tap(int c, int dx, int dy, int dz) {
    return c * kStencilTaps + (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1);
  }

  friend bool operator==(const StencilModel&, const StencilModel&) = default;

 private:
  int channels_;
  std::vector<double> kernel_;
  double bias_ = 0.0;
};

// Checkpoint: JSON line {"channels":C,"stencil":3,"bias":b} followed by the
// 27*C kernel weights as little-endian float64.
void save_model(const StencilModel& m, const std::filesystem::path& path);
StencilModel load_model(const std::filesystem::path& path);

// Pre-activation sum of the stencil, zero padded at the borders.
std::vector<double> logits(const StencilModel& m, const Volume& v);

// sigmoid(logits). Throws on channel mismatch.
ProbabilityMap forward(const StencilModel& m, const Volume& v);

struct ModelGradient {
  double loss = 0.0;
  std::vector<double> kernel;
  double bias = 0.0;

  // Kernel then bias, matching StencilModel::parameters().
  std::vector<double> flat() const;
};

// Loss of forward(m, v) against `truth` and its gradient with respect to
// every model parameter.
ModelGradient backward(const StencilModel& m, const Volume& v,
                       std::span<const std::uint8_t> truth,
                       const LossSpec& loss);
ModelGradient backward(const StencilModel& m, const Volume& v,
                       const Mask& truth, const LossSpec& loss);

struct TrainConfig {
  LossSpec loss = LossSpec::f_beta(1.5);
  double learning_rate = 0.0005;
  double lr_decay = 0.95;
  int lr_interval = 500;
  // The decay interval is multiplied by lr_interval_growth every
  // lr_growth_every steps.
  double lr_interval_growth = 2.0;
  int lr_growth_every = 16000;
  int steps = 500;
  int patch_size = 16;
  double overlap = 0.5;
  std::size_t quota = 8;
  std::size_t min_lesion_voxels = kDefaultMinLesionVoxels;
  bool augment = true;
  double init_half_width = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

// Step-decay schedule with a growing decay interval. lr(step) is the rate
// used for the 0-based optimizer step `step`.
class LearningRateSchedule {
 public:
  explicit LearningRateSchedule(const TrainConfig& cfg);

  // Rate for the current step; then advances one step.
  double next();

 private:
  double lr_;
  double decay_;
  double interval_;
  double growth_;
  long growth_every_;
  long step_ = 0;
  long since_decay_ = 0;
};

struct TrainLogEntry {
  int step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  StencilModel model;
  std::vector<TrainLogEntry> log;
};

struct LabeledVolume {
  Volume volume;
  Mask mask;
};

// Adam on one selected patch per step, cycling images round-robin so each
// contributes equally. Deterministic for a given config.
TrainResult train(std::span<const LabeledVolume> data, const TrainConfig& cfg);

// Patch-wise inference: every grid center under every augmentation (only
// the identity for tiling), each prediction fused back into the volume.
// Patch forwards run on `threads` workers; fusion order is fixed, so the
// result does not depend on the thread count.
ProbabilityMap predict(const StencilModel& m, const Volume& v,
                       const PatchGrid& grid, FusionMode mode,
                       int threads = 1);

}  // namespace asymseg

#endif  // ASYMSEG_MODEL_HPP_
