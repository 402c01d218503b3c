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

#include "asymseg/fusion.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace asymseg {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kTiling:
      return "tiling";
    case FusionMode::kUniform:
      return "uniform";
    case FusionMode::kSpline:
      return "spline";
  }
  return "unknown";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "tiling") return FusionMode::kTiling;
  if (name == "uniform") return FusionMode::kUniform;
  if (name == "spline") return FusionMode::kSpline;
  throw std::invalid_argument("unknown fusion mode '" + std::string(name) +
                              "' (expected tiling, uniform or spline)");
}

WeightKernel spline_kernel(int size) {
  if (size < 2 || size % 2 != 0) {
    throw std::invalid_argument("spline kernel size must be even and >= 2");
  }
  WeightKernel k;
  k.size_ = size;
  k.axis_.resize(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) {
    const double u = i + 0.5 - size / 2.0;
    const double r = 2.0 * u / size;
    k.axis_[static_cast<std::size_t>(i)] = 1.0 - r * r;
  }
  return k;
}

WeightKernel uniform_kernel(int size) {
  if (size <= 0) throw std::invalid_argument("kernel size must be > 0");
  WeightKernel k;
  k.size_ = size;
  k.axis_.assign(static_cast<std::size_t>(size), 1.0);
  return k;
}

namespace {

WeightKernel kernel_for(const FusionSpec& spec) {
  if (spec.patch_size <= 0) throw std::invalid_argument("fuse: patch size");
  if (spec.mode == FusionMode::kTiling && spec.stride != spec.patch_size) {
    throw std::invalid_argument("tiling fusion requires stride == patch size");
  }
  return spec.mode == FusionMode::kSpline ? spline_kernel(spec.patch_size)
                                          : uniform_kernel(spec.patch_size);
}

}  // namespace

FusionAccumulator::FusionAccumulator(const Dims& dims, const FusionSpec& spec)
    : dims_(dims), patch_size_(spec.patch_size), kernel_(kernel_for(spec)) {
  if (!dims.positive()) throw std::invalid_argument("fuse: dims must be > 0");
  const std::size_t n = dims.count();
  weighted_.assign(n, 0.0);
  total_.assign(n, 0.0);
  lo_.assign(n, std::numeric_limits<double>::infinity());
  hi_.assign(n, -std::numeric_limits<double>::infinity());
}

void FusionAccumulator::add(const PatchPrediction& patch) {
  const int s = patch_size_;
  const std::size_t cube = static_cast<std::size_t>(s) * s * s;
  if (patch.probabilities.size() != cube) {
    throw std::invalid_argument("patch prediction is not S^3 voxels");
  }
  const auto w = kernel_.axis_weights();
  const auto p = augment_cube<double>(
      patch.probabilities, s, inverse_augmentation(patch.augmentation_id));
  const std::int64_t half = s / 2;
  const std::int64_t x0 = patch.center.x - half;
  const std::int64_t y0 = patch.center.y - half;
  const std::int64_t z0 = patch.center.z - half;
  for (std::int64_t i = 0; i < s; ++i) {
    const std::int64_t x = x0 + i;
    if (x < 0 || x >= dims_.nx) continue;
    for (std::int64_t j = 0; j < s; ++j) {
      const std::int64_t y = y0 + j;
      if (y < 0 || y >= dims_.ny) continue;
      const double wxy =
          w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)];
      for (std::int64_t k = 0; k < s; ++k) {
        const std::int64_t z = z0 + k;
        if (z < 0 || z >= dims_.nz) continue;
        const double v = p[static_cast<std::size_t>((i * s + j) * s + k)];
        if (!(v >= 0.0 && v <= 1.0)) {
          throw std::invalid_argument("patch probability outside [0, 1]");
        }
        const double wt = wxy * w[static_cast<std::size_t>(k)];
        const std::size_t idx = dims_.index(x, y, z);
        weighted_[idx] += wt * v;
        total_[idx] += wt;
        lo_[idx] = std::min(lo_[idx], v);
        hi_[idx] = std::max(hi_[idx], v);
      }
    }
  }
}

ProbabilityMap FusionAccumulator::finish() const {
  std::vector<double> out(weighted_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(total_[i] > 0.0)) {
      throw std::logic_error("fuse: voxel " + std::to_string(i) +
                             " received zero total weight");
    }
    out[i] = std::clamp(weighted_[i] / total_[i], lo_[i], hi_[i]);
  }
  return ProbabilityMap(dims_, std::move(out));
}

ProbabilityMap fuse(std::span<const PatchPrediction> patches, const Dims& dims,
                    const FusionSpec& spec) {
  FusionAccumulator acc(dims, spec);
  for (const auto& patch : patches) acc.add(patch);
  return acc.finish();
}

}  // namespace asymseg
