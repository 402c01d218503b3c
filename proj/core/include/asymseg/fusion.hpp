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

#ifndef ASYMSEG_FUSION_HPP_
#define ASYMSEG_FUSION_HPP_

#include <span>
#include <string_view>
#include <vector>

#include "asymseg/patching.hpp"
#include "asymseg/volume.hpp"

namespace asymseg {

enum class FusionMode { kTiling, kUniform, kSpline };

std::string_view to_string(FusionMode mode);
// Accepts "tiling", "uniform", "spline".
FusionMode parse_fusion_mode(std::string_view name);

struct FusionSpec {
  FusionMode mode = FusionMode::kSpline;
  int patch_size = 0;
  int stride = 0;
};

// Separable quadratic window w1(u) = 1 - (2u/S)^2 sampled at the voxel
// centers u = i + 0.5 - S/2. Peaks next to the patch center and falls to
// zero at the patch border.
class WeightKernel {
 public:
  int size() const { return size_; }
  std::span<const double> axis_weights() const { return axis_; }
  double at(int i, int j, int k) const {
    return axis_[static_cast<std::size_t>(i)] *
           axis_[static_cast<std::size_t>(j)] *
           axis_[static_cast<std::size_t>(k)];
  }

 private:
  friend WeightKernel spline_kernel(int size);
  friend WeightKernel uniform_kernel(int size);
  int size_ = 0;
  std::vector<double> axis_;
};

// Requires even size >= 2.
WeightKernel spline_kernel(int size);
WeightKernel uniform_kernel(int size);

// One patch prediction in the augmented frame it was predicted in.
struct PatchPrediction {
  Index3 center;
  int augmentation_id = 0;
  std::vector<double> probabilities;  // S^3, x slowest
};

// Streaming form of fuse(): add() predictions in any order, then finish().
// Floating-point sums depend on the order of add() calls.
class FusionAccumulator {
 public:
  FusionAccumulator(const Dims& dims, const FusionSpec& spec);

  void add(const PatchPrediction& patch);
  ProbabilityMap finish() const;

 private:
  Dims dims_;
  int patch_size_;
  WeightKernel kernel_;
  std::vector<double> weighted_;
  std::vector<double> total_;
  std::vector<double> lo_;
  std::vector<double> hi_;
};

// Weighted soft voting:
//   fused(v) = sum_k w(v - c_k) p_k(v) / sum_k w(v - c_k)
// Each prediction is mapped back through its inverse augmentation first.
// Votes landing on padding are dropped. The result is clamped to the
// range of the votes it averages, so a voxel on which every vote agrees
// gets that value exactly. Tiling mode requires stride == patch size.
ProbabilityMap fuse(std::span<const PatchPrediction> patches, const Dims& dims,
                    const FusionSpec& spec);

}  // namespace asymseg

#endif  // ASYMSEG_FUSION_HPP_
