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

// Similarity and focal losses on a single lesion-probability plane, each
// returning the scalar loss and its exact derivative with respect to the
// per-voxel probabilities.
//
// The losses operate on flat spans so the trainer can call them on patch
// buffers without building a ProbabilityMap; the ProbabilityMap/Mask
// overloads forward to the span versions after a dims check.

#ifndef ASYMSEG_LOSSES_HPP_
#define ASYMSEG_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asymseg/volume.hpp"

namespace asymseg {

enum class LossKind { kFBeta, kGdl, kFocal };

std::string_view to_string(LossKind kind);
// Accepts "f_beta", "gdl", "focal".
LossKind parse_loss_kind(std::string_view name);

class LossSpec {
 public:
  static LossSpec f_beta(double beta);
  static LossSpec gdl();
  static LossSpec focal(double alpha = 0.25, double gamma = 2.0);

  LossKind kind() const { return kind_; }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }

  // Tversky weights of the F-beta index; they sum to one.
  double fn_weight() const { return beta_ * beta_ / (1.0 + beta_ * beta_); }
  double fp_weight() const { return 1.0 / (1.0 + beta_ * beta_); }

 private:
  LossSpec(LossKind kind, double beta, double alpha, double gamma);

  LossKind kind_;
  double beta_;
  double alpha_;
  double gamma_;
};

struct LossResult {
  double value = 0.0;
  // d(value)/d(p_j), same length and order as the prediction.
  std::vector<double> gradient;
};

// Probability clamp applied before the logarithm in the focal loss.
inline constexpr double kFocalEpsilon = 1e-7;

// Soft F-beta index
//   (1+b^2) TP / ((1+b^2) TP + b^2 FN + FP)
// with TP = sum p g, FN = sum (1-p) g, FP = sum p (1-g).
// Throws std::invalid_argument on size mismatch, beta <= 0, or when both
// the prediction and the ground truth are empty.
double f_beta_score(std::span<const double> p, std::span<const std::uint8_t> g,
                    double beta);
double f_beta_score(const ProbabilityMap& p, const Mask& g, double beta);

// Loss 1 - F_beta with the full quotient-rule gradient, where D is the
// denominator above:
//   lesion voxel:     -(1+b^2) (b^2 (TP + FN) + FP) / D^2
//   background voxel:  (1+b^2) TP / D^2
LossResult f_beta_loss_with_grad(std::span<const double> p,
                                 std::span<const std::uint8_t> g, double beta);
LossResult f_beta_loss_with_grad(const ProbabilityMap& p, const Mask& g,
                                 double beta);

// Two-class generalized Dice loss with class weights 1 / (class volume)^2.
// Background probability is 1 - p. Throws when either class is absent
// from g.
LossResult gdl_loss_with_grad(std::span<const double> p,
                              std::span<const std::uint8_t> g);
LossResult gdl_loss_with_grad(const ProbabilityMap& p, const Mask& g);

// Mean over voxels of -alpha_t (1 - p_t)^gamma log(p_t).
LossResult focal_loss_with_grad(std::span<const double> p,
                                std::span<const std::uint8_t> g, double alpha,
                                double gamma);
LossResult focal_loss_with_grad(const ProbabilityMap& p, const Mask& g,
                                double alpha, double gamma);

// Dispatch on spec.kind().
LossResult loss_with_grad(const LossSpec& spec, std::span<const double> p,
                          std::span<const std::uint8_t> g);

}  // namespace asymseg

#endif  // ASYMSEG_LOSSES_HPP_
