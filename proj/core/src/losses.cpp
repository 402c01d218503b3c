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

#include "asymseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asymseg {
namespace {

void check_sizes(std::span<const double> p, std::span<const std::uint8_t> g) {
  if (p.size() != g.size()) {
    throw std::invalid_argument("prediction and ground truth sizes differ");
  }
  if (p.empty()) throw std::invalid_argument("empty prediction");
}

void check_dims(const ProbabilityMap& p, const Mask& g) {
  if (p.dims() != g.dims()) {
    throw std::invalid_argument("dimension mismatch: " + to_string(p.dims()) +
                                " vs " + to_string(g.dims()));
  }
}

struct Overlap {
  double tp = 0.0;
  double fn = 0.0;
  double fp = 0.0;
};

Overlap soft_overlap(std::span<const double> p,
                     std::span<const std::uint8_t> g) {
  Overlap o;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    o.tp += p[i] * gi;
    o.fn += (1.0 - p[i]) * gi;
    o.fp += p[i] * (1.0 - gi);
  }
  return o;
}

void check_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be positive and finite");
  }
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kFBeta:
      return "f_beta";
    case LossKind::kGdl:
      return "gdl";
    case LossKind::kFocal:
      return "focal";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "f_beta") return LossKind::kFBeta;
  if (name == "gdl") return LossKind::kGdl;
  if (name == "focal") return LossKind::kFocal;
  throw std::invalid_argument("unknown loss '" + std::string(name) +
                              "' (expected f_beta, gdl or focal)");
}

LossSpec::LossSpec(LossKind kind, double beta, double alpha, double gamma)
    : kind_(kind), beta_(beta), alpha_(alpha), gamma_(gamma) {
  check_beta(beta_);
  if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) {
    throw std::invalid_argument("focal alpha must lie in [0, 1]");
  }
  if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) {
    throw std::invalid_argument("focal gamma must be >= 0");
  }
}

LossSpec LossSpec::f_beta(double beta) {
  return LossSpec(LossKind::kFBeta, beta, 0.25, 2.0);
}
LossSpec LossSpec::gdl() { return LossSpec(LossKind::kGdl, 1.0, 0.25, 2.0); }
LossSpec LossSpec::focal(double alpha, double gamma) {
  return LossSpec(LossKind::kFocal, 1.0, alpha, gamma);
}

double f_beta_score(std::span<const double> p, std::span<const std::uint8_t> g,
                    double beta) {
  check_sizes(p, g);
  check_beta(beta);
  const Overlap o = soft_overlap(p, g);
  const double b2 = beta * beta;
  const double denom = (1.0 + b2) * o.tp + b2 * o.fn + o.fp;
  if (denom <= 0.0) {
    throw std::invalid_argument(
        "F-beta undefined: prediction and ground truth are both empty");
  }
  return (1.0 + b2) * o.tp / denom;
}

double f_beta_score(const ProbabilityMap& p, const Mask& g, double beta) {
  check_dims(p, g);
  return f_beta_score(p.data(), g.data(), beta);
}

LossResult f_beta_loss_with_grad(std::span<const double> p,
                                 std::span<const std::uint8_t> g,
                                 double beta) {
  check_sizes(p, g);
  check_beta(beta);
  const Overlap o = soft_overlap(p, g);
  const double b2 = beta * beta;
  const double numer = (1.0 + b2) * o.tp;
  const double denom = numer + b2 * o.fn + o.fp;
  if (denom <= 0.0) {
    throw std::invalid_argument(
        "F-beta undefined: prediction and ground truth are both empty");
  }
  // dD/dp_j == 1 for every voxel: (1+b^2) g - b^2 g + (1 - g). On lesion
  // voxels the numerator derivative adds (1+b^2) D, so D - TP remains.
  const double inv_d2 = 1.0 / (denom * denom);
  const double lesion = (1.0 + b2) * (b2 * (o.tp + o.fn) + o.fp) * inv_d2;
  const double background = -numer * inv_d2;

  LossResult r;
  r.value = 1.0 - numer / denom;
  r.gradient.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    r.gradient[j] = -(g[j] ? lesion : background);
  }
  return r;
}

LossResult f_beta_loss_with_grad(const ProbabilityMap& p, const Mask& g,
                                 double beta) {
  check_dims(p, g);
  return f_beta_loss_with_grad(p.data(), g.data(), beta);
}

LossResult gdl_loss_with_grad(std::span<const double> p,
                              std::span<const std::uint8_t> g) {
  check_sizes(p, g);
  double lesion_volume = 0.0;
  for (auto v : g) lesion_volume += v;
  const double background_volume = static_cast<double>(g.size()) - lesion_volume;
  if (lesion_volume == 0.0 || background_volume == 0.0) {
    throw std::invalid_argument(
        "generalized Dice undefined: a class is absent from the ground truth");
  }
  const double w1 = 1.0 / (lesion_volume * lesion_volume);
  const double w0 = 1.0 / (background_volume * background_volume);

  double inter1 = 0.0, inter0 = 0.0, sum_p = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g[i];
    inter1 += p[i] * gi;
    inter0 += (1.0 - p[i]) * (1.0 - gi);
    sum_p += p[i];
  }
  const double n = static_cast<double>(p.size());
  const double numer = w1 * inter1 + w0 * inter0;
  const double denom =
      w1 * (sum_p + lesion_volume) + w0 * ((n - sum_p) + background_volume);

  LossResult r;
  r.value = 1.0 - 2.0 * numer / denom;
  // d(denom)/dp_j is the same for every voxel.
  const double d_denom = w1 - w0;
  const double scale = -2.0 / (denom * denom);
  r.gradient.resize(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double d_numer = g[j] ? w1 : -w0;
    r.gradient[j] = scale * (d_numer * denom - numer * d_denom);
  }
  return r;
}

LossResult gdl_loss_with_grad(const ProbabilityMap& p, const Mask& g) {
  check_dims(p, g);
  return gdl_loss_with_grad(p.data(), g.data());
}

LossResult focal_loss_with_grad(std::span<const double> p,
                                std::span<const std::uint8_t> g, double alpha,
                                double gamma) {
  check_sizes(p, g);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("focal alpha must lie in [0, 1]");
  }
  if (!(gamma >= 0.0)) throw std::invalid_argument("focal gamma must be >= 0");

  const double inv_n = 1.0 / static_cast<double>(p.size());
  LossResult r;
  r.gradient.resize(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool clamped = p[i] < kFocalEpsilon || p[i] > 1.0 - kFocalEpsilon;
    const double pi = std::clamp(p[i], kFocalEpsilon, 1.0 - kFocalEpsilon);
    // p_t and its derivative sign with respect to p.
    const double pt = g[i] ? pi : 1.0 - pi;
    const double dpt = g[i] ? 1.0 : -1.0;
    const double at = g[i] ? alpha : 1.0 - alpha;
    const double q = 1.0 - pt;
    const double log_pt = std::log(pt);
    const double modulator = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    total += -at * modulator * log_pt;
    if (clamped) {
      r.gradient[i] = 0.0;
      continue;
    }
    // d/dpt [-(1-pt)^gamma log pt] = gamma (1-pt)^(gamma-1) log pt
    //                                - (1-pt)^gamma / pt
    const double d_mod =
        gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * log_pt;
    r.gradient[i] = at * (d_mod - modulator / pt) * dpt * inv_n;
  }
  r.value = total * inv_n;
  return r;
}

LossResult focal_loss_with_grad(const ProbabilityMap& p, const Mask& g,
                                double alpha, double gamma) {
  check_dims(p, g);
  return focal_loss_with_grad(p.data(), g.data(), alpha, gamma);
}

LossResult loss_with_grad(const LossSpec& spec, std::span<const double> p,
                          std::span<const std::uint8_t> g) {
  switch (spec.kind()) {
    case LossKind::kFBeta:
      return f_beta_loss_with_grad(p, g, spec.beta());
    case LossKind::kGdl:
      return gdl_loss_with_grad(p, g);
    case LossKind::kFocal:
      return focal_loss_with_grad(p, g, spec.alpha(), spec.gamma());
  }
  throw std::logic_error("unhandled loss kind");
}

}  // namespace asymseg
