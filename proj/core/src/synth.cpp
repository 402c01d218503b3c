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

#include "asymseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "asymseg/patching.hpp"
#include "asymseg/random.hpp"

namespace asymseg {
namespace {

constexpr int kAttempts = 32;
constexpr int kPlacementsPerAttempt = 4000;
constexpr int kWaves = 3;
constexpr double kReferenceVoxels = 128.0 * 224.0 * 256.0;

std::vector<Index3> ellipsoid(const Index3& c, double rx, double ry,
                              double rz) {
  std::vector<Index3> out;
  const auto ex = static_cast<std::int64_t>(std::floor(rx));
  const auto ey = static_cast<std::int64_t>(std::floor(ry));
  const auto ez = static_cast<std::int64_t>(std::floor(rz));
  for (std::int64_t dx = -ex; dx <= ex; ++dx) {
    for (std::int64_t dy = -ey; dy <= ey; ++dy) {
      for (std::int64_t dz = -ez; dz <= ez; ++dz) {
        const double a = dx / rx, b = dy / ry, e = dz / rz;
        if (a * a + b * b + e * e <= 1.0) {
          out.push_back({c.x + dx, c.y + dy, c.z + dz});
        }
      }
    }
  }
  return out;
}

// True when any voxel of `shape`, or a 26-neighbour of it, is already set,
// so accepted lesions never merge into one component.
bool touches(const std::vector<std::uint8_t>& mask, const Dims& d,
             const std::vector<Index3>& shape) {
  for (const auto& v : shape) {
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const std::int64_t x = v.x + dx, y = v.y + dy, z = v.z + dz;
          if (d.contains(x, y, z) && mask[d.index(x, y, z)]) return true;
        }
      }
    }
  }
  return false;
}

void validate(const SynthSpec& s) {
  if (!s.dims.positive()) throw std::invalid_argument("synth dims must be > 0");
  if (s.channels <= 0) throw std::invalid_argument("synth channels must be > 0");
  if (s.intensity_shift.size() != static_cast<std::size_t>(s.channels)) {
    throw std::invalid_argument(
        "intensity_shift needs one entry per channel");
  }
  if (!(s.min_radius >= 1.0) || !(s.max_radius >= s.min_radius)) {
    throw std::invalid_argument("radius range must satisfy 1 <= min <= max");
  }
  if (s.min_lesions < 0 || s.max_lesions < std::max(1, s.min_lesions)) {
    throw std::invalid_argument("lesion count range is empty");
  }
  if (!(s.lesion_fraction > 0.0 && s.lesion_fraction < 1.0)) {
    throw std::invalid_argument("lesion fraction must lie in (0, 1)");
  }
  if (!(s.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma < 0");
  const auto reach = static_cast<std::int64_t>(std::ceil(s.max_radius)) + 1;
  for (int a = 0; a < 3; ++a) {
    if (2 * reach + 1 > s.dims[a]) {
      throw std::invalid_argument("ellipsoids of radius " +
                                  std::to_string(s.max_radius) +
                                  " do not fit inside " + to_string(s.dims));
    }
  }
}

// Lesion layout for one attempt. Returns the number of lesions placed.
std::size_t place_lesions(const SynthSpec& s, Rng& rng, double target,
                          std::vector<std::uint8_t>& mask) {
  const Dims& d = s.dims;
  const auto reach = static_cast<std::int64_t>(std::ceil(s.max_radius)) + 1;
  std::size_t total = 0;
  std::size_t count = 0;
  for (int i = 0; i < kPlacementsPerAttempt; ++i) {
    if (count >= static_cast<std::size_t>(s.max_lesions)) break;
    if (static_cast<double>(total) >= target &&
        count >= static_cast<std::size_t>(s.min_lesions)) {
      break;
    }
    const double rx = rng.uniform(s.min_radius, s.max_radius);
    const double ry = rng.uniform(s.min_radius, s.max_radius);
    const double rz = rng.uniform(s.min_radius, s.max_radius);
    const Index3 c{
        reach + static_cast<std::int64_t>(rng.below(
                    static_cast<std::uint64_t>(d.nx - 2 * reach))),
        reach + static_cast<std::int64_t>(rng.below(
                    static_cast<std::uint64_t>(d.ny - 2 * reach))),
        reach + static_cast<std::int64_t>(rng.below(
                    static_cast<std::uint64_t>(d.nz - 2 * reach)))};
    const auto shape = ellipsoid(c, rx, ry, rz);
    if (static_cast<double>(total + shape.size()) > 1.5 * target) continue;
    if (touches(mask, d, shape)) continue;
    for (const auto& v : shape) mask[d.index(v.x, v.y, v.z)] = 1;
    total += shape.size();
    ++count;
  }
  return count;
}

}  // namespace

LesionPreset parse_lesion_preset(std::string_view name) {
  if (name == "low") return LesionPreset::kLow;
  if (name == "medium") return LesionPreset::kMedium;
  if (name == "high") return LesionPreset::kHigh;
  throw std::invalid_argument("unknown preset '" + std::string(name) +
                              "' (valid presets: low, medium, high)");
}

std::string_view to_string(LesionPreset preset) {
  switch (preset) {
    case LesionPreset::kLow:
      return "low";
    case LesionPreset::kMedium:
      return "medium";
    case LesionPreset::kHigh:
      return "high";
  }
  return "unknown";
}

double preset_lesion_fraction(LesionPreset preset) {
  switch (preset) {
    case LesionPreset::kLow:
      return 647.0 / kReferenceVoxels;
    case LesionPreset::kMedium:
      return 15500.0 / kReferenceVoxels;
    case LesionPreset::kHigh:
      return 51870.0 / kReferenceVoxels;
  }
  throw std::logic_error("unhandled preset");
}

SynthSpec preset_spec(LesionPreset preset, const Dims& dims,
                      std::uint64_t seed) {
  SynthSpec s;
  s.dims = dims;
  s.seed = seed;
  s.lesion_fraction = preset_lesion_fraction(preset);
  // One lesion of the largest radius holds about a third of the target.
  const double target = s.lesion_fraction * static_cast<double>(dims.count());
  const double r = std::cbrt(target / (4.0 * std::numbers::pi));
  s.max_radius = std::clamp(r, 1.0, 8.0);
  s.min_radius = std::max(1.0, 0.5 * s.max_radius);
  return s;
}

SynthCase generate(const SynthSpec& s) {
  validate(s);
  const Dims& d = s.dims;
  const std::size_t n = d.count();
  const double target = s.lesion_fraction * static_cast<double>(n);
  if (target < 1.0) {
    throw std::invalid_argument("lesion fraction targets less than one voxel");
  }

  Rng rng(s.seed);
  std::vector<std::uint8_t> mask;
  std::size_t lesions = 0;
  bool ok = false;
  for (int attempt = 0; attempt < kAttempts && !ok; ++attempt) {
    mask.assign(n, 0);
    lesions = place_lesions(s, rng, target, mask);
    const auto realized =
        static_cast<double>(std::count(mask.begin(), mask.end(), 1));
    ok = std::abs(realized - target) <= 0.5 * target &&
         lesions >= static_cast<std::size_t>(s.min_lesions);
  }
  if (!ok) {
    throw std::runtime_error(
        "could not realize lesion fraction " +
        std::to_string(s.lesion_fraction) + " within +-50% using radii [" +
        std::to_string(s.min_radius) + ", " + std::to_string(s.max_radius) +
        "] after " + std::to_string(kAttempts) + " attempts");
  }

  std::vector<float> data(static_cast<std::size_t>(s.channels) * n);
  for (int c = 0; c < s.channels; ++c) {
    // Smooth field: a few low-frequency plane waves.
    struct Wave {
      double kx, ky, kz, phase;
    };
    std::vector<Wave> waves;
    for (int w = 0; w < kWaves; ++w) {
      Wave wave{static_cast<double>(rng.below(3)),
                static_cast<double>(rng.below(3)),
                static_cast<double>(rng.below(3)),
                rng.uniform(0.0, 2.0 * std::numbers::pi)};
      waves.push_back(wave);
    }
    const double amp = s.background_amplitude / kWaves;
    const double shift = s.intensity_shift[static_cast<std::size_t>(c)];
    const std::size_t base = static_cast<std::size_t>(c) * n;
    for (std::int64_t x = 0; x < d.nx; ++x) {
      for (std::int64_t y = 0; y < d.ny; ++y) {
        for (std::int64_t z = 0; z < d.nz; ++z) {
          double v = 0.0;
          for (const auto& w : waves) {
            v += amp * std::sin(2.0 * std::numbers::pi *
                                    (w.kx * x / d.nx + w.ky * y / d.ny +
                                     w.kz * z / d.nz) +
                                w.phase);
          }
          if (s.noise_sigma > 0.0) v += s.noise_sigma * rng.normal();
          const std::size_t i = d.index(x, y, z);
          if (mask[i]) v += shift;
          data[base + i] = static_cast<float>(v);
        }
      }
    }
  }
  return SynthCase{Volume(d, s.channels, s.spacing, std::move(data)),
                   Mask(d, std::move(mask)), lesions};
}

}  // namespace asymseg
