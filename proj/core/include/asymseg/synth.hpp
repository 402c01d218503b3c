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

// Synthetic multi-channel phantoms with ellipsoidal lesions.
//
// Every draw goes through asymseg::Rng (mt19937_64 with explicit
// conversions), so a SynthSpec maps to the same bytes on any platform with
// a conforming standard library and IEEE doubles.

#ifndef ASYMSEG_SYNTH_HPP_
#define ASYMSEG_SYNTH_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

#include "asymseg/volume.hpp"

namespace asymseg {

enum class LesionPreset { kLow, kMedium, kHigh };

LesionPreset parse_lesion_preset(std::string_view name);
std::string_view to_string(LesionPreset preset);

// Lesion fraction of a preset: min / mean / max lesion loads of the
// reference cohort (647 / 15,500 / 51,870 voxels) over a 128x224x256 grid.
double preset_lesion_fraction(LesionPreset preset);

struct SynthSpec {
  Dims dims{64, 64, 64};
  int channels = 2;
  Spacing spacing{};
  int min_lesions = 1;
  int max_lesions = 64;
  // Per-axis ellipsoid radii are drawn uniformly from this range (voxels).
  double min_radius = 1.0;
  double max_radius = 4.0;
  double lesion_fraction = 0.002;
  // Added to every lesion voxel; one entry per channel.
  std::vector<double> intensity_shift{2.0, 1.5};
  // Peak amplitude of the smooth background field.
  double background_amplitude = 0.5;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Spec for a preset on `dims`, with radii sized so a handful of lesions
// reach the preset's lesion fraction.
SynthSpec preset_spec(LesionPreset preset, const Dims& dims,
                      std::uint64_t seed);

struct SynthCase {
  Volume volume;
  Mask mask;
  std::size_t lesion_count = 0;

  double lesion_fraction() const {
    return static_cast<double>(mask.count()) /
           static_cast<double>(mask.dims().count());
  }
};

// Throws std::invalid_argument for an inconsistent spec and
// std::runtime_error when no realization lands within +-50% of the
// target lesion fraction after the resampling budget.
SynthCase generate(const SynthSpec& spec);

}  // namespace asymseg

#endif  // ASYMSEG_SYNTH_HPP_
