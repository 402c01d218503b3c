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

// Overlapping cubic patch lattice, patch extraction with 180 degree
// rotation augmentation, and lesion-aware training patch selection.
//
// A patch with center c and size S covers the half-open box
// [c - S/2, c + S/2) on every axis. Reads outside the volume are zero.

#ifndef ASYMSEG_PATCHING_HPP_
#define ASYMSEG_PATCHING_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "asymseg/volume.hpp"

namespace asymseg {

struct Index3 {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
  friend auto operator<=>(const Index3&, const Index3&) = default;
};

// Augmentation ids: 0 identity, 1/2/3 a 180 degree rotation about the
// x/y/z axis (reverses the two other axes). Every transform is its own
// inverse.
inline constexpr int kNumAugmentations = 4;

constexpr int inverse_augmentation(int id) { return id; }

// Applies augmentation `id` to a multi-channel cube of edge `size` laid out
// channel-slowest then x, y, z.
template <typename T>
std::vector<T> augment_cube(std::span<const T> cube, int size, int id) {
  const std::size_t n = static_cast<std::size_t>(size);
  const std::size_t per_channel = n * n * n;
  if (per_channel == 0 || cube.size() % per_channel != 0) {
    throw std::invalid_argument("cube length is not a multiple of size^3");
  }
  if (id < 0 || id >= kNumAugmentations) {
    throw std::invalid_argument("augmentation id must be in 0..3");
  }
  if (id == 0) return std::vector<T>(cube.begin(), cube.end());
  const bool flip_x = id != 1;
  const bool flip_y = id != 2;
  const bool flip_z = id != 3;
  std::vector<T> out(cube.size());
  for (std::size_t base = 0; base < cube.size(); base += per_channel) {
    for (std::size_t x = 0; x < n; ++x) {
      const std::size_t sx = flip_x ? n - 1 - x : x;
      for (std::size_t y = 0; y < n; ++y) {
        const std::size_t sy = flip_y ? n - 1 - y : y;
        for (std::size_t z = 0; z < n; ++z) {
          const std::size_t sz = flip_z ? n - 1 - z : z;
          out[base + (x * n + y) * n + z] = cube[base + (sx * n + sy) * n + sz];
        }
      }
    }
  }
  return out;
}

class PatchGrid {
 public:
  const Dims& volume_dims() const { return volume_dims_; }
  // Volume dims rounded up to a multiple of the stride.
  const Dims& padded_dims() const { return padded_dims_; }
  int patch_size() const { return patch_size_; }
  int stride() const { return stride_; }
  // First center on every axis: 0 for overlap lattices, S/2 for tilings.
  int origin() const { return origin_; }

  std::span<const std::int64_t> axis_centers(int axis) const {
    return axis_centers_[axis];
  }
  // All centers, x slowest.
  std::vector<Index3> centers() const;
  std::size_t centers_per_augmentation() const;
  std::size_t total_patches() const {
    return centers_per_augmentation() * kNumAugmentations;
  }
  bool on_lattice(const Index3& c) const;

  // Number of patch extents covering each voxel index along one axis.
  std::vector<int> axis_coverage(int axis) const;
  // Predictions per voxel over all centers and augmentations.
  int votes_at(const Index3& voxel) const;

 private:
  friend PatchGrid build_grid(const Dims&, int, double);
  friend PatchGrid build_tiling_grid(const Dims&, int);

  Dims volume_dims_;
  Dims padded_dims_;
  int patch_size_ = 0;
  int stride_ = 0;
  int origin_ = 0;
  std::array<std::vector<std::int64_t>, 3> axis_centers_;
};

// Boundary-inclusive lattice: stride t = round(S * (1 - overlap)), each
// axis padded to a multiple L of t, centers at 0, t, ..., L.
PatchGrid build_grid(const Dims& dims, int patch_size, double overlap_fraction);

// Non-overlapping tiling: centers at S/2 + k S, k = 0 .. ceil(n/S) - 1.
PatchGrid build_tiling_grid(const Dims& dims, int patch_size);

struct Patch {
  Index3 center;
  int augmentation_id = 0;
  // S^3 per channel, already augmented.
  Volume data;
};

Patch extract_patch(const Volume& v, const PatchGrid& grid,
                    const Index3& center, int augmentation_id);

// Ground-truth labels of the same box, with the same augmentation.
std::vector<std::uint8_t> extract_mask_patch(const Mask& g,
                                             const PatchGrid& grid,
                                             const Index3& center,
                                             int augmentation_id);

// Lesion voxel count inside every center's patch (order of centers()).
std::vector<std::size_t> lesion_counts(const Mask& g, const PatchGrid& grid);

inline constexpr std::size_t kDefaultMinLesionVoxels = 10;

class SelectionShortfall : public std::runtime_error {
 public:
  SelectionShortfall(std::size_t qualifying, std::size_t quota);
  std::size_t qualifying() const { return qualifying_; }
  std::size_t quota() const { return quota_; }

 private:
  std::size_t qualifying_;
  std::size_t quota_;
};

// Exactly `quota` distinct centers whose patch holds at least
// `min_lesion_voxels` lesion voxels, sampled uniformly without replacement.
// Returned in lattice order. Throws SelectionShortfall when fewer qualify.
std::vector<Index3> select_training_patches(const Mask& g,
                                            const PatchGrid& grid,
                                            std::size_t min_lesion_voxels,
                                            std::size_t quota,
                                            std::uint64_t seed);

}  // namespace asymseg

#endif  // ASYMSEG_PATCHING_HPP_
