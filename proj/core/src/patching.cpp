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

#include "asymseg/patching.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asymseg/random.hpp"

namespace asymseg {
namespace {

std::int64_t round_up(std::int64_t n, std::int64_t m) {
  return (n + m - 1) / m * m;
}

// Copies the box of `grid` centered at `center` out of a channel-slowest
// buffer, zero outside `dims`.
template <typename T>
std::vector<T> copy_box(std::span<const T> src, const Dims& dims, int channels,
                        int size, const Index3& center) {
  const std::int64_t half = size / 2;
  const std::int64_t n = size;
  std::vector<T> out(static_cast<std::size_t>(channels * n * n * n), T{});
  const std::int64_t x0 = center.x - half;
  const std::int64_t y0 = center.y - half;
  const std::int64_t z0 = center.z - half;
  // Clip the z run once; x and y are checked per row.
  const std::int64_t zlo = std::max<std::int64_t>(0, -z0);
  const std::int64_t zhi = std::min<std::int64_t>(n, dims.nz - z0);
  for (int c = 0; c < channels; ++c) {
    const std::size_t src_base = static_cast<std::size_t>(c) * dims.count();
    const std::size_t dst_base = static_cast<std::size_t>(c * n * n * n);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t x = x0 + i;
      if (x < 0 || x >= dims.nx) continue;
      for (std::int64_t j = 0; j < n; ++j) {
        const std::int64_t y = y0 + j;
        if (y < 0 || y >= dims.ny) continue;
        for (std::int64_t k = zlo; k < zhi; ++k) {
          out[dst_base + static_cast<std::size_t>((i * n + j) * n + k)] =
              src[src_base + dims.index(x, y, z0 + k)];
        }
      }
    }
  }
  return out;
}

void require_on_lattice(const PatchGrid& grid, const Index3& c) {
  if (!grid.on_lattice(c)) {
    throw std::invalid_argument("patch center (" + std::to_string(c.x) + "," +
                                std::to_string(c.y) + "," +
                                std::to_string(c.z) +
                                ") is not on the grid lattice");
  }
}

}  // namespace

std::vector<Index3> PatchGrid::centers() const {
  std::vector<Index3> out;
  out.reserve(centers_per_augmentation());
  for (auto x : axis_centers_[0]) {
    for (auto y : axis_centers_[1]) {
      for (auto z : axis_centers_[2]) out.push_back({x, y, z});
    }
  }
  return out;
}

std::size_t PatchGrid::centers_per_augmentation() const {
  return axis_centers_[0].size() * axis_centers_[1].size() *
         axis_centers_[2].size();
}

bool PatchGrid::on_lattice(const Index3& c) const {
  const std::array<std::int64_t, 3> v{c.x, c.y, c.z};
  for (int a = 0; a < 3; ++a) {
    const auto& axis = axis_centers_[a];
    if (!std::binary_search(axis.begin(), axis.end(), v[a])) return false;
  }
  return true;
}

std::vector<int> PatchGrid::axis_coverage(int axis) const {
  const std::int64_t n = padded_dims_[axis];
  const std::int64_t half = patch_size_ / 2;
  std::vector<int> cover(static_cast<std::size_t>(n), 0);
  for (auto c : axis_centers_[axis]) {
    const std::int64_t lo = std::max<std::int64_t>(0, c - half);
    const std::int64_t hi = std::min<std::int64_t>(n, c - half + patch_size_);
    for (std::int64_t i = lo; i < hi; ++i) ++cover[static_cast<std::size_t>(i)];
  }
  return cover;
}

int PatchGrid::votes_at(const Index3& voxel) const {
  const std::array<std::int64_t, 3> v{voxel.x, voxel.y, voxel.z};
  const std::int64_t half = patch_size_ / 2;
  int votes = kNumAugmentations;
  for (int a = 0; a < 3; ++a) {
    int count = 0;
    for (auto c : axis_centers_[a]) {
      if (v[a] >= c - half && v[a] < c - half + patch_size_) ++count;
    }
    votes *= count;
  }
  return votes;
}

PatchGrid build_grid(const Dims& dims, int patch_size,
                     double overlap_fraction) {
  if (!dims.positive()) throw std::invalid_argument("grid dims must be > 0");
  if (patch_size <= 0) throw std::invalid_argument("patch size must be > 0");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw std::invalid_argument("overlap fraction must lie in [0, 1)");
  }
  const auto stride = static_cast<int>(
      std::lround(patch_size * (1.0 - overlap_fraction)));
  if (stride <= 0) {
    throw std::invalid_argument("stride rounds to zero for patch size " +
                                std::to_string(patch_size));
  }
  PatchGrid g;
  g.volume_dims_ = dims;
  g.patch_size_ = patch_size;
  g.stride_ = stride;
  g.origin_ = 0;
  std::array<std::int64_t, 3> padded{};
  for (int a = 0; a < 3; ++a) {
    padded[a] = round_up(dims[a], stride);
    if (patch_size > 2 * padded[a]) {
      throw std::invalid_argument(
          "patch size exceeds twice the padded axis length");
    }
    for (std::int64_t c = 0; c <= padded[a]; c += stride) {
      g.axis_centers_[a].push_back(c);
    }
  }
  g.padded_dims_ = {padded[0], padded[1], padded[2]};
  return g;
}

PatchGrid build_tiling_grid(const Dims& dims, int patch_size) {
  if (!dims.positive()) throw std::invalid_argument("grid dims must be > 0");
  if (patch_size <= 0) throw std::invalid_argument("patch size must be > 0");
  PatchGrid g;
  g.volume_dims_ = dims;
  g.patch_size_ = patch_size;
  g.stride_ = patch_size;
  g.origin_ = patch_size / 2;
  std::array<std::int64_t, 3> padded{};
  for (int a = 0; a < 3; ++a) {
    padded[a] = round_up(dims[a], patch_size);
    for (std::int64_t c = g.origin_; c < padded[a]; c += patch_size) {
      g.axis_centers_[a].push_back(c);
    }
  }
  g.padded_dims_ = {padded[0], padded[1], padded[2]};
  return g;
}

Patch extract_patch(const Volume& v, const PatchGrid& grid,
                    const Index3& center, int augmentation_id) {
  require_on_lattice(grid, center);
  if (v.dims() != grid.volume_dims()) {
    throw std::invalid_argument("volume dims do not match grid");
  }
  const int s = grid.patch_size();
  auto raw = copy_box(v.data(), v.dims(), v.channels(), s, center);
  auto cube = augment_cube<float>(raw, s, augmentation_id);
  return Patch{center, augmentation_id,
               Volume({s, s, s}, v.channels(), v.spacing(), std::move(cube))};
}

std::vector<std::uint8_t> extract_mask_patch(const Mask& g,
                                             const PatchGrid& grid,
                                             const Index3& center,
                                             int augmentation_id) {
  require_on_lattice(grid, center);
  if (g.dims() != grid.volume_dims()) {
    throw std::invalid_argument("mask dims do not match grid");
  }
  const int s = grid.patch_size();
  auto raw = copy_box(g.data(), g.dims(), 1, s, center);
  return augment_cube<std::uint8_t>(raw, s, augmentation_id);
}

std::vector<std::size_t> lesion_counts(const Mask& g, const PatchGrid& grid) {
  if (g.dims() != grid.volume_dims()) {
    throw std::invalid_argument("mask dims do not match grid");
  }
  const Dims& d = g.dims();
  // Summed-volume table with a zero border: sat(x,y,z) counts voxels in
  // [0,x) x [0,y) x [0,z).
  const Dims sd{d.nx + 1, d.ny + 1, d.nz + 1};
  std::vector<std::size_t> sat(sd.count(), 0);
  for (std::int64_t x = 1; x <= d.nx; ++x) {
    for (std::int64_t y = 1; y <= d.ny; ++y) {
      for (std::int64_t z = 1; z <= d.nz; ++z) {
        sat[sd.index(x, y, z)] =
            g.at(x - 1, y - 1, z - 1) + sat[sd.index(x - 1, y, z)] +
            sat[sd.index(x, y - 1, z)] + sat[sd.index(x, y, z - 1)] -
            sat[sd.index(x - 1, y - 1, z)] - sat[sd.index(x - 1, y, z - 1)] -
            sat[sd.index(x, y - 1, z - 1)] + sat[sd.index(x - 1, y - 1, z - 1)];
      }
    }
  }
  const std::int64_t half = grid.patch_size() / 2;
  auto clip = [&](std::int64_t v, int axis) {
    return std::clamp<std::int64_t>(v, 0, d[axis]);
  };
  std::vector<std::size_t> out;
  out.reserve(grid.centers_per_augmentation());
  for (const auto& c : grid.centers()) {
    const std::int64_t x0 = clip(c.x - half, 0);
    const std::int64_t x1 = clip(c.x - half + grid.patch_size(), 0);
    const std::int64_t y0 = clip(c.y - half, 1);
    const std::int64_t y1 = clip(c.y - half + grid.patch_size(), 1);
    const std::int64_t z0 = clip(c.z - half, 2);
    const std::int64_t z1 = clip(c.z - half + grid.patch_size(), 2);
    // Inclusion-exclusion in signed arithmetic.
    auto s = [&](std::int64_t x, std::int64_t y, std::int64_t z) {
      return static_cast<std::int64_t>(sat[sd.index(x, y, z)]);
    };
    const std::int64_t total = s(x1, y1, z1) - s(x0, y1, z1) - s(x1, y0, z1) -
                               s(x1, y1, z0) + s(x0, y0, z1) + s(x0, y1, z0) +
                               s(x1, y0, z0) - s(x0, y0, z0);
    out.push_back(static_cast<std::size_t>(total));
  }
  return out;
}

SelectionShortfall::SelectionShortfall(std::size_t qualifying,
                                       std::size_t quota)
    : std::runtime_error("only " + std::to_string(qualifying) +
                         " qualifying patches for a quota of " +
                         std::to_string(quota) + " (short by " +
                         std::to_string(quota - qualifying) + ")"),
      qualifying_(qualifying),
      quota_(quota) {}

std::vector<Index3> select_training_patches(const Mask& g,
                                            const PatchGrid& grid,
                                            std::size_t min_lesion_voxels,
                                            std::size_t quota,
                                            std::uint64_t seed) {
  const auto centers = grid.centers();
  const auto counts = lesion_counts(g, grid);
  std::vector<Index3> pool;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (counts[i] >= min_lesion_voxels) pool.push_back(centers[i]);
  }
  if (pool.size() < quota || (quota > 0 && pool.empty())) {
    throw SelectionShortfall(pool.size(), quota);
  }
  // Partial Fisher-Yates: the first `quota` slots are a uniform sample.
  Rng rng(seed);
  for (std::size_t i = 0; i < quota; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(quota);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace asymseg
