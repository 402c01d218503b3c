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

#ifndef ASYMSEG_VOLUME_HPP_
#define ASYMSEG_VOLUME_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace asymseg {

// Voxel counts along x, y, z. Linear order is x slowest, z fastest.
struct Dims {
  std::int64_t nx = 0;
  std::int64_t ny = 0;
  std::int64_t nz = 0;

  constexpr std::size_t count() const {
    return static_cast<std::size_t>(nx * ny * nz);
  }
  constexpr std::size_t index(std::int64_t x, std::int64_t y,
                              std::int64_t z) const {
    return static_cast<std::size_t>((x * ny + y) * nz + z);
  }
  constexpr bool contains(std::int64_t x, std::int64_t y,
                          std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
  }
  constexpr std::int64_t operator[](int axis) const {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  bool positive() const { return nx > 0 && ny > 0 && nz > 0; }

  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

// Physical voxel size in millimetres.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  friend bool operator==(const Spacing&, const Spacing&) = default;
};

// Multi-channel scalar image. Channel is the slowest axis of the payload.
class Volume {
 public:
  Volume(Dims dims, int channels, Spacing spacing, std::vector<float> data);
  // All-zero volume.
  Volume(Dims dims, int channels, Spacing spacing = {});

  const Dims& dims() const { return dims_; }
  int channels() const { return channels_; }
  const Spacing& spacing() const { return spacing_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> channel(int c) const;

  float at(int c, std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[static_cast<std::size_t>(c) * dims_.count() +
                 dims_.index(x, y, z)];
  }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Dims dims_;
  int channels_;
  Spacing spacing_;
  std::vector<float> data_;
};

// Binary voxel grid; every value is exactly 0 or 1.
class Mask {
 public:
  explicit Mask(Dims dims);
  Mask(Dims dims, std::vector<std::uint8_t> data);

  const Dims& dims() const { return dims_; }
  std::span<const std::uint8_t> data() const { return data_; }
  std::uint8_t operator[](std::size_t i) const { return data_[i]; }
  std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[dims_.index(x, y, z)];
  }
  // Number of voxels set to 1.
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  Dims dims_;
  std::vector<std::uint8_t> data_;
};

// Per-voxel lesion probability in [0, 1].
class ProbabilityMap {
 public:
  ProbabilityMap(Dims dims, std::vector<double> data);
  // Constant map.
  ProbabilityMap(Dims dims, double value);

  const Dims& dims() const { return dims_; }
  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return data_[dims_.index(x, y, z)];
  }

  friend bool operator==(const ProbabilityMap&,
                         const ProbabilityMap&) = default;

 private:
  Dims dims_;
  std::vector<double> data_;
};

// Voxel is 1 iff p >= t.
Mask threshold(const ProbabilityMap& p, double t);

// RVOL file IO. A single JSON header line followed by the raw payload:
//   {"dims":[nx,ny,nz],"channels":C,"spacing":[sx,sy,sz],"dtype":"f32le"}
// Masks use dtype "u8". Payload is little-endian regardless of host.
struct RvolHeader {
  Dims dims;
  int channels = 1;
  Spacing spacing;
  std::string dtype;
};

RvolHeader read_rvol_header(const std::filesystem::path& path);

Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path);

Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& m, const std::filesystem::path& path,
               const Spacing& spacing = {});

// Probability maps are stored as single-channel f32le volumes, so the
// round trip is exact only for values representable in float.
ProbabilityMap load_probability_map(const std::filesystem::path& path);
void save_probability_map(const ProbabilityMap& p,
                          const std::filesystem::path& path,
                          const Spacing& spacing = {});

}  // namespace asymseg

#endif  // ASYMSEG_VOLUME_HPP_
