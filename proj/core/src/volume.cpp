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

#include "asymseg/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace asymseg {
namespace {

constexpr std::size_t kMaxHeaderBytes = 4096;

void check_spacing(const Spacing& s) {
  for (double v : {s.sx, s.sy, s.sz}) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw std::invalid_argument("spacing components must be finite and > 0");
    }
  }
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) |
           (v >> 24);
  }
  return v;
}

void write_header(std::ostream& out, const RvolHeader& h) {
  nlohmann::ordered_json j;
  j["dims"] = {h.dims.nx, h.dims.ny, h.dims.nz};
  j["channels"] = h.channels;
  j["spacing"] = {h.spacing.sx, h.spacing.sy, h.spacing.sz};
  j["dtype"] = h.dtype;
  out << j.dump() << '\n';
}

RvolHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  char ch = 0;
  while (in.get(ch) && ch != '\n') {
    line.push_back(ch);
    if (line.size() > kMaxHeaderBytes) break;
  }
  if (ch != '\n') {
    throw std::runtime_error("malformed RVOL header (no newline): " +
                             path.string());
  }
  RvolHeader h;
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object() || j.size() != 4) {
      throw std::runtime_error("expected exactly dims/channels/spacing/dtype");
    }
    const auto& dims = j.at("dims");
    const auto& sp = j.at("spacing");
    if (dims.size() != 3 || sp.size() != 3) {
      throw std::runtime_error("dims and spacing need 3 entries");
    }
    h.dims = {dims[0].get<std::int64_t>(), dims[1].get<std::int64_t>(),
              dims[2].get<std::int64_t>()};
    h.channels = j.at("channels").get<int>();
    h.spacing = {sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    h.dtype = j.at("dtype").get<std::string>();
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed RVOL header in " + path.string() +
                             ": " + e.what());
  }
  if (!h.dims.positive() || h.channels <= 0) {
    throw std::runtime_error("malformed RVOL header in " + path.string() +
                             ": dims and channels must be positive");
  }
  if (h.dtype != "f32le" && h.dtype != "u8") {
    throw std::runtime_error("unsupported RVOL dtype '" + h.dtype + "' in " +
                             path.string());
  }
  try {
    check_spacing(h.spacing);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("malformed RVOL header in " + path.string() +
                             ": " + e.what());
  }
  return h;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<char> read_rest(std::istream& in) {
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void length_error(const std::filesystem::path& path, std::size_t got,
                  std::size_t want) {
  throw std::runtime_error("RVOL data-length mismatch in " + path.string() +
                           ": payload has " + std::to_string(got) +
                           " bytes, header declares " + std::to_string(want));
}

std::vector<float> read_f32(std::istream& in, const std::filesystem::path& path,
                            std::size_t n) {
  const auto bytes = read_rest(in);
  if (bytes.size() != n * 4) length_error(path, bytes.size(), n * 4);
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t u;
    std::memcpy(&u, bytes.data() + 4 * i, 4);
    u = to_little_endian(u);
    std::memcpy(&out[i], &u, 4);
    if (!std::isfinite(out[i])) {
      throw std::runtime_error("non-finite value at index " +
                               std::to_string(i) + " in " + path.string());
    }
  }
  return out;
}

void write_f32(std::ostream& out, std::span<const float> data) {
  std::vector<char> bytes(data.size() * 4);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t u;
    std::memcpy(&u, &data[i], 4);
    u = to_little_endian(u);
    std::memcpy(bytes.data() + 4 * i, &u, 4);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string to_string(const Dims& d) {
  std::ostringstream os;
  os << '(' << d.nx << ',' << d.ny << ',' << d.nz << ')';
  return os.str();
}

Volume::Volume(Dims dims, int channels, Spacing spacing,
               std::vector<float> data)
    : dims_(dims), channels_(channels), spacing_(spacing),
      data_(std::move(data)) {
  if (!dims_.positive() || channels_ <= 0) {
    throw std::invalid_argument("volume dims and channels must be positive");
  }
  check_spacing(spacing_);
  if (data_.size() != static_cast<std::size_t>(channels_) * dims_.count()) {
    throw std::invalid_argument("volume data length " +
                                std::to_string(data_.size()) +
                                " does not match C*nx*ny*nz");
  }
  if (!std::all_of(data_.begin(), data_.end(),
                   [](float v) { return std::isfinite(v); })) {
    throw std::invalid_argument("volume contains non-finite values");
  }
}

Volume::Volume(Dims dims, int channels, Spacing spacing)
    : Volume(dims, channels, spacing,
             std::vector<float>(
                 static_cast<std::size_t>(std::max(channels, 0)) *
                     (dims.positive() ? dims.count() : 0),
                 0.0f)) {}

std::span<const float> Volume::channel(int c) const {
  if (c < 0 || c >= channels_) throw std::out_of_range("channel index");
  return std::span<const float>(data_).subspan(
      static_cast<std::size_t>(c) * dims_.count(), dims_.count());
}

Mask::Mask(Dims dims) : Mask(dims, std::vector<std::uint8_t>(dims.count())) {}

Mask::Mask(Dims dims, std::vector<std::uint8_t> data)
    : dims_(dims), data_(std::move(data)) {
  if (!dims_.positive()) throw std::invalid_argument("mask dims must be > 0");
  if (data_.size() != dims_.count()) {
    throw std::invalid_argument("mask data length does not match dims");
  }
  if (!std::all_of(data_.begin(), data_.end(),
                   [](std::uint8_t v) { return v <= 1; })) {
    throw std::invalid_argument("mask values must be 0 or 1");
  }
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

ProbabilityMap::ProbabilityMap(Dims dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  if (!dims_.positive()) {
    throw std::invalid_argument("probability map dims must be > 0");
  }
  if (data_.size() != dims_.count()) {
    throw std::invalid_argument("probability data length does not match dims");
  }
  if (!std::all_of(data_.begin(), data_.end(),
                   [](double v) { return v >= 0.0 && v <= 1.0; })) {
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  }
}

ProbabilityMap::ProbabilityMap(Dims dims, double value)
    : ProbabilityMap(dims, std::vector<double>(dims.count(), value)) {}

Mask threshold(const ProbabilityMap& p, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("threshold must lie in [0, 1]");
  }
  std::vector<std::uint8_t> out(p.data().size());
  std::transform(p.data().begin(), p.data().end(), out.begin(),
                 [t](double v) { return static_cast<std::uint8_t>(v >= t); });
  return Mask(p.dims(), std::move(out));
}

RvolHeader read_rvol_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_header(in, path);
}

Volume load_volume(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  if (h.dtype != "f32le") {
    throw std::runtime_error("expected dtype f32le in " + path.string());
  }
  auto data = read_f32(in, path,
                       static_cast<std::size_t>(h.channels) * h.dims.count());
  return Volume(h.dims, h.channels, h.spacing, std::move(data));
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_header(out, {v.dims(), v.channels(), v.spacing(), "f32le"});
  write_f32(out, v.data());
  finish(out, path);
}

Mask load_mask(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto h = parse_header(in, path);
  if (h.dtype != "u8" || h.channels != 1) {
    throw std::runtime_error("expected single-channel u8 mask in " +
                             path.string());
  }
  const auto bytes = read_rest(in);
  if (bytes.size() != h.dims.count()) {
    length_error(path, bytes.size(), h.dims.count());
  }
  std::vector<std::uint8_t> data(bytes.begin(), bytes.end());
  try {
    return Mask(h.dims, std::move(data));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_mask(const Mask& m, const std::filesystem::path& path,
               const Spacing& spacing) {
  auto out = open_out(path);
  write_header(out, {m.dims(), 1, spacing, "u8"});
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size()));
  finish(out, path);
}

ProbabilityMap load_probability_map(const std::filesystem::path& path) {
  const auto v = load_volume(path);
  if (v.channels() != 1) {
    throw std::runtime_error("probability map must have 1 channel: " +
                             path.string());
  }
  std::vector<double> data(v.data().begin(), v.data().end());
  try {
    return ProbabilityMap(v.dims(), std::move(data));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_probability_map(const ProbabilityMap& p,
                          const std::filesystem::path& path,
                          const Spacing& spacing) {
  std::vector<float> data(p.data().begin(), p.data().end());
  save_volume(Volume(p.dims(), 1, spacing, std::move(data)), path);
}

}  // namespace asymseg
