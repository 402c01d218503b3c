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

// Experiment configuration: one JSON document with the sections
// "seed", "threads", "synth", "train", "fusion", "metrics" and "sweep".
// Every key is optional; unknown keys are errors.

#ifndef ASYMSEG_TOOLS_CONFIG_HPP_
#define ASYMSEG_TOOLS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asymseg/fusion.hpp"
#include "asymseg/metrics.hpp"
#include "asymseg/model.hpp"
#include "asymseg/synth.hpp"
#include "json.hpp"

namespace asymseg::cli {

struct SynthSection {
  // When set, the preset fixes lesion_fraction and the radius range.
  std::optional<LesionPreset> preset;
  int cases = 4;
  SynthSpec spec;  // spec.seed is derived per case
};

struct FusionSection {
  FusionMode mode = FusionMode::kSpline;
  int patch_size = 16;
  double overlap = 0.5;
};

struct MetricsSection {
  double threshold = 0.5;
  int pr_thresholds = kDefaultPrThresholds;
};

struct SweepSection {
  std::vector<double> betas{1.0, 1.5, 3.0};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  SynthSection synth;
  TrainConfig train;  // train.seed mirrors seed
  FusionSection fusion;
  MetricsSection metrics;
  SweepSection sweep;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Resolved form with every field spelled out.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

// SynthSpec for case `index`, with the preset applied.
SynthSpec case_spec(const ExperimentConfig& cfg, int index);

}  // namespace asymseg::cli

#endif  // ASYMSEG_TOOLS_CONFIG_HPP_
