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

#ifndef ASYMSEG_TOOLS_COMMANDS_HPP_
#define ASYMSEG_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace asymseg::cli {

namespace fs = std::filesystem;

// Data directory layout: case_000/{volume.rvol,mask.rvol}, ...
std::vector<fs::path> list_cases(const fs::path& data_dir);
std::vector<LabeledVolume> load_cases(const std::vector<fs::path>& dirs);

void cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out_dir,
                  std::ostream& log);

// Writes the checkpoint, <model>.train_log.csv and <model>.config.json.
void cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir,
               const fs::path& model_out, std::ostream& log);

// Writes probability.rvol and mask.rvol (threshold from the config).
void cmd_predict(const ExperimentConfig& cfg, const fs::path& model,
                 const fs::path& volume, const fs::path& out_dir,
                 std::ostream& log);

// `prediction` is either a u8 mask or a one-channel probability map; a
// probability map is thresholded and also yields pr_curve.csv.
void cmd_evaluate(const ExperimentConfig& cfg, const fs::path& prediction,
                  const fs::path& truth, const std::optional<Spacing>& spacing,
                  const fs::path& out_dir, std::ostream& log);

// Trains one f_beta model per beta on all cases but the last, evaluates
// each on the last case with spline fusion and writes summary.csv.
void cmd_sweep_beta(const ExperimentConfig& cfg, const fs::path& data_dir,
                    const std::vector<double>& betas, const fs::path& out_dir,
                    std::ostream& log);

}  // namespace asymseg::cli

#endif  // ASYMSEG_TOOLS_COMMANDS_HPP_
