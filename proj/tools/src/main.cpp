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

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using namespace asymseg;
using namespace asymseg::cli;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  if (g.threads) {
    if (*g.threads < 1) throw ConfigError("--threads must be >= 1");
    cfg.threads = *g.threads;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imbalanced 3D lesion segmentation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed; overrides the config");
  app.add_option("--threads", g.threads, "Worker threads for inference");

  std::string out_dir, data_dir, model, volume, prediction, truth, fusion;
  std::vector<double> spacing, betas;
  std::string preset;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic cases");
  gen->add_option("out_dir", out_dir)->required();
  gen->add_option("--preset", preset, "Lesion load preset: low, medium, high");

  auto* tr = app.add_subcommand("train", "Train a model on a data directory");
  tr->add_option("data_dir", data_dir)->required();
  tr->add_option("model_out", model)->required();

  auto* pr = app.add_subcommand("predict", "Patch-wise inference");
  pr->add_option("model", model)->required()->check(CLI::ExistingFile);
  pr->add_option("volume", volume)->required()->check(CLI::ExistingFile);
  pr->add_option("out_dir", out_dir)->required();
  pr->add_option("--fusion", fusion, "tiling, uniform or spline");

  auto* ev = app.add_subcommand("evaluate", "Score a prediction");
  ev->add_option("prediction", prediction, "Mask or probability map")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("truth", truth)->required()->check(CLI::ExistingFile);
  ev->add_option("out_dir", out_dir)->required();
  ev->add_option("--spacing", spacing, "Voxel spacing in mm (3 values)")
      ->expected(3)
      ->delimiter(',');

  auto* sw = app.add_subcommand("sweep-beta", "F-beta sweep with a held-out case");
  sw->add_option("data_dir", data_dir)->required();
  sw->add_option("out_dir", out_dir)->required();
  sw->add_option("--betas", betas, "Comma-separated beta values")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = resolve(g);
    if (*gen) {
      if (!preset.empty()) cfg.synth.preset = parse_lesion_preset(preset);
      cmd_gen_data(cfg, out_dir, std::cout);
    } else if (*tr) {
      cmd_train(cfg, data_dir, model, std::cout);
    } else if (*pr) {
      if (!fusion.empty()) cfg.fusion.mode = parse_fusion_mode(fusion);
      cmd_predict(cfg, model, volume, out_dir, std::cout);
    } else if (*ev) {
      std::optional<Spacing> sp;
      if (!spacing.empty()) sp = Spacing{spacing[0], spacing[1], spacing[2]};
      cmd_evaluate(cfg, prediction, truth, sp, out_dir, std::cout);
    } else if (*sw) {
      cmd_sweep_beta(cfg, data_dir, betas.empty() ? cfg.sweep.betas : betas,
                     out_dir, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
