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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "asymseg/metrics.hpp"

namespace asymseg::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(const std::optional<double>& v) {
  return v ? num(*v) : std::string("null");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_config(const ExperimentConfig& cfg, const fs::path& path) {
  write_text(path, to_json(cfg).dump(2) + "\n");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create directory " + dir.string());
  }
}

PatchGrid inference_grid(const ExperimentConfig& cfg, const Dims& dims) {
  return cfg.fusion.mode == FusionMode::kTiling
             ? build_tiling_grid(dims, cfg.fusion.patch_size)
             : build_grid(dims, cfg.fusion.patch_size, cfg.fusion.overlap);
}

// Values as they will be stored on disk, so the saved mask and the saved
// probability map threshold identically.
ProbabilityMap as_stored(const ProbabilityMap& p) {
  std::vector<double> v(p.data().size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<float>(p.data()[i]);
  }
  return ProbabilityMap(p.dims(), std::move(v));
}

}  // namespace

std::vector<fs::path> list_cases(const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) {
    throw std::runtime_error("data directory not found: " + data_dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(data_dir)) {
    if (e.is_directory() && e.path().filename().string().rfind("case_", 0) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) {
    throw std::runtime_error("no case_* directories in " + data_dir.string());
  }
  return out;
}

std::vector<LabeledVolume> load_cases(const std::vector<fs::path>& dirs) {
  std::vector<LabeledVolume> out;
  for (const auto& dir : dirs) {
    const auto vol = dir / "volume.rvol";
    const auto mask = dir / "mask.rvol";
    if (!fs::exists(vol)) {
      throw std::runtime_error("missing volume file " + vol.string());
    }
    if (!fs::exists(mask)) {
      throw std::runtime_error("missing mask file " + mask.string());
    }
    out.push_back({load_volume(vol), load_mask(mask)});
  }
  return out;
}

void cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out_dir,
                  std::ostream& log) {
  ensure_dir(out_dir);
  for (int i = 0; i < cfg.synth.cases; ++i) {
    const auto spec = case_spec(cfg, i);
    const auto c = generate(spec);
    char name[32];
    std::snprintf(name, sizeof name, "case_%03d", i);
    const auto dir = out_dir / name;
    ensure_dir(dir);
    save_volume(c.volume, dir / "volume.rvol");
    save_mask(c.mask, dir / "mask.rvol", spec.spacing);
    log << name << " lesions=" << c.lesion_count
        << " lesion_voxels=" << c.mask.count()
        << " lesion_fraction=" << num(c.lesion_fraction()) << "\n";
  }
  write_config(cfg, out_dir / "config.json");
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir,
               const fs::path& model_out, std::ostream& log) {
  const auto data = load_cases(list_cases(data_dir));
  const auto result = train(data, cfg.train);
  if (model_out.has_parent_path()) ensure_dir(model_out.parent_path());
  save_model(result.model, model_out);

  std::string csv = "step,lr,loss\n";
  for (const auto& e : result.log) {
    csv += std::to_string(e.step) + "," + num(e.lr) + "," + num(e.loss) + "\n";
  }
  write_text(model_out.string() + ".train_log.csv", csv);
  write_config(cfg, model_out.string() + ".config.json");
  if (!result.log.empty()) {
    log << "trained " << data.size() << " volumes for " << result.log.size()
        << " steps; loss " << num(result.log.front().loss) << " -> "
        << num(result.log.back().loss) << "\n";
  }
}

void cmd_predict(const ExperimentConfig& cfg, const fs::path& model,
                 const fs::path& volume, const fs::path& out_dir,
                 std::ostream& log) {
  const auto m = load_model(model);
  const auto v = load_volume(volume);
  if (m.channels() != v.channels()) {
    throw std::runtime_error("model expects " + std::to_string(m.channels()) +
                             " channels, volume has " +
                             std::to_string(v.channels()));
  }
  const auto grid = inference_grid(cfg, v.dims());
  const auto prob = as_stored(predict(m, v, grid, cfg.fusion.mode, cfg.threads));
  const auto mask = threshold(prob, cfg.metrics.threshold);
  ensure_dir(out_dir);
  save_probability_map(prob, out_dir / "probability.rvol", v.spacing());
  save_mask(mask, out_dir / "mask.rvol", v.spacing());
  write_config(cfg, out_dir / "config.json");
  log << "predicted " << to_string(v.dims()) << " with "
      << to_string(cfg.fusion.mode) << " fusion; " << mask.count()
      << " voxels above " << num(cfg.metrics.threshold) << "\n";
}

void cmd_evaluate(const ExperimentConfig& cfg, const fs::path& prediction,
                  const fs::path& truth, const std::optional<Spacing>& spacing,
                  const fs::path& out_dir, std::ostream& log) {
  const auto header = read_rvol_header(prediction);
  const auto gt = load_mask(truth);
  const Spacing sp = spacing ? *spacing : read_rvol_header(truth).spacing;
  std::optional<ProbabilityMap> prob;
  if (header.dtype != "u8") prob = load_probability_map(prediction);
  const Mask pred =
      prob ? threshold(*prob, cfg.metrics.threshold) : load_mask(prediction);
  if (pred.dims() != gt.dims()) {
    throw std::runtime_error("dimension mismatch: prediction " +
                             to_string(pred.dims()) + ", ground truth " +
                             to_string(gt.dims()));
  }
  // The PR curve is undefined without lesions in the ground truth.
  const bool with_pr = prob && gt.count() > 0;
  const auto report = evaluate(pred, gt, sp, with_pr ? &*prob : nullptr,
                               cfg.metrics.pr_thresholds);
  ensure_dir(out_dir);
  write_text(out_dir / "metrics.json", to_json(report));
  write_text(out_dir / "metrics.csv", to_csv(report));
  if (with_pr) {
    write_text(out_dir / "pr_curve.csv", pr_curve_csv(report.pr_curve));
  }
  write_config(cfg, out_dir / "config.json");
  log << "dsc=" << num(report.dsc) << " tpr=" << num(report.tpr)
      << " ppv=" << num(report.ppv) << " apr=" << num(report.apr) << "\n";
}

void cmd_sweep_beta(const ExperimentConfig& cfg, const fs::path& data_dir,
                    const std::vector<double>& betas, const fs::path& out_dir,
                    std::ostream& log) {
  if (betas.size() < 2) {
    throw std::invalid_argument("sweep-beta needs at least two beta values");
  }
  const auto dirs = list_cases(data_dir);
  if (dirs.size() < 2) {
    throw std::invalid_argument(
        "sweep-beta needs at least two cases (the last one is held out)");
  }
  auto data = load_cases(dirs);
  const LabeledVolume test = std::move(data.back());
  data.pop_back();
  const auto grid = build_grid(test.volume.dims(), cfg.fusion.patch_size,
                               cfg.fusion.overlap);

  ensure_dir(out_dir);
  std::string csv = "beta,dsc,sensitivity,specificity,f2,apr\n";
  for (double beta : betas) {
    TrainConfig tc = cfg.train;
    tc.loss = LossSpec::f_beta(beta);
    const auto model = train(data, tc).model;
    const auto prob =
        predict(model, test.volume, grid, FusionMode::kSpline, cfg.threads);
    const auto pred = threshold(prob, cfg.metrics.threshold);
    const auto r = evaluate(pred, test.mask, test.volume.spacing(), &prob,
                            cfg.metrics.pr_thresholds);
    const std::string row = num(beta) + "," + num(r.dsc) + "," + num(r.tpr) +
                            "," + num(r.specificity) + "," + num(r.f2) + "," +
                            num(r.apr);
    csv += row + "\n";
    log << row << "\n";
  }
  write_text(out_dir / "summary.csv", csv);
  auto resolved = cfg;
  resolved.sweep.betas = betas;
  write_config(resolved, out_dir / "config.json");
}

}  // namespace asymseg::cli
