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

#include "config.hpp"

#include <fstream>
#include <set>

#include "asymseg/random.hpp"

namespace asymseg::cli {
namespace {

using nlohmann::json;

// Reads keys out of one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& obj, std::string name) : name_(std::move(name)) {
    if (!obj.is_object()) throw ConfigError(name_ + ": expected an object");
    obj_ = &obj;
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : obj_->items()) {
      if (!seen_.count(k)) {
        throw ConfigError("unknown config key '" +
                          (name_.empty() ? k : name_ + "." + k) + "'");
      }
    }
  }

 private:
  const json* obj_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

Dims read_dims(const std::vector<std::int64_t>& v, const std::string& where) {
  if (v.size() != 3) throw ConfigError(where + ": expected three values");
  return {v[0], v[1], v[2]};
}

void parse_synth(const json& j, SynthSection& s) {
  Section sec(j, "synth");
  if (const json* p = sec.child("preset"); p && !p->is_null()) {
    if (!p->is_string()) throw ConfigError("synth.preset: expected a string");
    try {
      s.preset = parse_lesion_preset(p->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("synth.preset: ") + e.what());
    }
  }
  sec.read("cases", s.cases);
  std::vector<std::int64_t> dims{s.spec.dims.nx, s.spec.dims.ny, s.spec.dims.nz};
  sec.read("dims", dims);
  s.spec.dims = read_dims(dims, "synth.dims");
  std::vector<double> spacing{s.spec.spacing.sx, s.spec.spacing.sy,
                              s.spec.spacing.sz};
  sec.read("spacing", spacing);
  if (spacing.size() != 3) throw ConfigError("synth.spacing: expected three values");
  s.spec.spacing = {spacing[0], spacing[1], spacing[2]};
  sec.read("channels", s.spec.channels);
  sec.read("min_lesions", s.spec.min_lesions);
  sec.read("max_lesions", s.spec.max_lesions);
  sec.read("min_radius", s.spec.min_radius);
  sec.read("max_radius", s.spec.max_radius);
  sec.read("lesion_fraction", s.spec.lesion_fraction);
  sec.read("intensity_shift", s.spec.intensity_shift);
  sec.read("background_amplitude", s.spec.background_amplitude);
  sec.read("noise_sigma", s.spec.noise_sigma);
  sec.finish();
  if (s.cases < 1) throw ConfigError("synth.cases must be >= 1");
}

void parse_train(const json& j, TrainConfig& t) {
  Section sec(j, "train");
  std::string loss{to_string(t.loss.kind())};
  double beta = t.loss.beta(), alpha = t.loss.alpha(), gamma = t.loss.gamma();
  sec.read("loss", loss);
  sec.read("beta", beta);
  sec.read("alpha", alpha);
  sec.read("gamma", gamma);
  try {
    switch (parse_loss_kind(loss)) {
      case LossKind::kFBeta:
        t.loss = LossSpec::f_beta(beta);
        break;
      case LossKind::kGdl:
        t.loss = LossSpec::gdl();
        break;
      case LossKind::kFocal:
        t.loss = LossSpec::focal(alpha, gamma);
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  sec.read("learning_rate", t.learning_rate);
  sec.read("lr_decay", t.lr_decay);
  sec.read("lr_interval", t.lr_interval);
  sec.read("lr_interval_growth", t.lr_interval_growth);
  sec.read("lr_growth_every", t.lr_growth_every);
  sec.read("steps", t.steps);
  sec.read("patch_size", t.patch_size);
  sec.read("overlap", t.overlap);
  sec.read("quota", t.quota);
  sec.read("min_lesion_voxels", t.min_lesion_voxels);
  sec.read("augment", t.augment);
  sec.read("init_half_width", t.init_half_width);
  sec.read("adam_beta1", t.adam_beta1);
  sec.read("adam_beta2", t.adam_beta2);
  sec.read("adam_epsilon", t.adam_epsilon);
  sec.finish();
  try {
    LearningRateSchedule check(t);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
}

void parse_fusion(const json& j, FusionSection& f) {
  Section sec(j, "fusion");
  std::string mode{to_string(f.mode)};
  sec.read("mode", mode);
  try {
    f.mode = parse_fusion_mode(mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("fusion.mode: ") + e.what());
  }
  sec.read("patch_size", f.patch_size);
  sec.read("overlap", f.overlap);
  sec.finish();
}

void parse_metrics(const json& j, MetricsSection& m) {
  Section sec(j, "metrics");
  sec.read("threshold", m.threshold);
  sec.read("pr_thresholds", m.pr_thresholds);
  sec.finish();
  if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) {
    throw ConfigError("metrics.threshold must lie in [0, 1]");
  }
  if (m.pr_thresholds < 1) throw ConfigError("metrics.pr_thresholds must be >= 1");
}

void parse_sweep(const json& j, SweepSection& s) {
  Section sec(j, "sweep");
  sec.read("betas", s.betas);
  sec.finish();
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Section top(doc, "");
  top.read("seed", cfg.seed);
  top.read("threads", cfg.threads);
  if (const json* j = top.child("synth")) parse_synth(*j, cfg.synth);
  if (const json* j = top.child("train")) parse_train(*j, cfg.train);
  if (const json* j = top.child("fusion")) parse_fusion(*j, cfg.fusion);
  if (const json* j = top.child("metrics")) parse_metrics(*j, cfg.metrics);
  if (const json* j = top.child("sweep")) parse_sweep(*j, cfg.sweep);
  top.finish();
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  cfg.train.seed = cfg.seed;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;

  const auto& s = cfg.synth;
  auto& sj = j["synth"];
  sj["preset"] = s.preset ? nlohmann::ordered_json(std::string(to_string(*s.preset)))
                          : nlohmann::ordered_json(nullptr);
  sj["cases"] = s.cases;
  sj["dims"] = {s.spec.dims.nx, s.spec.dims.ny, s.spec.dims.nz};
  sj["spacing"] = {s.spec.spacing.sx, s.spec.spacing.sy, s.spec.spacing.sz};
  sj["channels"] = s.spec.channels;
  sj["min_lesions"] = s.spec.min_lesions;
  sj["max_lesions"] = s.spec.max_lesions;
  sj["min_radius"] = s.spec.min_radius;
  sj["max_radius"] = s.spec.max_radius;
  sj["lesion_fraction"] = s.spec.lesion_fraction;
  sj["intensity_shift"] = s.spec.intensity_shift;
  sj["background_amplitude"] = s.spec.background_amplitude;
  sj["noise_sigma"] = s.spec.noise_sigma;

  const auto& t = cfg.train;
  auto& tj = j["train"];
  tj["loss"] = std::string(to_string(t.loss.kind()));
  switch (t.loss.kind()) {
    case LossKind::kFBeta:
      tj["beta"] = t.loss.beta();
      break;
    case LossKind::kFocal:
      tj["alpha"] = t.loss.alpha();
      tj["gamma"] = t.loss.gamma();
      break;
    case LossKind::kGdl:
      break;
  }
  tj["learning_rate"] = t.learning_rate;
  tj["lr_decay"] = t.lr_decay;
  tj["lr_interval"] = t.lr_interval;
  tj["lr_interval_growth"] = t.lr_interval_growth;
  tj["lr_growth_every"] = t.lr_growth_every;
  tj["steps"] = t.steps;
  tj["patch_size"] = t.patch_size;
  tj["overlap"] = t.overlap;
  tj["quota"] = t.quota;
  tj["min_lesion_voxels"] = t.min_lesion_voxels;
  tj["augment"] = t.augment;
  tj["init_half_width"] = t.init_half_width;
  tj["adam_beta1"] = t.adam_beta1;
  tj["adam_beta2"] = t.adam_beta2;
  tj["adam_epsilon"] = t.adam_epsilon;

  j["fusion"] = {{"mode", std::string(to_string(cfg.fusion.mode))},
                 {"patch_size", cfg.fusion.patch_size},
                 {"overlap", cfg.fusion.overlap}};
  j["metrics"] = {{"threshold", cfg.metrics.threshold},
                  {"pr_thresholds", cfg.metrics.pr_thresholds}};
  j["sweep"] = {{"betas", cfg.sweep.betas}};
  return j;
}

SynthSpec case_spec(const ExperimentConfig& cfg, int index) {
  SynthSpec s = cfg.synth.spec;
  const auto seed = derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(index));
  if (cfg.synth.preset) {
    const auto p = preset_spec(*cfg.synth.preset, s.dims, seed);
    s.lesion_fraction = p.lesion_fraction;
    s.min_radius = p.min_radius;
    s.max_radius = p.max_radius;
  }
  s.seed = seed;
  return s;
}

}  // namespace asymseg::cli
