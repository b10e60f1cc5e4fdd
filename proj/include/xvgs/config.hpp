// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "xvgs/densify.hpp"
#include "xvgs/math.hpp"
#include "xvgs/objectives.hpp"

namespace xvgs {

/// Every knob of the training pipeline in one place. The on-disk form is a
/// plain key=value file so runs can be reproduced by checking the config in
/// next to the outputs.
struct PipelineConfig {
  int branch_iters = 3000;
  int cross_iters = 3000;
  int finetune_iters = 2000;

  /// Keep every tau-th point when downsampling a branch into the cross
  /// initialization.
  int downsample_ratio = 10;

  LossWeights weights;
  DistanceMetric reg_distance = DistanceMetric::kL1;

  /// Zero means: derive the threshold from the image diagonal at training
  /// time (2e-4 per diagonal pixel).
  double densify_threshold = 0.0;
  DensifyMode densify_mode = DensifyMode::kGroupMax;
  int densify_interval = 100;
  double prune_opacity = 0.005;
  size_t max_primitives = 200000;
  bool finetune_densify = false;

  double voxel_size = 0.05;

  LearningRates rates;

  uint64_t seed = 1;
  /// Group whose branch model seeds the cross-view stage.
  int distant_group = 0;
  Vec3 background = Vec3(0.0, 0.0, 0.0);
  /// Number of random points used when a stage starts without a model.
  size_t init_points = 2000;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": '" + value + "'");
  }
  if (pos != value.size())
    throw std::runtime_error("config: bad number for " + key + ": '" + value + "'");
  return v;
}

inline long parse_long(const std::string& key, const std::string& value) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": '" + value + "'");
  }
  if (pos != value.size())
    throw std::runtime_error("config: bad integer for " + key + ": '" + value + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Applies one key=value assignment to an existing config. Unknown keys and
/// unparseable values are errors so a typo cannot silently fall back to a
/// default.
inline void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_double;
  using detail::parse_long;
  if (key == "branch_iters") cfg.branch_iters = static_cast<int>(parse_long(key, value));
  else if (key == "cross_iters") cfg.cross_iters = static_cast<int>(parse_long(key, value));
  else if (key == "finetune_iters") cfg.finetune_iters = static_cast<int>(parse_long(key, value));
  else if (key == "downsample_ratio")
    cfg.downsample_ratio = static_cast<int>(parse_long(key, value));
  else if (key == "lambda_ssim") cfg.weights.lambda_ssim = parse_double(key, value);
  else if (key == "lambda_vol") cfg.weights.lambda_vol = parse_double(key, value);
  else if (key == "lambda_reg") cfg.weights.lambda_reg = parse_double(key, value);
  else if (key == "reg_distance") {
    if (value == "l1") cfg.reg_distance = DistanceMetric::kL1;
    else if (value == "l2") cfg.reg_distance = DistanceMetric::kL2;
    else throw std::runtime_error("config: reg_distance must be l1 or l2, got '" + value + "'");
  } else if (key == "densify_threshold") cfg.densify_threshold = parse_double(key, value);
  else if (key == "densify_mode") {
    if (value == "average") cfg.densify_mode = DensifyMode::kAverage;
    else if (value == "groupmax") cfg.densify_mode = DensifyMode::kGroupMax;
    else
      throw std::runtime_error("config: densify_mode must be average or groupmax, got '" +
                               value + "'");
  } else if (key == "densify_interval")
    cfg.densify_interval = static_cast<int>(parse_long(key, value));
  else if (key == "prune_opacity") cfg.prune_opacity = parse_double(key, value);
  else if (key == "max_primitives")
    cfg.max_primitives = static_cast<size_t>(parse_long(key, value));
  else if (key == "finetune_densify") cfg.finetune_densify = parse_long(key, value) != 0;
  else if (key == "voxel_size") cfg.voxel_size = parse_double(key, value);
  else if (key == "lr_position") cfg.rates.position = parse_double(key, value);
  else if (key == "lr_position_final") cfg.rates.position_final = parse_double(key, value);
  else if (key == "lr_scale") cfg.rates.log_scale = parse_double(key, value);
  else if (key == "lr_rotation") cfg.rates.rotation = parse_double(key, value);
  else if (key == "lr_opacity") cfg.rates.opacity = parse_double(key, value);
  else if (key == "lr_color") cfg.rates.color = parse_double(key, value);
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_long(key, value));
  else if (key == "distant_group") cfg.distant_group = static_cast<int>(parse_long(key, value));
  else if (key == "background") {
    std::istringstream ss(value);
    double r, g, b;
    if (!(ss >> r >> g >> b) || !(ss >> std::ws).eof())
      throw std::runtime_error("config: background needs three numbers, got '" + value + "'");
    cfg.background = Vec3(r, g, b);
  } else if (key == "init_points") cfg.init_points = static_cast<size_t>(parse_long(key, value));
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

inline void validate_config(const PipelineConfig& cfg) {
  if (cfg.branch_iters < 0 || cfg.cross_iters < 0 || cfg.finetune_iters < 0)
    throw std::runtime_error("config: iteration counts must be non-negative");
  if (cfg.downsample_ratio < 1)
    throw std::runtime_error("config: downsample_ratio must be at least 1");
  if (cfg.densify_threshold < 0.0)
    throw std::runtime_error("config: densify_threshold must be non-negative");
  if (cfg.densify_interval < 1)
    throw std::runtime_error("config: densify_interval must be at least 1");
  if (!(cfg.voxel_size > 0.0))
    throw std::runtime_error("config: voxel_size must be positive");
  if (cfg.init_points == 0)
    throw std::runtime_error("config: init_points must be positive");
}

inline PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               " is not key=value: '" + line + "'");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                       detail::trim(line.substr(eq + 1)));
  }
  validate_config(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse_config(in);
}

inline void write_config(std::ostream& out, const PipelineConfig& cfg) {
  const auto mode_name = [](DensifyMode m) {
    return m == DensifyMode::kAverage ? "average" : "groupmax";
  };
  const auto dist_name = [](DistanceMetric m) { return m == DistanceMetric::kL1 ? "l1" : "l2"; };
  char buf[256];
  const auto emit = [&](const char* key, const std::string& value) {
    out << key << " = " << value << "\n";
  };
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  emit("branch_iters", std::to_string(cfg.branch_iters));
  emit("cross_iters", std::to_string(cfg.cross_iters));
  emit("finetune_iters", std::to_string(cfg.finetune_iters));
  emit("downsample_ratio", std::to_string(cfg.downsample_ratio));
  emit("lambda_ssim", num(cfg.weights.lambda_ssim));
  emit("lambda_vol", num(cfg.weights.lambda_vol));
  emit("lambda_reg", num(cfg.weights.lambda_reg));
  emit("reg_distance", dist_name(cfg.reg_distance));
  emit("densify_threshold", num(cfg.densify_threshold));
  emit("densify_mode", mode_name(cfg.densify_mode));
  emit("densify_interval", std::to_string(cfg.densify_interval));
  emit("prune_opacity", num(cfg.prune_opacity));
  emit("max_primitives", std::to_string(cfg.max_primitives));
  emit("finetune_densify", cfg.finetune_densify ? "1" : "0");
  emit("voxel_size", num(cfg.voxel_size));
  emit("lr_position", num(cfg.rates.position));
  emit("lr_position_final", num(cfg.rates.position_final));
  emit("lr_scale", num(cfg.rates.log_scale));
  emit("lr_rotation", num(cfg.rates.rotation));
  emit("lr_opacity", num(cfg.rates.opacity));
  emit("lr_color", num(cfg.rates.color));
  emit("seed", std::to_string(cfg.seed));
  emit("distant_group", std::to_string(cfg.distant_group));
  emit("background",
       num(cfg.background.x()) + " " + num(cfg.background.y()) + " " + num(cfg.background.z()));
  emit("init_points", std::to_string(cfg.init_points));
}

inline void save_config(const std::string& path, const PipelineConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  write_config(out, cfg);
}

}  // namespace xvgs
