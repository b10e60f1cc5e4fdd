// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "xvgs/camera.hpp"
#include "xvgs/checkpoint.hpp"
#include "xvgs/config.hpp"
#include "xvgs/dataset.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/image.hpp"
#include "xvgs/pipeline.hpp"
#include "xvgs/render.hpp"

namespace xvgs {

/// Layout of a synthetic capture: one steep-downward aerial camera ring and
/// one near-horizontal ground ring around a procedurally built scene.
struct SceneSpec {
  double extent = 2.0;
  int objects = 24;
  int palette = 6;
  double aerial_radius = 2.2;
  double aerial_height = 2.6;
  int aerial_count = 16;
  Vec3 look_at = Vec3(0.0, 0.0, 0.2);
  double ground_radius = 2.0;
  double ground_height = 0.3;
  int ground_count = 16;
  int image_size = 64;
  uint64_t seed = 42;
};

inline void validate_scene_spec(const SceneSpec& spec) {
  if (!(spec.extent > 0.0)) throw std::runtime_error("scene spec: extent must be positive");
  if (spec.objects < 1) throw std::runtime_error("scene spec: objects must be at least 1");
  if (spec.palette < 1 || spec.palette > 8)
    throw std::runtime_error("scene spec: palette must be between 1 and 8");
  if (spec.image_size < 32) throw std::runtime_error("scene spec: image size must be at least 32");
  if (spec.aerial_count < 8 || spec.ground_count < 8)
    throw std::runtime_error("scene spec: each ring needs at least 8 views");
  if (!(spec.aerial_radius > 0.0) || !(spec.ground_radius > 0.0))
    throw std::runtime_error("scene spec: ring radii must be positive");
  if (!(spec.aerial_height > spec.look_at.z()))
    throw std::runtime_error("scene spec: aerial ring must sit above the look-at point");
}

inline SceneSpec parse_scene_spec(std::istream& in) {
  SceneSpec spec;
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
      throw std::runtime_error("scene spec: line " + std::to_string(line_no) +
                               " is not key=value: '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    using detail::parse_double;
    using detail::parse_long;
    if (key == "extent") spec.extent = parse_double(key, value);
    else if (key == "objects") spec.objects = static_cast<int>(parse_long(key, value));
    else if (key == "palette") spec.palette = static_cast<int>(parse_long(key, value));
    else if (key == "aerial_radius") spec.aerial_radius = parse_double(key, value);
    else if (key == "aerial_height") spec.aerial_height = parse_double(key, value);
    else if (key == "aerial_count") spec.aerial_count = static_cast<int>(parse_long(key, value));
    else if (key == "look_at") {
      std::istringstream ss(value);
      double x, y, z;
      if (!(ss >> x >> y >> z) || !(ss >> std::ws).eof())
        throw std::runtime_error("scene spec: look_at needs three numbers, got '" + value + "'");
      spec.look_at = Vec3(x, y, z);
    } else if (key == "ground_radius") spec.ground_radius = parse_double(key, value);
    else if (key == "ground_height") spec.ground_height = parse_double(key, value);
    else if (key == "ground_count") spec.ground_count = static_cast<int>(parse_long(key, value));
    else if (key == "image_size") spec.image_size = static_cast<int>(parse_long(key, value));
    else if (key == "seed") spec.seed = static_cast<uint64_t>(parse_long(key, value));
    else throw std::runtime_error("scene spec: unknown key '" + key + "'");
  }
  validate_scene_spec(spec);
  return spec;
}

inline SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene spec: cannot open " + path);
  return parse_scene_spec(in);
}

namespace detail {

inline Vec3 palette_color(int index) {
  static const Vec3 wheel[8] = {
      {0.85, 0.25, 0.20}, {0.20, 0.65, 0.30}, {0.25, 0.35, 0.85}, {0.90, 0.75, 0.15},
      {0.60, 0.25, 0.75}, {0.15, 0.70, 0.70}, {0.90, 0.50, 0.20}, {0.75, 0.75, 0.75},
  };
  return wheel[index & 7];
}

inline Vec3 jitter_color(Vec3 base, Rng& rng, double amount) {
  for (int c = 0; c < 3; ++c)
    base[c] = std::clamp(base[c] + rng.uniform(-amount, amount), 0.05, 0.95);
  return base;
}

inline Quat random_rotation(Rng& rng) {
  Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
  return q.normalized();
}

}  // namespace detail

/// Procedural scene the model class can represent exactly: a tiled ground
/// plane, loose colored clusters above it, and box-like stacks. Everything
/// is drawn from one seeded stream so a spec pins the scene bit for bit.
inline GaussianModel build_teacher_scene(const SceneSpec& spec) {
  validate_scene_spec(spec);
  Rng rng(mix_seed(spec.seed, kSaltScene));
  const double e = spec.extent;
  GaussianModel m;
  m.voxel_size = e / 64.0;

  for (int gy = 0; gy < 6; ++gy) {
    for (int gx = 0; gx < 6; ++gx) {
      Gaussian3D tile;
      tile.position = Vec3((gx - 2.5) * 0.22 * e, (gy - 2.5) * 0.22 * e, 0.0);
      tile.log_scale = Vec3(std::log(0.09 * e), std::log(0.09 * e), std::log(0.012 * e));
      tile.opacity_logit = 2.0;
      tile.color = detail::jitter_color(detail::palette_color((gx + gy) % spec.palette), rng, 0.05);
      m.gaussians.push_back(tile);
    }
  }

  const int towers = spec.objects / 3;
  const int clusters = spec.objects - towers;
  for (int k = 0; k < clusters; ++k) {
    const Vec3 center(rng.uniform(-0.5 * e, 0.5 * e), rng.uniform(-0.5 * e, 0.5 * e),
                      rng.uniform(0.06 * e, 0.30 * e));
    const Vec3 base_color = detail::palette_color(static_cast<int>(rng.uniform_int(spec.palette)));
    const int parts = 3 + static_cast<int>(rng.uniform_int(3));
    for (int p = 0; p < parts; ++p) {
      Gaussian3D g;
      g.position = center + 0.05 * e * Vec3(rng.normal(), rng.normal(), rng.normal());
      for (int c = 0; c < 3; ++c)
        g.log_scale[c] = std::log(rng.uniform(0.03 * e, 0.07 * e));
      g.rotation = detail::random_rotation(rng);
      g.opacity_logit = rng.uniform(0.8, 2.5);
      g.color = detail::jitter_color(base_color, rng, 0.08);
      m.gaussians.push_back(g);
    }
  }
  for (int k = 0; k < towers; ++k) {
    const double x = rng.uniform(-0.45 * e, 0.45 * e);
    const double y = rng.uniform(-0.45 * e, 0.45 * e);
    const Vec3 color = detail::jitter_color(
        detail::palette_color(static_cast<int>(rng.uniform_int(spec.palette))), rng, 0.05);
    for (int level = 0; level < 3; ++level) {
      Gaussian3D g;
      g.position = Vec3(x, y, 0.05 * e + 0.09 * e * level);
      g.log_scale = Vec3(std::log(0.05 * e), std::log(0.05 * e), std::log(0.045 * e));
      g.opacity_logit = 2.2;
      g.color = color;
      m.gaussians.push_back(g);
    }
  }
  return m;
}

/// All cameras of one capture, aerial ring first, each ring in angular
/// order. Ground cameras aim at a point slightly above their own height so
/// they pitch a little upward across the scene.
inline std::vector<std::vector<Camera>> scene_cameras(const SceneSpec& spec) {
  const double fx = 1.2 * spec.image_size;
  const int wh = spec.image_size;
  std::vector<Camera> aerial;
  for (int k = 0; k < spec.aerial_count; ++k) {
    const double theta = 2.0 * M_PI * (k + 0.5) / spec.aerial_count;
    const Vec3 eye(spec.look_at.x() + spec.aerial_radius * std::cos(theta),
                   spec.look_at.y() + spec.aerial_radius * std::sin(theta), spec.aerial_height);
    aerial.push_back(look_at_camera(eye, spec.look_at, fx, fx, wh, wh));
  }
  std::vector<Camera> ground;
  const double up_pitch = std::tan(5.0 * M_PI / 180.0);
  for (int k = 0; k < spec.ground_count; ++k) {
    const double theta = 2.0 * M_PI * (k + 0.5) / spec.ground_count + 0.137;
    const Vec3 eye(spec.look_at.x() + spec.ground_radius * std::cos(theta),
                   spec.look_at.y() + spec.ground_radius * std::sin(theta), spec.ground_height);
    const Vec3 target(spec.look_at.x(), spec.look_at.y(),
                      spec.ground_height + spec.ground_radius * up_pitch);
    ground.push_back(look_at_camera(eye, target, fx, fx, wh, wh));
  }
  return {std::move(aerial), std::move(ground)};
}

/// Renders the teacher scene through both rings and writes a loadable
/// dataset: images/, manifest.txt, and the teacher checkpoint itself.
/// Every eighth view of each ring is tagged as test.
inline GaussianModel generate_synthetic(const SceneSpec& spec, const std::string& out_dir) {
  const GaussianModel teacher = build_teacher_scene(spec);
  const std::vector<std::vector<Camera>> rings = scene_cameras(spec);

  std::error_code ec;
  std::filesystem::create_directories(out_dir + "/images", ec);
  if (ec) throw std::runtime_error("gen: cannot create " + out_dir + "/images: " + ec.message());

  std::ofstream manifest(out_dir + "/manifest.txt");
  if (!manifest) throw std::runtime_error("gen: cannot write " + out_dir + "/manifest.txt");
  const Vec3 background(0.0, 0.0, 0.0);
  for (size_t ring = 0; ring < rings.size(); ++ring) {
    for (size_t v = 0; v < rings[ring].size(); ++v) {
      const Camera& cam = rings[ring][v];
      char name[64];
      std::snprintf(name, sizeof name, "images/g%zu_v%03zu.ppm", ring, v);
      write_ppm(out_dir + "/" + name, quantize8(render(teacher, cam, background)));
      const Split split = v % 8 == 0 ? Split::kTest : Split::kTrain;
      manifest << format_view_line(name, static_cast<int>(ring), split, cam) << '\n';
    }
  }
  manifest.close();
  if (!manifest) throw std::runtime_error("gen: failed writing " + out_dir + "/manifest.txt");
  save_model(out_dir + "/teacher.xvgs", teacher);
  return teacher;
}

}  // namespace xvgs
