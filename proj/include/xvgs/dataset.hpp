// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "xvgs/camera.hpp"
#include "xvgs/image.hpp"
#include "xvgs/view_group.hpp"

namespace xvgs {

/// One manifest record: `view <path> <group> <split> <w> <h> <fx> <fy> <cx>
/// <cy> <16 row-major world-to-camera entries>`. Numbers are printed with
/// %.17g so the read side recovers the written doubles exactly.
inline std::string format_view_line(const std::string& image_path, int group_id, Split split,
                                    const Camera& cam) {
  std::ostringstream out;
  out << "view " << image_path << ' ' << group_id << ' '
      << (split == Split::kTest ? "test" : "train") << ' ' << cam.width << ' ' << cam.height;
  char buf[32];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ' ' << buf;
  };
  num(cam.fx);
  num(cam.fy);
  num(cam.cx);
  num(cam.cy);
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) {
      if (row < 3 && col < 3) num(cam.rotation(row, col));
      else if (row < 3) num(cam.translation[row]);
      else num(col == 3 ? 1.0 : 0.0);
    }
  }
  return out.str();
}

/// Loads a dataset directory (manifest.txt plus the images it references)
/// into view groups ordered by ascending group id. Views keep manifest
/// order within their group.
inline std::vector<ViewGroup> load_dataset(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.txt";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("dataset: cannot open " + manifest_path);

  std::map<int, ViewGroup> groups;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    const std::string at = manifest_path + ":" + std::to_string(line_no);
    std::string tag, path, split_name;
    int group_id = 0;
    Camera cam;
    if (!(ss >> tag >> path >> group_id >> split_name >> cam.width >> cam.height >> cam.fx >>
          cam.fy >> cam.cx >> cam.cy))
      throw std::runtime_error("dataset: malformed view line at " + at);
    if (tag != "view") throw std::runtime_error("dataset: unknown record '" + tag + "' at " + at);

    double entry[16];
    for (double& v : entry)
      if (!(ss >> v)) throw std::runtime_error("dataset: malformed view line at " + at);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) cam.rotation(row, col) = entry[row * 4 + col];
      cam.translation[row] = entry[row * 4 + 3];
    }
    for (int col = 0; col < 4; ++col)
      if (std::abs(entry[12 + col] - (col == 3 ? 1.0 : 0.0)) > 1e-12)
        throw std::runtime_error("dataset: bad matrix bottom row at " + at);
    if (!is_rigid_rotation(cam.rotation, 1e-4))
      throw std::runtime_error("dataset: non-rigid rotation for " + path);
    validate_camera(cam, 1e-4);

    Split split = Split::kTrain;
    if (split_name == "test") split = Split::kTest;
    else if (split_name != "train")
      throw std::runtime_error("dataset: unknown split '" + split_name + "' at " + at);

    View view;
    view.name = path;
    view.camera = cam;
    view.split = split;
    std::ifstream img_probe(dir + "/" + path, std::ios::binary);
    if (!img_probe) throw std::runtime_error("dataset: missing image " + dir + "/" + path);
    img_probe.close();
    view.image = read_ppm(dir + "/" + path);
    if (view.image.width() != cam.width || view.image.height() != cam.height)
      throw std::runtime_error("dataset: image " + path + " is " +
                               std::to_string(view.image.width()) + "x" +
                               std::to_string(view.image.height()) + ", manifest says " +
                               std::to_string(cam.width) + "x" + std::to_string(cam.height));

    ViewGroup& group = groups[group_id];
    group.group_id = group_id;
    group.views.push_back(std::move(view));
  }
  if (groups.empty()) throw std::runtime_error("dataset: manifest has no views");

  std::vector<ViewGroup> out;
  out.reserve(groups.size());
  for (auto& [id, group] : groups) out.push_back(std::move(group));
  return out;
}

}  // namespace xvgs
