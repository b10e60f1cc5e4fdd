// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "xvgs/config.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/math.hpp"
#include "xvgs/view_group.hpp"
#include "xvgs/voxel.hpp"

namespace xvgs {

struct PointCloud {
  std::vector<Vec3> points;
  /// Either empty or one color per point.
  std::vector<Vec3> colors;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Thins a model to every ratio-th primitive position. Primitives are visited
/// in (voxel key, index) order rather than raw index order so the survivors
/// spread across occupied space instead of following insertion history.
inline PointCloud downsample_to_pointcloud(const GaussianModel& m, int ratio) {
  if (m.empty()) throw std::invalid_argument("downsample: empty model");
  if (ratio < 1) throw std::invalid_argument("downsample: ratio must be at least 1");

  std::vector<size_t> order(m.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const VoxelKey ka = voxel_key(m.gaussians[a].position, m.voxel_size);
    const VoxelKey kb = voxel_key(m.gaussians[b].position, m.voxel_size);
    if (ka != kb) return ka < kb;
    return a < b;
  });

  PointCloud pc;
  for (size_t i = 0; i < order.size(); i += static_cast<size_t>(ratio)) {
    const Gaussian3D& g = m.gaussians[order[i]];
    pc.points.push_back(g.position);
    pc.colors.push_back(g.color);
  }
  return pc;
}

/// Builds a trainable model from a point cloud: isotropic scales from the
/// mean distance to the three nearest neighbors, identity rotations, dim
/// initial opacity. Colors come from the cloud when present, mid-gray
/// otherwise.
inline GaussianModel init_cross(const PointCloud& pc, const PipelineConfig& cfg) {
  if (pc.empty()) throw std::invalid_argument("init: empty point cloud");
  if (!pc.colors.empty() && pc.colors.size() != pc.points.size())
    throw std::invalid_argument("init: color count does not match point count");

  GaussianModel m;
  m.voxel_size = cfg.voxel_size;
  m.gaussians.reserve(pc.size());
  std::vector<double> dist2;
  for (size_t i = 0; i < pc.size(); ++i) {
    dist2.clear();
    for (size_t j = 0; j < pc.size(); ++j)
      if (j != i) dist2.push_back((pc.points[j] - pc.points[i]).squaredNorm());
    double mean_dist = 0.1;  // lone point: no neighborhood to measure
    if (!dist2.empty()) {
      const size_t k = std::min<size_t>(3, dist2.size());
      std::partial_sort(dist2.begin(), dist2.begin() + k, dist2.end());
      mean_dist = 0.0;
      for (size_t n = 0; n < k; ++n) mean_dist += std::sqrt(dist2[n]);
      mean_dist /= static_cast<double>(k);
    }

    Gaussian3D g;
    g.position = pc.points[i];
    g.log_scale = Vec3::Constant(std::log(std::max(mean_dist, 1e-8)));
    g.rotation = Quat{};
    g.opacity_logit = logit(0.1);
    g.color = pc.colors.empty() ? Vec3(0.5, 0.5, 0.5) : pc.colors[i];
    m.gaussians.push_back(g);
  }
  return m;
}

/// Uniform random cloud covering the capture volume. The sampling box spans
/// the camera centers plus, for each camera, a proxy target one
/// center-to-origin distance along its optical axis, so the box reaches the
/// observed region even when all cameras sit on one side of it.
inline PointCloud random_pointcloud(const std::vector<ViewGroup>& groups, size_t count,
                                    uint64_t seed) {
  if (count == 0) throw std::invalid_argument("init: point count must be positive");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  size_t cameras = 0;
  for (const ViewGroup& group : groups) {
    for (const View& view : group.views) {
      const Vec3 center = view.camera.position();
      const Vec3 forward = view.camera.rotation.row(2).transpose();
      const Vec3 proxy = center + center.norm() * forward;
      lo = lo.cwiseMin(center).cwiseMin(proxy);
      hi = hi.cwiseMax(center).cwiseMax(proxy);
      ++cameras;
    }
  }
  if (cameras == 0) throw std::invalid_argument("init: no cameras to bound the scene");

  Rng rng(seed);
  PointCloud pc;
  pc.points.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Vec3 p;
    for (int c = 0; c < 3; ++c) p[c] = rng.uniform(lo[c], hi[c]);
    pc.points.push_back(p);
  }
  return pc;
}

}  // namespace xvgs
