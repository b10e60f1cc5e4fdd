// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "xvgs/camera.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/math.hpp"

namespace xvgs {

inline constexpr double kNearPlane = 0.01;
/// Screen-space covariance dilation added to both diagonal entries. Acts as
/// a low-pass filter so sub-pixel splats still cover their center pixel.
inline constexpr double kCovDilation = 0.3;
/// Whole-splat visibility culling radius, in standard deviations.
inline constexpr double kCullSigma = 3.0;
/// Per-pixel rasterization radius. Slightly wider than the cull radius so
/// that at the box edge exp(-r^2/2) is already below the 1/255 contribution
/// floor: crossing the box boundary cannot change any pixel.
inline constexpr double kRasterSigma = 3.5;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kAlphaMax = 0.999;

/// A Gaussian after perspective projection.
struct Splat2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();
  double depth = 0.0;
  double alpha = 0.0;
  Vec3 color = Vec3::Zero();
  size_t source_index = 0;
};

namespace detail {

/// Jacobian of the pinhole projection at camera-frame point t.
inline Mat23 projection_jacobian(const Camera& cam, const Vec3& t) {
  const double iz = 1.0 / t.z();
  const double iz2 = iz * iz;
  Mat23 j;
  j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz2,
       0.0, cam.fy * iz, -cam.fy * t.y() * iz2;
  return j;
}

}  // namespace detail

/// Projects one Gaussian. Returns nullopt when the primitive is behind the
/// near plane or its 3-sigma screen footprint misses the image entirely.
inline std::optional<Splat2D> project(const Gaussian3D& g, const Camera& cam) {
  const Vec3 t = cam.to_camera(g.position);
  if (t.z() <= kNearPlane) return std::nullopt;

  Splat2D s;
  s.depth = t.z();
  s.mean2d = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);

  const Mat23 m = detail::projection_jacobian(cam, t) * cam.rotation;
  s.cov2d = m * covariance_of(g) * m.transpose() + kCovDilation * Mat2::Identity();

  // Largest eigenvalue of the 2x2 covariance bounds the screen footprint.
  const double mid = 0.5 * (s.cov2d(0, 0) + s.cov2d(1, 1));
  const double det = s.cov2d(0, 0) * s.cov2d(1, 1) - s.cov2d(0, 1) * s.cov2d(1, 0);
  const double lambda_max = mid + std::sqrt(std::max(mid * mid - det, 0.0));
  const double radius = kCullSigma * std::sqrt(lambda_max);
  if (s.mean2d.x() + radius < 0.0 || s.mean2d.x() - radius > cam.width - 1 ||
      s.mean2d.y() + radius < 0.0 || s.mean2d.y() - radius > cam.height - 1)
    return std::nullopt;

  s.alpha = sigmoid(g.opacity_logit);
  s.color = g.color.cwiseMax(0.0).cwiseMin(1.0);
  return s;
}

namespace detail {

/// Splat plus the cached quantities the per-pixel loops need.
struct PreparedSplat {
  Splat2D splat;
  Mat2 inv_cov;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds, empty if x1 < x0
};

/// Projects every primitive and orders the survivors front to back. Ties in
/// depth break by primitive index so compositing order is reproducible.
inline std::vector<PreparedSplat> prepare_splats(const GaussianModel& model, const Camera& cam) {
  std::vector<PreparedSplat> out;
  out.reserve(model.size());
  for (size_t i = 0; i < model.size(); ++i) {
    std::optional<Splat2D> s = project(model.gaussians[i], cam);
    if (!s) continue;
    s->source_index = i;

    PreparedSplat p;
    p.splat = *s;
    const Mat2& c = s->cov2d;
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
    if (!(det > 0.0)) continue;  // dilation keeps real covariances SPD; guards NaN
    p.inv_cov << c(1, 1) / det, -c(0, 1) / det, -c(1, 0) / det, c(0, 0) / det;

    const double mid = 0.5 * (c(0, 0) + c(1, 1));
    const double radius = kRasterSigma * std::sqrt(mid + std::sqrt(std::max(mid * mid - det, 0.0)));
    p.x0 = std::max(0, static_cast<int>(std::ceil(s->mean2d.x() - radius)));
    p.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(s->mean2d.x() + radius)));
    p.y0 = std::max(0, static_cast<int>(std::ceil(s->mean2d.y() - radius)));
    p.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(s->mean2d.y() + radius)));
    if (p.x1 < p.x0 || p.y1 < p.y0) continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const PreparedSplat& a, const PreparedSplat& b) {
    if (a.splat.depth != b.splat.depth) return a.splat.depth < b.splat.depth;
    return a.splat.source_index < b.splat.source_index;
  });
  return out;
}

}  // namespace detail

}  // namespace xvgs
