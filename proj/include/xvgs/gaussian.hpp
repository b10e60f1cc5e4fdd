// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "xvgs/math.hpp"

namespace xvgs {

/// One anisotropic 3D Gaussian primitive. Scales are stored in log space and
/// opacity as a logit so every parameter is unconstrained under gradient
/// descent; rotation is kept unit-norm by renormalizing after each optimizer
/// step rather than inside the forward model.
struct Gaussian3D {
  Vec3 position = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Quat rotation;
  double opacity_logit = 0.0;
  Vec3 color = Vec3::Zero();

  double opacity() const { return sigmoid(opacity_logit); }
  Vec3 scale() const { return log_scale.array().exp(); }
};

inline bool operator==(const Gaussian3D& a, const Gaussian3D& b) {
  return a.position == b.position && a.log_scale == b.log_scale &&
         a.rotation == b.rotation && a.opacity_logit == b.opacity_logit &&
         a.color == b.color;
}

/// World-space covariance R S S^T R^T with S = diag(exp(log_scale)).
inline Mat3 covariance_of(const Gaussian3D& g) {
  const Mat3 r = rotation_matrix(g.rotation);
  const Vec3 s2 = (2.0 * g.log_scale).array().exp();
  return r * s2.asDiagonal() * r.transpose();
}

/// A scene: an ordered list of primitives plus the voxel edge length used by
/// densification anchoring and cross-model supplementation.
struct GaussianModel {
  std::vector<Gaussian3D> gaussians;
  double voxel_size = 0.05;

  size_t size() const { return gaussians.size(); }
  bool empty() const { return gaussians.empty(); }
};

}  // namespace xvgs
