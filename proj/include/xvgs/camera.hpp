// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

#include "xvgs/math.hpp"

namespace xvgs {

/// Pinhole camera. rotation/translation map world points into the camera
/// frame (x right, y down, z along the optical axis): x_cam = R x + t.
struct Camera {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }

  /// Camera center in world coordinates, the solution of R c + t = 0.
  Vec3 position() const { return -(rotation.transpose() * translation); }

  double image_diagonal() const {
    return std::sqrt(static_cast<double>(width) * width +
                     static_cast<double>(height) * height);
  }
};

/// True when R is orthonormal with determinant +1 up to tol.
inline bool is_rigid_rotation(const Mat3& r, double tol = 1e-6) {
  const Mat3 gram = r.transpose() * r;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

inline void validate_camera(const Camera& cam, double tol = 1e-6) {
  if (cam.width <= 0 || cam.height <= 0)
    throw std::invalid_argument("camera: non-positive image dimensions");
  if (cam.fx <= 0.0 || cam.fy <= 0.0)
    throw std::invalid_argument("camera: non-positive focal length");
  if (!is_rigid_rotation(cam.rotation, tol))
    throw std::invalid_argument("camera: rotation is not orthonormal");
}

/// World-to-camera rigid transform looking from `eye` toward `target`, with
/// world +z treated as up. Degenerates when the view direction is parallel
/// to the up axis, which the ring layouts used here never produce.
inline Camera look_at_camera(const Vec3& eye, const Vec3& target, double fx, double fy,
                             int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3(0.0, 0.0, 1.0));
  const double n = right.norm();
  if (n < 1e-9) throw std::invalid_argument("look_at_camera: view direction parallel to up axis");
  right /= n;
  const Vec3 down = forward.cross(right);

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -(cam.rotation * eye);
  return cam;
}

}  // namespace xvgs
