// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace xvgs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Inverse of sigmoid. p must lie strictly inside (0, 1).
inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit: argument outside (0, 1)");
  return std::log(p / (1.0 - p));
}

/// Quaternion stored in (w, x, y, z) order. Kept as a plain aggregate so
/// gradients can live in the same four slots without a unit-norm constraint.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quat normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::invalid_argument("Quat: cannot normalize zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }
};

inline bool operator==(const Quat& a, const Quat& b) {
  return a.w == b.w && a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Rotation matrix of a unit quaternion. The caller is responsible for the
/// norm; feeding an unnormalized quaternion scales the result, which is
/// exactly what the ambient-space gradient formulas below assume.
inline Mat3 rotation_matrix(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
       2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
       2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

/// Partial derivatives of rotation_matrix with respect to each quaternion
/// component, taken in the ambient four-dimensional space (no renormalization).
inline std::array<Mat3, 4> rotation_matrix_jacobian(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 dw, dx, dy, dz;
  dw <<  0.0,       -2.0 * z,  2.0 * y,
         2.0 * z,    0.0,     -2.0 * x,
        -2.0 * y,    2.0 * x,  0.0;
  dx <<  0.0,        2.0 * y,  2.0 * z,
         2.0 * y,   -4.0 * x, -2.0 * w,
         2.0 * z,    2.0 * w, -4.0 * x;
  dy << -4.0 * y,    2.0 * x,  2.0 * w,
         2.0 * x,    0.0,      2.0 * z,
        -2.0 * w,    2.0 * z, -4.0 * y;
  dz << -4.0 * z,   -2.0 * w,  2.0 * x,
         2.0 * w,   -4.0 * z,  2.0 * y,
         2.0 * x,    2.0 * y,  0.0;
  return {dw, dx, dy, dz};
}

/// Deterministic pseudo-random stream (splitmix64 core). Used everywhere
/// instead of <random> distributions so that generated datasets and training
/// runs are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive. The modulo bias is
  /// irrelevant for the small n used here but the result is reproducible.
  int64_t uniform_int(int64_t n) {
    if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
    return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
  }

  /// Standard normal via Box-Muller. The pair is cached, so draws come in a
  /// fixed order regardless of how callers interleave uniform() calls.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stable mix of a user seed with a per-stage salt, giving independent
/// streams for dataset generation and each training stage.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  Rng r(seed ^ (salt * 0x9e3779b97f4a7c15ull));
  return r.next_u64();
}

}  // namespace xvgs
