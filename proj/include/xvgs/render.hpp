// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "xvgs/camera.hpp"
#include "xvgs/gaussian.hpp"
#include "xvgs/image.hpp"
#include "xvgs/splat.hpp"

namespace xvgs {

namespace detail {

struct SplatSample {
  double g = 0.0;       // exp(-q/2)
  double alpha_raw = 0.0;
  double alpha_prime = 0.0;
};

/// Density evaluation shared by the forward and backward passes; both must
/// execute the identical expression so replayed transmittances match bitwise.
inline SplatSample evaluate_splat(const PreparedSplat& p, int x, int y) {
  const double dx = x - p.splat.mean2d.x();
  const double dy = y - p.splat.mean2d.y();
  const Mat2& a = p.inv_cov;
  const double q = a(0, 0) * dx * dx + 2.0 * a(0, 1) * dx * dy + a(1, 1) * dy * dy;
  SplatSample s;
  s.g = std::exp(-0.5 * q);
  s.alpha_raw = p.splat.alpha * s.g;
  s.alpha_prime = std::min(s.alpha_raw, kAlphaMax);
  return s;
}

/// For each image row, indices into the prepared list whose box covers it,
/// preserving front-to-back order.
inline std::vector<std::vector<uint32_t>> bucket_rows(const std::vector<PreparedSplat>& splats,
                                                      int height) {
  std::vector<std::vector<uint32_t>> rows(height);
  for (uint32_t i = 0; i < splats.size(); ++i)
    for (int y = splats[i].y0; y <= splats[i].y1; ++y) rows[y].push_back(i);
  return rows;
}

}  // namespace detail

/// Front-to-back alpha compositing of the model over a constant background.
/// Contributions below 1/255 are skipped, per-splat opacity saturates at
/// 0.999 so transmittance never reaches zero exactly.
inline ImageBuffer render(const GaussianModel& model, const Camera& cam,
                          const Vec3& background = Vec3::Zero()) {
  validate_camera(cam);
  const std::vector<detail::PreparedSplat> splats = detail::prepare_splats(model, cam);
  const auto rows = detail::bucket_rows(splats, cam.height);

  ImageBuffer img(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double t = 1.0;
      Vec3 c = Vec3::Zero();
      for (uint32_t idx : rows[y]) {
        const detail::PreparedSplat& p = splats[idx];
        if (x < p.x0 || x > p.x1) continue;
        const detail::SplatSample s = detail::evaluate_splat(p, x, y);
        if (s.alpha_prime < kAlphaMin) continue;
        c += (s.alpha_prime * t) * p.splat.color;
        t *= 1.0 - s.alpha_prime;
      }
      c += t * background;
      for (int ch = 0; ch < 3; ++ch)
        img.at(x, y, ch) = std::min(1.0, std::max(0.0, c[ch]));
    }
  }
  return img;
}

}  // namespace xvgs
