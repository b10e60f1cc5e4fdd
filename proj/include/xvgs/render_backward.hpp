// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "xvgs/render.hpp"

namespace xvgs {

/// Parameter gradients of a scalar loss through render(), one row per
/// primitive in model order. Rotation gradients live in the ambient four
/// dimensional quaternion space. screen_grad_norm is the Euclidean norm of
/// the summed per-pixel screen-position gradient, the signal densification
/// feeds on; visible marks primitives that contributed to at least one pixel.
struct RenderGradients {
  std::vector<Vec3> d_position;
  std::vector<Vec3> d_log_scale;
  std::vector<Vec4> d_rotation;  // (w, x, y, z)
  std::vector<double> d_opacity_logit;
  std::vector<Vec3> d_color;
  std::vector<double> screen_grad_norm;
  std::vector<uint8_t> visible;

  explicit RenderGradients(size_t n = 0)
      : d_position(n, Vec3::Zero()),
        d_log_scale(n, Vec3::Zero()),
        d_rotation(n, Vec4::Zero()),
        d_opacity_logit(n, 0.0),
        d_color(n, Vec3::Zero()),
        screen_grad_norm(n, 0.0),
        visible(n, 0) {}

  size_t size() const { return d_position.size(); }
};

/// Analytic adjoint of render() with respect to every primitive parameter.
/// dL_dimage holds the loss gradient per pixel channel; background must be
/// the value the forward pass used. Primitives that were culled or never
/// cleared the contribution floor get exactly zero gradients.
inline RenderGradients render_backward(const GaussianModel& model, const Camera& cam,
                                       const Vec3& background, const ImageBuffer& dL_dimage) {
  validate_camera(cam);
  if (dL_dimage.width() != cam.width || dL_dimage.height() != cam.height)
    throw std::invalid_argument("render_backward: gradient image shape mismatch");

  const std::vector<detail::PreparedSplat> splats = detail::prepare_splats(model, cam);
  const auto rows = detail::bucket_rows(splats, cam.height);

  // Per-splat accumulators over all pixels, chained to parameters afterwards.
  std::vector<Vec2> acc_mean(splats.size(), Vec2::Zero());
  std::vector<Mat2> acc_cov(splats.size(), Mat2::Zero());
  std::vector<Vec3> acc_color(splats.size(), Vec3::Zero());
  std::vector<double> acc_alpha(splats.size(), 0.0);
  std::vector<uint8_t> touched(splats.size(), 0);

  struct Contribution {
    uint32_t idx;
    double alpha_prime;
    double transmittance;  // T at the moment this splat composited
  };
  std::vector<Contribution> contribs;

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      contribs.clear();
      double t = 1.0;
      for (uint32_t idx : rows[y]) {
        const detail::PreparedSplat& p = splats[idx];
        if (x < p.x0 || x > p.x1) continue;
        const detail::SplatSample s = detail::evaluate_splat(p, x, y);
        if (s.alpha_prime < kAlphaMin) continue;
        contribs.push_back({idx, s.alpha_prime, t});
        t *= 1.0 - s.alpha_prime;
      }
      if (contribs.empty()) continue;
      const double t_final = t;

      const Vec3 dl_dc(dL_dimage.at(x, y, 0), dL_dimage.at(x, y, 1), dL_dimage.at(x, y, 2));

      // Reverse sweep. suffix accumulates sum_j c_j a'_j T_j over splats
      // behind the current one; together with the background term it gives
      // d pixel / d a'_i = c_i T_i - (suffix + bg T_final) / (1 - a'_i).
      Vec3 suffix = Vec3::Zero();
      for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
        const detail::PreparedSplat& p = splats[it->idx];
        const double ap = it->alpha_prime;
        const double ti = it->transmittance;
        touched[it->idx] = 1;

        const double w = ap * ti;
        acc_color[it->idx] += w * dl_dc;

        const Vec3 dc_da = p.splat.color * ti - (suffix + background * t_final) / (1.0 - ap);
        const double dl_da = dc_da.dot(dl_dc);

        // The saturation clamp flattens d a'/d(anything) to zero.
        if (it->alpha_prime < kAlphaMax) {
          const detail::SplatSample s = detail::evaluate_splat(p, x, y);
          const double dl_dg = p.splat.alpha * dl_da;
          acc_alpha[it->idx] += s.g * dl_da;
          const Vec2 d(x - p.splat.mean2d.x(), y - p.splat.mean2d.y());
          const Vec2 ad = p.inv_cov * d;
          acc_mean[it->idx] += (dl_dg * s.g) * ad;
          acc_cov[it->idx] += (0.5 * dl_dg * s.g) * (ad * ad.transpose());
        }

        suffix += w * p.splat.color;
      }
    }
  }

  RenderGradients out(model.size());
  for (size_t k = 0; k < splats.size(); ++k) {
    if (!touched[k]) continue;
    const detail::PreparedSplat& p = splats[k];
    const size_t src = p.splat.source_index;
    const Gaussian3D& g = model.gaussians[src];
    out.visible[src] = 1;
    out.screen_grad_norm[src] = acc_mean[k].norm();

    const Vec3 t = cam.to_camera(g.position);
    const Mat23 j = detail::projection_jacobian(cam, t);
    const Mat23 m = j * cam.rotation;
    const Mat3 sigma = covariance_of(g);
    const Mat2& b = acc_cov[k];

    // Screen-space covariance chain: cov2d = M Sigma M^T (+ const dilation).
    const Mat23 d_m = 2.0 * b * m * sigma;
    const Mat3 d_sigma = m.transpose() * b * m;
    const Mat23 d_j = d_m * cam.rotation.transpose();

    // Projection chain for the mean plus the Jacobian's own t-dependence.
    Vec3 d_t = j.transpose() * acc_mean[k];
    const double iz2 = 1.0 / (t.z() * t.z());
    const double iz3 = iz2 / t.z();
    d_t.x() += d_j(0, 2) * (-cam.fx * iz2);
    d_t.y() += d_j(1, 2) * (-cam.fy * iz2);
    d_t.z() += d_j(0, 0) * (-cam.fx * iz2) + d_j(1, 1) * (-cam.fy * iz2) +
               d_j(0, 2) * (2.0 * cam.fx * t.x() * iz3) +
               d_j(1, 2) * (2.0 * cam.fy * t.y() * iz3);
    out.d_position[src] += cam.rotation.transpose() * d_t;

    // World covariance chain: Sigma = R D R^T with D = diag(exp(2 s)).
    const Mat3 r = rotation_matrix(g.rotation);
    const Vec3 d_diag = (2.0 * g.log_scale).array().exp();
    const Mat3 rt_ds_r = r.transpose() * d_sigma * r;
    for (int a = 0; a < 3; ++a)
      out.d_log_scale[src][a] += 2.0 * d_diag[a] * rt_ds_r(a, a);

    const Mat3 d_r = 2.0 * d_sigma * r * d_diag.asDiagonal();
    const auto jac = rotation_matrix_jacobian(g.rotation);
    for (int c = 0; c < 4; ++c)
      out.d_rotation[src][c] += (d_r.cwiseProduct(jac[c])).sum();

    const double a = p.splat.alpha;
    out.d_opacity_logit[src] += acc_alpha[k] * a * (1.0 - a);

    // Color was clamped to [0,1] at projection; the clamp is inactive for
    // in-range colors and zeroes the gradient outside.
    for (int c = 0; c < 3; ++c)
      if (g.color[c] >= 0.0 && g.color[c] <= 1.0) out.d_color[src][c] += acc_color[k][c];
  }
  return out;
}

}  // namespace xvgs
