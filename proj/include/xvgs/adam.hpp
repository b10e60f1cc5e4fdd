// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "xvgs/gaussian.hpp"
#include "xvgs/render_backward.hpp"

namespace xvgs {

/// Per-parameter-class learning rates. Positions additionally decay
/// exponentially from `position` to `position_final` over the stage length.
struct LearningRates {
  double position = 2e-4;
  double position_final = 2e-6;
  double log_scale = 5e-3;
  double rotation = 1e-3;
  double opacity = 5e-2;
  double color = 2.5e-3;
};

/// Adam over the 14 parameters of each primitive, with moment rows that
/// extend and compact in lockstep with densification and pruning. Rotations
/// are renormalized to unit quaternions after every step; the forward model
/// never normalizes, so this is the only place the constraint is enforced.
class AdamOptimizer {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  AdamOptimizer(size_t n, const LearningRates& rates, int64_t decay_steps)
      : rates_(rates), decay_steps_(decay_steps), m_(n), v_(n) {
    if (decay_steps <= 0)
      throw std::invalid_argument("AdamOptimizer: decay_steps must be positive");
    for (auto& row : m_) row.fill(0.0);
    for (auto& row : v_) row.fill(0.0);
  }

  size_t size() const { return m_.size(); }
  int64_t step_count() const { return step_; }

  /// Position learning rate for the upcoming step (exponential interpolation,
  /// frozen at position_final once the decay horizon is past).
  double current_position_lr() const {
    const double frac =
        std::min(1.0, static_cast<double>(step_) / static_cast<double>(decay_steps_));
    return rates_.position * std::pow(rates_.position_final / rates_.position, frac);
  }

  void step(GaussianModel& model, const RenderGradients& grads) {
    if (model.size() != m_.size() || grads.size() != m_.size())
      throw std::invalid_argument("AdamOptimizer: model/gradient size mismatch");
    const double lr_pos = current_position_lr();
    ++step_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));

    for (size_t i = 0; i < m_.size(); ++i) {
      Gaussian3D& g = model.gaussians[i];
      const std::array<double, 14> grad = {
          grads.d_position[i].x(),  grads.d_position[i].y(),  grads.d_position[i].z(),
          grads.d_log_scale[i].x(), grads.d_log_scale[i].y(), grads.d_log_scale[i].z(),
          grads.d_rotation[i][0],   grads.d_rotation[i][1],   grads.d_rotation[i][2],
          grads.d_rotation[i][3],
          grads.d_opacity_logit[i],
          grads.d_color[i].x(),     grads.d_color[i].y(),     grads.d_color[i].z()};
      const std::array<double, 14> lr = {
          lr_pos, lr_pos, lr_pos,
          rates_.log_scale, rates_.log_scale, rates_.log_scale,
          rates_.rotation, rates_.rotation, rates_.rotation, rates_.rotation,
          rates_.opacity,
          rates_.color, rates_.color, rates_.color};
      std::array<double, 14> delta;
      for (int k = 0; k < 14; ++k) {
        m_[i][k] = kBeta1 * m_[i][k] + (1.0 - kBeta1) * grad[k];
        v_[i][k] = kBeta2 * v_[i][k] + (1.0 - kBeta2) * grad[k] * grad[k];
        delta[k] = lr[k] * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + kEps);
      }
      g.position -= Vec3(delta[0], delta[1], delta[2]);
      g.log_scale -= Vec3(delta[3], delta[4], delta[5]);
      g.rotation.w -= delta[6];
      g.rotation.x -= delta[7];
      g.rotation.y -= delta[8];
      g.rotation.z -= delta[9];
      g.opacity_logit -= delta[10];
      g.color -= Vec3(delta[11], delta[12], delta[13]);
      g.rotation = g.rotation.normalized();
    }
  }

  /// Zero moments for freshly cloned primitives.
  void extend(size_t added) {
    std::array<double, 14> zero;
    zero.fill(0.0);
    m_.resize(m_.size() + added, zero);
    v_.resize(v_.size() + added, zero);
  }

  void compact(const std::vector<uint8_t>& keep) {
    if (keep.size() != m_.size())
      throw std::invalid_argument("AdamOptimizer: keep mask size mismatch");
    size_t out = 0;
    for (size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      m_[out] = m_[i];
      v_[out] = v_[i];
      ++out;
    }
    m_.resize(out);
    v_.resize(out);
  }

 private:
  LearningRates rates_;
  int64_t decay_steps_;
  int64_t step_ = 0;
  std::vector<std::array<double, 14>> m_;
  std::vector<std::array<double, 14>> v_;
};

}  // namespace xvgs
