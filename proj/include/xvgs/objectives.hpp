// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "xvgs/gaussian.hpp"
#include "xvgs/metrics.hpp"

namespace xvgs {

struct LossWeights {
  double lambda_ssim = 0.2;
  double lambda_vol = 0.01;
  double lambda_reg = 1.0;
};

/// Image distance used by the pseudo-label hinge term.
enum class DistanceMetric { kL1, kL2 };

inline double image_distance(const ImageBuffer& a, const ImageBuffer& b, DistanceMetric metric) {
  if (metric == DistanceMetric::kL1) return l1_loss(a, b);
  detail::require_same_shape(a, b, "image_distance");
  double sum = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data().size());
}

inline ImageBuffer image_distance_backward(const ImageBuffer& a, const ImageBuffer& b,
                                           DistanceMetric metric) {
  if (metric == DistanceMetric::kL1) return l1_backward(a, b);
  detail::require_same_shape(a, b, "image_distance_backward");
  ImageBuffer out(a.width(), a.height());
  const double scale = 2.0 / static_cast<double>(a.data().size());
  for (size_t i = 0; i < a.data().size(); ++i)
    out.data()[i] = scale * (a.data()[i] - b.data()[i]);
  return out;
}

/// Sum of primitive volumes exp(sx + sy + sz); discourages unbounded growth.
inline double volume_reg(const GaussianModel& m) {
  double sum = 0.0;
  for (const Gaussian3D& g : m.gaussians) sum += std::exp(g.log_scale.sum());
  return sum;
}

/// d volume_reg / d log_scale, one row per primitive (all three components
/// of a row share the primitive's volume).
inline std::vector<Vec3> volume_reg_backward(const GaussianModel& m) {
  std::vector<Vec3> out(m.size());
  for (size_t i = 0; i < m.size(); ++i)
    out[i] = Vec3::Constant(std::exp(m.gaussians[i].log_scale.sum()));
  return out;
}

/// Supervised reconstruction objective: L1 + lambda_ssim (1 - SSIM) against
/// the ground truth plus the volume penalty on the model.
inline double reconstruction_loss(const ImageBuffer& pred, const ImageBuffer& gt,
                                  const GaussianModel& m, const LossWeights& w = {}) {
  return l1_loss(pred, gt) + w.lambda_ssim * (1.0 - ssim(pred, gt)) +
         w.lambda_vol * volume_reg(m);
}

/// d reconstruction_loss / d pred (the volume term does not touch pixels).
inline ImageBuffer reconstruction_loss_backward(const ImageBuffer& pred, const ImageBuffer& gt,
                                                const LossWeights& w = {}) {
  ImageBuffer out = l1_backward(pred, gt);
  const ImageBuffer ds = ssim_backward(pred, gt);
  for (size_t i = 0; i < out.data().size(); ++i)
    out.data()[i] -= w.lambda_ssim * ds.data()[i];
  return out;
}

/// Hinge against a frozen reference render: penalizes the prediction only
/// when it is farther from the ground truth than the reference is.
inline double regularization_loss(const ImageBuffer& pred, const ImageBuffer& ref,
                                  const ImageBuffer& gt,
                                  DistanceMetric metric = DistanceMetric::kL1) {
  return std::max(0.0, image_distance(pred, gt, metric) - image_distance(ref, gt, metric));
}

/// d regularization_loss / d pred; identically zero on the inactive side
/// (ties count as inactive).
inline ImageBuffer regularization_backward(const ImageBuffer& pred, const ImageBuffer& ref,
                                           const ImageBuffer& gt,
                                           DistanceMetric metric = DistanceMetric::kL1) {
  if (image_distance(pred, gt, metric) > image_distance(ref, gt, metric))
    return image_distance_backward(pred, gt, metric);
  return ImageBuffer(pred.width(), pred.height());
}

inline double total_loss(const ImageBuffer& pred, const ImageBuffer& ref, const ImageBuffer& gt,
                         const GaussianModel& m, const LossWeights& w = {},
                         DistanceMetric metric = DistanceMetric::kL1) {
  return w.lambda_reg * regularization_loss(pred, ref, gt, metric) +
         reconstruction_loss(pred, gt, m, w);
}

}  // namespace xvgs
