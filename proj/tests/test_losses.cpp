// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "xvgs/math.hpp"
#include "xvgs/metrics.hpp"
#include "xvgs/objectives.hpp"

namespace xvgs {
namespace {

ImageBuffer constant_image(int w, int h, double v) { return ImageBuffer(w, h, v); }

ImageBuffer random_image(Rng& rng, int w, int h, double lo = 0.0, double hi = 1.0) {
  ImageBuffer img(w, h);
  for (double& v : img.data()) v = rng.uniform(lo, hi);
  return img;
}

TEST(L1, ConstantImagesGiveExactDifference) {
  const ImageBuffer a = constant_image(8, 6, 0.5);
  const ImageBuffer b = constant_image(8, 6, 0.25);
  EXPECT_EQ(l1_loss(a, b), 0.25);
  EXPECT_EQ(l1_loss(b, a), 0.25);
  EXPECT_EQ(l1_loss(a, a), 0.0);
}

TEST(L1, RejectsShapeMismatch) {
  EXPECT_THROW(l1_loss(constant_image(4, 4, 0.0), constant_image(4, 5, 0.0)),
               std::invalid_argument);
}

TEST(L1, BackwardMatchesFiniteDifferences) {
  Rng rng(11);
  ImageBuffer a = random_image(rng, 6, 5);
  ImageBuffer b = random_image(rng, 6, 5);
  // Keep every element pair separated so the kink at a == b stays away.
  for (size_t i = 0; i < a.data().size(); ++i)
    if (std::abs(a.data()[i] - b.data()[i]) < 0.05)
      a.data()[i] += (a.data()[i] >= b.data()[i]) ? 0.1 : -0.1;

  const ImageBuffer grad = l1_backward(a, b);
  const double h = 1e-6;
  for (size_t i = 0; i < a.data().size(); i += 7) {
    const double saved = a.data()[i];
    a.data()[i] = saved + h;
    const double plus = l1_loss(a, b);
    a.data()[i] = saved - h;
    const double minus = l1_loss(a, b);
    a.data()[i] = saved;
    EXPECT_NEAR(grad.data()[i], (plus - minus) / (2.0 * h), 1e-9);
  }
}

TEST(Psnr, KnownValuesAndInfinity) {
  const ImageBuffer a = constant_image(12, 12, 0.6);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  const ImageBuffer b = constant_image(12, 12, 0.5);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);  // MSE 0.01
  const ImageBuffer c = constant_image(12, 12, 0.35);
  EXPECT_GT(psnr(a, b), psnr(a, c));
}

TEST(Ssim, IdenticalImagesScoreExactlyOne) {
  Rng rng(21);
  const ImageBuffer a = random_image(rng, 16, 14);
  EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, ConstantZeroVsConstantOneHitsStabilizedFloor) {
  const ImageBuffer a = constant_image(13, 13, 0.0);
  const ImageBuffer b = constant_image(13, 13, 1.0);
  // Zero variance everywhere: score reduces to C1 / (1 + C1).
  const double c1 = 0.01 * 0.01;
  EXPECT_NEAR(ssim(a, b), c1 / (1.0 + c1), 1e-9);
}

TEST(Ssim, SymmetricBoundedAndNoiseSensitive) {
  Rng rng(31);
  const ImageBuffer a = random_image(rng, 20, 18, 0.2, 0.8);
  ImageBuffer small = a, large = a;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double n = rng.uniform(-1.0, 1.0);
    small.data()[i] += 0.02 * n;
    large.data()[i] += 0.2 * n;
  }
  const double s_small = ssim(a, small);
  const double s_large = ssim(a, large);
  EXPECT_NEAR(ssim(a, small), ssim(small, a), 1e-12);
  EXPECT_LE(s_small, 1.0 + 1e-12);
  EXPECT_GE(s_large, -1.0);
  EXPECT_LT(s_large, s_small);
  EXPECT_LT(s_small, 1.0);
}

TEST(Ssim, RejectsImagesSmallerThanWindow) {
  EXPECT_THROW(ssim(constant_image(10, 12, 0.5), constant_image(10, 12, 0.5)),
               std::invalid_argument);
  EXPECT_NO_THROW(ssim(constant_image(11, 11, 0.5), constant_image(11, 11, 0.5)));
}

TEST(Ssim, BackwardMatchesFiniteDifferences) {
  Rng rng(41);
  ImageBuffer a = random_image(rng, 15, 13, 0.1, 0.9);
  const ImageBuffer b = random_image(rng, 15, 13, 0.1, 0.9);
  const ImageBuffer grad = ssim_backward(a, b);
  const double h = 1e-5;
  double worst = 0.0;
  for (size_t i = 0; i < a.data().size(); i += 5) {
    const double saved = a.data()[i];
    a.data()[i] = saved + h;
    const double plus = ssim(a, b);
    a.data()[i] = saved - h;
    const double minus = ssim(a, b);
    a.data()[i] = saved;
    const double fd = (plus - minus) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad.data()[i]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(VolumeReg, SumsExponentialVolumes) {
  GaussianModel m;
  EXPECT_EQ(volume_reg(m), 0.0);
  Gaussian3D g;
  g.log_scale = Vec3(std::log(2.0), std::log(3.0), 0.0);
  m.gaussians.push_back(g);
  EXPECT_NEAR(volume_reg(m), 6.0, 1e-12);
  g.log_scale = Vec3(0.0, 0.0, 0.0);
  m.gaussians.push_back(g);
  EXPECT_NEAR(volume_reg(m), 7.0, 1e-12);
}

TEST(VolumeReg, BackwardMatchesFiniteDifferences) {
  Rng rng(51);
  GaussianModel m;
  for (int i = 0; i < 4; ++i) {
    Gaussian3D g;
    g.log_scale = Vec3(rng.uniform(-2.0, 0.5), rng.uniform(-2.0, 0.5), rng.uniform(-2.0, 0.5));
    m.gaussians.push_back(g);
  }
  const std::vector<Vec3> grad = volume_reg_backward(m);
  const double h = 1e-6;
  for (size_t i = 0; i < m.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double saved = m.gaussians[i].log_scale[k];
      m.gaussians[i].log_scale[k] = saved + h;
      const double plus = volume_reg(m);
      m.gaussians[i].log_scale[k] = saved - h;
      const double minus = volume_reg(m);
      m.gaussians[i].log_scale[k] = saved;
      EXPECT_NEAR(grad[i][k], (plus - minus) / (2.0 * h), 1e-7);
    }
}

TEST(Hinge, InactiveWhenPredictionIsAtLeastAsGood) {
  Rng rng(61);
  const ImageBuffer gt = random_image(rng, 12, 12);
  const ImageBuffer ref = random_image(rng, 12, 12);
  // pred == ref gives an exact tie, which stays inactive.
  EXPECT_EQ(regularization_loss(ref, ref, gt), 0.0);
  // pred == gt is strictly better than any nonequal reference.
  EXPECT_EQ(regularization_loss(gt, ref, gt), 0.0);
  const ImageBuffer zeros = regularization_backward(gt, ref, gt);
  for (double v : zeros.data()) EXPECT_EQ(v, 0.0);
}

TEST(Hinge, ActiveSideEqualsDistanceGap) {
  const ImageBuffer gt = constant_image(12, 12, 0.5);
  const ImageBuffer ref = constant_image(12, 12, 0.6);   // d_l1 = 0.1
  const ImageBuffer pred = constant_image(12, 12, 0.75); // d_l1 = 0.25
  EXPECT_NEAR(regularization_loss(pred, ref, gt, DistanceMetric::kL1), 0.15, 1e-12);
  // Squared metric: 0.0625 - 0.01.
  EXPECT_NEAR(regularization_loss(pred, ref, gt, DistanceMetric::kL2), 0.0525, 1e-12);
}

TEST(Hinge, ActiveBackwardMatchesFiniteDifferences) {
  Rng rng(71);
  const ImageBuffer gt = random_image(rng, 12, 12, 0.0, 0.4);
  const ImageBuffer ref = random_image(rng, 12, 12, 0.0, 0.45);
  ImageBuffer pred = random_image(rng, 12, 12, 0.6, 1.0);  // clearly worse than ref
  ASSERT_GT(regularization_loss(pred, ref, gt), 0.0);

  for (DistanceMetric metric : {DistanceMetric::kL1, DistanceMetric::kL2}) {
    const ImageBuffer grad = regularization_backward(pred, ref, gt, metric);
    const double h = 1e-6;
    for (size_t i = 0; i < pred.data().size(); i += 11) {
      const double saved = pred.data()[i];
      pred.data()[i] = saved + h;
      const double plus = regularization_loss(pred, ref, gt, metric);
      pred.data()[i] = saved - h;
      const double minus = regularization_loss(pred, ref, gt, metric);
      pred.data()[i] = saved;
      EXPECT_NEAR(grad.data()[i], (plus - minus) / (2.0 * h), 1e-8);
    }
  }
}

TEST(Objectives, DefaultWeightsArePinned) {
  const LossWeights w;
  EXPECT_EQ(w.lambda_ssim, 0.2);
  EXPECT_EQ(w.lambda_vol, 0.01);
  EXPECT_EQ(w.lambda_reg, 1.0);
}

TEST(Objectives, ReconstructionAndTotalMatchTheirDefinitions) {
  Rng rng(81);
  const ImageBuffer gt = random_image(rng, 14, 14);
  const ImageBuffer pred = random_image(rng, 14, 14);
  const ImageBuffer ref = random_image(rng, 14, 14);
  GaussianModel m;
  for (int i = 0; i < 3; ++i) {
    Gaussian3D g;
    g.log_scale = Vec3(rng.uniform(-2.0, 0.0), rng.uniform(-2.0, 0.0), rng.uniform(-2.0, 0.0));
    m.gaussians.push_back(g);
  }
  const LossWeights w{.lambda_ssim = 0.2, .lambda_vol = 0.01, .lambda_reg = 1.0};
  const double recon = reconstruction_loss(pred, gt, m, w);
  EXPECT_NEAR(recon,
              l1_loss(pred, gt) + 0.2 * (1.0 - ssim(pred, gt)) + 0.01 * volume_reg(m), 1e-12);
  const double total = total_loss(pred, ref, gt, m, w);
  EXPECT_NEAR(total, 1.0 * regularization_loss(pred, ref, gt) + recon, 1e-12);
}

TEST(Objectives, ReconstructionBackwardMatchesFiniteDifferences) {
  Rng rng(91);
  ImageBuffer pred = random_image(rng, 13, 12, 0.1, 0.9);
  const ImageBuffer gt = random_image(rng, 13, 12, 0.1, 0.9);
  // Separate the pair so the L1 kink is out of finite-difference reach.
  for (size_t i = 0; i < pred.data().size(); ++i)
    if (std::abs(pred.data()[i] - gt.data()[i]) < 0.02)
      pred.data()[i] += (pred.data()[i] >= gt.data()[i]) ? 0.05 : -0.05;

  GaussianModel m;
  const ImageBuffer grad = reconstruction_loss_backward(pred, gt);
  const double h = 1e-6;
  for (size_t i = 0; i < pred.data().size(); i += 9) {
    const double saved = pred.data()[i];
    pred.data()[i] = saved + h;
    const double plus = reconstruction_loss(pred, gt, m);
    pred.data()[i] = saved - h;
    const double minus = reconstruction_loss(pred, gt, m);
    pred.data()[i] = saved;
    EXPECT_NEAR(grad.data()[i], (plus - minus) / (2.0 * h), 1e-8);
  }
}

}  // namespace
}  // namespace xvgs
