// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "xvgs/image.hpp"

namespace xvgs {

namespace detail {

inline void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": image shape mismatch");
}

}  // namespace detail

/// Mean absolute difference over all pixel channels.
inline double l1_loss(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require_same_shape(a, b, "l1_loss");
  double sum = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) sum += std::abs(a.data()[i] - b.data()[i]);
  return sum / static_cast<double>(a.data().size());
}

/// d l1_loss / d a. The subgradient at a == b is taken as zero.
inline ImageBuffer l1_backward(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require_same_shape(a, b, "l1_backward");
  ImageBuffer out(a.width(), a.height());
  const double inv_n = 1.0 / static_cast<double>(a.data().size());
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    out.data()[i] = (d > 0.0) ? inv_n : (d < 0.0 ? -inv_n : 0.0);
  }
  return out;
}

/// 10 log10(1 / MSE) for unit-range images; +infinity for identical inputs.
inline double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require_same_shape(a, b, "psnr");
  double sum = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

inline const std::array<double, kSsimWindow>& ssim_window() {
  static const std::array<double, kSsimWindow> w = [] {
    std::array<double, kSsimWindow> v{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - (kSsimWindow - 1) / 2;
      v[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += v[i];
    }
    for (double& x : v) x /= sum;
    return v;
  }();
  return w;
}

struct Plane {
  std::vector<double> v;
  int w = 0, h = 0;

  Plane() = default;
  Plane(int w_, int h_) : v(static_cast<size_t>(w_) * h_, 0.0), w(w_), h(h_) {}
  double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

/// Separable window correlation with 'valid' boundary handling; the output
/// shrinks by window-1 in each dimension.
inline Plane sep_valid(const Plane& p) {
  const auto& win = ssim_window();
  Plane tmp(p.w - kSsimWindow + 1, p.h);
  for (int y = 0; y < tmp.h; ++y)
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += win[k] * p.at(x + k, y);
      tmp.at(x, y) = s;
    }
  Plane out(tmp.w, p.h - kSsimWindow + 1);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) s += win[k] * tmp.at(x, y + k);
      out.at(x, y) = s;
    }
  return out;
}

/// Adjoint of sep_valid: scatters an output-sized gradient back onto the
/// input grid (a 'full' correlation with the same symmetric window).
inline Plane sep_valid_adjoint(const Plane& g, int in_w, int in_h) {
  const auto& win = ssim_window();
  Plane tmp(g.w, in_h);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const double val = g.at(x, y);
      if (val == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) tmp.at(x, y + k) += win[k] * val;
    }
  Plane out(in_w, in_h);
  for (int y = 0; y < in_h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const double val = tmp.at(x, y);
      if (val == 0.0) continue;
      for (int k = 0; k < kSsimWindow; ++k) out.at(x + k, y) += win[k] * val;
    }
  return out;
}

inline Plane channel_plane(const ImageBuffer& img, int c) {
  Plane p(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) p.at(x, y) = img.at(x, y, c);
  return p;
}

struct SsimMaps {
  Plane mu_a, mu_b, m_aa, m_bb, m_ab;
};

inline SsimMaps ssim_maps(const Plane& a, const Plane& b) {
  Plane aa(a.w, a.h), bb(a.w, a.h), ab(a.w, a.h);
  for (size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }
  return {sep_valid(a), sep_valid(b), sep_valid(aa), sep_valid(bb), sep_valid(ab)};
}

inline void require_ssim_size(const ImageBuffer& a) {
  if (a.width() < kSsimWindow || a.height() < kSsimWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
}

}  // namespace detail

/// Structural similarity with the standard 11-tap Gaussian window
/// (sigma 1.5), averaged over all fully-covered window positions and the
/// three channels. Statistics use only complete windows, so a constant
/// image really has zero variance.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require_same_shape(a, b, "ssim");
  detail::require_ssim_size(a);
  double total = 0.0;
  size_t n = 0;
  for (int c = 0; c < 3; ++c) {
    const detail::Plane pa = detail::channel_plane(a, c);
    const detail::Plane pb = detail::channel_plane(b, c);
    const detail::SsimMaps maps = detail::ssim_maps(pa, pb);
    for (size_t i = 0; i < maps.mu_a.v.size(); ++i) {
      const double mu_a = maps.mu_a.v[i], mu_b = maps.mu_b.v[i];
      const double var_a = maps.m_aa.v[i] - mu_a * mu_a;
      const double var_b = maps.m_bb.v[i] - mu_b * mu_b;
      const double cov = maps.m_ab.v[i] - mu_a * mu_b;
      const double a1 = 2.0 * mu_a * mu_b + detail::kSsimC1;
      const double a2 = 2.0 * cov + detail::kSsimC2;
      const double b1 = mu_a * mu_a + mu_b * mu_b + detail::kSsimC1;
      const double b2 = var_a + var_b + detail::kSsimC2;
      total += (a1 * a2) / (b1 * b2);
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

/// d ssim / d a as a full-size image (zero where no window reaches).
inline ImageBuffer ssim_backward(const ImageBuffer& a, const ImageBuffer& b) {
  detail::require_same_shape(a, b, "ssim_backward");
  detail::require_ssim_size(a);
  ImageBuffer out(a.width(), a.height());
  const int out_w = a.width() - detail::kSsimWindow + 1;
  const int out_h = a.height() - detail::kSsimWindow + 1;
  const double inv_n = 1.0 / (3.0 * static_cast<double>(out_w) * static_cast<double>(out_h));

  for (int c = 0; c < 3; ++c) {
    const detail::Plane pa = detail::channel_plane(a, c);
    const detail::Plane pb = detail::channel_plane(b, c);
    const detail::SsimMaps maps = detail::ssim_maps(pa, pb);

    detail::Plane d_mu(out_w, out_h), d_maa(out_w, out_h), d_mab(out_w, out_h);
    for (size_t i = 0; i < maps.mu_a.v.size(); ++i) {
      const double mu_a = maps.mu_a.v[i], mu_b = maps.mu_b.v[i];
      const double var_a = maps.m_aa.v[i] - mu_a * mu_a;
      const double var_b = maps.m_bb.v[i] - mu_b * mu_b;
      const double cov = maps.m_ab.v[i] - mu_a * mu_b;
      const double a1 = 2.0 * mu_a * mu_b + detail::kSsimC1;
      const double a2 = 2.0 * cov + detail::kSsimC2;
      const double b1 = mu_a * mu_a + mu_b * mu_b + detail::kSsimC1;
      const double b2 = var_a + var_b + detail::kSsimC2;
      const double s = (a1 * a2) / (b1 * b2);

      // Derivatives with mu_a and the raw moments m_aa, m_ab independent;
      // var/cov dependence on mu_a is folded into the mu term.
      d_maa.v[i] = -s / b2;
      d_mab.v[i] = 2.0 * a1 / (b1 * b2);
      d_mu.v[i] = 2.0 * mu_b * (a2 - a1) / (b1 * b2) + 2.0 * mu_a * s * (b1 - b2) / (b1 * b2);
    }

    const detail::Plane g_mu = detail::sep_valid_adjoint(d_mu, a.width(), a.height());
    const detail::Plane g_maa = detail::sep_valid_adjoint(d_maa, a.width(), a.height());
    const detail::Plane g_mab = detail::sep_valid_adjoint(d_mab, a.width(), a.height());
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x)
        out.at(x, y, c) =
            inv_n * (g_mu.at(x, y) + 2.0 * pa.at(x, y) * g_maa.at(x, y) +
                     pb.at(x, y) * g_mab.at(x, y));
  }
  return out;
}

}  // namespace xvgs
