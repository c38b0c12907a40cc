#include "artic/ssim.hpp"

#include <array>
#include <cmath>

#include "artic/common.hpp"

namespace artic {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kRadius;
    w[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Valid separable convolution: horizontal then vertical.
// in: height x width, out: (height-10) x (width-10).
void conv_valid(const Eigen::ArrayXd& in, int width, int height,
                const std::array<double, kWindow>& k, Eigen::ArrayXd& tmp,
                Eigen::ArrayXd& out) {
  const int ow = width - kWindow + 1;
  const int oh = height - kWindow + 1;
  tmp.resize(static_cast<Eigen::Index>(ow) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < kWindow; ++j) s += k[j] * in[y * width + x + j];
      tmp[y * ow + x] = s;
    }
  out.resize(static_cast<Eigen::Index>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int j = 0; j < kWindow; ++j) s += k[j] * tmp[(y + j) * ow + x];
      out[y * ow + x] = s;
    }
}

// Adjoint of conv_valid: scatters output-space gradients back to input space.
void conv_valid_adjoint(const Eigen::ArrayXd& d_out, int width, int height,
                        const std::array<double, kWindow>& k, Eigen::ArrayXd& d_tmp,
                        Eigen::ArrayXd& d_in) {
  const int ow = width - kWindow + 1;
  const int oh = height - kWindow + 1;
  d_tmp.setZero(static_cast<Eigen::Index>(ow) * height);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      const double g = d_out[y * ow + x];
      if (g == 0.0) continue;
      for (int j = 0; j < kWindow; ++j) d_tmp[(y + j) * ow + x] += k[j] * g;
    }
  d_in.setZero(static_cast<Eigen::Index>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < ow; ++x) {
      const double g = d_tmp[y * ow + x];
      if (g == 0.0) continue;
      for (int j = 0; j < kWindow; ++j) d_in[y * width + x + j] += k[j] * g;
    }
}

}  // namespace

namespace detail {

double ssim_channel(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b, int width,
                    int height, double coeff, Eigen::ArrayXd* d_a) {
  if (width < kWindow || height < kWindow)
    throw DimensionError("ssim: images must be at least 11x11");
  static const std::array<double, kWindow> k = gaussian_window();

  Eigen::ArrayXd tmp, mu1, mu2, m11, m22, m12;
  conv_valid(a, width, height, k, tmp, mu1);
  conv_valid(b, width, height, k, tmp, mu2);
  conv_valid((a * a).eval(), width, height, k, tmp, m11);
  conv_valid((b * b).eval(), width, height, k, tmp, m22);
  conv_valid((a * b).eval(), width, height, k, tmp, m12);

  const Eigen::Index n = mu1.size();
  double total = 0.0;
  Eigen::ArrayXd d_mu1, d_m11, d_m12;
  if (d_a) {
    d_mu1.setZero(n);
    d_m11.setZero(n);
    d_m12.setZero(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s1 = m11[i] - mu1[i] * mu1[i];
    const double s2 = m22[i] - mu2[i] * mu2[i];
    const double s12 = m12[i] - mu1[i] * mu2[i];
    const double va = 2.0 * mu1[i] * mu2[i] + kC1;
    const double vb = 2.0 * s12 + kC2;
    const double vc = mu1[i] * mu1[i] + mu2[i] * mu2[i] + kC1;
    const double vd = s1 + s2 + kC2;
    total += (va * vb) / (vc * vd);
    if (d_a) {
      const double inv_cd = 1.0 / (vc * vd);
      const double f = va * vb * inv_cd;
      // d ssim_i / d {mu1, sigma1^2, sigma12} at this output pixel
      const double g_mu1 = 2.0 * mu2[i] * vb * inv_cd - f * 2.0 * mu1[i] / vc;
      const double g_s1 = -f / vd;
      const double g_s12 = 2.0 * va * inv_cd;
      // map through s1 = m11 - mu1^2, s12 = m12 - mu1*mu2
      d_mu1[i] = g_mu1 - 2.0 * mu1[i] * g_s1 - mu2[i] * g_s12;
      d_m11[i] = g_s1;
      d_m12[i] = g_s12;
    }
  }
  const double mean = total / static_cast<double>(n);

  if (d_a) {
    const double scale = coeff / static_cast<double>(n);
    Eigen::ArrayXd d_tmp, back;
    conv_valid_adjoint((d_mu1 * scale).eval(), width, height, k, d_tmp, back);
    *d_a += back;
    conv_valid_adjoint((d_m11 * scale).eval(), width, height, k, d_tmp, back);
    *d_a += 2.0 * a * back;
    conv_valid_adjoint((d_m12 * scale).eval(), width, height, k, d_tmp, back);
    *d_a += b * back;
  }
  return mean;
}

}  // namespace detail

double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionError("ssim: image dimensions differ");
  const double sr = detail::ssim_channel(a.r, b.r, a.width, a.height);
  const double sg = detail::ssim_channel(a.g, b.g, a.width, a.height);
  const double sb = detail::ssim_channel(a.b, b.b, a.width, a.height);
  return (sr + sg + sb) / 3.0;
}

}  // namespace artic
