#pragma once

#include "artic/scene.hpp"

namespace artic {

/// Mean structural similarity over pixels and RGB channels, 11x11 Gaussian
/// window (sigma 1.5), C1=(0.01)^2, C2=(0.03)^2 on [0,1]-range images.
/// Window statistics are taken over the valid region only (windows fully
/// inside the image), so both images must be at least 11x11.
double ssim(const Image& a, const Image& b);

namespace detail {

/// Single-channel SSIM. When d_a is non-null, accumulates
/// coeff * d(ssim)/d(a) into it (same layout as the channel).
double ssim_channel(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b, int width,
                    int height, double coeff = 0.0, Eigen::ArrayXd* d_a = nullptr);

}  // namespace detail

}  // namespace artic
