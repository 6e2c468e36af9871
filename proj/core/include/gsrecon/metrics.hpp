#pragma once

#include "gsrecon/image.hpp"

namespace gsr {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

double mse(const Image& a, const Image& b);

/// Peak signal-to-noise ratio on unit-range images; +infinity for identical images.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all valid 11x11 Gaussian windows (sigma 1.5) and channels, dynamic range 1.
/// Both images must be at least 11 pixels on each side.
double ssim(const Image& a, const Image& b);

}  // namespace gsr
