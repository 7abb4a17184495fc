#pragma once

#include <cstddef>

#include "doamp/types.hpp"

namespace doamp {

double mse(const Vec& truth, const Vec& estimate);

/// 10 log10(peak^2 / MSE), capped at kPsnrCeiling (99 dB) for exact recovery.
double psnr(const Vec& truth, const Vec& estimate, double peak = 1.0);

/// Image layout for SSIM: rows x cols x channels, channel fastest.
struct ImageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 1;
  std::size_t size() const { return rows * cols * channels; }
};

/// Mean local SSIM over every full 11x11 Gaussian window (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1), averaged over channels. Images
/// smaller than the window use whole-image statistics instead.
double ssim(const Vec& truth, const Vec& estimate, const ImageShape& shape);

}  // namespace doamp
