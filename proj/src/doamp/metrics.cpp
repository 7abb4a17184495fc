#include "doamp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "doamp/errors.hpp"
#include "doamp/oamp.hpp"

namespace doamp {

double mse(const Vec& truth, const Vec& estimate) {
  require(truth.size() == estimate.size() && truth.size() > 0, ErrorCode::kInvalidDimension,
          "metric inputs must have equal, non-zero length");
  return (truth - estimate).squaredNorm() / static_cast<double>(truth.size());
}

double psnr(const Vec& truth, const Vec& estimate, double peak) {
  require(peak > 0.0, ErrorCode::kInvalidParameter, "PSNR peak must be > 0");
  const double err = mse(truth, estimate);
  if (!(err > 0.0)) return kPsnrCeiling;
  return std::min(10.0 * std::log10(peak * peak / err), kPsnrCeiling);
}

namespace {

constexpr int kWindow = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

double ssim_formula(double mx, double my, double vx, double vy, double cxy) {
  return ((2 * mx * my + kC1) * (2 * cxy + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
}

// a, b are one channel plane, row-major rows x cols.
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t rows,
                  std::size_t cols) {
  if (rows < static_cast<std::size_t>(kWindow) || cols < static_cast<std::size_t>(kWindow)) {
    const double n = static_cast<double>(a.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      mx += a[i];
      my += b[i];
    }
    mx /= n;
    my /= n;
    double vx = 0, vy = 0, cxy = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      vx += (a[i] - mx) * (a[i] - mx);
      vy += (b[i] - my) * (b[i] - my);
      cxy += (a[i] - mx) * (b[i] - my);
    }
    return ssim_formula(mx, my, vx / n, vy / n, cxy / n);
  }
  // Separable filtering: horizontal pass into `tmp`, then vertical on the fly.
  const auto taps = gaussian_taps();
  const std::size_t out_cols = cols - kWindow + 1;
  const std::size_t out_rows = rows - kWindow + 1;
  std::array<std::vector<double>, 5> horiz;
  for (auto& h : horiz) h.assign(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < kWindow; ++k) {
        const double x = a[r * cols + c + k];
        const double y = b[r * cols + c + k];
        s[0] += taps[k] * x;
        s[1] += taps[k] * y;
        s[2] += taps[k] * x * x;
        s[3] += taps[k] * y * y;
        s[4] += taps[k] * x * y;
      }
      for (int q = 0; q < 5; ++q) horiz[q][r * out_cols + c] = s[q];
    }
  }
  double total = 0.0;
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < kWindow; ++k) {
        for (int q = 0; q < 5; ++q) s[q] += taps[k] * horiz[q][(r + k) * out_cols + c];
      }
      total += ssim_formula(s[0], s[1], s[2] - s[0] * s[0], s[3] - s[1] * s[1], s[4] - s[0] * s[1]);
    }
  }
  return total / static_cast<double>(out_rows * out_cols);
}

}  // namespace

double ssim(const Vec& truth, const Vec& estimate, const ImageShape& shape) {
  require(shape.rows >= 1 && shape.cols >= 1 && shape.channels >= 1, ErrorCode::kInvalidDimension,
          "SSIM needs a non-empty image");
  require(static_cast<std::size_t>(truth.size()) == shape.size() &&
              static_cast<std::size_t>(estimate.size()) == shape.size(),
          ErrorCode::kInvalidDimension, "SSIM inputs must match the image shape");
  const std::size_t plane = shape.rows * shape.cols;
  double total = 0.0;
  std::vector<double> a(plane), b(plane);
  for (std::size_t ch = 0; ch < shape.channels; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      a[i] = truth[static_cast<Eigen::Index>(i * shape.channels + ch)];
      b[i] = estimate[static_cast<Eigen::Index>(i * shape.channels + ch)];
    }
    total += ssim_plane(a, b, shape.rows, shape.cols);
  }
  return total / static_cast<double>(shape.channels);
}

}  // namespace doamp
