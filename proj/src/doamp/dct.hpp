#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace doamp {

/// Complex FFT of a fixed length. Power-of-two lengths use an iterative
/// radix-2 kernel; every other length goes through Bluestein's chirp-z
/// convolution on a padded power-of-two grid. Plans are immutable and can be
/// shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t length);

  std::size_t size() const { return length_; }

  /// In-place forward transform, X[k] = sum_n x[n] exp(-2 pi i n k / L).
  void forward(std::span<std::complex<double>> data) const;
  /// In-place inverse transform including the 1/L factor.
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void radix2(std::span<std::complex<double>> data, bool inverse) const;
  void bluestein(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t length_;
  bool pow2_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddles_;  // radix-2 roots for length_
  // Bluestein state
  std::size_t padded_ = 0;
  std::vector<std::complex<double>> chirp_;
  std::vector<std::complex<double>> chirp_spectrum_;
  std::vector<std::size_t> padded_bitrev_;
  std::vector<std::complex<double>> padded_twiddles_;
};

/// Orthonormal DCT-II / DCT-III pair of length N.
///
/// Normalization: coefficient 0 carries sqrt(1/N), all others sqrt(2/N), so
/// the transform matrix T satisfies T^T T = I and the inverse is T^T
/// (DCT-III). Evaluated in O(N log N) through Makhoul's even/odd reordering
/// and one length-N complex FFT.
class DctPlan {
 public:
  explicit DctPlan(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<const double> in, std::span<double> out) const;
  void inverse(std::span<const double> in, std::span<double> out) const;

 private:
  std::size_t n_;
  FftPlan fft_;
  std::vector<std::complex<double>> shift_;  // exp(-i pi k / 2N)
};

/// One-shot transform; builds a plan per call.
std::vector<double> dct_transform(std::span<const double> v, bool inverse);

}  // namespace doamp
