#include "doamp/dct.hpp"

#include <cmath>
#include <numbers>

#include "doamp/errors.hpp"

namespace doamp {
namespace {

using cplx = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<std::size_t> make_bitrev(std::size_t n) {
  std::vector<std::size_t> rev(n, 0);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    rev[i] = r;
  }
  return rev;
}

std::vector<cplx> make_roots(std::size_t n) {
  std::vector<cplx> roots(n / 2 + 1);
  for (std::size_t k = 0; k < roots.size(); ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    roots[k] = {std::cos(angle), std::sin(angle)};
  }
  return roots;
}

void radix2_kernel(std::span<cplx> data, const std::vector<std::size_t>& rev,
                   const std::vector<cplx>& roots, bool inverse) {
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < rev[i]) std::swap(data[i], data[rev[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx w = roots[j * stride];
        if (inverse) w = std::conj(w);
        const cplx a = data[start + j];
        const cplx b = data[start + j + half] * w;
        data[start + j] = a + b;
        data[start + j + half] = a - b;
      }
    }
  }
}

}  // namespace

FftPlan::FftPlan(std::size_t length) : length_(length), pow2_(is_pow2(length)) {
  require(length >= 1, ErrorCode::kInvalidDimension, "FFT length must be >= 1");
  if (pow2_) {
    bitrev_ = make_bitrev(length_);
    twiddles_ = make_roots(length_);
    return;
  }
  padded_ = 1;
  while (padded_ < 2 * length_ - 1) padded_ <<= 1;
  chirp_.resize(length_);
  const auto two_l = static_cast<unsigned __int128>(2 * length_);
  for (std::size_t k = 0; k < length_; ++k) {
    // k^2 mod 2L keeps the phase argument small for large k.
    const auto k2 = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(k) * k) % two_l);
    const double angle = -std::numbers::pi * static_cast<double>(k2) /
                         static_cast<double>(length_);
    chirp_[k] = {std::cos(angle), std::sin(angle)};
  }
  padded_bitrev_ = make_bitrev(padded_);
  padded_twiddles_ = make_roots(padded_);
  chirp_spectrum_.assign(padded_, cplx{});
  chirp_spectrum_[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < length_; ++k) {
    chirp_spectrum_[k] = std::conj(chirp_[k]);
    chirp_spectrum_[padded_ - k] = std::conj(chirp_[k]);
  }
  radix2_kernel(chirp_spectrum_, padded_bitrev_, padded_twiddles_, false);
}

void FftPlan::forward(std::span<cplx> data) const {
  require(data.size() == length_, ErrorCode::kInvalidDimension, "FFT length mismatch");
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

void FftPlan::inverse(std::span<cplx> data) const {
  require(data.size() == length_, ErrorCode::kInvalidDimension, "FFT length mismatch");
  if (pow2_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
  const double scale = 1.0 / static_cast<double>(length_);
  for (auto& z : data) z *= scale;
}

void FftPlan::radix2(std::span<cplx> data, bool inverse) const {
  radix2_kernel(data, bitrev_, twiddles_, inverse);
}

void FftPlan::bluestein(std::span<cplx> data, bool inverse) const {
  // The inverse DFT is conj(DFT(conj(x))).
  std::vector<cplx> work(padded_, cplx{});
  for (std::size_t k = 0; k < length_; ++k) {
    const cplx x = inverse ? std::conj(data[k]) : data[k];
    work[k] = x * chirp_[k];
  }
  radix2_kernel(work, padded_bitrev_, padded_twiddles_, false);
  for (std::size_t k = 0; k < padded_; ++k) work[k] *= chirp_spectrum_[k];
  radix2_kernel(work, padded_bitrev_, padded_twiddles_, true);
  const double scale = 1.0 / static_cast<double>(padded_);
  for (std::size_t k = 0; k < length_; ++k) {
    const cplx y = work[k] * scale * chirp_[k];
    data[k] = inverse ? std::conj(y) : y;
  }
}

DctPlan::DctPlan(std::size_t n) : n_(n), fft_(n), shift_(n) {
  for (std::size_t k = 0; k < n_; ++k) {
    const double angle = -std::numbers::pi * static_cast<double>(k) /
                         (2.0 * static_cast<double>(n_));
    shift_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void DctPlan::forward(std::span<const double> in, std::span<double> out) const {
  require(in.size() == n_ && out.size() == n_, ErrorCode::kInvalidDimension,
          "DCT length mismatch");
  std::vector<cplx> v(n_);
  // Even samples ascending, odd samples descending from the end.
  for (std::size_t i = 0; 2 * i < n_; ++i) v[i] = in[2 * i];
  for (std::size_t i = 0; 2 * i + 1 < n_; ++i) v[n_ - 1 - i] = in[2 * i + 1];
  fft_.forward(v);
  const double dc_scale = std::sqrt(1.0 / static_cast<double>(n_));
  const double ac_scale = std::sqrt(2.0 / static_cast<double>(n_));
  for (std::size_t k = 0; k < n_; ++k) {
    const double c = (shift_[k] * v[k]).real();
    out[k] = c * (k == 0 ? dc_scale : ac_scale);
  }
}

void DctPlan::inverse(std::span<const double> in, std::span<double> out) const {
  require(in.size() == n_ && out.size() == n_, ErrorCode::kInvalidDimension,
          "DCT length mismatch");
  const double dc_unscale = std::sqrt(static_cast<double>(n_));
  const double ac_unscale = std::sqrt(static_cast<double>(n_) / 2.0);
  auto raw = [&](std::size_t k) {
    if (k == 0) return in[0] * dc_unscale;
    if (k >= n_) return 0.0;
    return in[k] * ac_unscale;
  };
  std::vector<cplx> v(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    const cplx w{raw(k), k == 0 ? 0.0 : -raw(n_ - k)};
    v[k] = std::conj(shift_[k]) * w;
  }
  fft_.inverse(v);
  for (std::size_t i = 0; 2 * i < n_; ++i) out[2 * i] = v[i].real();
  for (std::size_t i = 0; 2 * i + 1 < n_; ++i) out[2 * i + 1] = v[n_ - 1 - i].real();
}

std::vector<double> dct_transform(std::span<const double> v, bool inverse) {
  require(!v.empty(), ErrorCode::kInvalidDimension, "DCT of empty vector");
  DctPlan plan(v.size());
  std::vector<double> out(v.size());
  if (inverse) {
    plan.inverse(v, out);
  } else {
    plan.forward(v, out);
  }
  return out;
}

}  // namespace doamp
