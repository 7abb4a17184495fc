#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "doamp/rm_operator.hpp"
#include "doamp/types.hpp"

namespace doamp {

/// Matrix with orthonormal columns, stored in whichever form is cheapest to
/// apply. `apply` maps column coordinates to the ambient space, and
/// `apply_transpose` maps back.
class OrthoBasis {
 public:
  struct Identity {
    std::size_t n;
  };
  struct Dense {
    Mat q;
  };
  /// Square Xi = P * T_dct * D from a full-rate RM operator.
  struct Multiplexed {
    std::shared_ptr<const RmOperator> op;
  };
  /// S^T * inner: the inner basis spread onto the selected coordinates of a
  /// longer vector (zero elsewhere).
  struct Embedded {
    std::shared_ptr<const OrthoBasis> inner;
    std::shared_ptr<const RmOperator> op;
  };

  static OrthoBasis identity(std::size_t n) { return OrthoBasis(Identity{n}); }
  static OrthoBasis dense(Mat q) { return OrthoBasis(Dense{std::move(q)}); }
  static OrthoBasis multiplexed(std::size_t n, std::uint64_t seed);
  static OrthoBasis embedded(OrthoBasis inner, std::shared_ptr<const RmOperator> op);

  std::size_t rows() const;
  std::size_t cols() const;

  Vec apply(const Vec& coords) const;
  Vec apply_transpose(const Vec& v) const;
  Mat to_dense() const;

  const char* kind_name() const;

 private:
  using Storage = std::variant<Identity, Dense, Multiplexed, Embedded>;
  explicit OrthoBasis(Storage s) : storage_(std::move(s)) {}
  Storage storage_;
};

enum class ChannelType { kIdentity, kConditioned, kFading, kMatrix };
enum class SpectrumShape { kLinear, kGeometric };
enum class BasisKind { kDense, kMultiplexed };

struct FadingProfile {
  std::size_t num_taps = 1;
  std::vector<double> tap_powers{1.0};
  double doppler_rate = 0.0;  // cycles per symbol
  std::size_t num_symbols = 1;

  void validate() const;
};

/// Everything needed to regenerate a channel deterministically.
struct ChannelSpec {
  ChannelType type = ChannelType::kIdentity;
  std::size_t dim = 1;
  double kappa = 1.0;
  SpectrumShape shape = SpectrumShape::kGeometric;
  BasisKind basis = BasisKind::kDense;
  FadingProfile profile;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static ChannelSpec from_json(const std::string& text);
};

const char* to_string(ChannelType t);
const char* to_string(SpectrumShape s);
const char* to_string(BasisKind b);
ChannelType parse_channel_type(const std::string& s);
SpectrumShape parse_spectrum_shape(const std::string& s);
BasisKind parse_basis_kind(const std::string& s);

/// A = U * diag(sigma) * V^T plus the noise level of y = A x + n.
/// Immutable after construction.
class ChannelInstance {
 public:
  ChannelInstance(OrthoBasis u, Vec singular, OrthoBasis v, double sigma2,
                  std::uint64_t seed, ChannelSpec spec,
                  std::optional<Mat> dense = std::nullopt);

  std::size_t m_rows() const { return u_.rows(); }
  std::size_t n_cols() const { return v_.rows(); }
  std::size_t rank() const { return static_cast<std::size_t>(singular_.size()); }
  const OrthoBasis& u() const { return u_; }
  const OrthoBasis& v() const { return v_; }
  const Vec& singular_values() const { return singular_; }
  double sigma2() const { return sigma2_; }
  std::uint64_t seed() const { return seed_; }
  const ChannelSpec& spec() const { return spec_; }
  const std::optional<Mat>& stored_dense() const { return dense_; }

  double condition_number() const;

  Vec apply(const Vec& x) const;
  Vec apply_transpose(const Vec& y) const;
  Mat to_dense() const;

 private:
  OrthoBasis u_;
  Vec singular_;
  OrthoBasis v_;
  double sigma2_;
  std::uint64_t seed_;
  ChannelSpec spec_;
  std::optional<Mat> dense_;
};

ChannelInstance gen_identity_channel(std::size_t dim, double sigma2);

ChannelInstance gen_conditioned_channel(std::size_t dim, double kappa,
                                        SpectrumShape shape, double sigma2,
                                        std::uint64_t seed,
                                        BasisKind basis = BasisKind::kDense);

ChannelInstance gen_tdl_fading_channel(std::size_t dim, const FadingProfile& profile,
                                       double sigma2, std::uint64_t seed);

/// SVD of an explicit matrix.
ChannelInstance channel_from_matrix(const Mat& a, double sigma2);

ChannelInstance generate_channel(const ChannelSpec& spec);

/// Channel seen by the multiplexed-domain receiver: A * S, where S selects
/// the op.m() transmitted coefficients out of op.n(). Same U, sigma and
/// noise; the right basis is zero-padded through S^T.
ChannelInstance embed_selection(const ChannelInstance& ch,
                                std::shared_ptr<const RmOperator> op);

/// Complex tap gains, indexed [symbol][tap]. Each tap is a stationary
/// first-order autoregression with marginal CN(0, power) and lag-one
/// correlation J0(2 pi doppler_rate).
using TapProcess = std::vector<std::vector<std::complex<double>>>;
TapProcess draw_fading_taps(const FadingProfile& profile, std::uint64_t seed);

/// Lag-one correlation coefficient used by the tap autoregression.
double jakes_lag1(double doppler_rate);

/// y = A x + n with n ~ N(0, sigma2 I) drawn from `noise_seed`.
Vec transmit(const ChannelInstance& ch, const Vec& x, std::uint64_t noise_seed);

}  // namespace doamp
