#include "doamp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doamp/errors.hpp"
#include "doamp/rng.hpp"
#include "json.hpp"

namespace doamp {

// ---------------------------------------------------------------------------
// OrthoBasis

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

OrthoBasis OrthoBasis::multiplexed(std::size_t n, std::uint64_t seed) {
  return OrthoBasis(Multiplexed{std::make_shared<const RmOperator>(n, n, seed)});
}

OrthoBasis OrthoBasis::embedded(OrthoBasis inner, std::shared_ptr<const RmOperator> op) {
  require(inner.rows() == op->m(), ErrorCode::kInvalidDimension,
          "embedded basis: inner rows must equal the number of selected coefficients");
  return OrthoBasis(
      Embedded{std::make_shared<const OrthoBasis>(std::move(inner)), std::move(op)});
}

std::size_t OrthoBasis::rows() const {
  return std::visit(
      overloaded{[](const Identity& b) { return b.n; },
                 [](const Dense& b) { return static_cast<std::size_t>(b.q.rows()); },
                 [](const Multiplexed& b) { return b.op->n(); },
                 [](const Embedded& b) { return b.op->n(); }},
      storage_);
}

std::size_t OrthoBasis::cols() const {
  return std::visit(
      overloaded{[](const Identity& b) { return b.n; },
                 [](const Dense& b) { return static_cast<std::size_t>(b.q.cols()); },
                 [](const Multiplexed& b) { return b.op->n(); },
                 [](const Embedded& b) { return b.inner->cols(); }},
      storage_);
}

Vec OrthoBasis::apply(const Vec& coords) const {
  require(static_cast<std::size_t>(coords.size()) == cols(), ErrorCode::kInvalidDimension,
          "basis apply: coordinate length mismatch");
  return std::visit(
      overloaded{[&](const Identity&) -> Vec { return coords; },
                 [&](const Dense& b) -> Vec { return b.q * coords; },
                 [&](const Multiplexed& b) -> Vec { return b.op->mix(coords); },
                 [&](const Embedded& b) -> Vec {
                   return b.op->zero_fill(b.inner->apply(coords));
                 }},
      storage_);
}

Vec OrthoBasis::apply_transpose(const Vec& v) const {
  require(static_cast<std::size_t>(v.size()) == rows(), ErrorCode::kInvalidDimension,
          "basis transpose: vector length mismatch");
  return std::visit(
      overloaded{[&](const Identity&) -> Vec { return v; },
                 [&](const Dense& b) -> Vec { return b.q.transpose() * v; },
                 [&](const Multiplexed& b) -> Vec { return b.op->unmix(v); },
                 [&](const Embedded& b) -> Vec {
                   return b.inner->apply_transpose(b.op->select(v));
                 }},
      storage_);
}

Mat OrthoBasis::to_dense() const {
  if (const auto* d = std::get_if<Dense>(&storage_)) return d->q;
  const auto c = static_cast<Eigen::Index>(cols());
  Mat out(static_cast<Eigen::Index>(rows()), c);
  for (Eigen::Index j = 0; j < c; ++j) out.col(j) = apply(Vec::Unit(c, j));
  return out;
}

const char* OrthoBasis::kind_name() const {
  return std::visit(overloaded{[](const Identity&) { return "identity"; },
                               [](const Dense&) { return "dense"; },
                               [](const Multiplexed&) { return "multiplexed"; },
                               [](const Embedded&) { return "embedded"; }},
                    storage_);
}

// ---------------------------------------------------------------------------
// Names and descriptors

const char* to_string(ChannelType t) {
  switch (t) {
    case ChannelType::kIdentity: return "identity";
    case ChannelType::kConditioned: return "conditioned";
    case ChannelType::kFading: return "fading";
    case ChannelType::kMatrix: return "matrix";
  }
  return "?";
}

const char* to_string(SpectrumShape s) {
  return s == SpectrumShape::kLinear ? "linear" : "geometric";
}

const char* to_string(BasisKind b) {
  return b == BasisKind::kDense ? "dense" : "multiplexed";
}

ChannelType parse_channel_type(const std::string& s) {
  if (s == "identity" || s == "awgn") return ChannelType::kIdentity;
  if (s == "conditioned") return ChannelType::kConditioned;
  if (s == "fading" || s == "tdl") return ChannelType::kFading;
  fail(ErrorCode::kInvalidParameter, "unknown channel type: " + s);
}

SpectrumShape parse_spectrum_shape(const std::string& s) {
  if (s == "linear") return SpectrumShape::kLinear;
  if (s == "geometric") return SpectrumShape::kGeometric;
  fail(ErrorCode::kInvalidParameter, "unknown spectrum shape: " + s);
}

BasisKind parse_basis_kind(const std::string& s) {
  if (s == "dense" || s == "haar") return BasisKind::kDense;
  if (s == "multiplexed" || s == "fast") return BasisKind::kMultiplexed;
  fail(ErrorCode::kInvalidParameter, "unknown basis kind: " + s);
}

void FadingProfile::validate() const {
  require(num_taps >= 1, ErrorCode::kInvalidParameter, "fading profile needs >= 1 tap");
  require(tap_powers.size() == num_taps, ErrorCode::kInvalidParameter,
          "tap_powers length must equal num_taps");
  double total = 0.0;
  for (double p : tap_powers) {
    require(p >= 0.0 && std::isfinite(p), ErrorCode::kInvalidParameter,
            "tap powers must be finite and nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::kInvalidParameter,
          "tap powers must sum to 1");
  require(doppler_rate >= 0.0 && std::isfinite(doppler_rate), ErrorCode::kInvalidParameter,
          "doppler_rate must be >= 0");
  require(num_symbols >= 1, ErrorCode::kInvalidParameter, "num_symbols must be >= 1");
}

std::string ChannelSpec::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = to_string(type);
  j["dim"] = dim;
  if (type == ChannelType::kConditioned) {
    j["kappa"] = kappa;
    j["shape"] = to_string(shape);
    j["basis"] = to_string(basis);
  }
  if (type == ChannelType::kFading) {
    j["num_taps"] = profile.num_taps;
    j["tap_powers"] = profile.tap_powers;
    j["doppler_rate"] = profile.doppler_rate;
    j["num_symbols"] = profile.num_symbols;
  }
  j["sigma2"] = sigma2;
  j["seed"] = seed;
  return j.dump();
}

ChannelSpec ChannelSpec::from_json(const std::string& text) {
  ChannelSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.type = parse_channel_type(j.at("type").get<std::string>());
    spec.dim = j.at("dim").get<std::size_t>();
    spec.sigma2 = j.value("sigma2", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.kappa = j.value("kappa", 1.0);
    spec.shape = parse_spectrum_shape(j.value("shape", std::string("geometric")));
    spec.basis = parse_basis_kind(j.value("basis", std::string("dense")));
    if (spec.type == ChannelType::kFading) {
      spec.profile.num_taps = j.at("num_taps").get<std::size_t>();
      spec.profile.tap_powers = j.at("tap_powers").get<std::vector<double>>();
      spec.profile.doppler_rate = j.value("doppler_rate", 0.0);
      spec.profile.num_symbols = j.value("num_symbols", std::size_t{1});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("channel descriptor: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// ChannelInstance

ChannelInstance::ChannelInstance(OrthoBasis u, Vec singular, OrthoBasis v, double sigma2,
                                 std::uint64_t seed, ChannelSpec spec,
                                 std::optional<Mat> dense)
    : u_(std::move(u)),
      singular_(std::move(singular)),
      v_(std::move(v)),
      sigma2_(sigma2),
      seed_(seed),
      spec_(std::move(spec)),
      dense_(std::move(dense)) {
  require(sigma2_ >= 0.0 && std::isfinite(sigma2_), ErrorCode::kInvalidParameter,
          "noise variance must be finite and >= 0");
  require(u_.cols() == static_cast<std::size_t>(singular_.size()) &&
              v_.cols() == static_cast<std::size_t>(singular_.size()),
          ErrorCode::kInvalidDimension, "SVD factor shapes disagree");
  for (Eigen::Index i = 0; i < singular_.size(); ++i) {
    require(singular_[i] >= 0.0, ErrorCode::kInvalidParameter,
            "singular values must be nonnegative");
    if (i > 0) {
      require(singular_[i] <= singular_[i - 1], ErrorCode::kInvalidParameter,
              "singular values must be nonincreasing");
    }
  }
}

double ChannelInstance::condition_number() const {
  if (singular_.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = singular_[singular_.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return singular_[0] / smin;
}

Vec ChannelInstance::apply(const Vec& x) const {
  require(static_cast<std::size_t>(x.size()) == n_cols(), ErrorCode::kInvalidDimension,
          "channel input length mismatch");
  Vec c = v_.apply_transpose(x);
  c.array() *= singular_.array();
  return u_.apply(c);
}

Vec ChannelInstance::apply_transpose(const Vec& y) const {
  require(static_cast<std::size_t>(y.size()) == m_rows(), ErrorCode::kInvalidDimension,
          "channel output length mismatch");
  Vec c = u_.apply_transpose(y);
  c.array() *= singular_.array();
  return v_.apply(c);
}

Mat ChannelInstance::to_dense() const {
  if (dense_) return *dense_;
  return u_.to_dense() * singular_.asDiagonal() * v_.to_dense().transpose();
}

// ---------------------------------------------------------------------------
// Generators

ChannelInstance gen_identity_channel(std::size_t dim, double sigma2) {
  require(dim >= 1, ErrorCode::kInvalidDimension, "channel dimension must be >= 1");
  ChannelSpec spec;
  spec.type = ChannelType::kIdentity;
  spec.dim = dim;
  spec.sigma2 = sigma2;
  return ChannelInstance(OrthoBasis::identity(dim), Vec::Ones(static_cast<Eigen::Index>(dim)),
                         OrthoBasis::identity(dim), sigma2, 0, spec);
}

namespace {

Mat haar_orthogonal(std::size_t dim, CounterRng& rng) {
  const auto n = static_cast<Eigen::Index>(dim);
  Mat g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  const Mat& r = qr.matrixQR();
  // Fixing sign(diag R) > 0 makes Q Haar distributed.
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

ChannelInstance gen_conditioned_channel(std::size_t dim, double kappa, SpectrumShape shape,
                                        double sigma2, std::uint64_t seed, BasisKind basis) {
  require(dim >= 1, ErrorCode::kInvalidDimension, "channel dimension must be >= 1");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    fail(ErrorCode::kInvalidParameter, "condition number must be >= 1");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  Vec sv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    sv[i] = shape == SpectrumShape::kLinear ? 1.0 - (1.0 - 1.0 / kappa) * frac
                                            : std::pow(kappa, -frac);
  }
  sv *= 1.0 / std::sqrt(sv.squaredNorm() / static_cast<double>(n));

  ChannelSpec spec;
  spec.type = ChannelType::kConditioned;
  spec.dim = dim;
  spec.kappa = kappa;
  spec.shape = shape;
  spec.basis = basis;
  spec.sigma2 = sigma2;
  spec.seed = seed;

  if (basis == BasisKind::kMultiplexed) {
    return ChannelInstance(OrthoBasis::multiplexed(dim, derive_seed(seed, 1)), sv,
                           OrthoBasis::multiplexed(dim, derive_seed(seed, 2)), sigma2, seed,
                           spec);
  }
  CounterRng rng(seed);
  Mat u = haar_orthogonal(dim, rng);
  Mat v = haar_orthogonal(dim, rng);
  return ChannelInstance(OrthoBasis::dense(std::move(u)), sv, OrthoBasis::dense(std::move(v)),
                         sigma2, seed, spec);
}

double jakes_lag1(double doppler_rate) {
  return std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * doppler_rate);
}

TapProcess draw_fading_taps(const FadingProfile& profile, std::uint64_t seed) {
  profile.validate();
  CounterRng rng(seed);
  const double rho = jakes_lag1(profile.doppler_rate);
  const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  TapProcess taps(profile.num_symbols,
                  std::vector<std::complex<double>>(profile.num_taps));
  for (std::size_t k = 0; k < profile.num_symbols; ++k) {
    for (std::size_t l = 0; l < profile.num_taps; ++l) {
      const double scale = std::sqrt(profile.tap_powers[l] / 2.0);
      const std::complex<double> w{scale * rng.normal(), scale * rng.normal()};
      taps[k][l] = k == 0 ? w : rho * taps[k - 1][l] + innovation * w;
    }
  }
  return taps;
}

ChannelInstance gen_tdl_fading_channel(std::size_t dim, const FadingProfile& profile,
                                       double sigma2, std::uint64_t seed) {
  profile.validate();
  require(dim >= 1, ErrorCode::kInvalidDimension, "channel dimension must be >= 1");
  if (profile.num_taps > dim) {
    fail(ErrorCode::kInvalidParameter, "fading profile has more taps than the channel dimension");
  }
  const TapProcess taps = draw_fading_taps(profile, seed);
  const std::size_t samples = (dim + 1) / 2;  // complex samples
  Mat full = Mat::Zero(static_cast<Eigen::Index>(2 * samples),
                       static_cast<Eigen::Index>(2 * samples));
  for (std::size_t t = 0; t < samples; ++t) {
    const std::size_t block =
        std::min(t * profile.num_symbols / samples, profile.num_symbols - 1);
    for (std::size_t l = 0; l < profile.num_taps && l <= t; ++l) {
      const std::complex<double> h = taps[block][l];
      const auto r = static_cast<Eigen::Index>(2 * t);
      const auto c = static_cast<Eigen::Index>(2 * (t - l));
      full(r, c) = h.real();
      full(r, c + 1) = -h.imag();
      full(r + 1, c) = h.imag();
      full(r + 1, c + 1) = h.real();
    }
  }
  const auto n = static_cast<Eigen::Index>(dim);
  Mat a = full.topLeftCorner(n, n);
  ChannelInstance svd = channel_from_matrix(a, sigma2);
  ChannelSpec spec;
  spec.type = ChannelType::kFading;
  spec.dim = dim;
  spec.profile = profile;
  spec.sigma2 = sigma2;
  spec.seed = seed;
  return ChannelInstance(svd.u(), svd.singular_values(), svd.v(), sigma2, seed, spec,
                         std::move(a));
}

ChannelInstance channel_from_matrix(const Mat& a, double sigma2) {
  require(a.rows() >= 1 && a.cols() >= 1, ErrorCode::kInvalidDimension, "empty channel matrix");
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ChannelSpec spec;
  spec.type = ChannelType::kMatrix;
  spec.dim = static_cast<std::size_t>(a.rows());
  spec.sigma2 = sigma2;
  return ChannelInstance(OrthoBasis::dense(svd.matrixU()), svd.singularValues(),
                         OrthoBasis::dense(svd.matrixV()), sigma2, 0, spec, a);
}

ChannelInstance generate_channel(const ChannelSpec& spec) {
  switch (spec.type) {
    case ChannelType::kIdentity:
      return gen_identity_channel(spec.dim, spec.sigma2);
    case ChannelType::kConditioned:
      return gen_conditioned_channel(spec.dim, spec.kappa, spec.shape, spec.sigma2, spec.seed,
                                     spec.basis);
    case ChannelType::kFading:
      return gen_tdl_fading_channel(spec.dim, spec.profile, spec.sigma2, spec.seed);
    case ChannelType::kMatrix:
      break;
  }
  fail(ErrorCode::kInvalidParameter, "matrix channels cannot be regenerated from a descriptor");
}

ChannelInstance embed_selection(const ChannelInstance& ch,
                                std::shared_ptr<const RmOperator> op) {
  require(ch.n_cols() == op->m(), ErrorCode::kInvalidDimension,
          "channel input length must equal the compressed length");
  return ChannelInstance(ch.u(), ch.singular_values(), OrthoBasis::embedded(ch.v(), std::move(op)),
                         ch.sigma2(), ch.seed(), ch.spec());
}

Vec transmit(const ChannelInstance& ch, const Vec& x, std::uint64_t noise_seed) {
  require(static_cast<std::size_t>(x.size()) == ch.n_cols(), ErrorCode::kInvalidDimension,
          "transmit: input length must equal channel columns");
  Vec y = ch.apply(x);
  if (ch.sigma2() > 0.0) {
    CounterRng rng(noise_seed);
    const double sd = std::sqrt(ch.sigma2());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += sd * rng.normal();
  }
  return y;
}

}  // namespace doamp
