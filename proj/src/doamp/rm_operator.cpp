#include "doamp/rm_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doamp/errors.hpp"
#include "doamp/rng.hpp"

namespace doamp {

RmOperator::RmOperator(std::size_t n, std::size_t m, std::uint64_t seed)
    : n_(n), m_(m), seed_(seed) {
  if (m == 0 || m > n) {
    fail(ErrorCode::kInvalidDimension,
         "RM operator needs 1 <= m <= n (got n=" + std::to_string(n) +
             ", m=" + std::to_string(m) + ")");
  }
  CounterRng rng(seed);

  signs_.resize(n_);
  for (auto& s : signs_) s = rng.sign();

  perm_.resize(n_);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  for (std::size_t i = n_ - 1; i > 0; --i) {
    std::swap(perm_[i], perm_[rng.below(i + 1)]);
  }

  std::vector<std::size_t> pool(n_);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m_; ++i) {
    std::swap(pool[i], pool[i + rng.below(n_ - i)]);
  }
  selection_.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m_));
  std::sort(selection_.begin(), selection_.end());

  dct_ = std::make_shared<const DctPlan>(n_);
}

Vec RmOperator::mix(const Vec& v) const {
  require(static_cast<std::size_t>(v.size()) == n_, ErrorCode::kInvalidDimension,
          "mix: vector length must equal n");
  Vec signed_v(v.size());
  for (std::size_t i = 0; i < n_; ++i) signed_v[i] = signs_[i] * v[i];
  Vec coeffs(v.size());
  dct_->forward(as_span(signed_v), as_span(coeffs));
  Vec out(v.size());
  for (std::size_t i = 0; i < n_; ++i) out[i] = coeffs[perm_[i]];
  return out;
}

Vec RmOperator::unmix(const Vec& v) const {
  require(static_cast<std::size_t>(v.size()) == n_, ErrorCode::kInvalidDimension,
          "unmix: vector length must equal n");
  Vec coeffs(v.size());
  for (std::size_t i = 0; i < n_; ++i) coeffs[perm_[i]] = v[i];
  Vec out(v.size());
  dct_->inverse(as_span(coeffs), as_span(out));
  for (std::size_t i = 0; i < n_; ++i) out[i] *= signs_[i];
  return out;
}

Vec RmOperator::select(const Vec& v) const {
  require(static_cast<std::size_t>(v.size()) == n_, ErrorCode::kInvalidDimension,
          "select: vector length must equal n");
  Vec out(m_);
  for (std::size_t i = 0; i < m_; ++i) out[i] = v[selection_[i]];
  return out;
}

Vec RmOperator::zero_fill(const Vec& x) const {
  require(static_cast<std::size_t>(x.size()) == m_, ErrorCode::kInvalidDimension,
          "zero_fill: vector length must equal m");
  Vec out = Vec::Zero(n_);
  for (std::size_t i = 0; i < m_; ++i) out[selection_[i]] = x[i];
  return out;
}

Vec RmOperator::forward(const Vec& s) const {
  require(static_cast<std::size_t>(s.size()) == n_, ErrorCode::kInvalidDimension,
          "rm_forward: source length must equal n");
  return select(mix(s));
}

Vec RmOperator::inverse(const Vec& x) const {
  require(static_cast<std::size_t>(x.size()) == m_, ErrorCode::kInvalidDimension,
          "rm_inverse: input length must equal m");
  return unmix(zero_fill(x));
}

std::string RmOperator::descriptor() const {
  std::ostringstream os;
  os << "n=" << n_ << " m=" << m_ << " seed=" << seed_;
  return os.str();
}

RmOperator RmOperator::from_descriptor(const std::string& text) {
  std::istringstream is(text);
  std::string token;
  std::size_t n = 0, m = 0;
  std::uint64_t seed = 0;
  bool have_n = false, have_m = false, have_seed = false;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kFormat, "bad RM descriptor token: " + token);
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "n") {
        n = std::stoull(value);
        have_n = true;
      } else if (key == "m") {
        m = std::stoull(value);
        have_m = true;
      } else if (key == "seed") {
        seed = std::stoull(value);
        have_seed = true;
      } else {
        fail(ErrorCode::kFormat, "unknown RM descriptor key: " + key);
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::kFormat, "bad RM descriptor value: " + token);
    }
  }
  if (!(have_n && have_m && have_seed)) {
    fail(ErrorCode::kFormat, "RM descriptor needs n, m and seed");
  }
  return RmOperator(n, m, seed);
}

RmOperator build_rm_operator(std::size_t n, std::size_t m, std::uint64_t seed) {
  return RmOperator(n, m, seed);
}

std::size_t compressed_length(std::size_t n, double beta) {
  require(beta > 0.0 && beta <= 1.0, ErrorCode::kInvalidParameter,
          "compression ratio must lie in (0, 1]");
  const auto m = static_cast<long long>(std::llround(beta * static_cast<double>(n)));
  return static_cast<std::size_t>(std::clamp<long long>(m, 1, static_cast<long long>(n)));
}

Vec rm_forward(const RmOperator& op, const Vec& s) { return op.forward(s); }
Vec rm_inverse(const RmOperator& op, const Vec& x) { return op.inverse(x); }

}  // namespace doamp
