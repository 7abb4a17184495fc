#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "doamp/dct.hpp"
#include "doamp/types.hpp"

namespace doamp {

/// Random-multiplexing compression operator F = S * P * T_dct * D.
///
/// D flips signs, T_dct is the orthonormal DCT-II, P permutes and S keeps m of
/// the n multiplexed coefficients. The mixing part Xi = P * T_dct * D is
/// orthogonal, so F has orthonormal rows and its pseudo-inverse is the
/// zero-filled inverse Xi^T * S^T.
///
/// Every factor is drawn from one CounterRng seeded with `seed`, in this
/// order: n signs, then a Fisher-Yates shuffle for the permutation, then a
/// partial Fisher-Yates shuffle of 0..n-1 whose first m entries (sorted)
/// form the selection. Immutable after construction.
class RmOperator {
 public:
  RmOperator(std::size_t n, std::size_t m, std::uint64_t seed);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::uint64_t seed() const { return seed_; }
  double ratio() const { return static_cast<double>(m_) / static_cast<double>(n_); }

  const std::vector<double>& signs() const { return signs_; }
  /// perm[i] is the DCT coefficient placed at multiplexed position i.
  const std::vector<std::size_t>& perm() const { return perm_; }
  const std::vector<std::size_t>& selection() const { return selection_; }

  /// x = F s (length m).
  Vec forward(const Vec& s) const;
  /// s = Xi^T S^T x (length n).
  Vec inverse(const Vec& x) const;

  /// Xi v and Xi^T v on full-length vectors.
  Vec mix(const Vec& v) const;
  Vec unmix(const Vec& v) const;

  /// S v and S^T x.
  Vec select(const Vec& v) const;
  Vec zero_fill(const Vec& x) const;

  /// "n=<n> m=<m> seed=<seed>"; the factors are regenerated from these.
  std::string descriptor() const;
  static RmOperator from_descriptor(const std::string& text);

 private:
  std::size_t n_;
  std::size_t m_;
  std::uint64_t seed_;
  std::vector<double> signs_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> selection_;
  std::shared_ptr<const DctPlan> dct_;
};

RmOperator build_rm_operator(std::size_t n, std::size_t m, std::uint64_t seed);

/// M = round(beta * N), clamped to [1, N].
std::size_t compressed_length(std::size_t n, double beta);

Vec rm_forward(const RmOperator& op, const Vec& s);
Vec rm_inverse(const RmOperator& op, const Vec& x);

}  // namespace doamp
