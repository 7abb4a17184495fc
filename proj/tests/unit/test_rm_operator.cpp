#include <gtest/gtest.h>

#include "doamp/errors.hpp"
#include "doamp/rm_operator.hpp"
#include "oracles.hpp"

using namespace doamp;
using doamp::testing::dct_matrix;
using doamp::testing::random_vec;

namespace {

/// S * P * T * D assembled by dense multiplication.
Mat dense_operator(const RmOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.n());
  const auto m = static_cast<Eigen::Index>(op.m());
  Mat d = Mat::Zero(n, n), p = Mat::Zero(n, n), s = Mat::Zero(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = op.signs()[static_cast<std::size_t>(i)];
    p(i, static_cast<Eigen::Index>(op.perm()[static_cast<std::size_t>(i)])) = 1.0;
  }
  for (Eigen::Index r = 0; r < m; ++r) s(r, static_cast<Eigen::Index>(op.selection()[static_cast<std::size_t>(r)])) = 1.0;
  return s * p * dct_matrix(op.n()) * d;
}

Mat assemble(const RmOperator& op) {
  Mat f(static_cast<Eigen::Index>(op.m()), static_cast<Eigen::Index>(op.n()));
  for (std::size_t k = 0; k < op.n(); ++k) {
    Vec e = Vec::Zero(static_cast<Eigen::Index>(op.n()));
    e[static_cast<Eigen::Index>(k)] = 1.0;
    f.col(static_cast<Eigen::Index>(k)) = op.forward(e);
  }
  return f;
}

}  // namespace

TEST(RmOperator, SquareOperatorRoundTrips) {
  const RmOperator op = build_rm_operator(4, 4, 7);
  const Vec s = random_vec(4, 1);
  EXPECT_LT((op.inverse(op.forward(s)) - s).norm(), 1e-12);
}

TEST(RmOperator, RowsAreOrthonormal) {
  const RmOperator op = build_rm_operator(4, 2, 7);
  const Mat f = assemble(op);
  EXPECT_LT((f * f.transpose() - Mat::Identity(2, 2)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RmOperator, ColumnsMatchDenseProduct) {
  const RmOperator op = build_rm_operator(64, 32, 3);
  EXPECT_LT((assemble(op) - dense_operator(op)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RmOperator, ForwardMatchesDenseOracle) {
  const RmOperator op = build_rm_operator(16, 8, 21);
  const Vec s = random_vec(16, 2);
  EXPECT_LT((op.forward(s) - dense_operator(op) * s).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(RmOperator, FullRatePreservesNorm) {
  const RmOperator op = build_rm_operator(256, 256, 9);
  const Vec s = random_vec(256, 3);
  EXPECT_NEAR(op.forward(s).norm(), s.norm(), 1e-10);
  EXPECT_EQ(op.forward(Vec::Zero(256)).norm(), 0.0);
}

TEST(RmOperator, InverseIdentities) {
  for (std::size_t n : {16u, 256u, 4096u}) {
    const RmOperator full = build_rm_operator(n, n, 5);
    const Vec s = random_vec(n, 6);
    EXPECT_LT((rm_inverse(full, rm_forward(full, s)) - s).norm(), 1e-12 * std::sqrt(n));

    const RmOperator half = build_rm_operator(n, n / 2, 5);
    const Vec x = random_vec(n / 2, 7);
    EXPECT_LT((rm_forward(half, rm_inverse(half, x)) - x).norm(), 1e-12 * std::sqrt(n));

    const Vec once = rm_inverse(half, rm_forward(half, s));
    const Vec twice = rm_inverse(half, rm_forward(half, once));
    EXPECT_LT((twice - once).norm(), 1e-10);
  }
}

TEST(RmOperator, MixIsOrthogonal) {
  const RmOperator op = build_rm_operator(128, 40, 13);
  const Vec v = random_vec(128, 8), w = random_vec(128, 9);
  EXPECT_NEAR(op.mix(v).dot(op.mix(w)), v.dot(w), 1e-10);
  EXPECT_LT((op.unmix(op.mix(v)) - v).norm(), 1e-12);
  EXPECT_LT((op.forward(v) - op.select(op.mix(v))).norm(), 1e-15);
  EXPECT_LT((op.inverse(op.select(v)) - op.unmix(op.zero_fill(op.select(v)))).norm(), 1e-15);
}

TEST(RmOperator, SameSeedSameFactors) {
  const RmOperator a = build_rm_operator(100, 37, 42), b = build_rm_operator(100, 37, 42);
  EXPECT_EQ(a.signs(), b.signs());
  EXPECT_EQ(a.perm(), b.perm());
  EXPECT_EQ(a.selection(), b.selection());
  const RmOperator c = build_rm_operator(100, 37, 43);
  EXPECT_NE(a.perm(), c.perm());
}

TEST(RmOperator, SelectionIsSortedAndDistinct) {
  const RmOperator op = build_rm_operator(1000, 300, 1);
  ASSERT_EQ(op.selection().size(), 300u);
  for (std::size_t i = 1; i < op.selection().size(); ++i) {
    EXPECT_LT(op.selection()[i - 1], op.selection()[i]);
  }
}

TEST(RmOperator, DescriptorRegeneratesOperator) {
  const RmOperator op = build_rm_operator(50, 20, 77);
  const RmOperator back = RmOperator::from_descriptor(op.descriptor());
  EXPECT_EQ(back.perm(), op.perm());
  EXPECT_EQ(back.selection(), op.selection());
  EXPECT_EQ(back.m(), 20u);
}

TEST(RmOperator, RejectsBadDimensions) {
  EXPECT_THROW(build_rm_operator(4, 0, 1), Error);
  EXPECT_THROW(build_rm_operator(4, 5, 1), Error);
  const RmOperator op = build_rm_operator(4, 2, 1);
  try {
    op.forward(Vec::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidDimension);
  }
}

TEST(RmOperator, CompressedLengthRounds) {
  EXPECT_EQ(compressed_length(10, 0.44), 4u);
  EXPECT_EQ(compressed_length(10, 0.46), 5u);
  EXPECT_EQ(compressed_length(16384, 0.5), 8192u);
  EXPECT_EQ(compressed_length(10, 0.01), 1u);
  EXPECT_EQ(compressed_length(10, 1.0), 10u);
}
