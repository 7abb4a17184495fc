#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "doamp/channel.hpp"
#include "doamp/errors.hpp"
#include "doamp/experiment.hpp"
#include "oracles.hpp"

using namespace doamp;
using doamp::testing::random_vec;

TEST(IdentityChannel, NoiselessPassThrough) {
  const ChannelInstance ch = gen_identity_channel(4, 0.0);
  const Vec x = random_vec(4, 1);
  EXPECT_EQ(transmit(ch, x, 9), x);
  EXPECT_EQ(ch.condition_number(), 1.0);
}

TEST(IdentityChannel, NoiseHasDeclaredVariance) {
  const ChannelInstance ch = gen_identity_channel(4, 0.25);
  const Vec x = random_vec(4, 1);
  double sum = 0.0, sum2 = 0.0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const Vec n = transmit(ch, x, static_cast<std::uint64_t>(d)) - x;
    sum += n[0];
    sum2 += n[0] * n[0];
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  EXPECT_NEAR(var, 0.25, 0.05 * 0.25);
}

TEST(ConditionedChannel, FlatSpectrumIsScaledOrthogonal) {
  const ChannelInstance ch = gen_conditioned_channel(12, 1.0, SpectrumShape::kGeometric, 0.0, 3);
  const Vec& s = ch.singular_values();
  EXPECT_LT((s.array() - s[0]).abs().maxCoeff(), 1e-14);
  const Mat a = ch.to_dense();
  const Mat gram = a.transpose() * a;
  EXPECT_LT((gram - s[0] * s[0] * Mat::Identity(12, 12)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(ConditionedChannel, DenseSvdRecoversConditionNumber) {
  const ChannelInstance ch = gen_conditioned_channel(16, 100.0, SpectrumShape::kGeometric, 0.0, 5);
  const Mat a = ch.to_dense();
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec sv = svd.singularValues();
  EXPECT_NEAR(sv[0] / sv[15] / 100.0, 1.0, 1e-6);
  EXPECT_NEAR(ch.condition_number(), 100.0, 1e-9);
}

TEST(ConditionedChannel, SameSeedSameSpectrumAndBasis) {
  const auto a = gen_conditioned_channel(20, 10.0, SpectrumShape::kLinear, 0.1, 8);
  const auto b = gen_conditioned_channel(20, 10.0, SpectrumShape::kLinear, 0.1, 8);
  EXPECT_EQ(a.singular_values(), b.singular_values());
  EXPECT_EQ(a.to_dense(), b.to_dense());
}

TEST(ConditionedChannel, UnitAveragePowerAndOrthonormalBases) {
  for (BasisKind basis : {BasisKind::kDense, BasisKind::kMultiplexed}) {
    const auto ch = gen_conditioned_channel(32, 10.0, SpectrumShape::kGeometric, 0.0, 4, basis);
    const Mat a = ch.to_dense();
    EXPECT_NEAR((a.transpose() * a).trace() / 32.0, 1.0, 1e-10);
    const Mat u = ch.u().to_dense(), v = ch.v().to_dense();
    EXPECT_LT((u.transpose() * u - Mat::Identity(32, 32)).lpNorm<Eigen::Infinity>(), 1e-12);
    EXPECT_LT((v.transpose() * v - Mat::Identity(32, 32)).lpNorm<Eigen::Infinity>(), 1e-12);
    const Vec x = random_vec(32, 2);
    EXPECT_LT((ch.apply(x) - a * x).norm(), 1e-12);
    EXPECT_LT((ch.apply_transpose(x) - a.transpose() * x).norm(), 1e-12);
  }
}

TEST(ConditionedChannel, LinearShapeSpacing) {
  const auto ch = gen_conditioned_channel(5, 9.0, SpectrumShape::kLinear, 0.0, 1);
  const Vec& s = ch.singular_values();
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(s[i - 1] - s[i], s[i] - s[i + 1], 1e-12);
  EXPECT_NEAR(s[0] / s[4], 9.0, 1e-12);
}

TEST(ConditionedChannel, RejectsKappaBelowOne) {
  EXPECT_THROW(gen_conditioned_channel(4, 0.5, SpectrumShape::kGeometric, 0.0, 1), Error);
}

TEST(FadingChannel, SingleStaticTapIsScaledRotation) {
  FadingProfile p;
  p.num_taps = 1;
  p.tap_powers = {1.0};
  p.doppler_rate = 0.0;
  p.num_symbols = 4;
  const auto ch = gen_tdl_fading_channel(16, p, 0.0, 11);
  EXPECT_NEAR(ch.condition_number(), 1.0, 1e-12);
}

TEST(FadingChannel, AmplitudesAreRayleigh) {
  FadingProfile p;
  p.num_taps = 3;
  p.tap_powers = {0.6, 0.3, 0.1};
  p.doppler_rate = 0.01;
  p.num_symbols = 8;
  const KsResult ks = rayleigh_ks_test(fading_amplitudes(p, 100000, 17));
  EXPECT_EQ(ks.samples, 100000u);
  EXPECT_GT(ks.p_value, 0.01);
}

TEST(FadingChannel, TapAutocorrelationDecaysWithLag) {
  FadingProfile p;
  p.num_taps = 1;
  p.tap_powers = {1.0};
  p.doppler_rate = 0.05;
  p.num_symbols = 20000;
  const TapProcess taps = draw_fading_taps(p, 5);
  auto corr = [&](std::size_t lag) {
    std::complex<double> acc = 0.0;
    double power = 0.0;
    for (std::size_t k = 0; k + lag < taps.size(); ++k) acc += taps[k + lag][0] * std::conj(taps[k][0]);
    for (const auto& t : taps) power += std::norm(t[0]);
    return acc.real() / static_cast<double>(taps.size() - lag) / (power / static_cast<double>(taps.size()));
  };
  EXPECT_DOUBLE_EQ(corr(0), 1.0);
  double prev = corr(0);
  for (std::size_t lag : {1u, 2u, 4u}) {
    const double c = corr(lag);
    EXPECT_LT(c, prev);
    prev = c;
  }
  EXPECT_NEAR(corr(1), jakes_lag1(0.05), 0.03);
}

TEST(FadingChannel, RejectsMoreTapsThanDimension) {
  FadingProfile p;
  p.num_taps = 4;
  p.tap_powers = {1.0, 1.0, 1.0, 1.0};
  EXPECT_THROW(gen_tdl_fading_channel(2, p, 0.0, 1), Error);
}

TEST(Transmit, NoiselessEqualsMatrixProduct) {
  const auto ch = gen_conditioned_channel(24, 10.0, SpectrumShape::kGeometric, 0.0, 6);
  const Vec x = random_vec(24, 3);
  EXPECT_LT((transmit(ch, x, 1) - ch.to_dense() * x).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Transmit, ZeroInputGivesNoiseEnergy) {
  const auto ch = gen_conditioned_channel(4096, 10.0, SpectrumShape::kGeometric, 0.04, 6,
                                          BasisKind::kMultiplexed);
  const Vec y = transmit(ch, Vec::Zero(4096), 12);
  EXPECT_NEAR(y.squaredNorm() / 4096.0, 0.04, 0.05 * 0.04);
}

TEST(Transmit, ReproducibleForFixedSeed) {
  const auto ch = gen_identity_channel(64, 0.3);
  const Vec x = random_vec(64, 4);
  EXPECT_EQ(transmit(ch, x, 99), transmit(ch, x, 99));
  EXPECT_NE(transmit(ch, x, 99), transmit(ch, x, 100));
}

TEST(EmbedSelection, EqualsChannelTimesSelection) {
  const auto ch = gen_conditioned_channel(10, 5.0, SpectrumShape::kGeometric, 0.0, 2);
  auto op = std::make_shared<const RmOperator>(build_rm_operator(25, 10, 3));
  const auto eff = embed_selection(ch, op);
  EXPECT_EQ(eff.m_rows(), 10u);
  EXPECT_EQ(eff.n_cols(), 25u);
  const Vec v = random_vec(25, 5);
  EXPECT_LT((eff.apply(v) - ch.apply(op->select(v))).norm(), 1e-12);
  const Vec y = random_vec(10, 6);
  EXPECT_LT((eff.apply_transpose(y) - op->zero_fill(ch.apply_transpose(y))).norm(), 1e-12);
}

TEST(ChannelSpec, JsonRoundTrip) {
  ChannelSpec spec;
  spec.type = ChannelType::kFading;
  spec.dim = 40;
  spec.profile.num_taps = 2;
  spec.profile.tap_powers = {0.7, 0.3};
  spec.profile.doppler_rate = 0.02;
  spec.profile.num_symbols = 3;
  spec.sigma2 = 0.01;
  spec.seed = 77;
  const ChannelSpec back = ChannelSpec::from_json(spec.to_json());
  EXPECT_EQ(back.to_json(), spec.to_json());
  EXPECT_EQ(generate_channel(back).to_dense(), generate_channel(spec).to_dense());
}
