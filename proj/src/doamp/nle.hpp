#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "doamp/types.hpp"

namespace doamp {

/// Which diffusion-time convention a prior uses for the SNR-matched time.
enum class TimeConvention { kDdim, kFlowMatching };

/// Pluggable nonlinear estimator phi(s_in, t*).
///
/// `s_in` models s + sqrt(v) * eps. Implementations count every network (or
/// network-equivalent) evaluation so the receiver can report NFE.
class NlePrior {
 public:
  virtual ~NlePrior() = default;

  virtual std::string name() const = 0;
  virtual TimeConvention time_convention() const { return TimeConvention::kDdim; }
  virtual Vec denoise(const Vec& s_in, double t_star, double v) = 0;

  std::uint64_t function_evaluations() const { return nfe_; }

 protected:
  void count_evaluations(std::uint64_t n = 1) { nfe_ += n; }

 private:
  std::uint64_t nfe_ = 0;
};

/// Scalar Gaussian mixture sum_k w_k N(mean_k, var_k). A single component
/// with zero variance is a point mass.
struct GaussMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  static GaussMixture gaussian(double mean, double variance);
  void validate() const;

  double mean() const;
  double second_moment() const;

  /// E[s | s + sqrt(v) eps = y]; v = +inf gives the prior mean.
  double posterior_mean(double y, double v) const;
};

/// Exact posterior-mean denoiser for an i.i.d. Gaussian or Gaussian-mixture
/// source.
class AnalyticPrior final : public NlePrior {
 public:
  explicit AnalyticPrior(GaussMixture model);

  std::string name() const override;
  Vec denoise(const Vec& s_in, double t_star, double v) override;

  const GaussMixture& model() const { return model_; }

 private:
  GaussMixture model_;
};

enum class ThresholdRule { kFixed, kUniversal };

/// Soft thresholding in the orthonormal DCT domain with lambda = c * sqrt(v)
/// (fixed rule) or sqrt(2 ln N) * sqrt(v) (universal rule). Images laid out
/// as rows x cols x channels (channel fastest) get a separable 2-D DCT per
/// channel; otherwise the whole vector is transformed. The DC coefficient of
/// each plane is never thresholded.
class DctSoftThresholdPrior final : public NlePrior {
 public:
  struct Options {
    ThresholdRule rule = ThresholdRule::kUniversal;
    double multiplier = 1.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t channels = 1;
  };

  explicit DctSoftThresholdPrior(Options options);

  std::string name() const override { return "dct-soft-threshold"; }
  Vec denoise(const Vec& s_in, double t_star, double v) override;

 private:
  Options options_;
};

/// Wraps an arbitrary callable phi(s_in, t*, v). Used for test doubles and
/// the identity fallback.
class CallablePrior final : public NlePrior {
 public:
  using Fn = std::function<Vec(const Vec&, double, double)>;
  CallablePrior(std::string name, Fn fn,
                TimeConvention convention = TimeConvention::kDdim);

  std::string name() const override { return name_; }
  TimeConvention time_convention() const override { return convention_; }
  Vec denoise(const Vec& s_in, double t_star, double v) override;

 private:
  std::string name_;
  Fn fn_;
  TimeConvention convention_;
};

}  // namespace doamp
