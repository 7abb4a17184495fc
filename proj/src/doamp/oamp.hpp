#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "doamp/channel.hpp"
#include "doamp/nle.hpp"
#include "doamp/rm_operator.hpp"
#include "doamp/types.hpp"

namespace doamp {

enum class Domain { kX, kS };

/// Gaussian message (mean, scalar variance) exchanged between the linear and
/// nonlinear estimators.
struct GaussMessage {
  Vec mean;
  double variance = 0.0;
  Domain domain = Domain::kX;

  void validate() const;
};

/// Divisor applied to tr(V_post): the channel's row count (observations) or
/// column count (unknowns).
enum class TraceDivisor { kRows, kCols };

/// What the receiver returns: the last raw denoiser output, or the
/// inverse-multiplexed prior message after the last MMSE correction. The prior
/// message keeps the extrinsic noise term and its PSNR does not settle.
enum class FinalEstimate { kPriorMessage, kDenoiserOutput };

struct ReceiverConfig {
  std::size_t max_iters = 10;
  double tolerance = 1e-4;
  double variance_floor = 1e-9;
  TraceDivisor trace_divisor = TraceDivisor::kCols;
  bool subtract_noise_floor = false;
  /// Convex damping of successive prior means; 0 disables it.
  double damping = 0.0;
  /// Finite-difference probe size relative to sqrt(v_orth).
  double divergence_scale = 1e-3;
  std::uint64_t divergence_seed = 0x51DE5EEDULL;
  FinalEstimate final_estimate = FinalEstimate::kDenoiserOutput;
  double psnr_peak = 1.0;

  void validate() const;
};

struct IterationRecord {
  std::size_t iter = 0;
  double v_pri = 0.0;
  double v_post = 0.0;
  double v_orth = 0.0;
  double t_star = 0.0;
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;
  double divergence = 0.0;
  double beta_star = 0.0;
  std::string fault;
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  std::vector<std::string> warnings;
  std::string error;
  bool converged = false;
  std::uint64_t nfe = 0;

  /// iter,v_pri,v_post,v_orth,t_star,psnr,residual
  void write_csv(std::ostream& os) const;
};

inline constexpr double kPsnrCeiling = 99.0;

/// mean = 0, variance = ||y||^2 / M (clamped to `variance_floor`).
GaussMessage init_state(const Vec& y, std::size_t unknowns, double variance_floor,
                        std::string* warning = nullptr);

/// LMMSE posterior in the singular basis of the channel. The scalar variance
/// is tr(V_post) divided by the configured divisor; directions outside the
/// channel's row space keep the prior variance.
GaussMessage lmmse_estimate(const ChannelInstance& ch, const GaussMessage& prior, const Vec& y,
                            const ReceiverConfig& cfg = {});

/// Extrinsic message: v = (1/v_post - 1/v_pri)^-1,
/// mean = v (x_post / v_post - x_pri / v_pri).
GaussMessage orthogonalize(const GaussMessage& post, const GaussMessage& prior);

/// beta* = <x~, x_orth> / ||x~||^2, mean = beta* x~,
/// variance = ||A mean - y||^2 / M (optionally minus sigma^2), floored.
GaussMessage mmse_correction(const Vec& x_tilde, const Vec& x_orth, const ChannelInstance& ch,
                             const Vec& y, const ReceiverConfig& cfg = {},
                             double* beta_star = nullptr);

/// ||next - prev|| / max(||prev||, floor) < tau
bool check_convergence(const Vec& prev, const Vec& next, double tau, double floor = 1e-9);

struct ReceiverResult {
  Vec s_hat;
  IterationTrace trace;
};

/// Iterative receiver. The linear estimator runs on the full-length
/// multiplexed vector Xi s against the equivalent matrix A S, so coefficients
/// that were not transmitted are carried by the prior message instead of being
/// discarded; at the first iteration (zero prior mean) the inverse mapping is
/// exactly the zero-filled inverse of F. Stage failures end the loop and
/// return the best estimate so far; denoiser failures fall back to the
/// identity for that iteration.
ReceiverResult run_receiver(const Vec& y, const ChannelInstance& ch,
                            std::shared_ptr<const RmOperator> op, NlePrior& prior,
                            const ReceiverConfig& cfg, const Vec* truth = nullptr);

/// One LMMSE pass from the initial message, no nonlinear estimator.
ReceiverResult run_lmmse_baseline(const Vec& y, const ChannelInstance& ch,
                                  std::shared_ptr<const RmOperator> op, const ReceiverConfig& cfg,
                                  const Vec* truth = nullptr);

}  // namespace doamp
