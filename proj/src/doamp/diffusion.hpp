#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "doamp/nle.hpp"
#include "doamp/types.hpp"

namespace doamp {

/// Diffusion time matched to an effective noise variance v:
///   flow matching: t* = 1 / (1 + sqrt(v))
///   DDIM:          t* = 1 / (1 + v)   (a target alpha_bar, see map_alpha_to_step)
double snr_match(double v, TimeConvention kind);

/// Discrete DDIM schedule. Index 0 is the cleanest step; alpha_bar strictly
/// decreases with the index.
struct DdimSchedule {
  std::vector<double> alpha_bar;

  /// Geometric spacing from `first` down to `last`.
  static DdimSchedule geometric(std::size_t steps, double first = 0.999, double last = 0.005);
  void validate() const;
  std::size_t size() const { return alpha_bar.size(); }
};

/// Index whose alpha_bar is nearest the target; ties go to the noisier
/// (higher) index. Targets above alpha_bar[0] clamp to 0.
std::size_t map_alpha_to_step(double target_alpha_bar, const DdimSchedule& sched);

/// eps_hat(s_t, alpha_bar_t)
using NoisePredictor = std::function<Vec(const Vec&, double)>;
/// v_hat(z_t, t)
using VelocityPredictor = std::function<Vec(const Vec&, double)>;

/// s0_hat = (s_t - sqrt(1 - a) eps_hat) / sqrt(a)
Vec ddim_x0_predict(const Vec& s_t, const Vec& eps_hat, double alpha_bar_t);

/// s_prev = sqrt(a_prev) s0_hat + sqrt(1 - a_prev) eps_hat
Vec ddim_reverse_step(const Vec& s_t, const Vec& eps_hat, double alpha_bar_t,
                      double alpha_bar_prev);

/// Explicit Euler on dz/dt = v(z, t) over a uniform grid.
Vec fm_integrate(const Vec& z0, const VelocityPredictor& predictor, double t_start,
                 double t_end, std::size_t num_steps);

/// Bayes-optimal predictors for data drawn i.i.d. from a Gaussian mixture.
/// These stand in for trained networks.
NoisePredictor analytic_noise_predictor(GaussMixture model);
VelocityPredictor analytic_velocity_predictor(GaussMixture model);

enum class DdimMode { kFullTrajectory, kSingleShot };

/// NLE backed by a noise predictor. The input s_in is rescaled to
/// s_t = sqrt(alpha_bar_k) * s_in at the schedule step k nearest t*, then
/// either the deterministic reverse process runs down to the clean end or a
/// single s0 prediction is returned.
class DdimPrior final : public NlePrior {
 public:
  DdimPrior(DdimSchedule schedule, NoisePredictor predictor,
            DdimMode mode = DdimMode::kFullTrajectory);

  std::string name() const override { return "ddim"; }
  TimeConvention time_convention() const override { return TimeConvention::kDdim; }
  Vec denoise(const Vec& s_in, double t_star, double v) override;

  const DdimSchedule& schedule() const { return schedule_; }

 private:
  DdimSchedule schedule_;
  NoisePredictor predictor_;
  DdimMode mode_;
};

/// NLE backed by a velocity predictor: z = t* s_in is integrated from t* to
/// t_end and the endpoint is returned.
class FlowMatchingPrior final : public NlePrior {
 public:
  FlowMatchingPrior(VelocityPredictor predictor, std::size_t num_steps = 20,
                    double t_end = 1.0 - 1e-3);

  std::string name() const override { return "flow-matching"; }
  TimeConvention time_convention() const override { return TimeConvention::kFlowMatching; }
  Vec denoise(const Vec& s_in, double t_star, double v) override;

 private:
  VelocityPredictor predictor_;
  std::size_t num_steps_;
  double t_end_;
};

}  // namespace doamp
