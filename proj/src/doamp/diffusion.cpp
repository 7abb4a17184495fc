#include "doamp/diffusion.hpp"

#include <cmath>
#include <string>

#include "doamp/errors.hpp"

namespace doamp {

double snr_match(double v, TimeConvention kind) {
  if (!(v >= 0.0)) fail(ErrorCode::kInvalidParameter, "variance for SNR matching must be >= 0");
  if (kind == TimeConvention::kFlowMatching) return 1.0 / (1.0 + std::sqrt(v));
  return 1.0 / (1.0 + v);
}

DdimSchedule DdimSchedule::geometric(std::size_t steps, double first, double last) {
  require(steps >= 2, ErrorCode::kInvalidParameter, "schedule needs >= 2 steps");
  require(first < 1.0 && last > 0.0 && last < first, ErrorCode::kInvalidParameter,
          "schedule endpoints must satisfy 0 < last < first < 1");
  DdimSchedule s;
  s.alpha_bar.resize(steps);
  const double ratio = std::log(last / first) / static_cast<double>(steps - 1);
  for (std::size_t i = 0; i < steps; ++i) {
    s.alpha_bar[i] = first * std::exp(ratio * static_cast<double>(i));
  }
  s.alpha_bar.back() = last;
  return s;
}

void DdimSchedule::validate() const {
  require(!alpha_bar.empty(), ErrorCode::kInvalidParameter, "empty schedule");
  for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
    require(alpha_bar[i] > 0.0 && alpha_bar[i] <= 1.0, ErrorCode::kInvalidParameter,
            "schedule entries must lie in (0, 1]");
    if (i > 0) {
      require(alpha_bar[i] < alpha_bar[i - 1], ErrorCode::kInvalidParameter,
              "schedule must be strictly decreasing");
    }
  }
}

std::size_t map_alpha_to_step(double target, const DdimSchedule& sched) {
  sched.validate();
  const auto& a = sched.alpha_bar;
  if (target >= a.front()) return 0;
  if (target <= a.back()) return a.size() - 1;
  std::size_t k = 0;
  while (k + 1 < a.size() && a[k + 1] > target) ++k;
  // a[k] > target >= a[k + 1]
  const double up = a[k] - target;
  const double down = target - a[k + 1];
  return down <= up ? k + 1 : k;
}

Vec ddim_x0_predict(const Vec& s_t, const Vec& eps_hat, double alpha_bar_t) {
  require(s_t.size() == eps_hat.size(), ErrorCode::kInvalidDimension,
          "DDIM state and noise prediction lengths differ");
  if (!(alpha_bar_t > 0.0)) fail(ErrorCode::kSingularSystem, "alpha_bar must be > 0");
  require(alpha_bar_t <= 1.0, ErrorCode::kInvalidParameter, "alpha_bar must be <= 1");
  return (s_t - std::sqrt(1.0 - alpha_bar_t) * eps_hat) / std::sqrt(alpha_bar_t);
}

Vec ddim_reverse_step(const Vec& s_t, const Vec& eps_hat, double alpha_bar_t,
                      double alpha_bar_prev) {
  if (!(alpha_bar_t > 0.0 && alpha_bar_t <= alpha_bar_prev && alpha_bar_prev <= 1.0)) {
    fail(ErrorCode::kInvalidParameter,
         "DDIM step needs 0 < alpha_bar_t <= alpha_bar_prev <= 1");
  }
  const Vec s0 = ddim_x0_predict(s_t, eps_hat, alpha_bar_t);
  return std::sqrt(alpha_bar_prev) * s0 + std::sqrt(1.0 - alpha_bar_prev) * eps_hat;
}

Vec fm_integrate(const Vec& z0, const VelocityPredictor& predictor, double t_start,
                 double t_end, std::size_t num_steps) {
  if (!(t_start >= 0.0 && t_start < t_end && t_end <= 1.0)) {
    fail(ErrorCode::kInvalidParameter, "flow integration needs 0 <= t_start < t_end <= 1");
  }
  require(num_steps >= 1, ErrorCode::kInvalidParameter, "flow integration needs >= 1 step");
  const double h = (t_end - t_start) / static_cast<double>(num_steps);
  Vec z = z0;
  for (std::size_t i = 0; i < num_steps; ++i) {
    const double t = t_start + h * static_cast<double>(i);
    const Vec vel = predictor(z, t);
    require(vel.size() == z.size(), ErrorCode::kInvalidDimension,
            "velocity prediction length differs from state");
    z += h * vel;
    if (!z.allFinite()) {
      fail(ErrorCode::kIntegrationFailure,
           "non-finite flow state at step " + std::to_string(i));
    }
  }
  return z;
}

NoisePredictor analytic_noise_predictor(GaussMixture model) {
  model.validate();
  return [model = std::move(model)](const Vec& s_t, double a) -> Vec {
    if (a >= 1.0) return Vec::Zero(s_t.size());
    const double sa = std::sqrt(a);
    const double v = (1.0 - a) / a;
    Vec eps(s_t.size());
    for (Eigen::Index i = 0; i < s_t.size(); ++i) {
      const double s0 = model.posterior_mean(s_t[i] / sa, v);
      eps[i] = (s_t[i] - sa * s0) / std::sqrt(1.0 - a);
    }
    return eps;
  };
}

VelocityPredictor analytic_velocity_predictor(GaussMixture model) {
  model.validate();
  return [model = std::move(model)](const Vec& z, double t) -> Vec {
    Vec vel(z.size());
    const double remaining = 1.0 - t;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double s0 = t > 0.0
                            ? model.posterior_mean(z[i] / t, (remaining / t) * (remaining / t))
                            : model.mean();
      vel[i] = remaining > 0.0 ? (s0 - z[i]) / remaining : 0.0;
    }
    return vel;
  };
}

// ---------------------------------------------------------------------------

DdimPrior::DdimPrior(DdimSchedule schedule, NoisePredictor predictor, DdimMode mode)
    : schedule_(std::move(schedule)), predictor_(std::move(predictor)), mode_(mode) {
  schedule_.validate();
  require(static_cast<bool>(predictor_), ErrorCode::kInvalidParameter,
          "DDIM prior needs a noise predictor");
}

Vec DdimPrior::denoise(const Vec& s_in, double t_star, double /*v*/) {
  const std::size_t k = map_alpha_to_step(t_star, schedule_);
  const auto& a = schedule_.alpha_bar;
  Vec s = std::sqrt(a[k]) * s_in;
  if (mode_ == DdimMode::kSingleShot) {
    const Vec eps = predictor_(s, a[k]);
    count_evaluations();
    return ddim_x0_predict(s, eps, a[k]);
  }
  for (std::size_t j = k + 1; j-- > 0;) {
    const Vec eps = predictor_(s, a[j]);
    count_evaluations();
    require(eps.size() == s.size(), ErrorCode::kInvalidDimension,
            "noise prediction length differs from state");
    s = ddim_reverse_step(s, eps, a[j], j > 0 ? a[j - 1] : 1.0);
  }
  return s;
}

FlowMatchingPrior::FlowMatchingPrior(VelocityPredictor predictor, std::size_t num_steps,
                                     double t_end)
    : predictor_(std::move(predictor)), num_steps_(num_steps), t_end_(t_end) {
  require(static_cast<bool>(predictor_), ErrorCode::kInvalidParameter,
          "flow-matching prior needs a velocity predictor");
  require(num_steps_ >= 1, ErrorCode::kInvalidParameter, "flow-matching needs >= 1 step");
  require(t_end_ > 0.0 && t_end_ <= 1.0, ErrorCode::kInvalidParameter,
          "flow-matching end time must lie in (0, 1]");
}

Vec FlowMatchingPrior::denoise(const Vec& s_in, double t_star, double /*v*/) {
  require(t_star > 0.0 && t_star <= 1.0, ErrorCode::kInvalidParameter,
          "flow-matching time must lie in (0, 1]");
  Vec z = t_star * s_in;
  if (t_star >= t_end_) return z;
  auto counted = [this](const Vec& state, double t) {
    count_evaluations();
    return predictor_(state, t);
  };
  return fm_integrate(z, counted, t_star, t_end_, num_steps_);
}

}  // namespace doamp
