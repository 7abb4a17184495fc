#include "doamp/nle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "doamp/dct.hpp"
#include "doamp/errors.hpp"

namespace doamp {

GaussMixture GaussMixture::gaussian(double mean, double variance) {
  return GaussMixture{{1.0}, {mean}, {variance}};
}

void GaussMixture::validate() const {
  require(!weights.empty(), ErrorCode::kInvalidParameter, "mixture needs >= 1 component");
  require(weights.size() == means.size() && weights.size() == variances.size(),
          ErrorCode::kInvalidParameter, "mixture parameter lengths differ");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k] >= 0.0 && std::isfinite(weights[k]), ErrorCode::kInvalidParameter,
            "mixture weights must be nonnegative");
    require(variances[k] >= 0.0 && std::isfinite(variances[k]), ErrorCode::kInvalidParameter,
            "mixture variances must be nonnegative");
    require(std::isfinite(means[k]), ErrorCode::kInvalidParameter, "mixture means must be finite");
    total += weights[k];
  }
  require(std::abs(total - 1.0) < 1e-9, ErrorCode::kInvalidParameter,
          "mixture weights must sum to 1");
}

double GaussMixture::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) m += weights[k] * means[k];
  return m;
}

double GaussMixture::second_moment() const {
  double m2 = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    m2 += weights[k] * (variances[k] + means[k] * means[k]);
  }
  return m2;
}

double GaussMixture::posterior_mean(double y, double v) const {
  if (std::isinf(v)) return mean();
  if (weights.size() == 1) {
    const double total = variances[0] + v;
    if (total <= 0.0) return means[0];
    return means[0] + variances[0] / total * (y - means[0]);
  }
  // log-sum-exp over component responsibilities
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> log_resp(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) {
      log_resp[k] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double total = std::max(variances[k] + v, std::numeric_limits<double>::min());
    const double d = y - means[k];
    log_resp[k] = std::log(weights[k]) - 0.5 * std::log(total) - 0.5 * d * d / total;
    max_log = std::max(max_log, log_resp[k]);
  }
  double norm = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!std::isfinite(log_resp[k])) continue;
    const double r = std::exp(log_resp[k] - max_log);
    const double total = variances[k] + v;
    const double cond = total > 0.0 ? means[k] + variances[k] / total * (y - means[k]) : means[k];
    norm += r;
    acc += r * cond;
  }
  return acc / norm;
}

AnalyticPrior::AnalyticPrior(GaussMixture model) : model_(std::move(model)) {
  model_.validate();
}

std::string AnalyticPrior::name() const {
  return model_.weights.size() == 1 ? "analytic-gaussian" : "analytic-gauss-mixture";
}

Vec AnalyticPrior::denoise(const Vec& s_in, double /*t_star*/, double v) {
  require(v >= 0.0, ErrorCode::kInvalidParameter, "noise variance must be >= 0");
  count_evaluations();
  Vec out(s_in.size());
  for (Eigen::Index i = 0; i < s_in.size(); ++i) out[i] = model_.posterior_mean(s_in[i], v);
  return out;
}

// ---------------------------------------------------------------------------

DctSoftThresholdPrior::DctSoftThresholdPrior(Options options) : options_(options) {
  require(options_.multiplier >= 0.0, ErrorCode::kInvalidParameter,
          "threshold multiplier must be >= 0");
  require(options_.channels >= 1, ErrorCode::kInvalidParameter, "channels must be >= 1");
}

namespace {

double soft(double c, double lambda) {
  const double mag = std::abs(c) - lambda;
  return mag > 0.0 ? std::copysign(mag, c) : 0.0;
}

}  // namespace

Vec DctSoftThresholdPrior::denoise(const Vec& s_in, double /*t_star*/, double v) {
  require(v >= 0.0, ErrorCode::kInvalidParameter, "noise variance must be >= 0");
  count_evaluations();
  const auto n = static_cast<std::size_t>(s_in.size());
  const double lambda =
      options_.rule == ThresholdRule::kUniversal
          ? std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(n, 2)))) *
                std::sqrt(v)
          : options_.multiplier * std::sqrt(v);

  const std::size_t rows = options_.rows;
  const std::size_t cols = options_.cols;
  const std::size_t ch = options_.channels;
  if (rows == 0 || cols == 0 || rows * cols * ch != n) {
    DctPlan plan(n);
    std::vector<double> coeffs(n);
    plan.forward(as_span(s_in), coeffs);
    for (std::size_t k = 1; k < n; ++k) coeffs[k] = soft(coeffs[k], lambda);
    Vec out(s_in.size());
    plan.inverse(coeffs, as_span(out));
    return out;
  }

  DctPlan row_plan(cols);
  DctPlan col_plan(rows);
  Vec out(s_in.size());
  std::vector<double> plane(rows * cols);
  std::vector<double> line_in;
  std::vector<double> line_out;
  auto transform_2d = [&](bool inverse) {
    line_in.resize(cols);
    line_out.resize(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(plane.begin() + static_cast<std::ptrdiff_t>(r * cols), cols, line_in.begin());
      inverse ? row_plan.inverse(line_in, line_out) : row_plan.forward(line_in, line_out);
      std::copy_n(line_out.begin(), cols, plane.begin() + static_cast<std::ptrdiff_t>(r * cols));
    }
    line_in.resize(rows);
    line_out.resize(rows);
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) line_in[r] = plane[r * cols + c];
      inverse ? col_plan.inverse(line_in, line_out) : col_plan.forward(line_in, line_out);
      for (std::size_t r = 0; r < rows; ++r) plane[r * cols + c] = line_out[r];
    }
  };
  for (std::size_t c0 = 0; c0 < ch; ++c0) {
    for (std::size_t p = 0; p < rows * cols; ++p) plane[p] = s_in[static_cast<Eigen::Index>(p * ch + c0)];
    transform_2d(false);
    for (std::size_t p = 1; p < rows * cols; ++p) plane[p] = soft(plane[p], lambda);
    transform_2d(true);
    for (std::size_t p = 0; p < rows * cols; ++p) out[static_cast<Eigen::Index>(p * ch + c0)] = plane[p];
  }
  return out;
}

// ---------------------------------------------------------------------------

CallablePrior::CallablePrior(std::string name, Fn fn, TimeConvention convention)
    : name_(std::move(name)), fn_(std::move(fn)), convention_(convention) {
  require(static_cast<bool>(fn_), ErrorCode::kInvalidParameter, "callable prior needs a function");
}

Vec CallablePrior::denoise(const Vec& s_in, double t_star, double v) {
  count_evaluations();
  return fn_(s_in, t_star, v);
}

}  // namespace doamp
