#include "doamp/oamp.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "doamp/csv.hpp"
#include "doamp/diffusion.hpp"
#include "doamp/errors.hpp"
#include "doamp/metrics.hpp"
#include "doamp/rng.hpp"
#include "doamp/sure.hpp"

namespace doamp {

void GaussMessage::validate() const {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    fail(ErrorCode::kInvalidMessage, "message variance must be finite and >= 0");
  }
  if (!mean.allFinite()) fail(ErrorCode::kInvalidMessage, "message mean must be finite");
}

void ReceiverConfig::validate() const {
  require(max_iters >= 1, ErrorCode::kInvalidParameter, "max_iters must be >= 1");
  require(tolerance > 0.0, ErrorCode::kInvalidParameter, "tolerance must be > 0");
  require(variance_floor > 0.0, ErrorCode::kInvalidParameter, "variance_floor must be > 0");
  require(damping >= 0.0 && damping < 1.0, ErrorCode::kInvalidParameter,
          "damping must lie in [0, 1)");
  require(divergence_scale > 0.0, ErrorCode::kInvalidParameter,
          "divergence_scale must be > 0");
  require(psnr_peak > 0.0, ErrorCode::kInvalidParameter, "psnr_peak must be > 0");
}

void IterationTrace::write_csv(std::ostream& os) const {
  os << "iter,v_pri,v_post,v_orth,t_star,psnr,residual\n";
  for (const auto& r : records) {
    os << r.iter << ',' << csv_number(r.v_pri) << ',' << csv_number(r.v_post) << ','
       << csv_number(r.v_orth) << ',' << csv_number(r.t_star) << ',' << csv_number(r.psnr) << ','
       << csv_number(r.residual) << '\n';
  }
}

GaussMessage init_state(const Vec& y, std::size_t unknowns, double variance_floor,
                        std::string* warning) {
  require(y.size() >= 1, ErrorCode::kInvalidDimension, "observation must be non-empty");
  GaussMessage msg;
  msg.mean = Vec::Zero(static_cast<Eigen::Index>(unknowns));
  msg.variance = y.squaredNorm() / static_cast<double>(y.size());
  msg.domain = Domain::kX;
  if (msg.variance < variance_floor) {
    msg.variance = variance_floor;
    if (warning) *warning = "all-zero observation; initial variance clamped to the floor";
  }
  return msg;
}

GaussMessage lmmse_estimate(const ChannelInstance& ch, const GaussMessage& prior, const Vec& y,
                            const ReceiverConfig& cfg) {
  require(prior.domain == Domain::kX, ErrorCode::kInvalidMessage,
          "linear estimator expects an x-domain prior");
  prior.validate();
  require(static_cast<std::size_t>(prior.mean.size()) == ch.n_cols(), ErrorCode::kInvalidDimension,
          "prior length must equal channel columns");
  require(static_cast<std::size_t>(y.size()) == ch.m_rows(), ErrorCode::kInvalidDimension,
          "observation length must equal channel rows");
  const double sigma2 = ch.sigma2();
  const double v = prior.variance;
  if (sigma2 == 0.0 && v == 0.0) fail(ErrorCode::kSingularSystem, "sigma2 = 0 and v_pri = 0");
  if (!(v > 0.0)) fail(ErrorCode::kInvalidMessage, "prior variance must be > 0");

  const Vec& sv = ch.singular_values();
  const Vec residual = y - ch.apply(prior.mean);
  Vec coords = ch.u().apply_transpose(residual);
  double trace = static_cast<double>(ch.n_cols() - ch.rank()) * v;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double s2 = sv[i] * sv[i];
    const double denom = sigma2 + v * s2;
    coords[i] = denom > 0.0 ? sv[i] / denom * coords[i] : 0.0;
    trace += denom > 0.0 ? v - v * v * s2 / denom : v;
  }
  GaussMessage post;
  post.mean = prior.mean + v * ch.v().apply(coords);
  const double divisor = static_cast<double>(
      cfg.trace_divisor == TraceDivisor::kRows ? ch.m_rows() : ch.n_cols());
  post.variance = std::max(trace / divisor, cfg.variance_floor);
  post.domain = Domain::kX;
  return post;
}

GaussMessage orthogonalize(const GaussMessage& post, const GaussMessage& prior) {
  require(post.mean.size() == prior.mean.size(), ErrorCode::kInvalidDimension,
          "orthogonalize: message lengths differ");
  if (!(post.variance > 0.0)) fail(ErrorCode::kInvalidMessage, "posterior variance must be > 0");
  if (!(post.variance < prior.variance)) {
    fail(ErrorCode::kNoInformation, "posterior variance is not below the prior variance");
  }
  GaussMessage ext;
  ext.variance = 1.0 / (1.0 / post.variance - 1.0 / prior.variance);
  ext.mean = ext.variance * (post.mean / post.variance - prior.mean / prior.variance);
  ext.domain = post.domain;
  return ext;
}

GaussMessage mmse_correction(const Vec& x_tilde, const Vec& x_orth, const ChannelInstance& ch,
                             const Vec& y, const ReceiverConfig& cfg, double* beta_star) {
  require(x_tilde.size() == x_orth.size(), ErrorCode::kInvalidDimension,
          "MMSE correction: vector lengths differ");
  const double energy = x_tilde.squaredNorm();
  if (!(energy > 0.0) || !std::isfinite(energy)) {
    fail(ErrorCode::kDegenerateNle, "denoiser output has zero energy");
  }
  const double beta = x_tilde.dot(x_orth) / energy;
  if (!std::isfinite(beta)) fail(ErrorCode::kDegenerateNle, "non-finite correction scale");
  if (beta_star) *beta_star = beta;
  GaussMessage msg;
  msg.mean = beta * x_tilde;
  double variance = (ch.apply(msg.mean) - y).squaredNorm() / static_cast<double>(y.size());
  if (cfg.subtract_noise_floor) variance -= ch.sigma2();
  msg.variance = std::max(variance, cfg.variance_floor);
  msg.domain = Domain::kX;
  return msg;
}

bool check_convergence(const Vec& prev, const Vec& next, double tau, double floor) {
  require(prev.size() == next.size(), ErrorCode::kInvalidDimension,
          "convergence check: vector lengths differ");
  const double denom = std::max(prev.norm(), floor);
  return (next - prev).norm() / denom < tau;
}

namespace {

double residual_energy(const ChannelInstance& ch, const Vec& x, const Vec& y) {
  return (ch.apply(x) - y).squaredNorm() / static_cast<double>(y.size());
}

bool is_nle_fault(ErrorCode code) {
  return code == ErrorCode::kNleFailure || code == ErrorCode::kBridgeFailure ||
         code == ErrorCode::kIntegrationFailure || code == ErrorCode::kDegenerateNle;
}

}  // namespace

ReceiverResult run_receiver(const Vec& y, const ChannelInstance& ch,
                            std::shared_ptr<const RmOperator> op, NlePrior& prior,
                            const ReceiverConfig& cfg, const Vec* truth) {
  cfg.validate();
  require(op != nullptr, ErrorCode::kInvalidParameter, "receiver needs an RM operator");
  require(static_cast<std::size_t>(y.size()) == ch.m_rows() && ch.n_cols() == op->m(),
          ErrorCode::kInvalidDimension, "observation, channel and operator dimensions disagree");
  if (truth) {
    require(static_cast<std::size_t>(truth->size()) == op->n(), ErrorCode::kInvalidDimension,
            "truth length must equal the source length");
  }
  const ChannelInstance eff = embed_selection(ch, op);
  const std::uint64_t nfe_start = prior.function_evaluations();

  ReceiverResult result;
  IterationTrace& trace = result.trace;
  std::string warning;
  GaussMessage current = init_state(y, op->n(), cfg.variance_floor, &warning);
  if (!warning.empty()) trace.warnings.push_back(warning);
  Vec last_denoised = op->unmix(current.mean);

  auto estimate = [&]() -> Vec {
    return cfg.final_estimate == FinalEstimate::kPriorMessage ? op->unmix(current.mean)
                                                              : last_denoised;
  };

  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    IterationRecord rec;
    rec.iter = k;
    rec.v_pri = current.variance;
    GaussMessage ext;
    try {
      const GaussMessage post = lmmse_estimate(eff, current, y, cfg);
      rec.v_post = post.variance;
      ext = orthogonalize(post, current);
    } catch (const Error& e) {
      trace.error = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
    rec.v_orth = ext.variance;

    const Vec s_in = op->unmix(ext.mean);
    rec.t_star = snr_match(ext.variance, prior.time_convention());

    GaussMessage next;
    try {
      Vec phi = prior.denoise(s_in, rec.t_star, ext.variance);
      if (phi.size() != s_in.size()) fail(ErrorCode::kNleFailure, "denoiser changed the length");
      if (!phi.allFinite()) fail(ErrorCode::kNleFailure, "non-finite denoiser output");
      const double eps = cfg.divergence_scale * std::sqrt(ext.variance);
      rec.divergence = mc_divergence(prior, s_in, phi, rec.t_star, ext.variance, eps,
                                     derive_seed(cfg.divergence_seed, k));
      last_denoised = phi;
      const SureResult sure = sure_orthogonalize(std::move(phi), rec.divergence, s_in);
      next = mmse_correction(op->mix(sure.phi_perp), ext.mean, eff, y, cfg, &rec.beta_star);
    } catch (const Error& e) {
      if (!is_nle_fault(e.code())) {
        trace.error = "iteration " + std::to_string(k) + ": " + e.what();
        break;
      }
      // Identity denoiser: phi_perp vanishes and the extrinsic mean passes through.
      rec.fault = e.what();
      last_denoised = s_in;
      next.mean = ext.mean;
      double variance = residual_energy(eff, next.mean, y);
      if (cfg.subtract_noise_floor) variance -= eff.sigma2();
      next.variance = std::max(variance, cfg.variance_floor);
      next.domain = Domain::kX;
      rec.beta_star = 1.0;
    }

    if (cfg.damping > 0.0 && k > 1) {
      next.mean = (1.0 - cfg.damping) * next.mean + cfg.damping * current.mean;
      double variance = residual_energy(eff, next.mean, y);
      if (cfg.subtract_noise_floor) variance -= eff.sigma2();
      next.variance = std::max(variance, cfg.variance_floor);
    }
    rec.residual = residual_energy(eff, next.mean, y);

    const bool done = check_convergence(current.mean, next.mean, cfg.tolerance, cfg.variance_floor);
    current = std::move(next);
    if (truth) rec.psnr = psnr(*truth, estimate(), cfg.psnr_peak);
    trace.records.push_back(std::move(rec));
    if (done) {
      trace.converged = true;
      break;
    }
  }
  result.s_hat = estimate();
  trace.nfe = prior.function_evaluations() - nfe_start;
  return result;
}

ReceiverResult run_lmmse_baseline(const Vec& y, const ChannelInstance& ch,
                                  std::shared_ptr<const RmOperator> op, const ReceiverConfig& cfg,
                                  const Vec* truth) {
  cfg.validate();
  require(op != nullptr, ErrorCode::kInvalidParameter, "receiver needs an RM operator");
  require(static_cast<std::size_t>(y.size()) == ch.m_rows() && ch.n_cols() == op->m(),
          ErrorCode::kInvalidDimension, "observation, channel and operator dimensions disagree");
  const ChannelInstance eff = embed_selection(ch, op);
  ReceiverResult result;
  std::string warning;
  const GaussMessage prior = init_state(y, op->n(), cfg.variance_floor, &warning);
  if (!warning.empty()) result.trace.warnings.push_back(warning);
  const GaussMessage post = lmmse_estimate(eff, prior, y, cfg);
  result.s_hat = op->unmix(post.mean);
  IterationRecord rec;
  rec.iter = 1;
  rec.v_pri = prior.variance;
  rec.v_post = post.variance;
  rec.residual = residual_energy(eff, post.mean, y);
  if (truth) rec.psnr = psnr(*truth, result.s_hat, cfg.psnr_peak);
  result.trace.records.push_back(rec);
  result.trace.converged = true;
  return result;
}

}  // namespace doamp
