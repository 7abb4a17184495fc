#include "doamp/sure.hpp"

#include <cmath>

#include "doamp/errors.hpp"
#include "doamp/rng.hpp"

namespace doamp {

double mc_divergence(NlePrior& prior, const Vec& s_in, const Vec& phi_out, double t_star,
                     double v, double eps_fd, std::uint64_t seed) {
  if (!(eps_fd > 0.0) || !std::isfinite(eps_fd)) {
    fail(ErrorCode::kInvalidParameter, "divergence perturbation must be > 0");
  }
  require(s_in.size() == phi_out.size() && s_in.size() > 0, ErrorCode::kInvalidDimension,
          "divergence: input and output lengths differ");
  CounterRng rng(seed);
  Vec w(s_in.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
  const Vec perturbed = prior.denoise(s_in + eps_fd * w, t_star, v);
  require(perturbed.size() == s_in.size(), ErrorCode::kNleFailure,
          "denoiser changed the vector length");
  if (!perturbed.allFinite()) fail(ErrorCode::kNleFailure, "non-finite denoiser output");
  return w.dot(perturbed - phi_out) / (eps_fd * static_cast<double>(s_in.size()));
}

double mc_divergence(NlePrior& prior, const Vec& s_in, double t_star, double v, double eps_fd,
                     std::uint64_t seed) {
  const Vec phi = prior.denoise(s_in, t_star, v);
  if (phi.size() != s_in.size() || !phi.allFinite()) {
    fail(ErrorCode::kNleFailure, "invalid denoiser output");
  }
  return mc_divergence(prior, s_in, phi, t_star, v, eps_fd, seed);
}

SureResult sure_orthogonalize(Vec phi_out, double divergence, const Vec& s_in) {
  require(phi_out.size() == s_in.size(), ErrorCode::kInvalidDimension,
          "SURE: output and input lengths differ");
  SureResult r;
  r.phi_perp = phi_out - divergence * s_in;
  r.phi_out = std::move(phi_out);
  r.divergence = divergence;
  return r;
}

}  // namespace doamp
