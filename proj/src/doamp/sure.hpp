#pragma once

#include <cstdint>

#include "doamp/nle.hpp"
#include "doamp/types.hpp"

namespace doamp {

struct SureResult {
  Vec phi_out;
  double divergence = 0.0;
  Vec phi_perp;  // phi_out - divergence * s_in
};

/// Single-probe Monte-Carlo divergence, normalized per coordinate:
///   <w, phi(s_in + eps w) - phi(s_in)> / (eps * N),  w ~ N(0, I) from `seed`.
/// Exact for affine denoisers up to the ||w||^2 / N concentration.
double mc_divergence(NlePrior& prior, const Vec& s_in, const Vec& phi_out, double t_star,
                     double v, double eps_fd, std::uint64_t seed);

/// Same, evaluating phi(s_in) itself.
double mc_divergence(NlePrior& prior, const Vec& s_in, double t_star, double v, double eps_fd,
                     std::uint64_t seed);

SureResult sure_orthogonalize(Vec phi_out, double divergence, const Vec& s_in);

}  // namespace doamp
