#pragma once

#include <Eigen/Dense>
#include <span>

namespace doamp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<double> as_span(Vec& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Vec to_vec(std::span<const double> s) {
  return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

}  // namespace doamp
