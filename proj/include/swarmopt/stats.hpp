#pragma once

#include <cmath>
#include <numbers>

namespace swarmopt {

inline double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log Phi(z), accurate in the far left tail.
inline double log_norm_cdf(double z) {
  if (z > -30.0) return std::log(norm_cdf(z));
  // Asymptotic series of the Mills ratio.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

/// phi(z) / Phi(z).
inline double mills_inverse(double z) {
  if (z > -30.0) return std::exp(-0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - log_norm_cdf(z));
  const double z2 = z * z;
  return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2));
}

}  // namespace swarmopt
