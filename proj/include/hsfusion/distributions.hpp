#pragma once

// Sampling primitives shared by every Gibbs update, plus the closed-form
// Horseshoe density bounds used for the prior-mass and prior-thickness checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "hsfusion/errors.hpp"

namespace hsfusion {

/// Seeded random stream. One instance per chain; movable, never shared.
///
/// The (seed, stream) pair is expanded through std::seed_seq, so distinct
/// streams under one master seed are independent for practical purposes.
/// Uniforms and normals are generated here rather than through
/// <random> distributions so draw sequences are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  /// Standard normal via the Marsaglia polar method (second variate discarded).
  double normal() {
    for (;;) {
      const double a = 2.0 * uniform() - 1.0;
      const double b = 2.0 * uniform() - 1.0;
      const double s = a * a + b * b;
      if (s < 1.0 && s > 0.0) return a * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("Rng::below: bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r < limit) return r % bound;
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// IG(shape, scale): density proportional to x^(-shape-1) exp(-scale/x).
struct InverseGammaParams {
  double shape;
  double scale;

  void validate() const {
    detail::require_positive(shape, "inverse-gamma shape");
    detail::require_positive(scale, "inverse-gamma scale");
  }

  double log_density(double x) const {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
  }
};

/// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1; shape < 1 is
/// boosted through Gamma(shape + 1) * U^(1/shape).
inline double sample_gamma(double shape, Rng& rng) {
  detail::require_positive(shape, "gamma shape");
  if (shape < 1.0) {
    const double g = sample_gamma(shape + 1.0, rng);
    return g * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double sample_inverse_gamma(const InverseGammaParams& params, Rng& rng) {
  params.validate();
  return params.scale / sample_gamma(params.shape, rng);
}

/// Returns X^2 for X ~ C+(0, psi), through the two-stage mixture
/// X^2 | phi ~ IG(1/2, 1/phi), phi ~ IG(1/2, 1/psi^2).
inline double sample_half_cauchy_sq(double psi, Rng& rng) {
  detail::require_positive(psi, "half-Cauchy scale psi");
  const double phi = sample_inverse_gamma({0.5, 1.0 / (psi * psi)}, rng);
  return sample_inverse_gamma({0.5, 1.0 / phi}, rng);
}

/// Inverse Gaussian IG(mean, shape) by Michael, Schucany and Haas. The root
/// is evaluated in a cancellation-free form so very large means stay accurate.
inline double sample_inverse_gaussian(double mean, double shape, Rng& rng) {
  detail::require_positive(mean, "inverse-Gaussian mean");
  detail::require_positive(shape, "inverse-Gaussian shape");
  const double z = rng.normal();
  const double y = z * z;
  if (y == 0.0) return mean;
  const double my = mean * y;
  const double root = std::sqrt(my * my + 4.0 * mean * shape * y);
  const double denom = my + root;
  const double x = 4.0 * mean * mean * shape * y / (denom * denom);
  if (rng.uniform() <= mean / (mean + x)) return x;
  return mean * mean / x;
}

/// Window/threshold constants for the Horseshoe bound checks.
struct HsBoundConfig {
  double tau;
  double L;
  double a_n;

  void validate() const {
    detail::require_positive(tau, "tau");
    detail::require_positive(L, "L");
    detail::require_positive(a_n, "a_n");
  }
};

struct DensityBounds {
  double lower;
  double upper;
};

namespace detail {
// 1 / (2 pi)^{3/2}
inline constexpr double kInvTwoPiPow1p5 = 0.063493635934240969;
}  // namespace detail

/// Closed-form bounds on the Horseshoe marginal density p_HS(eta | tau):
///   lower = log(1 + 4 tau^2 / eta^2) / (tau (2 pi)^{3/2})
///   upper = 2 log(1 + 2 tau^2 / eta^2) / (tau (2 pi)^{3/2})
/// The density is unbounded at the origin, so eta = 0 is rejected.
inline DensityBounds hs_density_bounds(double eta, double tau) {
  detail::require_positive(tau, "tau");
  if (eta == 0.0 || !std::isfinite(eta)) {
    throw DomainError("hs_density_bounds: eta must be finite and non-zero");
  }
  const double ratio = (tau / eta) * (tau / eta);
  const double front = detail::kInvTwoPiPow1p5 / tau;
  return {front * std::log1p(4.0 * ratio), 2.0 * front * std::log1p(2.0 * ratio)};
}

/// Upper bound on the Horseshoe prior mass outside [-a_n, a_n]:
/// (2 / pi^3)^{1/2} * 4 tau / a_n.
inline double prior_mass_outside(double a_n, double tau) {
  detail::require_positive(a_n, "a_n");
  detail::require_positive(tau, "tau");
  constexpr double pi = std::numbers::pi;
  return std::sqrt(2.0 / (pi * pi * pi)) * 4.0 * tau / a_n;
}

/// -log of the lower-bound density at the worst point |eta| = L * sigma.
inline double hs_thickness(double L, double tau, double sigma) {
  detail::require_positive(L, "L");
  detail::require_positive(tau, "tau");
  detail::require_positive(sigma, "sigma");
  const double worst = L * sigma;
  const double ratio = (tau / worst) * (tau / worst);
  const double lower = detail::kInvTwoPiPow1p5 / tau * std::log1p(4.0 * ratio);
  return -std::log(lower);
}

}  // namespace hsfusion
