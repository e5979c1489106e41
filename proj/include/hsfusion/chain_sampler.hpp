#pragma once

// Gibbs sampler for Bayesian fusion estimation.
//
// Model (Horseshoe family):
//   y_i | theta, sigma^2              ~ N(theta_i, sigma^2)
//   theta_1 | sigma^2                 ~ N(0, lambda_1^2 sigma^2)
//   eta_k | lambda_k^2, tau^2, sigma^2 ~ N(0, lambda_k^2 tau^2 sigma^2)
//   lambda_k^2 | nu_k ~ IG(1/2, 1/nu_k),  tau^2 | xi ~ IG(1/2, 1/xi)
//   nu_k, xi ~ IG(1/2, 1),  sigma^2 ~ IG(a_sigma, b_sigma)
// where eta_k is the k-th successive difference. The t and Laplace families
// replace the (lambda^2, nu, tau^2, xi) block by a single scale mixture with
// tau^2 held at 1.
//
// The sweep is written against a topology (the 1-D chain here, the DFS chain
// of a graph in graph_fusion.hpp) that supplies the theta full conditional
// and the list of differences. Everything downstream of the differences is
// shared.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hsfusion/chain_model.hpp"
#include "hsfusion/distributions.hpp"
#include "hsfusion/errors.hpp"

namespace hsfusion {

/// theta_i | rest ~ N(mu, zeta), zeta a variance.
struct ConditionalNormalParams {
  double mu;
  double zeta;

  double log_density(double x) const {
    constexpr double log_two_pi = 1.8378770664093454836;
    return -0.5 * (log_two_pi + std::log(zeta) + (x - mu) * (x - mu) / zeta);
  }
};

inline constexpr double kScaleFloor = 1e-12;
inline constexpr double kScaleCeiling = 1e12;

/// Keeps variance parameters inside [kScaleFloor, kScaleCeiling] and counts
/// how often that was necessary. NaN is unrecoverable.
struct ScaleGuard {
  std::size_t iteration = 0;
  std::size_t clip_events = 0;

  double operator()(double value, const char* name) {
    if (std::isnan(value)) throw SamplerError(iteration, std::string("NaN draw for ") + name);
    if (value < kScaleFloor) {
      ++clip_events;
      return kScaleFloor;
    }
    if (value > kScaleCeiling) {
      ++clip_events;
      return kScaleCeiling;
    }
    return value;
  }
};

// ---------------------------------------------------------------------------
// Full-conditional parameters. Each is a pure function of the quantities it
// depends on so that tests can compare it against the joint density.

inline InverseGammaParams lambda_sq_conditional(double diff, double nu, double tau_sq,
                                                double sigma_sq) {
  return {1.0, 1.0 / nu + diff * diff / (2.0 * tau_sq * sigma_sq)};
}

inline InverseGammaParams nu_conditional(double lambda_sq) { return {1.0, 1.0 + 1.0 / lambda_sq}; }

/// weighted_ss = sum_k diff_k^2 / lambda_k^2.
inline InverseGammaParams tau_sq_conditional(std::size_t n, double xi, double weighted_ss,
                                             double sigma_sq) {
  return {0.5 * static_cast<double>(n), 1.0 / xi + weighted_ss / (2.0 * sigma_sq)};
}

inline InverseGammaParams xi_conditional(double tau_sq) { return {1.0, 1.0 + 1.0 / tau_sq}; }

/// anchor is theta_1 (chain) or theta_r (graph root).
inline InverseGammaParams sigma_sq_conditional(std::size_t n, const PriorConfig& prior,
                                               double residual_ss, double weighted_ss,
                                               double tau_sq, double anchor) {
  const double l1 = prior.lambda_first;
  return {static_cast<double>(n) + prior.a_sigma,
          prior.b_sigma +
              0.5 * (residual_ss + weighted_ss / tau_sq + anchor * anchor / (l1 * l1))};
}

/// t family, lambda^2 = s^2 w with w ~ IG(df/2, df/2):
/// lambda^2 | eta ~ IG((df + 1)/2, df s^2 / 2 + eta^2 / (2 sigma^2)).
inline InverseGammaParams t_lambda_sq_conditional(double diff, double sigma_sq, double df,
                                                  double scale) {
  return {0.5 * (df + 1.0), 0.5 * df * scale * scale + diff * diff / (2.0 * sigma_sq)};
}

// ---------------------------------------------------------------------------
// Topologies

/// Conditional for theta_i given everything else, with the 1-D chain's
/// boundary conventions (lambda_{n+1} = infinity). `i` is 0-based.
inline ConditionalNormalParams chain_theta_conditional(std::size_t i, const GibbsState& s,
                                                       std::span<const double> y,
                                                       double lambda_first) {
  const std::size_t n = s.theta.size();
  if (i >= n) throw DomainError("theta_conditional: index " + std::to_string(i) + " out of range");
  // Precision weights of the difference to the right (i+1) and to the left (i).
  const double right = (i + 1 < n) ? 1.0 / (s.lambda_sq[i] * s.tau_sq) : 0.0;
  const double right_value = (i + 1 < n) ? s.theta[i + 1] * right : 0.0;
  double prec = 0.0;
  double lin = 0.0;
  if (i == 0) {
    prec = 1.0 + right + 1.0 / (lambda_first * lambda_first);
    lin = y[0] + right_value;
  } else {
    const double left = 1.0 / (s.lambda_sq[i - 1] * s.tau_sq);
    prec = 1.0 + right + left;
    lin = y[i] + right_value + s.theta[i - 1] * left;
  }
  const double zeta = s.sigma_sq / prec;
  return {zeta / s.sigma_sq * lin, zeta};
}

/// A fusion topology provides the theta full conditional, the list of
/// penalised differences (one per lambda slot) and the anchor value carrying
/// the N(0, lambda_first^2 sigma^2) prior.
template <class T>
concept FusionTopology = requires(const T& t, const GibbsState& s, std::span<const double> y,
                                  std::span<double> out, std::size_t i) {
  { t.size() } -> std::convertible_to<std::size_t>;
  { t.theta_conditional(i, s, y, 1.0) } -> std::same_as<ConditionalNormalParams>;
  t.differences(std::span<const double>(s.theta), out);
  { t.anchor(std::span<const double>(s.theta)) } -> std::convertible_to<double>;
};

struct ChainTopology {
  std::size_t n;

  std::size_t size() const noexcept { return n; }

  ConditionalNormalParams theta_conditional(std::size_t i, const GibbsState& s,
                                            std::span<const double> y, double lambda_first) const {
    return chain_theta_conditional(i, s, y, lambda_first);
  }

  void differences(std::span<const double> theta, std::span<double> out) const {
    for (std::size_t k = 0; k + 1 < n; ++k) out[k] = theta[k + 1] - theta[k];
  }

  double anchor(std::span<const double> theta) const { return theta[0]; }
};

// ---------------------------------------------------------------------------
// Updates shared by every topology

namespace detail {

inline double weighted_ss(std::span<const double> diffs, std::span<const double> lambda_sq) {
  double ss = 0.0;
  for (std::size_t k = 0; k < diffs.size(); ++k) ss += diffs[k] * diffs[k] / lambda_sq[k];
  return ss;
}

inline double residual_ss(std::span<const double> y, std::span<const double> theta) {
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) ss += (y[i] - theta[i]) * (y[i] - theta[i]);
  return ss;
}

}  // namespace detail

template <FusionTopology Topology>
void sweep_theta(const Topology& topo, GibbsState& s, std::span<const double> y,
                 const PriorConfig& prior, Rng& rng, ScaleGuard& guard) {
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const ConditionalNormalParams c = topo.theta_conditional(i, s, y, prior.lambda_first);
    const double draw = rng.normal(c.mu, std::sqrt(c.zeta));
    if (!std::isfinite(draw)) {
      throw SamplerError(guard.iteration, "non-finite theta draw at index " + std::to_string(i));
    }
    s.theta[i] = draw;
  }
}

inline void update_hs_local_scales(std::span<const double> diffs, GibbsState& s, Rng& rng,
                                   ScaleGuard& guard) {
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    s.lambda_sq[k] = guard(
        sample_inverse_gamma(lambda_sq_conditional(diffs[k], s.nu[k], s.tau_sq, s.sigma_sq), rng),
        "lambda^2");
    s.nu[k] = guard(sample_inverse_gamma(nu_conditional(s.lambda_sq[k]), rng), "nu");
  }
}

inline void update_t_local_scales(std::span<const double> diffs, GibbsState& s, double df,
                                  double scale, Rng& rng, ScaleGuard& guard) {
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    s.lambda_sq[k] = guard(
        sample_inverse_gamma(t_lambda_sq_conditional(diffs[k], s.sigma_sq, df, scale), rng),
        "lambda^2");
  }
}

/// Laplace family: eta_k / sigma ~ Laplace(rate), written as
/// eta_k | s_k ~ N(0, s_k sigma^2), s_k ~ Exp(rate^2 / 2). The reciprocal
/// 1/s_k is inverse Gaussian with mean rate sigma / |eta_k| and shape rate^2;
/// for eta_k = 0 the conditional of s_k is Gamma(1/2, rate^2 / 2).
inline void update_laplace_local_scales(std::span<const double> diffs, GibbsState& s,
                                        double scale, Rng& rng, ScaleGuard& guard) {
  const double rate = 1.0 / scale;
  const double sigma = std::sqrt(s.sigma_sq);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    const double gap = std::abs(diffs[k]);
    double local = 0.0;
    if (gap == 0.0) {
      local = sample_gamma(0.5, rng) / (0.5 * rate * rate);
    } else {
      local = 1.0 / sample_inverse_gaussian(rate * sigma / gap, rate * rate, rng);
    }
    s.lambda_sq[k] = guard(local, "lambda^2");
  }
}

inline void update_hs_global_scale(std::span<const double> diffs, GibbsState& s, Rng& rng,
                                   ScaleGuard& guard) {
  const double wss = detail::weighted_ss(diffs, s.lambda_sq);
  s.tau_sq = guard(
      sample_inverse_gamma(tau_sq_conditional(s.theta.size(), s.xi, wss, s.sigma_sq), rng),
      "tau^2");
  s.xi = guard(sample_inverse_gamma(xi_conditional(s.tau_sq), rng), "xi");
}

inline void update_sigma_sq(std::span<const double> diffs, double anchor, GibbsState& s,
                            std::span<const double> y, const PriorConfig& prior, Rng& rng,
                            ScaleGuard& guard) {
  const double rss = detail::residual_ss(y, s.theta);
  const double wss = detail::weighted_ss(diffs, s.lambda_sq);
  s.sigma_sq = guard(
      sample_inverse_gamma(
          sigma_sq_conditional(s.theta.size(), prior, rss, wss, s.tau_sq, anchor), rng),
      "sigma^2");
}

/// One systematic-scan sweep: theta (index order), local scales, global
/// scale (Horseshoe only), sigma^2. `diffs` is scratch of length n - 1.
template <FusionTopology Topology>
void gibbs_sweep(const Topology& topo, GibbsState& s, std::span<const double> y,
                 const PriorConfig& prior, double family_scale, Rng& rng, ScaleGuard& guard,
                 std::span<double> diffs) {
  sweep_theta(topo, s, y, prior, rng, guard);
  topo.differences(s.theta, diffs);
  switch (prior.family) {
    case PriorFamily::horseshoe:
      update_hs_local_scales(diffs, s, rng, guard);
      if (!prior.fixed_tau) update_hs_global_scale(diffs, s, rng, guard);
      break;
    case PriorFamily::t_shrinkage:
      update_t_local_scales(diffs, s, prior.t_df, family_scale, rng, guard);
      break;
    case PriorFamily::laplace:
      update_laplace_local_scales(diffs, s, family_scale, rng, guard);
      break;
  }
  update_sigma_sq(diffs, topo.anchor(s.theta), s, y, prior, rng, guard);
}

/// Warm start: theta = y, unit scales (tau at its fixed value if any), sigma^2 = sample variance of the
/// penalised differences of y (1 if that is zero).
template <FusionTopology Topology>
GibbsState initial_state(const Topology& topo, std::span<const double> y,
                         const PriorConfig& prior = {}) {
  const std::size_t n = topo.size();
  GibbsState s;
  s.theta.assign(y.begin(), y.end());
  s.lambda_sq.assign(n - 1, 1.0);
  s.nu.assign(n - 1, 1.0);
  s.tau_sq = prior.family == PriorFamily::horseshoe && prior.fixed_tau
                 ? *prior.fixed_tau * *prior.fixed_tau
                 : 1.0;
  s.xi = 1.0;
  Vector diffs(n - 1);
  topo.differences(s.theta, diffs);
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var = diffs.size() > 1 ? var / static_cast<double>(diffs.size() - 1) : 0.0;
  s.sigma_sq = var > kScaleFloor ? std::min(var, kScaleCeiling) : 1.0;
  return s;
}

/// Runs one chain on an arbitrary topology and keeps post-burn-in, thinned
/// draws of theta, sigma^2 and tau^2.
template <FusionTopology Topology>
PosteriorSamples run_fusion(const Topology& topo, std::span<const double> y,
                            const PriorConfig& prior, const McmcConfig& mcmc) {
  prior.validate();
  mcmc.validate();
  const std::size_t n = topo.size();
  if (y.size() != n) throw DomainError("run_fusion: y length does not match topology");
  if (n < 2) throw DomainError("run_fusion: need at least 2 vertices");

  PosteriorSamples out;
  out.meta.seed = mcmc.seed;
  out.meta.stream = mcmc.stream;
  out.meta.mcmc = mcmc;
  out.meta.prior = prior;
  out.meta.family_scale = resolved_family_scale(prior, n);
  out.draws = DrawMatrix(0, n);
  out.draws.reserve_rows(mcmc.kept());
  out.sigma_draws.reserve(mcmc.kept());
  out.tau_draws.reserve(mcmc.kept());

  Rng rng(mcmc.seed, mcmc.stream);
  GibbsState state = initial_state(topo, y, prior);
  Vector diffs(n - 1);
  ScaleGuard guard;
  for (std::size_t it = 0; it < mcmc.n_iter; ++it) {
    guard.iteration = it;
    gibbs_sweep(topo, state, y, prior, out.meta.family_scale, rng, guard, diffs);
    if (it >= mcmc.burn_in && (it - mcmc.burn_in) % mcmc.thin == 0) {
      out.draws.append_row(state.theta);
      out.sigma_draws.push_back(state.sigma_sq);
      out.tau_draws.push_back(state.tau_sq);
    }
  }
  out.meta.clip_events = guard.clip_events;
  return out;
}

// ---------------------------------------------------------------------------
// 1-D chain entry points

/// theta_i full conditional; `i` is 0-based (theta_1 is i = 0).
inline ConditionalNormalParams theta_conditional(std::size_t i, const GibbsState& state,
                                                 const ChainData& data, const PriorConfig& prior) {
  return chain_theta_conditional(i, state, data.y, prior.lambda_first);
}

inline void update_theta(GibbsState& state, const ChainData& data, const PriorConfig& prior,
                         Rng& rng) {
  ScaleGuard guard;
  sweep_theta(ChainTopology{data.n()}, state, data.y, prior, rng, guard);
}

inline Vector chain_differences(const GibbsState& state) {
  Vector diffs(state.theta.size() - 1);
  ChainTopology{state.theta.size()}.differences(state.theta, diffs);
  return diffs;
}

inline void update_local_scales_hs(GibbsState& state, Rng& rng) {
  ScaleGuard guard;
  update_hs_local_scales(chain_differences(state), state, rng, guard);
}

inline void update_local_scales_t(GibbsState& state, const PriorConfig& prior, Rng& rng) {
  ScaleGuard guard;
  update_t_local_scales(chain_differences(state), state, prior.t_df,
                        resolved_family_scale(prior, state.n()), rng, guard);
}

inline void update_local_scales_laplace(GibbsState& state, const PriorConfig& prior, Rng& rng) {
  ScaleGuard guard;
  update_laplace_local_scales(chain_differences(state), state,
                              resolved_family_scale(prior, state.n()), rng, guard);
}

inline void update_global_scale(GibbsState& state, Rng& rng) {
  ScaleGuard guard;
  update_hs_global_scale(chain_differences(state), state, rng, guard);
}

inline void update_sigma2(GibbsState& state, const ChainData& data, const PriorConfig& prior,
                          Rng& rng) {
  ScaleGuard guard;
  update_sigma_sq(chain_differences(state), state.theta[0], state, data.y, prior, rng, guard);
}

inline PosteriorSamples run_chain(const ChainData& data, const PriorConfig& prior,
                                  const McmcConfig& mcmc) {
  data.validate();
  return run_fusion(ChainTopology{data.n()}, data.y, prior, mcmc);
}

}  // namespace hsfusion
