#pragma once

// Data model for the 1-D normal sequence problem y_i = theta_i + eps_i,
// together with posterior storage, summaries and estimation metrics.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsfusion/errors.hpp"

namespace hsfusion {

using Vector = std::vector<double>;

struct ChainData {
  Vector y;
  std::optional<Vector> truth;
  std::optional<double> sigma0;

  std::size_t n() const noexcept { return y.size(); }

  void validate() const {
    if (y.size() < 2) throw DomainError("ChainData: need at least 2 observations");
    if (truth && truth->size() != y.size()) {
      throw DomainError("ChainData: truth length differs from y length");
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw DomainError("ChainData: y contains a non-finite value");
    }
    if (sigma0) detail::require_positive(*sigma0, "sigma0");
  }
};

enum class PriorFamily { horseshoe, t_shrinkage, laplace };

inline std::string_view to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::horseshoe: return "hs";
    case PriorFamily::t_shrinkage: return "t";
    case PriorFamily::laplace: return "laplace";
  }
  return "?";
}

inline PriorFamily parse_family(std::string_view name) {
  if (name == "hs" || name == "horseshoe") return PriorFamily::horseshoe;
  if (name == "t" || name == "t_shrinkage") return PriorFamily::t_shrinkage;
  if (name == "laplace") return PriorFamily::laplace;
  throw DomainError("unknown prior family '" + std::string(name) + "'");
}

/// Fixed hyperparameters. lambda_first is lambda_1 (scale of theta_1) for
/// chains and lambda_0 (scale of the root value) for graphs.
struct PriorConfig {
  PriorFamily family = PriorFamily::horseshoe;
  double a_sigma = 0.5;
  double b_sigma = 0.5;
  double lambda_first = 5.0;
  // t / Laplace per-difference scale s; unset means default_family_scale(n).
  std::optional<double> family_scale;
  double t_df = 2.0;
  // Horseshoe only: hold tau at this value instead of sampling it under the
  // half-Cauchy hyperprior.
  std::optional<double> fixed_tau;

  void validate() const {
    detail::require_positive(a_sigma, "a_sigma");
    detail::require_positive(b_sigma, "b_sigma");
    detail::require_positive(lambda_first, "lambda_first");
    if (family_scale) detail::require_positive(*family_scale, "family_scale");
    detail::require_positive(t_df, "t_df");
    if (fixed_tau) detail::require_positive(*fixed_tau, "fixed_tau");
  }
};

/// Default t / Laplace scale: 1 / (n^2 sqrt(n log n)).
inline double default_family_scale(std::size_t n) {
  const double nn = static_cast<double>(n);
  return 1.0 / (nn * nn * std::sqrt(nn * std::log(nn)));
}

inline double resolved_family_scale(const PriorConfig& prior, std::size_t n) {
  return prior.family_scale ? *prior.family_scale : default_family_scale(n);
}

/// One full parameter configuration. lambda_sq[k] and nu[k] belong to the
/// k-th difference (difference i = k + 2 in 1-based chain notation, or the
/// k-th DFS-chain edge for graphs). Differences are derived, never stored.
struct GibbsState {
  Vector theta;
  Vector lambda_sq;
  double tau_sq = 1.0;
  double sigma_sq = 1.0;
  Vector nu;
  double xi = 1.0;

  std::size_t n() const noexcept { return theta.size(); }

  bool positive() const {
    const auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    return std::all_of(lambda_sq.begin(), lambda_sq.end(), pos) &&
           std::all_of(nu.begin(), nu.end(), pos) && pos(tau_sq) && pos(sigma_sq) && pos(xi);
  }
};

struct McmcConfig {
  std::size_t n_iter = 5000;
  std::size_t burn_in = 500;
  std::uint64_t seed = 20240601;
  std::size_t thin = 1;
  std::uint64_t stream = 0;

  void validate() const {
    if (n_iter == 0) throw DomainError("n_iter must be positive");
    if (burn_in >= n_iter) throw DomainError("burn_in must be smaller than n_iter");
    if (thin == 0) throw DomainError("thin must be positive");
  }

  std::size_t kept() const noexcept { return (n_iter - burn_in + thin - 1) / thin; }
};

/// Row-major (draw x component) matrix.
class DrawMatrix {
 public:
  DrawMatrix() = default;
  DrawMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  void append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw DomainError("DrawMatrix: row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  void reserve_rows(std::size_t rows) { data_.reserve(rows * cols_); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SampleMeta {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  McmcConfig mcmc;
  PriorConfig prior;
  double family_scale = 0.0;
  std::size_t clip_events = 0;
};

struct PosteriorSamples {
  DrawMatrix draws;
  Vector sigma_draws;
  Vector tau_draws;
  SampleMeta meta;
};

struct PosteriorSummary {
  Vector mean;
  Vector lower;
  Vector upper;
};

namespace detail {

// Shortest text that reads back to the same double (at most 17 digits).
inline std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Linear interpolation between order statistics of a sorted sample.
inline double sorted_quantile(std::span<const double> sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Component-wise posterior mean and equal-tailed credible band.
inline PosteriorSummary posterior_summary(const DrawMatrix& draws, double level) {
  if (draws.empty()) throw StateError("posterior_summary: no draws");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("credible level must lie in (0, 1)");
  const std::size_t rows = draws.rows();
  const std::size_t cols = draws.cols();
  PosteriorSummary out{Vector(cols), Vector(cols), Vector(cols)};
  std::vector<double> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = draws(r, c);
    std::sort(column.begin(), column.end());
    // Summing in sorted order makes the mean independent of row order.
    double sum = 0.0;
    for (double v : column) sum += v;
    out.mean[c] = sum / static_cast<double>(rows);
    out.lower[c] = detail::sorted_quantile(column, 0.5 * (1.0 - level));
    out.upper[c] = detail::sorted_quantile(column, 0.5 * (1.0 + level));
  }
  return out;
}

inline PosteriorSummary posterior_summary(const PosteriorSamples& samples, double level) {
  return posterior_summary(samples.draws, level);
}

inline double mse(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size() || est.empty()) throw DomainError("mse: length mismatch");
  double ss = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) ss += (est[i] - truth[i]) * (est[i] - truth[i]);
  return ss / static_cast<double>(est.size());
}

inline double adj_mse(std::span<const double> est, std::span<const double> truth) {
  if (est.size() != truth.size() || est.empty()) throw DomainError("adj_mse: length mismatch");
  double ss = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    ss += (est[i] - truth[i]) * (est[i] - truth[i]);
    norm += truth[i] * truth[i];
  }
  if (norm == 0.0) throw DomainError("adj_mse: truth is the zero vector");
  return ss / norm;
}

/// Split-chain potential scale reduction of one scalar trace (advisory only).
inline double split_rhat(std::span<const double> trace) {
  const std::size_t half = trace.size() / 2;
  if (half < 2) return std::nan("");
  const auto moments = [](std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::pair{m, s / static_cast<double>(x.size() - 1)};
  };
  const auto [m1, v1] = moments(trace.subspan(0, half));
  const auto [m2, v2] = moments(trace.subspan(trace.size() - half, half));
  const double len = static_cast<double>(half);
  const double grand = 0.5 * (m1 + m2);
  const double between = len * ((m1 - grand) * (m1 - grand) + (m2 - grand) * (m2 - grand));
  const double within = 0.5 * (v1 + v2);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (len - 1.0) / len * within + between / len;
  return std::sqrt(var_plus / within);
}

}  // namespace hsfusion
