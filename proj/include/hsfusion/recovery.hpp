#pragma once

// Block-structure recovery from continuous-shrinkage output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hsfusion/chain_model.hpp"
#include "hsfusion/errors.hpp"

namespace hsfusion {

/// Differences judged fused. Entries of fused_set are 1-based difference
/// positions j in [2, n] (difference theta_j - theta_{j-1}).
struct BlockProjection {
  std::vector<std::size_t> fused_set;
  double threshold = 0.0;
  std::size_t n = 0;

  bool is_fused(std::size_t j) const {
    return std::binary_search(fused_set.begin(), fused_set.end(), j);
  }
};

/// eps_n / n with eps_n = constant * sqrt(s0 log n / n).
inline double contraction_threshold(std::size_t n, std::size_t s0, double constant = 1.0) {
  const double nn = static_cast<double>(n);
  return constant * std::sqrt(static_cast<double>(s0) * std::log(nn) / nn) / nn;
}

/// S(theta, sigma) = { j : |theta_j - theta_{j-1}| / sigma < eps_n / n }.
inline BlockProjection project_blocks(std::span<const double> theta, double sigma, std::size_t s0,
                                      double constant = 1.0) {
  if (s0 < 1) throw DomainError("project_blocks: s0 must be at least 1");
  detail::require_positive(sigma, "sigma");
  detail::require_positive(constant, "threshold constant");
  if (theta.size() < 2) throw DomainError("project_blocks: need at least 2 values");
  BlockProjection out;
  out.n = theta.size();
  out.threshold = contraction_threshold(theta.size(), s0, constant);
  for (std::size_t j = 1; j < theta.size(); ++j) {
    if (std::abs(theta[j] - theta[j - 1]) / sigma < out.threshold) out.fused_set.push_back(j + 1);
  }
  return out;
}

/// #A with A = S^c minus the true change points: declared breaks that are
/// truly fused.
inline std::size_t false_positive_count(const BlockProjection& proj, std::span<const double> truth) {
  if (truth.size() != proj.n) throw DomainError("false_positive_count: truth length mismatch");
  std::size_t count = 0;
  std::size_t cursor = 0;
  for (std::size_t j = 2; j <= proj.n; ++j) {
    while (cursor < proj.fused_set.size() && proj.fused_set[cursor] < j) ++cursor;
    const bool fused = cursor < proj.fused_set.size() && proj.fused_set[cursor] == j;
    if (!fused && truth[j - 1] == truth[j - 2]) ++count;
  }
  return count;
}

enum class SigmaMode { per_draw, posterior_mean };

/// #A for every kept draw. per_draw uses each draw's own sigma.
inline std::vector<std::size_t> false_positive_counts(const PosteriorSamples& samples,
                                                      std::span<const double> truth,
                                                      std::size_t s0,
                                                      SigmaMode mode = SigmaMode::per_draw,
                                                      double constant = 1.0) {
  if (samples.draws.empty()) throw StateError("false_positive_counts: no draws");
  double mean_sigma = 0.0;
  for (double v : samples.sigma_draws) mean_sigma += std::sqrt(v);
  mean_sigma /= static_cast<double>(samples.sigma_draws.size());
  std::vector<std::size_t> out(samples.draws.rows());
  for (std::size_t r = 0; r < samples.draws.rows(); ++r) {
    const double sigma =
        mode == SigmaMode::per_draw ? std::sqrt(samples.sigma_draws[r]) : mean_sigma;
    out[r] = false_positive_count(project_blocks(samples.draws.row(r), sigma, s0, constant), truth);
  }
  return out;
}

/// Symmetric fused-pair indicator, stored densely.
class PairwiseBlocks {
 public:
  explicit PairwiseBlocks(std::size_t n) : n_(n), bits_(n * n, 0) {
    for (std::size_t i = 0; i < n; ++i) bits_[i * n + i] = 1;
  }

  std::size_t size() const noexcept { return n_; }
  bool fused(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value) {
    bits_[i * n_ + j] = value;
    bits_[j * n_ + i] = value;
  }

  /// Number of fused unordered pairs i < j.
  std::size_t fused_pairs() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) count += bits_[i * n_ + j];
    return count;
  }

 private:
  std::size_t n_;
  std::vector<unsigned char> bits_;
};

/// theta_j1 and theta_j2 are declared equal when their estimated gap is
/// strictly less than half their observed gap. Pairs with equal
/// observations are fused only when their estimates are equal too.
inline PairwiseBlocks practical_threshold(std::span<const double> theta_hat,
                                          std::span<const double> y) {
  if (theta_hat.size() != y.size()) throw DomainError("practical_threshold: length mismatch");
  PairwiseBlocks out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t j = i + 1; j < y.size(); ++j) {
      const double gap = std::abs(theta_hat[i] - theta_hat[j]);
      const double data_gap = std::abs(y[i] - y[j]);
      out.set(i, j, data_gap == 0.0 ? gap == 0.0 : gap < 0.5 * data_gap);
    }
  }
  return out;
}

struct WbMetrics {
  double within;   // W: mean gap over truly equal pairs
  double between;  // B: min gap over truly different pairs, +inf if none
};

inline WbMetrics wb_metrics(std::span<const double> theta_hat, std::span<const double> truth) {
  if (theta_hat.size() != truth.size()) throw DomainError("wb_metrics: length mismatch");
  double within_sum = 0.0;
  std::size_t within_count = 0;
  double between = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      const double gap = std::abs(theta_hat[i] - theta_hat[j]);
      if (truth[i] == truth[j]) {
        within_sum += gap;
        ++within_count;
      } else if (gap < between) {
        between = gap;
      }
    }
  }
  return {within_count ? within_sum / static_cast<double>(within_count) : 0.0, between};
}

}  // namespace hsfusion
