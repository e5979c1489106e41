#pragma once

// Synthetic piecewise-constant signals, noise, planted-community graphs and
// the Monte-Carlo harness that summarises estimation and block-recovery
// metrics over replications.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hsfusion/chain_model.hpp"
#include "hsfusion/chain_sampler.hpp"
#include "hsfusion/distributions.hpp"
#include "hsfusion/graph_fusion.hpp"
#include "hsfusion/parallel.hpp"
#include "hsfusion/recovery.hpp"

namespace hsfusion {

enum class SignalKind { even, uneven, very_uneven };

inline std::string_view to_string(SignalKind kind) {
  switch (kind) {
    case SignalKind::even: return "even";
    case SignalKind::uneven: return "uneven";
    case SignalKind::very_uneven: return "very_uneven";
  }
  return "?";
}

inline SignalKind parse_kind(std::string_view name) {
  if (name == "even") return SignalKind::even;
  if (name == "uneven") return SignalKind::uneven;
  if (name == "very_uneven" || name == "very-uneven") return SignalKind::very_uneven;
  throw DomainError("unknown signal kind '" + std::string(name) + "'");
}

inline constexpr std::size_t kSignalBlocks = 10;

/// Block lengths for the three designs: ten blocks; `uneven` and
/// `very_uneven` alternate long and short blocks (long first) with short
/// length n/20 and n/50 respectively. Any remainder goes to the last block.
inline std::vector<std::size_t> block_lengths(SignalKind kind, std::size_t n) {
  if (n < 2 * kSignalBlocks) throw DomainError("signal length must be at least 20");
  std::vector<std::size_t> lengths(kSignalBlocks);
  if (kind == SignalKind::even) {
    lengths.assign(kSignalBlocks, n / kSignalBlocks);
  } else {
    const std::size_t divisor = kind == SignalKind::uneven ? 20 : 50;
    const std::size_t shorter = std::max<std::size_t>(1, n / divisor);
    const std::size_t longer = (n - shorter * kSignalBlocks / 2) / (kSignalBlocks / 2);
    for (std::size_t b = 0; b < kSignalBlocks; ++b) lengths[b] = b % 2 == 0 ? longer : shorter;
  }
  std::size_t total = 0;
  for (std::size_t len : lengths) total += len;
  lengths.back() += n - total;
  return lengths;
}

struct SignalSpec {
  SignalKind kind = SignalKind::even;
  std::size_t n = 100;
  // Empty means the default cycle 0, 1, 2, 3, 4, 0, 1, ... scaled by amplitude.
  Vector levels;
  double amplitude = 1.0;
  // Explicit lengths override the kind's layout.
  std::vector<std::size_t> lengths;
  std::uint64_t seed = 0;

  std::vector<std::size_t> resolved_lengths() const {
    return lengths.empty() ? block_lengths(kind, n) : lengths;
  }

  Vector resolved_levels(std::size_t blocks) const {
    if (!levels.empty()) return levels;
    Vector out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) out[b] = amplitude * static_cast<double>(b % 5);
    return out;
  }
};

/// Piecewise-constant theta_0 for a spec.
inline Vector make_signal(const SignalSpec& spec) {
  const auto lengths = spec.resolved_lengths();
  const Vector levels = spec.resolved_levels(lengths.size());
  if (levels.size() != lengths.size()) throw DomainError("make_signal: one level per block required");
  std::size_t total = 0;
  for (std::size_t len : lengths) {
    if (len == 0) throw DomainError("make_signal: empty block");
    total += len;
  }
  if (total != spec.n) {
    throw DomainError("make_signal: block lengths sum to " + std::to_string(total) + ", not " +
                      std::to_string(spec.n));
  }
  for (std::size_t b = 1; b < levels.size(); ++b) {
    if (levels[b] == levels[b - 1]) throw DomainError("make_signal: adjacent blocks share a level");
  }
  Vector theta;
  theta.reserve(spec.n);
  for (std::size_t b = 0; b < lengths.size(); ++b) theta.insert(theta.end(), lengths[b], levels[b]);
  return theta;
}

/// y_i = theta0_i + N(0, sigma^2), deterministic per (seed, stream).
inline Vector add_noise(std::span<const double> theta0, double sigma, std::uint64_t seed,
                        std::uint64_t stream = 0) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw DomainError("add_noise: sigma must be >= 0");
  Rng rng(seed, stream);
  Vector y(theta0.begin(), theta0.end());
  if (sigma == 0.0) return y;
  for (double& v : y) v += sigma * rng.normal();
  return y;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream id for replication `rep` of a (kind, sigma) scenario. Independent of
// the family so that every family sees the same noisy data.
inline std::uint64_t scenario_stream(SignalKind kind, double sigma, std::size_t rep) {
  const std::uint64_t base =
      splitmix64(static_cast<std::uint64_t>(kind) ^ splitmix64(std::bit_cast<std::uint64_t>(sigma)));
  return splitmix64(base + rep) & ~1ULL;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Planted-community graphs

struct PlantedGraph {
  UGraph graph;
  std::vector<std::size_t> community;  // 1-based label per vertex
  Vector truth;                        // theta_0,v = label of v
};

struct CommunityGraphConfig {
  std::size_t communities = 25;
  std::size_t min_size = 11;
  std::size_t max_size = 82;
  // Extra intra-community edges per vertex on top of a random spanning tree.
  double intra_extra = 0.2;
  // Extra inter-community edges per community on top of a community tree.
  double inter_extra = 1.0;
  std::uint64_t seed = 1;
};

/// Sparse, road-like graph with planted communities: each community is a
/// random tree plus a few chords, communities are joined along a random tree
/// plus a few extra links, and vertex ids are shuffled.
inline PlantedGraph make_community_graph(const CommunityGraphConfig& cfg) {
  if (cfg.communities == 0 || cfg.min_size == 0 || cfg.min_size > cfg.max_size) {
    throw DomainError("make_community_graph: invalid sizes");
  }
  Rng rng(cfg.seed, 0x67726170ULL);
  std::vector<std::size_t> sizes(cfg.communities);
  std::size_t n = 0;
  for (auto& s : sizes) {
    s = cfg.min_size + static_cast<std::size_t>(rng.below(cfg.max_size - cfg.min_size + 1));
    n += s;
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  std::vector<std::size_t> start(cfg.communities + 1, 0);
  for (std::size_t c = 0; c < cfg.communities; ++c) start[c + 1] = start[c] + sizes[c];

  std::unordered_set<std::uint64_t> seen;
  std::vector<Edge> edges;
  const auto add = [&](std::size_t u, std::size_t v) {
    if (u == v) return false;
    const std::uint64_t key = (static_cast<std::uint64_t>(std::min(u, v)) << 32) | std::max(u, v);
    if (!seen.insert(key).second) return false;
    edges.push_back({perm[u], perm[v]});
    return true;
  };
  for (std::size_t c = 0; c < cfg.communities; ++c) {
    for (std::size_t i = 1; i < sizes[c]; ++i) add(start[c] + i, start[c] + rng.below(i));
    const auto extra = static_cast<std::size_t>(std::llround(cfg.intra_extra * sizes[c]));
    for (std::size_t e = 0; e < extra; ++e) {
      add(start[c] + rng.below(sizes[c]), start[c] + rng.below(sizes[c]));
    }
  }
  const auto member = [&](std::size_t c) { return start[c] + rng.below(sizes[c]); };
  for (std::size_t c = 1; c < cfg.communities; ++c) add(member(c), member(rng.below(c)));
  const auto inter = static_cast<std::size_t>(std::llround(cfg.inter_extra * cfg.communities));
  for (std::size_t e = 0; e < inter; ++e) {
    const std::size_t c1 = rng.below(cfg.communities);
    const std::size_t c2 = rng.below(cfg.communities);
    if (c1 != c2) add(member(c1), member(c2));
  }

  PlantedGraph out{UGraph(n, std::move(edges)), std::vector<std::size_t>(n), Vector(n)};
  for (std::size_t c = 0; c < cfg.communities; ++c) {
    for (std::size_t i = start[c]; i < start[c + 1]; ++i) {
      out.community[perm[i]] = c + 1;
      out.truth[perm[i]] = static_cast<double>(c + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo harness

struct ReplicationMetrics {
  double mse = 0.0;
  double adj_mse = 0.0;
  double within = 0.0;
  double between = 0.0;
};

struct ScenarioResult {
  SignalKind kind;
  double sigma;
  PriorFamily family;
  std::vector<ReplicationMetrics> reps;
};

struct SummaryRow {
  SignalKind kind;
  double sigma;
  PriorFamily family;
  std::string metric;
  double mean;
  double se;  // NaN when reps == 1
};

struct MonteCarloConfig {
  std::vector<SignalKind> kinds{SignalKind::even};
  std::size_t n = 100;
  double amplitude = 1.0;
  std::vector<double> sigmas{0.1, 0.3, 0.5};
  std::vector<PriorFamily> families{PriorFamily::horseshoe};
  std::size_t reps = 100;
  PriorConfig prior;
  McmcConfig mcmc;  // mcmc.seed is the master seed
  std::size_t threads = 1;

  void validate() const {
    if (kinds.empty() || sigmas.empty() || families.empty()) {
      throw DomainError("monte_carlo: empty scenario list");
    }
    if (reps == 0) throw DomainError("monte_carlo: reps must be positive");
    for (double s : sigmas) detail::require_positive(s, "sigma");
    detail::require_positive(amplitude, "amplitude");
    prior.validate();
    mcmc.validate();
    block_lengths(kinds.front(), n);
  }
};

/// One replication: planted signal, fresh noise, posterior mean, metrics.
inline ReplicationMetrics run_replication(SignalKind kind, double sigma, PriorFamily family,
                                          std::size_t rep, const MonteCarloConfig& cfg) {
  SignalSpec spec;
  spec.kind = kind;
  spec.n = cfg.n;
  spec.amplitude = cfg.amplitude;
  const Vector truth = make_signal(spec);
  const std::uint64_t stream = detail::scenario_stream(kind, sigma, rep);
  ChainData data{add_noise(truth, sigma, cfg.mcmc.seed, stream), truth, sigma};
  PriorConfig prior = cfg.prior;
  prior.family = family;
  McmcConfig mcmc = cfg.mcmc;
  mcmc.stream = stream | 1ULL;
  PosteriorSamples samples;
  try {
    samples = run_chain(data, prior, mcmc);
  } catch (const SamplerError& e) {
    throw SamplerError(e.iteration(), "replication " + std::to_string(rep) + ": " + e.what());
  }
  const Vector est = posterior_summary(samples, 0.95).mean;
  const WbMetrics wb = wb_metrics(est, truth);
  return {mse(est, truth), adj_mse(est, truth), wb.within, wb.between};
}

/// Runs every (kind, sigma, family) scenario for cfg.reps replications.
/// Results depend only on the master seed, not on scheduling.
inline std::vector<ScenarioResult> monte_carlo(const MonteCarloConfig& cfg) {
  cfg.validate();
  std::vector<ScenarioResult> scenarios;
  for (SignalKind kind : cfg.kinds)
    for (double sigma : cfg.sigmas)
      for (PriorFamily family : cfg.families)
        scenarios.push_back({kind, sigma, family, std::vector<ReplicationMetrics>(cfg.reps)});
  parallel_for(scenarios.size() * cfg.reps, cfg.threads, [&](std::size_t task) {
    ScenarioResult& sc = scenarios[task / cfg.reps];
    const std::size_t rep = task % cfg.reps;
    sc.reps[rep] = run_replication(sc.kind, sc.sigma, sc.family, rep, cfg);
  });
  return scenarios;
}

inline std::pair<double, double> mean_and_se(std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nan("")};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(values.size()))};
}

inline std::vector<SummaryRow> summarize(const std::vector<ScenarioResult>& scenarios) {
  std::vector<SummaryRow> rows;
  for (const ScenarioResult& sc : scenarios) {
    const auto add = [&](const char* name, auto field) {
      Vector values;
      for (const ReplicationMetrics& m : sc.reps) values.push_back(m.*field);
      const auto [mean, se] = mean_and_se(values);
      rows.push_back({sc.kind, sc.sigma, sc.family, name, mean, se});
    };
    add("mse", &ReplicationMetrics::mse);
    add("adj_mse", &ReplicationMetrics::adj_mse);
    add("W", &ReplicationMetrics::within);
    add("B", &ReplicationMetrics::between);
  }
  return rows;
}

inline const SummaryRow* find_row(const std::vector<SummaryRow>& rows, SignalKind kind,
                                  double sigma, PriorFamily family, std::string_view metric) {
  for (const SummaryRow& r : rows) {
    if (r.kind == kind && r.sigma == sigma && r.family == family && r.metric == metric) return &r;
  }
  return nullptr;
}

/// CSV with columns kind,sigma,family,metric,mean,se; se is NA for one rep.
inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "kind,sigma,family,metric,mean,se\n";
  for (const SummaryRow& r : rows) {
    out << to_string(r.kind) << ',' << detail::shortest(r.sigma) << ',' << to_string(r.family)
        << ',' << r.metric << ',' << detail::shortest(r.mean) << ','
        << (std::isnan(r.se) ? std::string("NA") : detail::shortest(r.se)) << '\n';
  }
}

}  // namespace hsfusion
