#pragma once

// Signal de-noising on arbitrary undirected graphs. The graph is reduced to
// the tree edges of a depth-first search (visiting neighbours in ascending id
// order), the fusion prior is placed on those edges and a root value, and
// draws from several roots are pooled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hsfusion/chain_model.hpp"
#include "hsfusion/chain_sampler.hpp"
#include "hsfusion/distributions.hpp"
#include "hsfusion/errors.hpp"
#include "hsfusion/parallel.hpp"

namespace hsfusion {

/// Vertex pair. Vertices are 0-based in memory and 1-based in files.
struct Edge {
  std::size_t a;
  std::size_t b;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class UGraph {
 public:
  UGraph() = default;

  UGraph(std::size_t n_vertices, std::vector<Edge> edges)
      : n_(n_vertices), edges_(std::move(edges)), adjacency_(n_vertices) {
    if (n_ == 0) throw DomainError("UGraph: need at least one vertex");
    std::unordered_set<std::size_t> seen;
    for (const Edge& e : edges_) {
      if (e.a >= n_ || e.b >= n_) throw DomainError("UGraph: vertex id out of range");
      if (e.a == e.b) throw DomainError("UGraph: self-loop at vertex " + std::to_string(e.a + 1));
      const std::size_t key = std::min(e.a, e.b) * n_ + std::max(e.a, e.b);
      if (!seen.insert(key).second) {
        throw DomainError("UGraph: duplicate edge " + std::to_string(e.a + 1) + " " +
                          std::to_string(e.b + 1));
      }
      adjacency_[e.a].push_back(e.b);
      adjacency_[e.b].push_back(e.a);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  }

  std::size_t n_vertices() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t v) const { return adjacency_.at(v); }

  static UGraph path(std::size_t n) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    return {n, std::move(edges)};
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

struct EdgeListFile {
  UGraph graph;
  std::size_t duplicates_skipped = 0;
};

/// Reads "i j" pairs (1-based, whitespace separated, '#' starts a comment).
/// The vertex count is max(largest id, min_vertices). Repeated edges in
/// either orientation are skipped and counted.
inline EdgeListFile read_edge_list(std::istream& in, std::size_t min_vertices = 0) {
  std::vector<Edge> edges;
  std::unordered_set<std::uint64_t> seen;
  std::size_t max_id = 0;
  std::size_t skipped = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long i = 0;
    long long j = 0;
    if (!(fields >> i)) continue;
    std::string rest;
    if (!(fields >> j) || (fields >> rest)) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": expected two vertex ids");
    }
    if (i < 1 || j < 1) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": ids must be >= 1");
    }
    if (i == j) {
      throw DomainError("edge list line " + std::to_string(line_no) + ": self-loop");
    }
    const auto a = static_cast<std::size_t>(std::min(i, j));
    const auto b = static_cast<std::size_t>(std::max(i, j));
    if (!seen.insert((static_cast<std::uint64_t>(a) << 32) | b).second) {
      ++skipped;
      continue;
    }
    max_id = std::max(max_id, b);
    edges.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)});
  }
  return {UGraph(std::max(max_id, min_vertices), std::move(edges)), skipped};
}

inline EdgeListFile read_edge_list(const std::string& path, std::size_t min_vertices = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return read_edge_list(in, min_vertices);
}

inline void write_edge_list(std::ostream& out, const UGraph& g) {
  for (const Edge& e : g.edges()) out << e.a + 1 << ' ' << e.b + 1 << '\n';
}

/// DFS-chain reduction rooted at `root`. chain_edges are (parent, child)
/// tree edges in discovery order; edge k carries lambda_sq[k].
struct DfsChain {
  std::size_t root = 0;
  std::vector<Edge> chain_edges;
  // parent_edge[v] = k of the edge (parent, v); npos for the root.
  std::vector<std::size_t> parent_edge;
  // child_edges[v] = k of every edge (v, child), in discovery order.
  std::vector<std::vector<std::size_t>> child_edges;

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t size() const noexcept { return parent_edge.size(); }

  /// k(i, j) for a chain edge in either orientation; npos if absent.
  std::size_t edge_index(std::size_t i, std::size_t j) const {
    if (parent_edge[j] != npos && chain_edges[parent_edge[j]].a == i) return parent_edge[j];
    if (parent_edge[i] != npos && chain_edges[parent_edge[i]].a == j) return parent_edge[i];
    return npos;
  }
};

inline DfsChain dfs_chain(const UGraph& g, std::size_t root) {
  const std::size_t n = g.n_vertices();
  if (root >= n) throw DomainError("dfs_chain: root " + std::to_string(root + 1) + " out of range");
  DfsChain chain;
  chain.root = root;
  chain.parent_edge.assign(n, DfsChain::npos);
  chain.child_edges.assign(n, {});
  std::vector<bool> visited(n, false);
  // (vertex, position of the next neighbour to inspect)
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
  visited[root] = true;
  while (!stack.empty()) {
    auto& [v, pos] = stack.back();
    const auto& nbrs = g.neighbors(v);
    while (pos < nbrs.size() && visited[nbrs[pos]]) ++pos;
    if (pos == nbrs.size()) {
      stack.pop_back();
      continue;
    }
    const std::size_t u = nbrs[pos++];
    const std::size_t k = chain.chain_edges.size();
    chain.chain_edges.push_back({v, u});
    chain.child_edges[v].push_back(k);
    chain.parent_edge[u] = k;
    visited[u] = true;
    stack.emplace_back(u, 0);
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!visited[v]) {
      throw GraphError(v + 1, "graph is disconnected: vertex " + std::to_string(v + 1) +
                                  " is unreachable from root " + std::to_string(root + 1));
    }
  }
  return chain;
}

/// Number of edges whose endpoint values differ by more than `tolerance`.
inline std::size_t tv_l0(std::span<const double> theta, std::span<const Edge> edges,
                         double tolerance = 0.0) {
  std::size_t count = 0;
  for (const Edge& e : edges) {
    if (std::abs(theta[e.a] - theta[e.b]) > tolerance) ++count;
  }
  return count;
}

inline double tv_l1(std::span<const double> theta, std::span<const Edge> edges) {
  double total = 0.0;
  for (const Edge& e : edges) total += std::abs(theta[e.a] - theta[e.b]);
  return total;
}

/// Graph topology for the shared sweep: theta_v couples to every DFS-chain
/// neighbour (children and parent); the root instead carries N(0, lambda_0^2 sigma^2).
class GraphTopology {
 public:
  explicit GraphTopology(DfsChain chain) : chain_(std::move(chain)) {}

  std::size_t size() const noexcept { return chain_.size(); }
  const DfsChain& chain() const noexcept { return chain_; }

  ConditionalNormalParams theta_conditional(std::size_t i, const GibbsState& s,
                                            std::span<const double> y,
                                            double lambda_root) const {
    if (i >= size()) throw DomainError("theta_conditional: vertex out of range");
    double out_prec = 0.0;
    double out_lin = 0.0;
    for (std::size_t k : chain_.child_edges[i]) {
      const double w = 1.0 / (s.lambda_sq[k] * s.tau_sq);
      out_prec += w;
      out_lin += s.theta[chain_.chain_edges[k].b] * w;
    }
    double prec = 0.0;
    double lin = 0.0;
    if (i == chain_.root) {
      prec = 1.0 + out_prec + 1.0 / (lambda_root * lambda_root);
      lin = y[i] + out_lin;
    } else {
      const std::size_t k = chain_.parent_edge[i];
      const double w = 1.0 / (s.lambda_sq[k] * s.tau_sq);
      prec = 1.0 + out_prec + w;
      lin = y[i] + out_lin + s.theta[chain_.chain_edges[k].a] * w;
    }
    const double zeta = s.sigma_sq / prec;
    return {zeta / s.sigma_sq * lin, zeta};
  }

  void differences(std::span<const double> theta, std::span<double> out) const {
    for (std::size_t k = 0; k < chain_.chain_edges.size(); ++k) {
      const Edge& e = chain_.chain_edges[k];
      out[k] = theta[e.b] - theta[e.a];
    }
  }

  double anchor(std::span<const double> theta) const { return theta[chain_.root]; }

 private:
  DfsChain chain_;
};

struct GraphPosterior {
  std::vector<std::size_t> roots;
  std::vector<PosteriorSamples> per_root;
  PosteriorSamples pooled;

  Vector estimate() const { return posterior_summary(pooled, 0.95).mean; }
};

/// `count` distinct roots drawn uniformly without replacement.
inline std::vector<std::size_t> select_roots(std::size_t n_vertices, std::size_t count,
                                             std::uint64_t seed) {
  if (count == 0 || count > n_vertices) throw DomainError("select_roots: invalid root count");
  constexpr std::uint64_t kRootStream = 0x726f6f7473ULL;
  Rng rng(seed, kRootStream);
  std::vector<std::size_t> ids(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) ids[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n_vertices - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  return ids;
}

/// Runs one chain per root (root j uses RNG stream mcmc.stream + j) and pools
/// the kept draws by concatenation in root order.
inline GraphPosterior run_graph_fusion(const UGraph& g, std::span<const double> y,
                                       std::span<const std::size_t> roots,
                                       const PriorConfig& prior, const McmcConfig& mcmc,
                                       std::size_t threads = 1) {
  if (y.size() != g.n_vertices()) {
    throw DomainError("run_graph_fusion: signal length " + std::to_string(y.size()) +
                      " differs from vertex count " + std::to_string(g.n_vertices()));
  }
  if (roots.empty()) throw DomainError("run_graph_fusion: no roots");
  std::unordered_set<std::size_t> distinct(roots.begin(), roots.end());
  if (distinct.size() != roots.size()) throw DomainError("run_graph_fusion: roots must be distinct");
  for (double v : y) {
    if (!std::isfinite(v)) throw DomainError("run_graph_fusion: non-finite observation");
  }

  // Build every reduction first so a disconnected graph fails before sampling.
  std::vector<GraphTopology> topologies;
  topologies.reserve(roots.size());
  for (std::size_t r : roots) topologies.emplace_back(dfs_chain(g, r));

  GraphPosterior out;
  out.roots.assign(roots.begin(), roots.end());
  out.per_root.resize(roots.size());
  parallel_for(roots.size(), threads, [&](std::size_t j) {
    McmcConfig cfg = mcmc;
    cfg.stream = mcmc.stream + j;
    out.per_root[j] = run_fusion(topologies[j], y, prior, cfg);
  });

  PosteriorSamples& pooled = out.pooled;
  pooled.meta = out.per_root.front().meta;
  pooled.meta.clip_events = 0;
  pooled.draws = DrawMatrix(0, g.n_vertices());
  for (const PosteriorSamples& part : out.per_root) {
    for (std::size_t r = 0; r < part.draws.rows(); ++r) pooled.draws.append_row(part.draws.row(r));
    pooled.sigma_draws.insert(pooled.sigma_draws.end(), part.sigma_draws.begin(),
                              part.sigma_draws.end());
    pooled.tau_draws.insert(pooled.tau_draws.end(), part.tau_draws.begin(), part.tau_draws.end());
    pooled.meta.clip_events += part.meta.clip_events;
  }
  return out;
}

}  // namespace hsfusion
