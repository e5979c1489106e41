#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "hsfusion/chain_sampler.hpp"
#include "hsfusion/graph_fusion.hpp"
#include "hsfusion/simulate.hpp"

using namespace hsfusion;

namespace {

SignalSpec spec_of(SignalKind kind, std::size_t n) {
  SignalSpec s;
  s.kind = kind;
  s.n = n;
  return s;
}

std::vector<Edge> one_based(std::initializer_list<std::pair<int, int>> pairs) {
  std::vector<Edge> out;
  for (auto [a, b] : pairs) out.push_back({static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)});
  return out;
}

// Random spanning tree plus a random number of chords.
UGraph random_connected_graph(std::size_t n, Rng& rng) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Edge> edges;
  const auto add = [&](std::size_t u, std::size_t v) {
    if (u == v || !seen.insert({std::min(u, v), std::max(u, v)}).second) return;
    edges.push_back({u, v});
  };
  for (std::size_t v = 1; v < n; ++v) add(v, rng.below(v));
  const std::size_t chords = rng.below(2 * n);
  for (std::size_t c = 0; c < chords; ++c) add(rng.below(n), rng.below(n));
  // relabel so the tree is not always rooted at 0
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  for (Edge& e : edges) e = {perm[e.a], perm[e.b]};
  return {n, std::move(edges)};
}

bool is_spanning_tree(const DfsChain& c, std::size_t n) {
  if (c.chain_edges.size() != n - 1) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const Edge& e : c.chain_edges) {
    const std::size_t a = find(e.a);
    const std::size_t b = find(e.b);
    if (a == b) return false;
    parent[a] = b;
  }
  return true;
}

}  // namespace

TEST(DfsChain, PathMapsToItself) {
  const auto c = dfs_chain(UGraph::path(4), 0);
  EXPECT_EQ(c.chain_edges, one_based({{1, 2}, {2, 3}, {3, 4}}));
  EXPECT_EQ(c.parent_edge[0], DfsChain::npos);
  EXPECT_EQ(c.edge_index(2, 1), 1u);
  EXPECT_EQ(c.edge_index(0, 2), DfsChain::npos);
}

TEST(DfsChain, StarVisitsLeavesInOrder) {
  const UGraph star(5, one_based({{1, 5}, {1, 3}, {1, 2}, {4, 1}}));
  EXPECT_EQ(dfs_chain(star, 0).chain_edges, one_based({{1, 2}, {1, 3}, {1, 4}, {1, 5}}));
}

TEST(DfsChain, TriangleDropsClosingEdge) {
  const UGraph tri(3, one_based({{1, 2}, {2, 3}, {1, 3}}));
  EXPECT_EQ(dfs_chain(tri, 0).chain_edges, one_based({{1, 2}, {2, 3}}));
}

TEST(DfsChain, RandomGraphsGiveSpanningTrees) {
  Rng rng(11);
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 2 + rng.below(49);
    const UGraph graph = random_connected_graph(n, rng);
    const auto c = dfs_chain(graph, rng.below(n));
    EXPECT_TRUE(is_spanning_tree(c, n));
    std::set<std::pair<std::size_t, std::size_t>> in_graph;
    for (const Edge& e : graph.edges()) in_graph.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
    for (const Edge& e : c.chain_edges) EXPECT_TRUE(in_graph.count({std::min(e.a, e.b), std::max(e.a, e.b)}));
  }
}

TEST(DfsChain, DisconnectedNamesUnreachableVertex) {
  const UGraph g(5, one_based({{1, 2}, {2, 3}, {4, 5}}));
  try {
    dfs_chain(g, 0);
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_EQ(e.unreachable_vertex(), 4u);
    EXPECT_NE(std::string(e.what()).find("vertex 4"), std::string::npos);
  }
  EXPECT_THROW(dfs_chain(g, 7), DomainError);
}

TEST(TotalVariation, SmallCases) {
  const auto path = UGraph::path(6);
  const Vector flat(6, 2.5);
  EXPECT_EQ(tv_l0(flat, path.edges()), 0u);
  EXPECT_EQ(tv_l1(flat, path.edges()), 0.0);
  const Vector two{0, 0, 0, 1, 1, 1};
  EXPECT_EQ(tv_l0(two, path.edges()), 1u);
  EXPECT_EQ(tv_l1(two, path.edges()), 1.0);
  const Vector near{0.0, 1e-10, 0.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(tv_l0(near, path.edges()), 2u);
  EXPECT_EQ(tv_l0(near, path.edges(), 1e-8), 0u);
}

// Values are multiples of 1/8 so every sum is exact and the comparison is
// the inequality itself. Besides the tree edges, the DFS visiting order read
// as a chain is checked too.
TEST(TotalVariation, DfsReductionAtMostDoubles) {
  Rng rng(2024);
  std::size_t violations = 0;
  for (int g = 0; g < 200; ++g) {
    const std::size_t n = 2 + rng.below(49);
    const UGraph graph = random_connected_graph(n, rng);
    Vector theta(n);
    const std::size_t levels = 1 + rng.below(6);
    for (double& v : theta) v = static_cast<double>(rng.below(levels)) * (1.0 + rng.below(16) / 8.0);
    const auto c = dfs_chain(graph, rng.below(n));

    std::vector<Edge> visit_chain;
    std::size_t prev = c.root;
    for (const Edge& e : c.chain_edges) {
      visit_chain.push_back({prev, e.b});
      prev = e.b;
    }
    for (const std::vector<Edge>* ec : std::array<const std::vector<Edge>*, 2>{&c.chain_edges, &visit_chain}) {
      if (tv_l0(theta, *ec) > 2 * tv_l0(theta, graph.edges())) ++violations;
      if (tv_l1(theta, *ec) > 2.0 * tv_l1(theta, graph.edges())) ++violations;
    }
  }
  EXPECT_EQ(violations, 0u);
}

TEST(GraphTopology, PathReproducesChainConditionals) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    GibbsState s;
    s.theta.resize(n);
    for (double& v : s.theta) v = rng.normal(0.0, 3.0);
    s.lambda_sq.resize(n - 1);
    s.nu.assign(n - 1, 1.0);
    for (double& v : s.lambda_sq) v = std::exp(rng.normal(0.0, 2.0));
    s.tau_sq = std::exp(rng.normal(0.0, 2.0));
    s.sigma_sq = std::exp(rng.normal());
    Vector y(n);
    for (double& v : y) v = rng.normal(0.0, 3.0);
    const double l1 = std::exp(rng.normal());

    const GraphTopology graph(dfs_chain(UGraph::path(n), 0));
    Vector gd(n - 1);
    Vector cd(n - 1);
    graph.differences(s.theta, gd);
    ChainTopology{n}.differences(s.theta, cd);
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = graph.theta_conditional(i, s, y, l1);
      const auto c = chain_theta_conditional(i, s, y, l1);
      EXPECT_NEAR(g.mu, c.mu, 1e-12 * std::max(1.0, std::abs(c.mu)));
      EXPECT_NEAR(g.zeta, c.zeta, 1e-12 * c.zeta);
    }
    for (std::size_t k = 0; k + 1 < n; ++k) EXPECT_EQ(gd[k], cd[k]);
    EXPECT_EQ(graph.anchor(s.theta), s.theta[0]);
  }
}

TEST(GraphTopology, InteriorVertexSumsBothDirections) {
  // star centred at 1 rooted at leaf 2: centre has parent edge (2,1) and children 3, 4
  const UGraph star(4, one_based({{1, 2}, {1, 3}, {1, 4}}));
  const GraphTopology topo(dfs_chain(star, 1));
  GibbsState s{{1.0, 2.0, 3.0, 4.0}, {1.0, 0.5, 0.25}, 2.0, 0.5, {1.0, 1.0, 1.0}, 1.0};
  const auto c = topo.theta_conditional(0, s, Vector{0.3, 0.0, 0.0, 0.0}, 5.0);
  // weights 1/(lambda^2 tau^2): 0.5, 1, 2
  const double prec = 1.0 + 0.5 + 1.0 + 2.0;
  EXPECT_NEAR(c.zeta, 0.5 / prec, 1e-15);
  EXPECT_NEAR(c.mu, (0.3 + 2.0 * 0.5 + 3.0 * 1.0 + 4.0 * 2.0) / prec, 1e-14);
}

TEST(RunGraphFusion, PathGraphMatchesChainRun) {
  const Vector y = add_noise(make_signal(spec_of(SignalKind::even, 40)), 0.3, 5);
  PriorConfig prior;
  McmcConfig mcmc;
  mcmc.n_iter = 600;
  mcmc.burn_in = 100;
  mcmc.stream = 7;
  const std::vector<std::size_t> root{0};
  const auto graph = run_graph_fusion(UGraph::path(40), y, root, prior, mcmc);
  const auto chain = run_chain({y, std::nullopt, std::nullopt}, prior, mcmc);
  ASSERT_EQ(graph.pooled.draws.rows(), chain.draws.rows());
  const Vector gm = graph.estimate();
  const Vector cm = posterior_summary(chain, 0.95).mean;
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(gm[i], cm[i]);
  EXPECT_EQ(graph.pooled.sigma_draws, chain.sigma_draws);
}

TEST(RunGraphFusion, PoolsRootsInOrder) {
  const auto planted = make_community_graph({3, 15, 25, 0.2, 1.0, 4});
  const std::size_t n = planted.graph.n_vertices();
  const Vector y = add_noise(planted.truth, 0.3, 8);
  McmcConfig mcmc;
  mcmc.n_iter = 300;
  mcmc.burn_in = 50;
  mcmc.thin = 2;
  const auto roots = select_roots(n, 3, 1);
  const auto post = run_graph_fusion(planted.graph, y, roots, {}, mcmc, 3);
  ASSERT_EQ(post.per_root.size(), 3u);
  EXPECT_EQ(post.pooled.draws.rows(), 3 * mcmc.kept());
  EXPECT_EQ(post.pooled.sigma_draws.size(), 3 * mcmc.kept());
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(post.per_root[j].meta.stream, mcmc.stream + j);
    for (std::size_t c = 0; c < n; ++c)
      EXPECT_EQ(post.pooled.draws(j * mcmc.kept(), c), post.per_root[j].draws(0, c));
  }
  // thread count does not change the result
  const auto serial = run_graph_fusion(planted.graph, y, roots, {}, mcmc, 1);
  EXPECT_EQ(serial.estimate(), post.estimate());
}

TEST(RunGraphFusion, PlantedCommunities) {
  const auto planted = make_community_graph({3, 15, 25, 0.2, 1.0, 12});
  const Vector y = add_noise(planted.truth, 0.3, 21);
  McmcConfig mcmc;
  mcmc.n_iter = 3000;
  mcmc.burn_in = 500;
  const auto roots = select_roots(planted.graph.n_vertices(), 3, 2);
  const auto post = run_graph_fusion(planted.graph, y, roots, {}, mcmc, 3);
  EXPECT_LT(adj_mse(post.estimate(), planted.truth), 0.01);
}

TEST(RunGraphFusion, RootInvariance) {
  const auto planted = make_community_graph({3, 10, 14, 0.3, 1.0, 5});
  const std::size_t n = planted.graph.n_vertices();
  const Vector y = add_noise(planted.truth, 0.3, 3);
  McmcConfig mcmc;
  mcmc.n_iter = 6000;
  mcmc.burn_in = 1000;
  const std::vector<std::size_t> r1{0};
  const std::vector<std::size_t> r2{n - 1};
  const auto a = run_graph_fusion(planted.graph, y, r1, {}, mcmc);
  const auto b = run_graph_fusion(planted.graph, y, r2, {}, mcmc);
  const Vector ma = a.estimate();
  const Vector mb = b.estimate();
  for (std::size_t v = 0; v < n; ++v) {
    double ss = 0.0;
    for (const auto* p : {&a.pooled.draws, &b.pooled.draws})
      for (std::size_t r = 0; r < p->rows(); ++r) {
        const double d = (*p)(r, v) - 0.5 * (ma[v] + mb[v]);
        ss += d * d;
      }
    const double sd = std::sqrt(ss / static_cast<double>(a.pooled.draws.rows() + b.pooled.draws.rows()));
    EXPECT_LT(std::abs(ma[v] - mb[v]), 5.0 * sd) << "vertex " << v + 1;
  }
}

TEST(RunGraphFusion, RejectsBadInput) {
  const UGraph g(4, one_based({{1, 2}, {3, 4}}));
  const Vector y(4, 0.0);
  McmcConfig mcmc;
  mcmc.n_iter = 10;
  mcmc.burn_in = 1;
  const std::vector<std::size_t> roots{0};
  EXPECT_THROW(run_graph_fusion(g, y, roots, {}, mcmc), GraphError);
  const auto path = UGraph::path(4);
  EXPECT_THROW(run_graph_fusion(path, Vector(3, 0.0), roots, {}, mcmc), DomainError);
  const std::vector<std::size_t> twice{1, 1};
  EXPECT_THROW(run_graph_fusion(path, y, twice, {}, mcmc), DomainError);
  EXPECT_THROW(run_graph_fusion(path, y, std::vector<std::size_t>{}, {}, mcmc), DomainError);
}

TEST(SelectRoots, DistinctAndSeeded) {
  const auto a = select_roots(50, 10, 3);
  EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()).size(), 10u);
  EXPECT_EQ(a, select_roots(50, 10, 3));
  EXPECT_NE(a, select_roots(50, 10, 4));
  for (std::size_t r : a) EXPECT_LT(r, 50u);
  EXPECT_THROW(select_roots(5, 6, 1), DomainError);
  EXPECT_THROW(select_roots(5, 0, 1), DomainError);
}

TEST(EdgeList, ParsesCommentsAndDuplicates) {
  std::istringstream in("# road network\n1 2\n2 3  # trailing\n\n3 2\n3\t4\n2 1\n");
  const auto f = read_edge_list(in);
  EXPECT_EQ(f.graph.n_vertices(), 4u);
  EXPECT_EQ(f.graph.edges(), one_based({{1, 2}, {2, 3}, {3, 4}}));
  EXPECT_EQ(f.duplicates_skipped, 2u);
  std::istringstream padded("1 2\n");
  EXPECT_EQ(read_edge_list(padded, 6).graph.n_vertices(), 6u);
}

TEST(EdgeList, RoundTrip) {
  const auto planted = make_community_graph({4, 5, 9, 0.3, 1.0, 2});
  std::stringstream buf;
  write_edge_list(buf, planted.graph);
  const auto back = read_edge_list(buf, planted.graph.n_vertices());
  EXPECT_EQ(back.graph.edges(), planted.graph.edges());
  EXPECT_EQ(back.duplicates_skipped, 0u);
}

TEST(EdgeList, Errors) {
  for (const char* bad : {"1 2\n3\n", "1 2 3\n", "0 1\n", "2 2\n", "1 x\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(read_edge_list(in), DomainError) << bad;
  }
  std::istringstream third("1 2\n2 3\n4 4\n");
  try {
    read_edge_list(third);
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(read_edge_list(std::string("/nonexistent/edges.txt")), IoError);
}

TEST(UGraph, Validation) {
  EXPECT_THROW(UGraph(3, one_based({{1, 4}})), DomainError);
  EXPECT_THROW(UGraph(3, one_based({{2, 2}})), DomainError);
  EXPECT_THROW(UGraph(3, one_based({{1, 2}, {2, 1}})), DomainError);
  EXPECT_THROW(UGraph(0, {}), DomainError);
  const UGraph g(3, one_based({{3, 1}, {2, 1}}));
  EXPECT_EQ(g.neighbors(0), (std::vector<std::size_t>{1, 2}));
}

TEST(CommunityGraph, PlantedStructure) {
  const auto p = make_community_graph({});
  const std::size_t n = p.graph.n_vertices();
  EXPECT_NO_THROW(dfs_chain(p.graph, 0));
  std::set<std::size_t> labels(p.community.begin(), p.community.end());
  EXPECT_EQ(labels.size(), 25u);
  for (std::size_t v = 0; v < n; ++v) EXPECT_EQ(p.truth[v], static_cast<double>(p.community[v]));
  // sparse, road-like
  EXPECT_LT(static_cast<double>(p.graph.edges().size()) / static_cast<double>(n), 1.5);
  EXPECT_EQ(make_community_graph({}).graph.edges(), p.graph.edges());
}
