#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "lipgraph/matching.hpp"
#include "support.hpp"

using namespace lipgraph;
using lipgraph::testing::bernoulli_sem;

namespace {

WeightedGraph one_edge(int bu = 1, int bv = 1) { return WeightedGraph(2, {{0, 1}}, {1.0}, 1, {bu, bv}); }

MatchFractional fixed(std::vector<double> x) {
  MatchFractional f;
  f.x = std::move(x);
  return f;
}

/// Best b-matching by trying every edge subset.
double brute_force_matching(const WeightedGraph &g) {
  const auto m = g.num_edges();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    std::vector<std::size_t> es;
    for (std::size_t e = 0; e < m; ++e)
      if (mask >> e & 1U) es.push_back(e);
    auto M = make_bmatching(g, es);
    if (is_valid_bmatching(g, M)) best = std::max(best, M.weight);
  }
  return best;
}

void expect_degree_feasible(const WeightedGraph &g, const std::vector<double> &x, double tol) {
  std::vector<double> deg(g.num_vertices(), 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    EXPECT_GE(x[e], -tol);
    EXPECT_LE(x[e], 1.0 + tol);
    deg[g.edge(e).u] += x[e];
    deg[g.edge(e).v] += x[e];
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) EXPECT_LE(deg[v], g.capacity(v) + tol);
}

} // namespace

TEST(MatchFractional, SingleEdge) {
  for (double eps : {0.25, 1.0}) EXPECT_NEAR(solve_matching_fractional(one_edge(), eps).x[0], 1.0, 1e-9);
  EXPECT_NEAR(solve_matching_fractional(one_edge(), 2.0).x[0], 0.5, 1e-9);
}

TEST(MatchFractional, SharedVertexSplitsSymmetrically) {
  WeightedGraph g(3, {{0, 1}, {0, 2}}, {1.0, 1.0}, 1);
  auto f = solve_matching_fractional(g, 0.5);
  EXPECT_NEAR(f.x[0], f.x[1], 1e-9);
  EXPECT_LE(f.x[0] + f.x[1], 1.0 + 1e-9);
  EXPECT_NEAR(f.x[0], 0.5, 1e-9);
}

TEST(MatchFractional, FeasibleAndNearOptimal) {
  RandomTape gen(61);
  for (int k = 0; k < 30; ++k) {
    auto g = random_bipartite_graph(3 + k % 3, 3 + k % 4, 0.5, 14, gen, 1 + k % 3);
    const double eps = 0.2 + gen.next();
    auto f = solve_matching_fractional(g, eps);
    expect_degree_feasible(g, f.x, 1e-9);
    // Bipartite b-matching LPs are integral, so the integral optimum is the LP optimum.
    const double opt = brute_force_matching(g);
    EXPECT_GE(f.objective, opt / (1.0 + eps / 2.0) - 1e-7);
    EXPECT_LE(f.objective, opt + 1e-7);
  }
}

TEST(MatchFractional, PerturbationWithinBound) {
  RandomTape gen(62);
  for (int k = 0; k < 20; ++k) {
    auto g = random_bipartite_graph(4, 4, 0.5, 12, gen, 2);
    const double eps = 0.5 + gen.next();
    const auto e = static_cast<std::size_t>(gen.next() * static_cast<double>(g.num_edges()));
    const double delta = 1e-2 * g.weight(e);
    auto a = solve_matching_fractional(g, eps, 1e-12);
    auto b = solve_matching_fractional(perturb(g, {e, delta}), eps, 1e-12);
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) d2 += (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
    EXPECT_LE(std::sqrt(d2), 2.0 / g.min_weight() * (1.0 + 1.0 / eps) * delta + 1e-8);
  }
}

TEST(MatchFractional, RejectsNonBipartite) {
  WeightedGraph g(3, {{0, 1}, {1, 2}}, {1.0, 1.0});
  EXPECT_THROW((void)solve_matching_fractional(g, 1.0), ValidationError);
  EXPECT_THROW((void)solve_matching_fractional(one_edge(), 0.0), ValidationError);
}

TEST(Auction, SingleEdgeSellsWithProbabilityX) {
  auto g = one_edge();
  auto dist = auction_distribution(fixed({0.6}), g);
  EXPECT_NEAR(dist[1], 0.6, 1e-12);
  EXPECT_NEAR(dist[0], 0.4, 1e-12);
  const std::size_t N = 20000;
  std::size_t sold = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(63, t);
    sold += auction_round(fixed({0.6}), g, tape).edges.size();
  }
  EXPECT_NEAR(static_cast<double>(sold) / N, 0.6, 4.0 * bernoulli_sem(0.6, N));
}

TEST(Auction, ZeroFractionalGivesEmptyMatching) {
  RandomTape gen(64);
  auto g = random_bipartite_graph(3, 3, 0.6, 9, gen, 2);
  for (std::size_t t = 0; t < 100; ++t) {
    auto tape = RandomTape::derive(65, t);
    EXPECT_TRUE(auction_round(fixed(std::vector<double>(g.num_edges(), 0.0)), g, tape).edges.empty());
  }
}

TEST(Auction, TwoSlotsOnOneEdge) {
  // Two slots, each naming the seller with probability 1/2: 1 - (1/2)^2 = 3/4.
  auto g = one_edge(2, 2);
  auto dist = auction_distribution(fixed({1.0}), g);
  EXPECT_NEAR(dist[1], 0.75, 1e-12);
  const std::size_t N = 20000;
  std::size_t bids = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(66, t);
    AuctionTrace tr;
    (void)auction_round(fixed({1.0}), g, tape, {}, &tr);
    bids += tr.bids.size();
  }
  EXPECT_NEAR(static_cast<double>(bids) / N, 0.75, 4.0 * bernoulli_sem(0.75, N));
}

TEST(Auction, AlwaysRespectsCapacities) {
  RandomTape gen(67);
  auto g = random_bipartite_graph(5, 5, 0.5, 20, gen, 3);
  auto f = solve_matching_fractional(g, 1.0);
  for (std::size_t t = 0; t < 10000; ++t) {
    auto tape = RandomTape::derive(68, t);
    EXPECT_TRUE(is_valid_bmatching(g, auction_round(f, g, tape)));
  }
}

TEST(Auction, EnumerationMatchesMonteCarlo) {
  RandomTape gen(69);
  auto g = random_bipartite_graph(3, 3, 0.5, 6, gen, 2);
  auto f = solve_matching_fractional(g, 1.0);
  auto dist = auction_distribution(f, g);
  double total = 0.0;
  for (auto &[mask, p] : dist) total += p;
  EXPECT_NEAR(total, 1.0, 1e-12);
  const std::size_t N = 20000;
  std::map<std::uint64_t, std::size_t> count;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(70, t);
    ++count[auction_round(f, g, tape).mask()];
  }
  for (auto &[mask, c] : count) EXPECT_TRUE(dist.count(mask)) << "mask " << mask;
  for (auto &[mask, p] : dist)
    EXPECT_NEAR(static_cast<double>(count[mask]) / N, p, 4.0 * bernoulli_sem(p, N) + 1e-12) << "mask " << mask;
}

TEST(Auction, UnitCapacitiesReduceToSingleItemAuction) {
  RandomTape gen(71);
  for (int k = 0; k < 20; ++k) {
    auto g = random_bipartite_graph(3, 3, 0.5, 7, gen, 1);
    auto f = solve_matching_fractional(g, 0.5 + gen.next());
    auto multi = auction_distribution(f, g);
    auto single = single_item_auction_distribution(f, g);
    for (auto &[mask, p] : single) EXPECT_NEAR(multi[mask], p, 1e-12);
    for (auto &[mask, p] : multi) EXPECT_NEAR(single[mask], p, 1e-12);
  }
}

TEST(Auction, ApproximationGuarantee) {
  RandomTape gen(72);
  const double ratio = 0.5 * (1.0 - std::exp(-1.0));
  for (int k = 0; k < 10; ++k) {
    auto g = random_bipartite_graph(4, 4, 0.6, 16, gen, 3);
    auto f = solve_matching_fractional(g, 1.0);
    std::vector<double> w;
    for (std::size_t t = 0; t < 4000; ++t) {
      auto tape = RandomTape::derive(73 + k, t);
      w.push_back(auction_round(f, g, tape).weight);
    }
    auto ms = lipgraph::testing::mean_sem(w);
    EXPECT_GE(ms.mean, ratio * f.objective - 3.0 * ms.sem);
  }
}

TEST(Auction, SharedTapeDisagreementTracksFractionalDistance) {
  RandomTape gen(74);
  for (int k = 0; k < 5; ++k) {
    auto g = random_bipartite_graph(4, 4, 0.5, 12, gen, 2);
    const auto e = static_cast<std::size_t>(gen.next() * static_cast<double>(g.num_edges()));
    auto a = solve_matching_fractional(g, 1.0);
    auto b = solve_matching_fractional(perturb(g, {e, 0.05 * g.weight(e)}), 1.0);
    double l1 = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) l1 += std::abs(a.x[i] - b.x[i]);
    auto gb = perturb(g, {e, 0.05 * g.weight(e)});
    std::vector<double> d;
    for (std::size_t t = 0; t < 4000; ++t) {
      auto ta = RandomTape::derive(75 + k, t), tb = ta;
      d.push_back(static_cast<double>(matching_distance(auction_round(a, g, ta), auction_round(b, gb, tb))));
    }
    auto ms = lipgraph::testing::mean_sem(d);
    EXPECT_LE(ms.mean, 2.0 * l1 + 3.0 * ms.sem + 1e-12) << "instance " << k;
  }
}

TEST(ExactMatching, SmallExamples) {
  EXPECT_EQ(match_exact_small(one_edge()).weight, 1.0);
  WeightedGraph two(4, {{0, 2}, {1, 3}}, {1.0, 2.0}, 2);
  EXPECT_EQ(match_exact_small(two).weight, 3.0);
  WeightedGraph sq(4, {{0, 2}, {0, 3}, {1, 2}, {1, 3}}, {3.0, 2.0, 2.0, 1.0}, 2);
  EXPECT_EQ(match_exact_small(sq).weight, 4.0);
}

TEST(ExactMatching, AgreesWithBruteForce) {
  RandomTape gen(76);
  for (int k = 0; k < 100; ++k) {
    auto g = random_bipartite_graph(2 + k % 4, 2 + k % 3, 0.5, 12, gen, 1 + k % 3);
    auto M = match_exact_small(g);
    EXPECT_TRUE(is_valid_bmatching(g, M));
    EXPECT_EQ(M.weight, brute_force_matching(g));
  }
}
