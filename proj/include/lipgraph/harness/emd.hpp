#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"

namespace lipgraph {

/// Finite distribution over subsets of a small universe, subsets as bitmasks.
using SetDistribution = std::vector<std::pair<std::uint64_t, double>>;

[[nodiscard]] inline std::uint64_t to_mask(const VertexSet &A) {
  require(A.size() <= 64, "bitmask sets are limited to 64 elements");
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < A.size(); ++i)
    if (A[i]) m |= std::uint64_t{1} << i;
  return m;
}

/// Empirical distribution of a sample of sets.
[[nodiscard]] inline SetDistribution empirical_distribution(const std::vector<std::uint64_t> &samples) {
  require(!samples.empty(), "empirical distribution needs at least one sample");
  std::map<std::uint64_t, double> count;
  for (auto s : samples) count[s] += 1.0;
  SetDistribution out;
  for (auto &[k, c] : count) out.emplace_back(k, c / static_cast<double>(samples.size()));
  return out;
}

/// Exact earth mover's distance with ground metric |A xor B|.
///
/// Transportation problem solved by successive shortest paths (Bellman-Ford on
/// the residual graph). Supports up to 64 atoms per side over a universe of at
/// most 12 elements.
[[nodiscard]] inline double emd_exact(const SetDistribution &d1, const SetDistribution &d2) {
  if (d1.size() > 64 || d2.size() > 64)
    throw ValidationError("support too large for exact EMD (> 64 atoms); use estimate_lipschitz instead");
  for (const auto *d : {&d1, &d2})
    for (const auto &[m, p] : *d) {
      require(m >> 12 == 0, "exact EMD supports a universe of at most 12 elements");
      require(p >= 0.0 && std::isfinite(p), "probabilities must be finite and non-negative");
    }
  double m1 = 0.0, m2 = 0.0;
  for (auto &a : d1) m1 += a.second;
  for (auto &a : d2) m2 += a.second;
  require(m1 > 0.0 && std::abs(m1 - m2) <= 1e-9 * std::max(1.0, m1), "distributions must have equal total mass");

  const std::size_t a = d1.size(), b = d2.size();
  const std::size_t src = a + b, snk = a + b + 1, N = a + b + 2;
  struct Arc {
    std::size_t to;
    double cap;
    double cost;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> adj(N);
  auto add = [&](std::size_t x, std::size_t y, double cap, double cost) {
    adj[x].push_back(arcs.size());
    arcs.push_back({y, cap, cost});
    adj[y].push_back(arcs.size());
    arcs.push_back({x, 0.0, -cost});
  };
  for (std::size_t i = 0; i < a; ++i) add(src, i, d1[i].second / m1, 0.0);
  for (std::size_t j = 0; j < b; ++j) add(a + j, snk, d2[j].second / m2, 0.0);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j)
      add(i, a + j, 2.0, static_cast<double>(std::popcount(d1[i].first ^ d2[j].first)));

  const double eps = 1e-15;
  double cost = 0.0, sent = 0.0;
  std::vector<double> dist(N);
  std::vector<std::ptrdiff_t> via(N);
  while (sent < 1.0 - 1e-13) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(via.begin(), via.end(), -1);
    dist[src] = 0.0;
    for (std::size_t round = 0; round < N; ++round) {
      bool changed = false;
      for (std::size_t x = 0; x < N; ++x) {
        if (!std::isfinite(dist[x])) continue;
        for (auto id : adj[x])
          if (arcs[id].cap > eps && dist[x] + arcs[id].cost < dist[arcs[id].to] - 1e-12) {
            dist[arcs[id].to] = dist[x] + arcs[id].cost;
            via[arcs[id].to] = static_cast<std::ptrdiff_t>(id);
            changed = true;
          }
      }
      if (!changed) break;
    }
    if (via[snk] < 0) break;
    double push = std::numeric_limits<double>::infinity();
    for (auto v = snk; v != src;) {
      const auto id = static_cast<std::size_t>(via[v]);
      push = std::min(push, arcs[id].cap);
      v = arcs[id ^ 1U].to;
    }
    for (auto v = snk; v != src;) {
      const auto id = static_cast<std::size_t>(via[v]);
      arcs[id].cap -= push;
      arcs[id ^ 1U].cap += push;
      v = arcs[id ^ 1U].to;
    }
    cost += push * dist[snk];
    sent += push;
  }
  return cost * m1;
}

} // namespace lipgraph
