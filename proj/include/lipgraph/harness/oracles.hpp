#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/min_cut.hpp"

namespace lipgraph {

/// Max-flow min-cut by shortest augmenting paths (Edmonds-Karp). Terminal sets
/// hang off a super source and a super sink. Returns the source side reachable
/// in the final residual graph, which is the inclusion-minimal minimum cut.
[[nodiscard]] inline CutResult mincut_maxflow(const CutInstance &inst) {
  inst.validate();
  const auto &g = inst.graph;
  const auto n = g.num_vertices();
  require(n <= 5000, "max-flow oracle is meant for small graphs");
  const std::size_t src = n, snk = n + 1, N = n + 2;
  struct Arc {
    std::size_t to;
    double cap;
  };
  std::vector<Arc> arcs;
  std::vector<std::vector<std::size_t>> adj(N);
  auto add = [&](std::size_t a, std::size_t b, double c_ab, double c_ba) {
    adj[a].push_back(arcs.size());
    arcs.push_back({b, c_ab});
    adj[b].push_back(arcs.size());
    arcs.push_back({a, c_ba});
  };
  double total = 0.0;
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    add(g.edge(i).u, g.edge(i).v, g.weight(i), g.weight(i));
    total += g.weight(i);
  }
  const double big = 2.0 * total + 1.0;
  for (auto s : inst.S) add(src, s, big, 0.0);
  for (auto t : inst.T) add(t, snk, big, 0.0);

  const double eps = 1e-12 * std::max(1.0, total);
  std::vector<std::ptrdiff_t> via(N);
  for (;;) {
    std::fill(via.begin(), via.end(), -1);
    std::queue<std::size_t> q;
    q.push(src);
    via[src] = static_cast<std::ptrdiff_t>(arcs.size());
    while (!q.empty() && via[snk] < 0) {
      const auto a = q.front();
      q.pop();
      for (auto id : adj[a])
        if (arcs[id].cap > eps && via[arcs[id].to] < 0) {
          via[arcs[id].to] = static_cast<std::ptrdiff_t>(id);
          q.push(arcs[id].to);
        }
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
  }
  VertexSet A(n, false);
  for (std::size_t v = 0; v < n; ++v) A[v] = via[v] >= 0;
  return make_cut_result(inst, std::move(A));
}

/// Minimum feasible cut by enumerating every subset of the non-terminal
/// vertices. Ties go to the smallest set, which is the inclusion-minimal one.
/// `min_size` / `max_size` restrict |A| (used for balanced cuts).
[[nodiscard]] inline std::optional<CutResult> mincut_enumerate(const CutInstance &inst, std::size_t min_size = 0,
                                                               std::size_t max_size = std::numeric_limits<std::size_t>::max()) {
  inst.validate();
  const auto n = inst.graph.num_vertices();
  require(n <= 24, "enumeration oracle is limited to 24 vertices");
  const auto mark = inst.terminal_marks();
  std::vector<std::size_t> free;
  for (std::size_t v = 0; v < n; ++v)
    if (mark[v] == 0) free.push_back(v);
  std::optional<CutResult> best;
  VertexSet A(n, false);
  for (auto s : inst.S) A[s] = true;
  const double tie = 1e-9;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << free.size()); ++mask) {
    std::size_t size = inst.S.size();
    for (std::size_t k = 0; k < free.size(); ++k) {
      A[free[k]] = (mask >> k) & 1U;
      size += A[free[k]];
    }
    if (size < min_size || size > max_size) continue;
    const double w = cut_weight(inst.graph, A);
    if (!best || w < best->weight - tie ||
        (w <= best->weight + tie && size < static_cast<std::size_t>(std::count(best->A.begin(), best->A.end(), true)))) {
      best = make_cut_result(inst, A);
    }
  }
  return best;
}

[[nodiscard]] inline CutResult mincut_exact(const CutInstance &inst) {
  if (inst.graph.num_vertices() <= 16) {
    if (auto r = mincut_enumerate(inst)) return *r;
  }
  return mincut_maxflow(inst);
}

/// Minimum weight of a feasible cut A with beta n <= |A| <= (1 - beta) n, or
/// nullopt if none exists.
[[nodiscard]] inline std::optional<double> opt_balanced(const CutInstance &inst, double beta) {
  const double n = static_cast<double>(inst.graph.num_vertices());
  const auto lo = static_cast<std::size_t>(std::ceil(beta * n - 1e-9));
  const auto hi = static_cast<std::size_t>(std::floor((1.0 - beta) * n + 1e-9));
  auto r = mincut_enumerate(inst, lo, hi);
  if (!r) return std::nullopt;
  return r->weight;
}

} // namespace lipgraph
