#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/harness/sampling.hpp"
#include "lipgraph/prox/constraint_set.hpp"
#include "lipgraph/prox/solver.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

struct MatchFractional {
  std::vector<double> x; // per edge, in [0, 1]
  double epsilon = 0.0;
  double objective = 0.0; // sum_e w_e x_e
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct BMatching {
  std::vector<std::size_t> edges; // ascending edge indices
  double weight = 0.0;

  [[nodiscard]] std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (auto e : edges) m |= std::uint64_t{1} << e;
    return m;
  }
};

[[nodiscard]] inline BMatching make_bmatching(const WeightedGraph &g, std::vector<std::size_t> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  BMatching M;
  for (auto e : edges) M.weight += g.weight(e);
  M.edges = std::move(edges);
  return M;
}

[[nodiscard]] inline bool is_valid_bmatching(const WeightedGraph &g, const BMatching &M) {
  std::vector<int> deg(g.num_vertices(), 0);
  for (auto e : M.edges) {
    if (e >= g.num_edges()) return false;
    ++deg[g.edge(e).u];
    ++deg[g.edge(e).v];
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (deg[v] > g.capacity(v)) return false;
  return true;
}

[[nodiscard]] inline std::size_t matching_distance(const BMatching &a, const BMatching &b) {
  std::vector<std::size_t> diff;
  std::set_symmetric_difference(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
                                std::back_inserter(diff));
  return diff.size();
}

/// Degree constraints of the b-matching polytope; vertices whose degree is at
/// most their capacity are redundant and dropped.
[[nodiscard]] inline ConstraintSet bmatching_polytope(const WeightedGraph &g) {
  const auto m = g.num_edges();
  ConstraintSet cs(m);
  cs.box(0.0, 1.0);
  const auto inc = g.incidence();
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (inc[v].size() <= static_cast<std::size_t>(g.capacity(v))) continue;
    Vec a = Vec::Zero(static_cast<Eigen::Index>(m));
    for (auto e : inc[v]) a(static_cast<Eigen::Index>(e)) = 1.0;
    cs.at_most(std::move(a), g.capacity(v));
  }
  return cs;
}

/// Regularized b-matching LP as a program:
/// minimize -w^T x + (eps/2) sum w_e x_e^2 over the b-matching polytope.
/// The Hessian is eps diag(w), so sigma = eps w_min and L = eps w_max.
[[nodiscard]] inline RegularizedProgram matching_program(const WeightedGraph &g, double eps, double tol = 1e-10) {
  require(g.is_bipartite(), "matching needs a bipartite graph");
  require(eps > 0.0, "matching needs eps > 0");
  require(g.num_edges() > 0, "matching needs at least one edge");
  const auto m = static_cast<Eigen::Index>(g.num_edges());
  Vec w(m);
  for (Eigen::Index e = 0; e < m; ++e) w(e) = g.weight(static_cast<std::size_t>(e));
  RegularizedProgram prog;
  prog.dim = g.num_edges();
  prog.f_linear = -w;
  prog.f_value = [w](const Vec &x) { return -w.dot(x); };
  prog.g_value = [w, eps](const Vec &x) { return 0.5 * eps * x.cwiseProduct(w).dot(x); };
  prog.g_gradient = [w, eps](const Vec &x) { return Vec(eps * w.cwiseProduct(x)); };
  prog.sigma = eps * w.minCoeff();
  prog.lsmooth = eps * w.maxCoeff();
  // Projection error must sit below the solver's movement threshold.
  prog.project = projector_callback(bmatching_polytope(g), tol / (10.0 * std::max(1.0, prog.lsmooth)));
  return prog;
}

[[nodiscard]] inline MatchFractional solve_matching_fractional(const WeightedGraph &g, double eps, double tol = 1e-10,
                                                               std::size_t max_iter = 200000,
                                                               const IterateObserver &observer = {}) {
  auto prog = matching_program(g, eps, tol);
  auto res = solve(prog, Vec::Zero(static_cast<Eigen::Index>(prog.dim)), tol, max_iter, observer);
  if (!res.converged)
    throw ConvergenceError("matching solver hit its iteration cap",
                           std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  MatchFractional out;
  out.x.assign(res.x.data(), res.x.data() + res.x.size());
  out.epsilon = eps;
  for (std::size_t e = 0; e < out.x.size(); ++e) out.objective += g.weight(e) * out.x[e];
  out.iterations = res.iterations;
  out.residual = res.residual;
  out.converged = res.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Multi-item cooperative auction.
//
// Tape order (fixed count for a given graph, whatever the fractional input):
//   1. seller draws: buyers in vertex order, b_u slots each, one uniform per
//      slot (inverse CDF over N(u) in edge order, then the no-op);
//   2. item draws: the same slots in the same order, one uniform each; used
//      only when the slot names a seller for the first time;
//   3. acceptance draws: sellers in vertex order, items 0..b_v-1, one uniform
//      per incident edge; the bidder with the smallest uniform wins.

struct AuctionOptions {
  ExpMechCoupling seller_coupling = ExpMechCoupling::InverseCdf;
};

struct AuctionTrace {
  std::vector<std::size_t> bids; // edge index per bid, one per (buyer, unique seller)
  std::vector<std::size_t> bid_items;
};

[[nodiscard]] inline BMatching auction_round(const MatchFractional &frac, const WeightedGraph &g, RandomTape &tape,
                                             const AuctionOptions &opt = {}, AuctionTrace *trace = nullptr) {
  require(g.is_bipartite(), "auction rounding needs a bipartite graph");
  require(frac.x.size() == g.num_edges(), "fractional matching length differs from edge count");
  const auto n = g.num_vertices();
  const auto left = *g.left_size();
  const auto inc = g.incidence();

  // Phase 1: seller slots.
  std::vector<std::vector<std::ptrdiff_t>> slot_edge(left);
  for (std::size_t u = 0; u < left; ++u) {
    const auto bu = static_cast<std::size_t>(g.capacity(u));
    std::vector<double> p;
    double mass = 0.0;
    for (auto e : inc[u]) {
      const double pe = std::clamp(frac.x[e], 0.0, 1.0) / static_cast<double>(bu);
      p.push_back(pe);
      mass += pe;
    }
    p.push_back(std::max(0.0, 1.0 - mass)); // no-op
    for (std::size_t s = 0; s < bu; ++s) {
      const auto k = sample_index(p, tape, opt.seller_coupling);
      slot_edge[u].push_back(k < inc[u].size() ? static_cast<std::ptrdiff_t>(inc[u][k]) : -1);
    }
  }

  // Phase 2: item per unique seller (first occurrence of the seller).
  // bidders[v][j] lists (edge index) of bids on item j of seller v.
  std::vector<std::vector<std::vector<std::size_t>>> bidders(n);
  for (std::size_t v = left; v < n; ++v) bidders[v].resize(static_cast<std::size_t>(g.capacity(v)));
  for (std::size_t u = 0; u < left; ++u) {
    std::vector<std::size_t> seen;
    for (auto se : slot_edge[u]) {
      const double draw = tape.next();
      if (se < 0) continue;
      const auto e = static_cast<std::size_t>(se);
      if (std::find(seen.begin(), seen.end(), e) != seen.end()) continue;
      seen.push_back(e);
      const auto v = g.edge(e).v;
      const auto bv = static_cast<std::size_t>(g.capacity(v));
      const auto j = std::min(bv - 1, static_cast<std::size_t>(draw * static_cast<double>(bv)));
      bidders[v][j].push_back(e);
      if (trace) {
        trace->bids.push_back(e);
        trace->bid_items.push_back(j);
      }
    }
  }

  // Phase 3: acceptance race per item.
  std::vector<std::size_t> chosen;
  for (std::size_t v = left; v < n; ++v) {
    for (std::size_t j = 0; j < bidders[v].size(); ++j) {
      std::ptrdiff_t winner = -1;
      double best = 2.0;
      for (auto e : inc[v]) {
        const double draw = tape.next();
        const auto &bj = bidders[v][j];
        if (std::find(bj.begin(), bj.end(), e) == bj.end()) continue;
        if (draw < best) {
          best = draw;
          winner = static_cast<std::ptrdiff_t>(e);
        }
      }
      if (winner >= 0) chosen.push_back(static_cast<std::size_t>(winner));
    }
  }
  return make_bmatching(g, std::move(chosen));
}

/// Exact output distribution of auction_round, keyed by edge bitmask.
/// Enumerates every slot outcome, item choice and acceptance; tiny graphs only.
[[nodiscard]] inline std::map<std::uint64_t, double> auction_distribution(const MatchFractional &frac,
                                                                         const WeightedGraph &g) {
  require(g.is_bipartite(), "auction distribution needs a bipartite graph");
  require(g.num_edges() <= 12, "auction distribution enumeration is limited to 12 edges");
  const auto n = g.num_vertices();
  const auto left = *g.left_size();
  const auto inc = g.incidence();

  // Bid outcome: for each (edge) the item index bid on, or -1.
  std::map<std::vector<int>, double> bid_dist{{std::vector<int>(g.num_edges(), -1), 1.0}};
  for (std::size_t u = 0; u < left; ++u) {
    const auto bu = static_cast<std::size_t>(g.capacity(u));
    const auto k = inc[u].size();
    std::vector<double> p;
    double mass = 0.0;
    for (auto e : inc[u]) {
      p.push_back(std::clamp(frac.x[e], 0.0, 1.0) / static_cast<double>(bu));
      mass += p.back();
    }
    p.push_back(std::max(0.0, 1.0 - mass));
    // Distribution over the set of unique sellers chosen by u.
    std::map<std::vector<bool>, double> sellers{{std::vector<bool>(k, false), 1.0}};
    for (std::size_t s = 0; s < bu; ++s) {
      std::map<std::vector<bool>, double> next;
      for (const auto &[set, pr] : sellers)
        for (std::size_t c = 0; c <= k; ++c) {
          if (p[c] <= 0.0) continue;
          auto ns = set;
          if (c < k) ns[c] = true;
          next[ns] += pr * p[c];
        }
      sellers = std::move(next);
    }
    std::map<std::vector<int>, double> next_bids;
    for (const auto &[base, pb] : bid_dist)
      for (const auto &[set, ps] : sellers) {
        // Each chosen seller v gets an independent uniform item in [b_v].
        std::vector<std::pair<std::vector<int>, double>> partial{{base, pb * ps}};
        for (std::size_t c = 0; c < k; ++c) {
          if (!set[c]) continue;
          const auto e = inc[u][c];
          const auto bv = g.capacity(g.edge(e).v);
          std::vector<std::pair<std::vector<int>, double>> grown;
          for (const auto &[vec, pr] : partial)
            for (int j = 0; j < bv; ++j) {
              auto nv = vec;
              nv[e] = j;
              grown.emplace_back(std::move(nv), pr / bv);
            }
          partial = std::move(grown);
        }
        for (auto &[vec, pr] : partial) next_bids[vec] += pr;
      }
    bid_dist = std::move(next_bids);
  }

  std::map<std::uint64_t, double> out;
  for (const auto &[bids, pb] : bid_dist) {
    std::map<std::uint64_t, double> acc{{0, pb}};
    for (std::size_t v = left; v < n; ++v)
      for (int j = 0; j < g.capacity(v); ++j) {
        std::vector<std::size_t> who;
        for (auto e : inc[v])
          if (bids[e] == j) who.push_back(e);
        if (who.empty()) continue;
        std::map<std::uint64_t, double> next;
        for (const auto &[mask, pr] : acc)
          for (auto e : who) next[mask | (std::uint64_t{1} << e)] += pr / static_cast<double>(who.size());
        acc = std::move(next);
      }
    for (const auto &[mask, pr] : acc) out[mask] += pr;
  }
  return out;
}

/// Single-item auction rounding for b = 1: each buyer picks at most one seller
/// with probability x_uv, each seller sells to a uniform bidder.
[[nodiscard]] inline std::map<std::uint64_t, double> single_item_auction_distribution(const MatchFractional &frac,
                                                                                     const WeightedGraph &g) {
  require(g.is_bipartite(), "auction distribution needs a bipartite graph");
  require(g.num_edges() <= 12, "auction distribution enumeration is limited to 12 edges");
  for (int b : g.capacities()) require(b == 1, "single-item auction needs b = 1 everywhere");
  const auto left = *g.left_size();
  const auto inc = g.incidence();
  // choice[u] = edge index or -1
  std::vector<std::pair<std::vector<std::ptrdiff_t>, double>> choices{{{}, 1.0}};
  for (std::size_t u = 0; u < left; ++u) {
    std::vector<std::pair<std::vector<std::ptrdiff_t>, double>> next;
    double mass = 0.0;
    for (auto e : inc[u]) mass += frac.x[e];
    for (const auto &[c, pr] : choices) {
      for (auto e : inc[u]) {
        if (frac.x[e] <= 0.0) continue;
        auto nc = c;
        nc.push_back(static_cast<std::ptrdiff_t>(e));
        next.emplace_back(std::move(nc), pr * frac.x[e]);
      }
      if (1.0 - mass > 0.0) {
        auto nc = c;
        nc.push_back(-1);
        next.emplace_back(std::move(nc), pr * (1.0 - mass));
      }
    }
    choices = std::move(next);
  }
  std::map<std::uint64_t, double> out;
  for (const auto &[c, pr] : choices) {
    std::map<std::size_t, std::vector<std::size_t>> by_seller;
    for (auto e : c)
      if (e >= 0) by_seller[g.edge(static_cast<std::size_t>(e)).v].push_back(static_cast<std::size_t>(e));
    std::map<std::uint64_t, double> acc{{0, pr}};
    for (const auto &[v, es] : by_seller) {
      std::map<std::uint64_t, double> next;
      for (const auto &[mask, p] : acc)
        for (auto e : es) next[mask | (std::uint64_t{1} << e)] += p / static_cast<double>(es.size());
      acc = std::move(next);
    }
    for (const auto &[mask, p] : acc) out[mask] += p;
  }
  return out;
}

/// Maximum-weight b-matching by exhaustive search over edge subsets.
[[nodiscard]] inline BMatching match_exact_small(const WeightedGraph &g) {
  const auto m = g.num_edges();
  require(m <= 22, "match_exact_small is limited to 22 edges");
  std::vector<int> deg(g.num_vertices(), 0);
  std::vector<std::size_t> cur, best;
  double cur_w = 0.0, best_w = -1.0;
  // Depth-first over edges with capacity pruning.
  auto dfs = [&](auto &&self, std::size_t e) -> void {
    if (e == m) {
      if (cur_w > best_w) {
        best_w = cur_w;
        best = cur;
      }
      return;
    }
    const auto &ed = g.edge(e);
    if (deg[ed.u] < g.capacity(ed.u) && deg[ed.v] < g.capacity(ed.v)) {
      ++deg[ed.u];
      ++deg[ed.v];
      cur.push_back(e);
      cur_w += g.weight(e);
      self(self, e + 1);
      cur_w -= g.weight(e);
      cur.pop_back();
      --deg[ed.u];
      --deg[ed.v];
    }
    self(self, e + 1);
  };
  dfs(dfs, 0);
  return make_bmatching(g, best);
}

} // namespace lipgraph
