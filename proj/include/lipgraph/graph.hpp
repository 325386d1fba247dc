#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lipgraph/error.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// Every weight in every instance is at least this large.
inline constexpr double kWeightFloor = 1e-9;

using VertexSet = std::vector<bool>;

struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Edge &, const Edge &) = default;
  friend auto operator<=>(const Edge &a, const Edge &b) {
    return std::tie(a.u, a.v) <=> std::tie(b.u, b.v);
  }
};

/// Undirected simple graph with a positive weight per edge.
///
/// Edges are stored with u < v in lexicographic order; that order is the edge
/// index used by perturbations and never changes for the lifetime of the
/// object. Optional extras: a bipartition given as the size of the left side
/// (left = vertices [0, left_size)), and per-vertex integer capacities.
class WeightedGraph {
public:
  WeightedGraph() = default;

  WeightedGraph(std::size_t n, std::vector<Edge> edges, std::vector<double> weights,
                std::optional<std::size_t> left_size = std::nullopt,
                std::vector<int> capacities = {})
      : n_(n), left_size_(left_size) {
    require(edges.size() == weights.size(), "edge and weight counts differ");
    std::vector<std::size_t> order(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto &e = edges[i];
      require(e.u < n && e.v < n, "edge endpoint out of range");
      require(e.u != e.v, "self-loop on vertex " + std::to_string(e.u));
      if (e.u > e.v) std::swap(e.u, e.v);
      order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });
    edges_.reserve(edges.size());
    weights_.reserve(edges.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto &e = edges[order[k]];
      if (k > 0 && e == edges_.back())
        throw ValidationError("duplicate edge (" + std::to_string(e.u) + ", " +
                              std::to_string(e.v) + ")");
      edges_.push_back(e);
      weights_.push_back(weights[order[k]]);
    }
    check_weights(weights_);
    if (left_size_) {
      require(*left_size_ <= n, "bipartition larger than vertex count");
      for (const auto &e : edges_)
        require(e.u < *left_size_ && e.v >= *left_size_,
                "edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                    ") does not cross the bipartition");
    }
    if (capacities.empty()) {
      capacities_.assign(n, 1);
    } else {
      require(capacities.size() == n, "capacity vector length differs from n");
      for (int b : capacities) require(b >= 1, "capacities must be >= 1");
      capacities_ = std::move(capacities);
    }
  }

  [[nodiscard]] std::size_t num_vertices() const noexcept { return n_; }
  [[nodiscard]] std::size_t num_edges() const noexcept { return edges_.size(); }
  [[nodiscard]] const std::vector<Edge> &edges() const noexcept { return edges_; }
  [[nodiscard]] const Edge &edge(std::size_t i) const { return edges_.at(i); }
  [[nodiscard]] const std::vector<double> &weights() const noexcept { return weights_; }
  [[nodiscard]] double weight(std::size_t i) const { return weights_.at(i); }
  [[nodiscard]] const std::optional<std::size_t> &left_size() const noexcept { return left_size_; }
  [[nodiscard]] bool is_bipartite() const noexcept { return left_size_.has_value(); }
  [[nodiscard]] const std::vector<int> &capacities() const noexcept { return capacities_; }
  [[nodiscard]] int capacity(std::size_t v) const { return capacities_.at(v); }

  [[nodiscard]] double min_weight() const {
    return weights_.empty() ? 0.0 : *std::min_element(weights_.begin(), weights_.end());
  }
  [[nodiscard]] double max_weight() const {
    return weights_.empty() ? 0.0 : *std::max_element(weights_.begin(), weights_.end());
  }

  /// Same topology, new weight vector (indexed like edges()).
  [[nodiscard]] WeightedGraph with_weights(std::vector<double> w) const {
    require(w.size() == edges_.size(), "weight vector length differs from edge count");
    check_weights(w);
    WeightedGraph g = *this;
    g.weights_ = std::move(w);
    return g;
  }

  [[nodiscard]] WeightedGraph with_capacities(std::vector<int> b) const {
    return WeightedGraph(n_, edges_, weights_, left_size_, std::move(b));
  }

  /// Edge indices incident to each vertex, ascending.
  [[nodiscard]] std::vector<std::vector<std::size_t>> incidence() const {
    std::vector<std::vector<std::size_t>> inc(n_);
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      inc[edges_[i].u].push_back(i);
      inc[edges_[i].v].push_back(i);
    }
    return inc;
  }

  [[nodiscard]] bool is_connected() const {
    if (n_ <= 1) return true;
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t comps = n_;
    for (const auto &e : edges_) {
      auto a = find(e.u), b = find(e.v);
      if (a != b) {
        parent[a] = b;
        --comps;
      }
    }
    return comps == 1;
  }

  friend bool operator==(const WeightedGraph &, const WeightedGraph &) = default;

private:
  static void check_weights(const std::vector<double> &w) {
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!(w[i] >= kWeightFloor) || !std::isfinite(w[i]))
        throw ValidationError("weight of edge " + std::to_string(i) + " is below the floor " +
                              "1e-9 or not finite");
  }

  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  std::optional<std::size_t> left_size_;
  std::vector<int> capacities_;
};

/// Graph plus the two terminal sets. s0 = S.front(), t0 = T.front().
struct CutInstance {
  WeightedGraph graph;
  std::vector<std::size_t> S;
  std::vector<std::size_t> T;

  CutInstance() = default;
  CutInstance(WeightedGraph g, std::vector<std::size_t> s, std::vector<std::size_t> t)
      : graph(std::move(g)), S(std::move(s)), T(std::move(t)) {
    validate();
  }

  [[nodiscard]] std::size_t s0() const { return S.front(); }
  [[nodiscard]] std::size_t t0() const { return T.front(); }

  void validate() const {
    require(!S.empty() && !T.empty(), "terminal sets S and T must be non-empty");
    const auto n = graph.num_vertices();
    std::vector<int> mark(n, 0);
    for (auto s : S) {
      require(s < n, "S vertex out of range");
      require(mark[s] == 0, "duplicate S vertex");
      mark[s] = 1;
    }
    for (auto t : T) {
      require(t < n, "T vertex out of range");
      require(mark[t] != 1, "S and T intersect at vertex " + std::to_string(t));
      require(mark[t] != 2, "duplicate T vertex");
      mark[t] = 2;
    }
  }

  /// +1 for S, -1 for T, 0 otherwise.
  [[nodiscard]] std::vector<int> terminal_marks() const {
    std::vector<int> mark(graph.num_vertices(), 0);
    for (auto s : S) mark[s] = 1;
    for (auto t : T) mark[t] = -1;
    return mark;
  }

  [[nodiscard]] CutInstance with_weights(std::vector<double> w) const {
    return CutInstance(graph.with_weights(std::move(w)), S, T);
  }
};

/// Add delta to the weight of one edge, addressed by index.
struct Perturbation {
  std::size_t edge = 0;
  double delta = 0.0;
};

[[nodiscard]] inline WeightedGraph perturb(const WeightedGraph &g, const Perturbation &p) {
  require(p.edge < g.num_edges(), "perturbation edge index out of range");
  auto w = g.weights();
  w[p.edge] += p.delta;
  if (!(w[p.edge] >= kWeightFloor))
    throw ValidationError("perturbation drops weight of edge " + std::to_string(p.edge) +
                          " below the floor 1e-9");
  return g.with_weights(std::move(w));
}

[[nodiscard]] inline CutInstance perturb(const CutInstance &inst, const Perturbation &p) {
  return CutInstance(perturb(inst.graph, p), inst.S, inst.T);
}

/// Sum of weights of edges with exactly one endpoint in A.
[[nodiscard]] inline double cut_weight(const WeightedGraph &g, const VertexSet &A) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto &e = g.edge(i);
    if (A[e.u] != A[e.v]) total += g.weight(i);
  }
  return total;
}

[[nodiscard]] inline std::size_t symmetric_difference(const VertexSet &a, const VertexSet &b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != b[i]);
  return d;
}

/// Weighted Laplacian L = B W B^T.
[[nodiscard]] inline Eigen::MatrixXd laplacian(const WeightedGraph &g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto u = static_cast<Eigen::Index>(g.edge(i).u);
    const auto v = static_cast<Eigen::Index>(g.edge(i).v);
    const double w = g.weight(i);
    L(u, u) += w;
    L(v, v) += w;
    L(u, v) -= w;
    L(v, u) -= w;
  }
  return L;
}

enum class SpectralMethod { Auto, Dense, Power };

struct SpectrumExtremes {
  double lambda2 = 0.0;
  double lambda_max = 0.0;
};

namespace detail {

inline Eigen::VectorXd laplacian_apply(const WeightedGraph &g, const Eigen::VectorXd &x) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const auto u = static_cast<Eigen::Index>(g.edge(i).u);
    const auto v = static_cast<Eigen::Index>(g.edge(i).v);
    const double d = g.weight(i) * (x(u) - x(v));
    y(u) += d;
    y(v) -= d;
  }
  return y;
}

// Largest eigenvalue of a symmetric operator restricted to 1-perp.
template <class Op>
double power_top(Op apply, Eigen::Index n, double tol, int max_iter, std::uint64_t seed) {
  RandomTape tape(seed);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = tape.next() - 0.5;
  auto deflate = [](Eigen::VectorXd &v) { v.array() -= v.mean(); };
  deflate(x);
  x.normalize();
  double rayleigh = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = apply(x);
    deflate(y);
    const double r = x.dot(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    // Residual of the eigen-equation bounds the eigenvalue error.
    const double resid = (y - r * x).norm();
    y /= norm;
    x = y;
    if (resid <= tol && it > 2) return r;
    rayleigh = r;
  }
  throw ConvergenceError("power iteration for lambda2 did not converge",
                         std::vector<double>{rayleigh});
}

} // namespace detail

/// lambda2 (algebraic connectivity) and lambda_n of the weighted Laplacian.
///
/// Dense symmetric eigendecomposition for n <= 512; above that, deflated
/// power iteration on (c I - L) with the all-ones direction projected out.
/// Disconnected graphs return lambda2 = 0 exactly.
[[nodiscard]] inline SpectrumExtremes spectrum_extremes(const WeightedGraph &g, double tol = 1e-10,
                                                        SpectralMethod method = SpectralMethod::Auto) {
  const auto n = g.num_vertices();
  require(n >= 2, "lambda2 needs at least two vertices");
  if (method == SpectralMethod::Auto) method = n <= 512 ? SpectralMethod::Dense : SpectralMethod::Power;
  SpectrumExtremes out;
  if (method == SpectralMethod::Dense) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian(g), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("dense eigendecomposition failed");
    out.lambda2 = std::max(0.0, es.eigenvalues()(1));
    out.lambda_max = es.eigenvalues()(static_cast<Eigen::Index>(n) - 1);
  } else {
    const auto N = static_cast<Eigen::Index>(n);
    const int cap = 200000;
    out.lambda_max = detail::power_top([&](const Eigen::VectorXd &x) { return detail::laplacian_apply(g, x); },
                                       N, tol, cap, 0x5eed);
    const double c = out.lambda_max * (1.0 + 1e-3) + tol;
    const double top = detail::power_top(
        [&](const Eigen::VectorXd &x) { return Eigen::VectorXd(c * x - detail::laplacian_apply(g, x)); },
        N, tol, cap, 0x5eed + 1);
    out.lambda2 = std::max(0.0, c - top);
  }
  if (!g.is_connected()) out.lambda2 = 0.0;
  return out;
}

[[nodiscard]] inline double lambda2(const WeightedGraph &g, double tol = 1e-10,
                                    SpectralMethod method = SpectralMethod::Auto) {
  return spectrum_extremes(g, tol, method).lambda2;
}

// ---------------------------------------------------------------------------
// Generators

/// Weights drawn from {0.5, 0.75, ..., 2}: exact in binary floating point.
[[nodiscard]] inline double quarter_weight(RandomTape &tape) {
  return 0.5 + 0.25 * std::floor(tape.next() * 7.0);
}

/// Erdos-Renyi graph plus a random spanning tree, so always connected.
[[nodiscard]] inline WeightedGraph random_connected_graph(std::size_t n, double p, RandomTape &tape) {
  require(n >= 2, "need at least two vertices");
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < n; ++v) {
    auto u = static_cast<std::size_t>(tape.next() * static_cast<double>(v));
    adj[u][v] = adj[v][u] = true;
    edges.push_back({u, v});
  }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!adj[u][v] && tape.next() < p) edges.push_back({u, v});
  std::vector<double> w(edges.size());
  for (auto &x : w) x = quarter_weight(tape);
  return WeightedGraph(n, std::move(edges), std::move(w));
}

/// Random bipartite graph with left vertices [0, nl) and right [nl, nl+nr);
/// at least one edge per left vertex.
[[nodiscard]] inline WeightedGraph random_bipartite_graph(std::size_t nl, std::size_t nr, double p,
                                                          std::size_t max_edges, RandomTape &tape,
                                                          int max_capacity = 1) {
  require(nl >= 1 && nr >= 1, "both sides must be non-empty");
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < nl; ++u) {
    bool any = false;
    for (std::size_t v = 0; v < nr; ++v)
      if (tape.next() < p) {
        edges.push_back({u, nl + v});
        any = true;
      }
    if (!any) edges.push_back({u, nl + static_cast<std::size_t>(tape.next() * static_cast<double>(nr))});
  }
  while (edges.size() > max_edges) {
    auto k = static_cast<std::size_t>(tape.next() * static_cast<double>(edges.size()));
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(k));
  }
  std::vector<double> w(edges.size());
  for (auto &x : w) x = quarter_weight(tape);
  std::vector<int> b(nl + nr);
  for (auto &c : b) c = 1 + static_cast<int>(tape.next() * max_capacity);
  return WeightedGraph(nl + nr, std::move(edges), std::move(w), nl, std::move(b));
}

/// Random connected cut instance with singleton or small terminal sets.
[[nodiscard]] inline CutInstance random_cut_instance(std::size_t n, double p, RandomTape &tape,
                                                     std::size_t max_terminals = 1) {
  auto g = random_connected_graph(n, p, tape);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(tape.next() * static_cast<double>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const std::size_t cap = std::max<std::size_t>(1, std::min(max_terminals, (n - 1) / 2));
  const auto ns = 1 + static_cast<std::size_t>(tape.next() * static_cast<double>(cap));
  const auto nt = 1 + static_cast<std::size_t>(tape.next() * static_cast<double>(cap));
  std::vector<std::size_t> S(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(ns));
  std::vector<std::size_t> T(perm.begin() + static_cast<std::ptrdiff_t>(ns),
                             perm.begin() + static_cast<std::ptrdiff_t>(ns + nt));
  return CutInstance(std::move(g), std::move(S), std::move(T));
}

/// Hard instance for stable s-t cut: complete bipartite K_{|U|,|R|} with
/// s, t in R. Under `w` the edges at s are light, under `w_tilde` the edges
/// at t are light, so the optimal cut flips from {s} to V \ {t}.
struct LowerBoundInstance {
  CutInstance instance; // carries weights w
  std::vector<double> w;
  std::vector<double> w_tilde;
  std::size_t left_size = 0; // |U|
  double light_weight = 0.0; // 1 / (4 (C + 2))
};

[[nodiscard]] inline LowerBoundInstance lower_bound_instance(std::size_t n, double C, double f_n) {
  require(C > 0.0 && f_n > 0.0, "lower-bound instance needs C > 0 and f(n) > 0");
  require(f_n < static_cast<double>(n) / (2.0 * (C + 2.0)),
          "lower-bound instance needs f(n) < n / (2 (C + 2))");
  const auto u_size = static_cast<std::size_t>(std::ceil((C + 2.0) * f_n - 1e-12));
  require(u_size >= 1 && n >= u_size + 2, "lower-bound instance needs |R| >= 2");
  const std::size_t s = u_size, t = u_size + 1;
  const double light = 1.0 / (4.0 * (C + 2.0));
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < u_size; ++u)
    for (std::size_t r = u_size; r < n; ++r) edges.push_back({u, r});
  WeightedGraph proto(n, edges, std::vector<double>(edges.size(), 1.0), u_size);
  std::vector<double> w(proto.num_edges()), wt(proto.num_edges());
  for (std::size_t i = 0; i < proto.num_edges(); ++i) {
    const auto &e = proto.edge(i);
    w[i] = (e.v == s) ? light : 1.0;
    wt[i] = (e.v == t) ? light : 1.0;
  }
  LowerBoundInstance out;
  out.instance = CutInstance(proto.with_weights(w), {s}, {t});
  out.w = std::move(w);
  out.w_tilde = std::move(wt);
  out.left_size = u_size;
  out.light_weight = light;
  return out;
}

} // namespace lipgraph
