#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/harness/sampling.hpp"
#include "lipgraph/prox/split_solver.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// Fractional S-T cut. Convention: y_{t0} - y_{s0} = 1, <1, y> = 0, y constant
/// on S and on T, every y_v in [y_{s0}, y_{t0}] and in [lo, hi].
struct CutFractional {
  std::vector<double> y;
  double epsilon = 0.0;
  double lo = -1.0;
  double hi = 1.0;
  double objective_f = 0.0; // sum_e w_e |y_u - y_v|
  bool lp_feasible = true;  // false when the box admits no feasible y
  std::size_t iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

struct CutResult {
  VertexSet A;
  double weight = 0.0;
  bool feasible = false;            // S in A, A disjoint from T
  std::optional<std::size_t> choice; // chosen bucket (expmech) or r (kway)
};

[[nodiscard]] inline bool is_feasible_cut(const CutInstance &inst, const VertexSet &A) {
  for (auto s : inst.S)
    if (!A[s]) return false;
  for (auto t : inst.T)
    if (A[t]) return false;
  return true;
}

[[nodiscard]] inline CutResult make_cut_result(const CutInstance &inst, VertexSet A) {
  CutResult r;
  r.weight = cut_weight(inst.graph, A);
  r.feasible = is_feasible_cut(inst, A);
  r.A = std::move(A);
  return r;
}

[[nodiscard]] inline double fractional_cut_value(const WeightedGraph &g, const std::vector<double> &y) {
  double f = 0.0;
  for (std::size_t i = 0; i < g.num_edges(); ++i) f += g.weight(i) * std::abs(y[g.edge(i).u] - y[g.edge(i).v]);
  return f;
}

// ---------------------------------------------------------------------------
// Reparametrization shared by every cut program.
//
// x_v = y_v - y_{s0}: x = 0 on S, x = 1 on T, free coordinates in [0, 1].
// y = x - mean(x) 1, so <1, y> = 0 holds by construction and the box
// y in [lo, hi] reduces to mean(x) in [1 - hi, -lo].

struct CutLayout {
  std::vector<std::ptrdiff_t> free_index; // vertex -> column, -1 when fixed
  std::vector<std::size_t> free_vertices;
  std::vector<double> fixed_value; // 0 on S, 1 on T, unused elsewhere
  std::size_t num_t = 0;

  explicit CutLayout(const CutInstance &inst) {
    const auto n = inst.graph.num_vertices();
    const auto mark = inst.terminal_marks();
    free_index.assign(n, -1);
    fixed_value.assign(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (mark[v] == 0) {
        free_index[v] = static_cast<std::ptrdiff_t>(free_vertices.size());
        free_vertices.push_back(v);
      } else if (mark[v] < 0) {
        fixed_value[v] = 1.0;
        ++num_t;
      }
    }
  }

  [[nodiscard]] std::size_t dim() const { return free_vertices.size(); }

  [[nodiscard]] std::vector<double> full_x(const Vec &x) const {
    std::vector<double> out(fixed_value);
    for (std::size_t k = 0; k < free_vertices.size(); ++k) out[free_vertices[k]] = x(static_cast<Eigen::Index>(k));
    return out;
  }

  /// Edge-difference operator t = D x + o with t_e = x_u - x_v.
  [[nodiscard]] std::pair<SparseMat, Vec> difference_operator(const WeightedGraph &g) const {
    const auto m = static_cast<Eigen::Index>(g.num_edges());
    std::vector<Eigen::Triplet<double>> trip;
    Vec o = Vec::Zero(m);
    for (Eigen::Index e = 0; e < m; ++e) {
      const auto &ed = g.edge(static_cast<std::size_t>(e));
      if (free_index[ed.u] >= 0) trip.emplace_back(e, free_index[ed.u], 1.0);
      else o(e) += fixed_value[ed.u];
      if (free_index[ed.v] >= 0) trip.emplace_back(e, free_index[ed.v], -1.0);
      else o(e) -= fixed_value[ed.v];
    }
    SparseMat D(m, static_cast<Eigen::Index>(dim()));
    D.setFromTriplets(trip.begin(), trip.end());
    return {std::move(D), std::move(o)};
  }
};

/// Euclidean projection onto {x in [0,1]^d : sum x in [smin, smax]}.
/// Exact: clip, and if the sum bound is violated solve sum clip(p - mu) = bound
/// on the piecewise-linear breakpoints.
[[nodiscard]] inline Vec project_box_sum(const Vec &p, double smin, double smax) {
  Vec c = p.cwiseMax(0.0).cwiseMin(1.0);
  const double s = c.sum();
  if (p.size() == 0 || (s >= smin && s <= smax)) return c;
  const double target = s < smin ? smin : smax;
  auto phi = [&](double mu) { return (p.array() - mu).cwiseMax(0.0).cwiseMin(1.0).sum(); };
  std::vector<double> bp;
  bp.reserve(static_cast<std::size_t>(2 * p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    bp.push_back(p(i));
    bp.push_back(p(i) - 1.0);
  }
  std::sort(bp.begin(), bp.end());
  // phi is nonincreasing in mu; find adjacent breakpoints bracketing target.
  std::size_t lo = 0, hi = bp.size() - 1;
  if (phi(bp[lo]) < target) return (p.array() - bp[lo]).cwiseMax(0.0).cwiseMin(1.0);
  if (phi(bp[hi]) > target) return (p.array() - bp[hi]).cwiseMax(0.0).cwiseMin(1.0);
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (phi(bp[mid]) >= target) lo = mid;
    else hi = mid;
  }
  const double f_lo = phi(bp[lo]), f_hi = phi(bp[hi]);
  double mu = bp[lo];
  if (f_lo != f_hi) mu = bp[lo] + (f_lo - target) * (bp[hi] - bp[lo]) / (f_lo - f_hi);
  return (p.array() - mu).cwiseMax(0.0).cwiseMin(1.0);
}

struct CutSolveOptions {
  double tol = 1e-10;
  std::size_t max_iter = 500000;
  double rho = 0.0;
  std::function<void(std::size_t, const SplitState &)> observer;
};

/// Range of sum over free x allowed by the box [lo, hi]; empty when infeasible.
[[nodiscard]] inline std::optional<std::pair<double, double>> cut_sum_range(const CutInstance &inst, const CutLayout &lay,
                                                                            double lo, double hi) {
  const double n = static_cast<double>(inst.graph.num_vertices());
  const double nt = static_cast<double>(lay.num_t);
  const double d = static_cast<double>(lay.dim());
  const double smin = std::max(0.0, n * (1.0 - hi) - nt);
  const double smax = std::min(d, -n * lo - nt);
  constexpr double slack = 1e-12;
  if (smin > smax + slack) return std::nullopt;
  return std::make_pair(smin, std::max(smin, smax));
}

/// Builds the split program for a Laplacian-regularized cut LP:
/// f = sum w_e |t_e|, g = (eps / 2) y^T L y = sum (eps w_e / 2) t_e^2.
[[nodiscard]] inline SplitProgram fractional_cut_program(const CutInstance &inst, const CutLayout &lay, double eps,
                                                         double smin, double smax) {
  auto [D, o] = lay.difference_operator(inst.graph);
  SplitProgram prog;
  prog.D = std::move(D);
  prog.offset = std::move(o);
  const auto m = static_cast<Eigen::Index>(inst.graph.num_edges());
  prog.abs_weight.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) prog.abs_weight(e) = inst.graph.weight(static_cast<std::size_t>(e));
  prog.quad_weight = eps * prog.abs_weight;
  prog.diag_quad = Vec::Zero(static_cast<Eigen::Index>(lay.dim()));
  prog.linear = Vec::Zero(static_cast<Eigen::Index>(lay.dim()));
  prog.project = [smin, smax](const Vec &p) { return project_box_sum(p, smin, smax); };
  return prog;
}

/// Solves min f_w(y) + (eps/2) y^T L_w y over the normalized feasible region
/// intersected with the box [lo, hi]^V.
[[nodiscard]] inline CutFractional solve_fractional(const CutInstance &inst, double eps, double lo = -1.0,
                                                    double hi = 1.0, const CutSolveOptions &opt = {}) {
  require(eps > 0.0, "fractional cut needs eps > 0");
  require(lo < hi, "fractional cut needs lo < hi");
  inst.validate();
  CutLayout lay(inst);
  CutFractional out;
  out.epsilon = eps;
  out.lo = lo;
  out.hi = hi;
  const auto range = cut_sum_range(inst, lay, lo, hi);
  if (!range) {
    out.lp_feasible = false;
    out.objective_f = std::numeric_limits<double>::infinity();
    return out;
  }
  auto prog = fractional_cut_program(inst, lay, eps, range->first, range->second);
  Vec x0 = Vec::Constant(static_cast<Eigen::Index>(lay.dim()), 0.5);
  SplitOptions so;
  so.tol = opt.tol;
  so.max_iter = opt.max_iter;
  so.rho = opt.rho;
  so.observer = opt.observer;
  auto res = solve_split(prog, x0, so);
  if (!res.converged)
    throw ConvergenceError("fractional cut solver hit its iteration cap (residual " + std::to_string(res.residual) + ")",
                           std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  auto x = lay.full_x(res.x);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  out.y.resize(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) out.y[v] = x[v] - mean;
  out.objective_f = fractional_cut_value(inst.graph, out.y);
  out.iterations = res.iterations;
  out.residual = res.residual;
  out.converged = res.converged;
  return out;
}

/// A_tau = {v : y_v <= tau}.
[[nodiscard]] inline VertexSet threshold_set(const std::vector<double> &y, double tau) {
  VertexSet A(y.size());
  for (std::size_t v = 0; v < y.size(); ++v) A[v] = y[v] <= tau;
  return A;
}

/// One draw: tau uniform on [lo, hi].
[[nodiscard]] inline CutResult threshold_round(const CutFractional &frac, const CutInstance &inst, RandomTape &tape) {
  require(frac.lp_feasible, "cannot round an infeasible fractional cut");
  const double tau = stable_sample_uniform(frac.lo, frac.hi, tape);
  return make_cut_result(inst, threshold_set(frac.y, tau));
}

struct ThresholdExpectation {
  double expected_cut = 0.0;     // E_tau[cut(A_tau)]
  double feasible_mass = 0.0;    // P_tau[A_tau feasible]
  double expected_feasible = 0.0; // E_tau[cut(A_tau) 1{feasible}]
};

/// Exact expectation over tau uniform on [lo, hi] by enumerating the intervals
/// between consecutive y values.
[[nodiscard]] inline ThresholdExpectation threshold_expectation(const std::vector<double> &y, const CutInstance &inst,
                                                                double lo, double hi) {
  require(lo < hi, "threshold interval must have lo < hi");
  std::vector<double> cuts{lo, hi};
  for (double v : y)
    if (v > lo && v < hi) cuts.push_back(v);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  ThresholdExpectation out;
  const double len = hi - lo;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    // A_tau is constant for tau in [a, b).
    auto A = threshold_set(y, a);
    const double wt = cut_weight(inst.graph, A);
    const double mass = (b - a) / len;
    out.expected_cut += wt * mass;
    if (is_feasible_cut(inst, A)) {
      out.feasible_mass += mass;
      out.expected_feasible += wt * mass;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponential mechanism over size buckets.
//
// Tape order: one draw for Lambda2 in [lambda2/2, lambda2], the exponential-
// mechanism draws (one per bucket under the race coupling), one threshold draw.

struct ExpMechOptions {
  std::optional<double> eps; // default 1/sqrt(n)
  ExpMechCoupling coupling = ExpMechCoupling::Race;
  CutSolveOptions solve;
};

struct ExpMechPrepared {
  double gamma = 0.0;
  double epsilon = 0.0;
  double lambda2 = 0.0;
  std::vector<CutFractional> buckets; // bucket i+1 uses box [-(1 - i gamma), (i+1) gamma]
  std::vector<double> theta;          // f_w(y^(i)); +inf for infeasible buckets
  ExpMechCoupling coupling = ExpMechCoupling::Race;
};

[[nodiscard]] inline std::size_t bucket_count(double gamma) {
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  const double inv = 1.0 / gamma;
  const double k = std::round(inv);
  require(std::abs(inv - k) <= 1e-9 * inv, "1/gamma must be an integer");
  return static_cast<std::size_t>(k);
}

[[nodiscard]] inline ExpMechPrepared prepare_expmech(const CutInstance &inst, double gamma,
                                                     const ExpMechOptions &opt = {}) {
  const auto k = bucket_count(gamma);
  const auto n = inst.graph.num_vertices();
  require(n >= 2, "cut needs n >= 2");
  if (!inst.graph.is_connected()) throw ValidationError("exponential-mechanism cut needs a connected graph (lambda2 > 0)");
  ExpMechPrepared p;
  p.gamma = gamma;
  p.epsilon = opt.eps.value_or(1.0 / std::sqrt(static_cast<double>(n)));
  require(p.epsilon > 0.0, "eps must be positive");
  p.lambda2 = lambda2(inst.graph);
  p.coupling = opt.coupling;
  for (std::size_t i = 1; i <= k; ++i) {
    const double lo = -(1.0 - static_cast<double>(i - 1) * gamma);
    const double hi = static_cast<double>(i) * gamma;
    p.buckets.push_back(solve_fractional(inst, p.epsilon, lo, hi, opt.solve));
    p.theta.push_back(p.buckets.back().objective_f);
  }
  return p;
}

struct ExpMechDraw {
  double Lambda2 = 0.0;
  double eta = 0.0;
  std::size_t bucket = 0; // 0-based
  double tau = 0.0;
};

[[nodiscard]] inline CutResult sample_expmech(const ExpMechPrepared &p, const CutInstance &inst, RandomTape &tape,
                                              ExpMechDraw *trace = nullptr) {
  ExpMechDraw d;
  d.Lambda2 = stable_sample_uniform(p.lambda2 / 2.0, p.lambda2, tape);
  // eta = gamma eps^-1 Lambda2^-1 / sqrt(n) equals gamma / Lambda2 at eps = 1/sqrt(n).
  const double n = static_cast<double>(inst.graph.num_vertices());
  d.eta = p.gamma / (p.epsilon * d.Lambda2 * std::sqrt(n));
  d.bucket = sample_expmech(p.theta, d.eta, tape, p.coupling);
  const auto &frac = p.buckets[d.bucket];
  d.tau = stable_sample_uniform(frac.lo, frac.hi, tape);
  auto res = make_cut_result(inst, threshold_set(frac.y, d.tau));
  res.choice = d.bucket;
  if (trace) *trace = d;
  return res;
}

[[nodiscard]] inline CutResult cut_expmech(const CutInstance &inst, double gamma, RandomTape &tape,
                                           const ExpMechOptions &opt = {}) {
  return sample_expmech(prepare_expmech(inst, gamma, opt), inst, tape);
}

// ---------------------------------------------------------------------------
// K-way submodularity over repeated thresholds of the balanced LP.
//
// Tape order: k threshold draws, then one draw for r.

/// B_{r,k} = {v : v lies in at least r of the sets}.
[[nodiscard]] inline VertexSet combine_kway(const std::vector<VertexSet> &sets, std::size_t r) {
  require(!sets.empty(), "combine_kway needs at least one set");
  require(r >= 1 && r <= sets.size(), "r must lie in [1, k]");
  const auto n = sets.front().size();
  VertexSet B(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t count = 0;
    for (const auto &A : sets) count += A[v];
    B[v] = count >= r;
  }
  return B;
}

struct KwayParams {
  std::size_t k = 0;
  std::size_t r_min = 0;
  std::size_t r_max = 0;
};

/// k = 4 ceil(12 beta^-2 ln(2/gamma) / 4); r ranges over [k/2, (1/2 + beta/4) k].
[[nodiscard]] inline KwayParams kway_params(double beta, double gamma) {
  require(beta > 0.0 && beta < 0.5, "beta must lie in (0, 1/2)");
  require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
  KwayParams kp;
  kp.k = 4 * static_cast<std::size_t>(std::ceil(12.0 / (beta * beta) * std::log(2.0 / gamma) / 4.0));
  kp.r_min = kp.k / 2;
  kp.r_max = static_cast<std::size_t>(std::floor((0.5 + beta / 4.0) * static_cast<double>(kp.k) + 1e-9));
  if (kp.r_max < kp.r_min) throw ValidationError("empty r-range for the given beta and gamma");
  return kp;
}

struct KwayOptions {
  double eps = 1.0;
  CutSolveOptions solve;
};

struct KwayPrepared {
  double beta = 0.0;
  KwayParams params;
  CutFractional frac;
  /// False when the balanced box admits no feasible y (too many terminals for
  /// a beta-balanced cut). Rounding then runs on the full [-1, 1] LP and every
  /// result is flagged infeasible.
  bool balanced = true;
  std::string warning;
};

[[nodiscard]] inline KwayPrepared prepare_kway(const CutInstance &inst, double beta, double gamma,
                                               const KwayOptions &opt = {}) {
  KwayPrepared p;
  p.beta = beta;
  p.params = kway_params(beta, gamma);
  p.frac = solve_fractional(inst, opt.eps, -1.0 + beta, 1.0 - beta, opt.solve);
  if (!p.frac.lp_feasible) {
    p.balanced = false;
    p.warning = "no beta-balanced S-T cut exists for beta = " + std::to_string(beta) +
                "; rounding the unbalanced LP and flagging every result infeasible";
    p.frac = solve_fractional(inst, opt.eps, -1.0, 1.0, opt.solve);
  }
  return p;
}

struct KwayDraw {
  std::vector<VertexSet> sets;
  std::size_t r = 0;
  std::vector<double> range_cuts; // cut(B_r) for every r in [r_min, r_max]
  double sum_set_cuts = 0.0;      // sum_i cut(A_i)
};

[[nodiscard]] inline CutResult sample_kway(const KwayPrepared &p, const CutInstance &inst, RandomTape &tape,
                                           KwayDraw *trace = nullptr) {
  const auto &kp = p.params;
  std::vector<VertexSet> sets;
  sets.reserve(kp.k);
  for (std::size_t i = 0; i < kp.k; ++i)
    sets.push_back(threshold_set(p.frac.y, stable_sample_uniform(p.frac.lo, p.frac.hi, tape)));
  const auto span = kp.r_max - kp.r_min + 1;
  const auto r = kp.r_min + std::min(span - 1, static_cast<std::size_t>(tape.next() * static_cast<double>(span)));
  auto res = make_cut_result(inst, combine_kway(sets, r));
  res.feasible = res.feasible && p.balanced;
  res.choice = r;
  if (trace) {
    trace->r = r;
    trace->range_cuts.clear();
    trace->sum_set_cuts = 0.0;
    std::vector<std::size_t> count(inst.graph.num_vertices(), 0);
    for (const auto &A : sets) {
      trace->sum_set_cuts += cut_weight(inst.graph, A);
      for (std::size_t v = 0; v < A.size(); ++v) count[v] += A[v];
    }
    VertexSet B(count.size());
    for (std::size_t rr = kp.r_min; rr <= kp.r_max; ++rr) {
      for (std::size_t v = 0; v < B.size(); ++v) B[v] = count[v] >= rr;
      trace->range_cuts.push_back(cut_weight(inst.graph, B));
    }
    trace->sets = std::move(sets);
  }
  return res;
}

[[nodiscard]] inline CutResult cut_kway(const CutInstance &inst, double beta, double gamma, RandomTape &tape,
                                        const KwayOptions &opt = {}) {
  return sample_kway(prepare_kway(inst, beta, gamma, opt), inst, tape);
}

// ---------------------------------------------------------------------------
// Naive baseline: unweighted l2 regularizer (Lambda/2) ||y||^2 on the
// [0,1]-anchored LP (y = 0 on S, y = 1 on T).

[[nodiscard]] inline CutFractional solve_naive_fractional(const CutInstance &inst, double Lambda,
                                                          const CutSolveOptions &opt = {}) {
  require(Lambda > 0.0, "naive baseline needs Lambda > 0");
  inst.validate();
  CutLayout lay(inst);
  auto [D, o] = lay.difference_operator(inst.graph);
  SplitProgram prog;
  prog.D = std::move(D);
  prog.offset = std::move(o);
  const auto m = static_cast<Eigen::Index>(inst.graph.num_edges());
  prog.abs_weight.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) prog.abs_weight(e) = inst.graph.weight(static_cast<std::size_t>(e));
  prog.quad_weight = Vec::Zero(m);
  prog.diag_quad = Vec::Constant(static_cast<Eigen::Index>(lay.dim()), Lambda);
  prog.linear = Vec::Zero(static_cast<Eigen::Index>(lay.dim()));
  prog.project = [](const Vec &p) { return Vec(p.cwiseMax(0.0).cwiseMin(1.0)); };
  SplitOptions so;
  so.tol = opt.tol;
  so.max_iter = opt.max_iter;
  so.rho = opt.rho;
  so.observer = opt.observer;
  auto res = solve_split(prog, Vec::Constant(static_cast<Eigen::Index>(lay.dim()), 0.5), so);
  if (!res.converged)
    throw ConvergenceError("naive baseline solver hit its iteration cap",
                           std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  CutFractional out;
  out.y = lay.full_x(res.x);
  out.epsilon = Lambda;
  out.lo = 0.0;
  out.hi = 1.0;
  out.objective_f = fractional_cut_value(inst.graph, out.y);
  out.iterations = res.iterations;
  out.residual = res.residual;
  out.converged = true;
  return out;
}

[[nodiscard]] inline CutResult cut_naive_baseline(const CutInstance &inst, double Lambda, RandomTape &tape,
                                                  const CutSolveOptions &opt = {}) {
  return threshold_round(solve_naive_fractional(inst, Lambda, opt), inst, tape);
}

} // namespace lipgraph
