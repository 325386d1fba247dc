#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/prox/constraint_set.hpp"
#include "lipgraph/prox/solver.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// maximize w^T y subject to A y <= b, y in {0,1}^m, with A in [0,1]^{p x m},
/// b >= 1 and w > 0. c >= 1 sets the feasibility confidence 1 - 1/c.
struct PipInstance {
  Eigen::MatrixXd A;
  Vec b;
  Vec w;
  double c = 2.0;

  PipInstance() = default;
  PipInstance(Eigen::MatrixXd A_, Vec b_, Vec w_, double c_) : A(std::move(A_)), b(std::move(b_)), w(std::move(w_)), c(c_) {
    validate();
  }

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
  [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(A.cols()); }
  [[nodiscard]] double budget() const { return b.minCoeff(); }

  void validate() const {
    require(A.rows() >= 1 && A.cols() >= 1, "PIP needs at least one row and one column");
    require(b.size() == A.rows(), "PIP budget length differs from row count");
    require(w.size() == A.cols(), "PIP weight length differs from column count");
    require(A.allFinite() && (A.array() >= 0.0).all() && (A.array() <= 1.0).all(), "PIP matrix entries must lie in [0, 1]");
    require(b.allFinite() && b.minCoeff() >= 1.0, "PIP budget B = min(b) must satisfy B ≥ 1");
    require(w.allFinite() && w.minCoeff() > 0.0, "PIP weights must be positive");
    require(std::isfinite(c) && c >= 1.0, "PIP confidence parameter c must satisfy c ≥ 1");
  }

  /// The same instance with w_j increased by delta.
  [[nodiscard]] PipInstance perturbed(std::size_t j, double delta) const {
    require(j < cols(), "PIP perturbation index out of range");
    Vec w2 = w;
    w2(static_cast<Eigen::Index>(j)) += delta;
    return PipInstance(A, b, std::move(w2), c);
  }
};

struct PipSolution {
  std::vector<int> y;
  double value = 0.0;
  bool feasible = false;
};

[[nodiscard]] inline PipSolution make_pip_solution(const PipInstance &inst, std::vector<int> y) {
  PipSolution s;
  Vec yy(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yy(static_cast<Eigen::Index>(i)) = y[i];
  s.value = inst.w.dot(yy);
  s.feasible = ((inst.A * yy - inst.b).array() <= 1e-12).all();
  s.y = std::move(y);
  return s;
}

/// gamma = e (c p)^{1/B}.
[[nodiscard]] inline double pip_gamma(const PipInstance &inst) {
  return std::exp(1.0) * std::pow(inst.c * static_cast<double>(inst.rows()), 1.0 / inst.budget());
}

/// minimize -w^T x + (1/2) sum w_i x_i^2 over {x in [0,1]^m : A x <= b}.
[[nodiscard]] inline RegularizedProgram pip_program(const PipInstance &inst, double tol = 1e-10) {
  inst.validate();
  const Vec w = inst.w;
  RegularizedProgram prog;
  prog.dim = inst.cols();
  prog.f_linear = -w;
  prog.f_value = [w](const Vec &x) { return -w.dot(x); };
  prog.g_value = [w](const Vec &x) { return 0.5 * x.cwiseProduct(w).dot(x); };
  prog.g_gradient = [w](const Vec &x) { return Vec(w.cwiseProduct(x)); };
  prog.sigma = w.minCoeff();
  prog.lsmooth = w.maxCoeff();
  ConstraintSet cs(inst.cols());
  cs.box(0.0, 1.0);
  for (Eigen::Index r = 0; r < inst.A.rows(); ++r) {
    // Rows that the box already satisfies are dropped.
    if (inst.A.row(r).sum() <= inst.b(r)) continue;
    cs.at_most(inst.A.row(r).transpose(), inst.b(r));
  }
  prog.project = projector_callback(std::move(cs), tol / (10.0 * std::max(1.0, prog.lsmooth)));
  return prog;
}

[[nodiscard]] inline std::vector<double> solve_pip_fractional(const PipInstance &inst, double tol = 1e-10,
                                                              std::size_t max_iter = 200000,
                                                              const IterateObserver &observer = {}) {
  auto prog = pip_program(inst, tol);
  auto res = solve(prog, Vec::Zero(static_cast<Eigen::Index>(prog.dim)), tol, max_iter, observer);
  if (!res.converged)
    throw ConvergenceError("PIP solver hit its iteration cap",
                           std::vector<double>(res.x.data(), res.x.data() + res.x.size()));
  return {res.x.data(), res.x.data() + res.x.size()};
}

/// y_i = 1 iff tau_i < x_i / gamma, one draw per coordinate in index order.
[[nodiscard]] inline PipSolution round_pip(const std::vector<double> &x, const PipInstance &inst, RandomTape &tape) {
  require(x.size() == inst.cols(), "fractional PIP length differs from column count");
  const double gamma = pip_gamma(inst);
  std::vector<int> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] >= -1e-9 && x[i] <= 1.0 + 1e-9, "fractional PIP entries must lie in [0, 1]");
    y[i] = tape.next() < x[i] / gamma ? 1 : 0;
  }
  return make_pip_solution(inst, std::move(y));
}

/// Exhaustive optimum over all 2^m binary vectors.
[[nodiscard]] inline PipSolution pip_exact_small(const PipInstance &inst) {
  inst.validate();
  const auto m = inst.cols();
  require(m <= 22, "pip_exact_small is limited to 22 columns");
  std::vector<int> best(m, 0);
  double best_v = 0.0;
  Vec load(inst.A.rows());
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << m); ++mask) {
    load.setZero();
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (mask >> i & 1U) {
        load += inst.A.col(static_cast<Eigen::Index>(i));
        v += inst.w(static_cast<Eigen::Index>(i));
      }
    if (v > best_v && ((load - inst.b).array() <= 1e-12).all()) {
      best_v = v;
      for (std::size_t i = 0; i < m; ++i) best[i] = static_cast<int>(mask >> i & 1U);
    }
  }
  return make_pip_solution(inst, best);
}

/// Node-edge incidence PIP of a bipartite b-matching instance.
[[nodiscard]] inline PipInstance pip_from_bmatching(const WeightedGraph &g, double c = 2.0) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  const auto m = static_cast<Eigen::Index>(g.num_edges());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, m);
  Vec b(n), w(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    A(static_cast<Eigen::Index>(g.edge(static_cast<std::size_t>(e)).u), e) = 1.0;
    A(static_cast<Eigen::Index>(g.edge(static_cast<std::size_t>(e)).v), e) = 1.0;
    w(e) = g.weight(static_cast<std::size_t>(e));
  }
  for (Eigen::Index v = 0; v < n; ++v) b(v) = g.capacity(static_cast<std::size_t>(v));
  return PipInstance(std::move(A), std::move(b), std::move(w), c);
}

/// Random instance with entries in {0, 1/4, ..., 1}, integral budgets in [B, B+1].
[[nodiscard]] inline PipInstance random_pip_instance(std::size_t p, std::size_t m, double B, double c, RandomTape &tape) {
  Eigen::MatrixXd A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m));
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index k = 0; k < A.cols(); ++k) A(r, k) = 0.25 * std::floor(tape.next() * 5.0);
  Vec b(static_cast<Eigen::Index>(p));
  for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = B + std::floor(tape.next() * 2.0);
  b(0) = B;
  Vec w(static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = quarter_weight(tape);
  return PipInstance(std::move(A), std::move(b), std::move(w), c);
}

} // namespace lipgraph
