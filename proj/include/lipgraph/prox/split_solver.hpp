#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lipgraph/error.hpp"
#include "lipgraph/prox/constraint_set.hpp"
#include "lipgraph/prox/solver.hpp"

namespace lipgraph {

using SparseMat = Eigen::SparseMatrix<double>;

/// min_{x in K}  sum_e [ a_e |t_e| + (b_e / 2) t_e^2 ]  +  (1/2) sum_i q_i x_i^2  +  <c, x>
/// with t = D x + o.
///
/// Every weighted l1 plus quadratic program in the cut module has this shape.
/// K is given only through its Euclidean projection.
struct SplitProgram {
  SparseMat D;
  Vec offset;
  Vec abs_weight;
  Vec quad_weight;
  Vec diag_quad;
  Vec linear;
  std::function<Vec(const Vec &)> project;

  [[nodiscard]] Eigen::Index dim() const { return D.cols(); }
  [[nodiscard]] Eigen::Index terms() const { return D.rows(); }

  void validate() const {
    require(offset.size() == terms() && abs_weight.size() == terms() && quad_weight.size() == terms(),
            "split program term vectors have inconsistent lengths");
    require(diag_quad.size() == dim() && linear.size() == dim(), "split program variable vectors have inconsistent lengths");
    require((abs_weight.array() >= 0.0).all() && (quad_weight.array() >= 0.0).all() && (diag_quad.array() >= 0.0).all(),
            "split program weights must be non-negative");
    require(static_cast<bool>(project), "split program needs a projection");
  }

  [[nodiscard]] double objective(const Vec &x) const {
    const Vec t = D * x + offset;
    double v = 0.0;
    for (Eigen::Index e = 0; e < t.size(); ++e)
      v += abs_weight(e) * std::abs(t(e)) + 0.5 * quad_weight(e) * t(e) * t(e);
    v += 0.5 * x.cwiseProduct(diag_quad).dot(x) + linear.dot(x);
    return v;
  }
};

/// Full iteration state. The pair (terms - u, copy - v) is the
/// Douglas-Rachford variable; two runs never move apart in it.
struct SplitState {
  Vec x;
  Vec terms; // d
  Vec copy;  // z
  Vec u;
  Vec v;
};

struct SplitOptions {
  double tol = 1e-10;
  std::size_t max_iter = 200000;
  double rho = 0.0; // 0 picks the mean of abs_weight + quad_weight
  std::function<void(std::size_t, const SplitState &)> observer;
};

/// ADMM with a fixed penalty. Splits x into edge terms d = D x + o and a copy
/// z = x that carries the constraint set; the x-update is one cached Cholesky
/// solve. Stops when primal and dual residuals are both <= tol and returns z,
/// which is feasible by construction.
[[nodiscard]] inline SolveResult solve_split(const SplitProgram &prog, const Vec &x0, const SplitOptions &opt = {}) {
  prog.validate();
  require(x0.size() == prog.dim(), "start point dimension mismatch");
  detail::check_finite(x0, "start point");
  const auto nx = prog.dim();
  const auto ne = prog.terms();

  double rho = opt.rho;
  if (rho <= 0.0) {
    rho = ne > 0 ? (prog.abs_weight + prog.quad_weight).mean() : 1.0;
    if (!(rho > 0.0)) rho = 1.0;
  }

  SolveResult res;
  if (nx == 0) {
    res.x = Vec(0);
    res.objective = prog.objective(res.x);
    res.converged = true;
    return res;
  }

  SparseMat M = rho * (SparseMat(prog.D.transpose()) * prog.D);
  for (Eigen::Index i = 0; i < nx; ++i) M.coeffRef(i, i) += rho + prog.diag_quad(i);
  M.makeCompressed();
  Eigen::SimplicialLDLT<SparseMat> chol(M);
  if (chol.info() != Eigen::Success) throw NumericError("ADMM system factorization failed");

  SplitState s;
  s.copy = prog.project(x0);
  s.x = s.copy;
  s.terms = prog.D * s.x + prog.offset;
  s.u = Vec::Zero(ne);
  s.v = Vec::Zero(nx);
  const SparseMat Dt = prog.D.transpose();

  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    const Vec rhs = rho * (Dt * (s.terms - s.u - prog.offset)) + rho * (s.copy - s.v) - prog.linear;
    s.x = chol.solve(rhs);
    const Vec t = prog.D * s.x + prog.offset;
    const Vec pre = t + s.u;
    Vec d(ne);
    for (Eigen::Index e = 0; e < ne; ++e) {
      const double shrink = std::max(std::abs(pre(e)) - prog.abs_weight(e) / rho, 0.0);
      d(e) = std::copysign(shrink, pre(e)) / (1.0 + prog.quad_weight(e) / rho);
    }
    Vec z = prog.project(s.x + s.v);
    const Vec dd = d - s.terms;
    const Vec dz = z - s.copy;
    s.terms = std::move(d);
    s.copy = std::move(z);
    const Vec r1 = t - s.terms;
    const Vec r2 = s.x - s.copy;
    s.u += r1;
    s.v += r2;
    if (!s.x.allFinite() || !s.u.allFinite()) throw NumericError("ADMM produced a non-finite iterate");

    const double primal = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    const double dual = rho * (Dt * dd + dz).norm();
    res.iterations = it + 1;
    res.residual = std::max(primal, dual);
    if (opt.observer) opt.observer(it, s);
    if (primal <= opt.tol && dual <= opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.x = s.copy;
  res.objective = prog.objective(res.x);
  return res;
}

} // namespace lipgraph
