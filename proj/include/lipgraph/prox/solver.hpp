#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lipgraph/error.hpp"
#include "lipgraph/prox/constraint_set.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// min_{x in K} f(x) + g(x) with g sigma-strongly convex and L-smooth.
///
/// When f is linear, set `f_linear` to its coefficient vector; solve() then
/// runs proximal gradient, whose prox step is a projection of a shifted point.
/// Otherwise f is used through its subgradient.
struct RegularizedProgram {
  std::size_t dim = 0;
  std::function<double(const Vec &)> f_value;
  std::function<Vec(const Vec &)> f_subgradient;
  std::function<double(const Vec &)> g_value;
  std::function<Vec(const Vec &)> g_gradient;
  double sigma = 0.0;
  double lsmooth = 0.0;
  std::function<Vec(const Vec &)> project;
  std::optional<Vec> f_linear;

  [[nodiscard]] double objective(const Vec &x) const { return f_value(x) + g_value(x); }

  void validate() const {
    require(dim > 0, "program dimension must be positive");
    require(f_value && g_value && g_gradient && project, "program callbacks missing");
    require(f_linear || f_subgradient, "nonlinear f needs a subgradient callback");
    require(sigma > 0.0, "strong-convexity modulus sigma must be positive");
    require(sigma <= lsmooth * (1.0 + 1e-12), "sigma must not exceed the smoothness modulus");
    if (f_linear) require(static_cast<std::size_t>(f_linear->size()) == dim, "linear term dimension mismatch");
  }
};

struct SolveResult {
  Vec x;
  double objective = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0; // norm of the last step
  bool converged = false;
};

/// Called after each iteration with (iteration, iterate).
using IterateObserver = std::function<void(std::size_t, const Vec &)>;

namespace detail {

inline void check_finite(const Vec &v, const char *what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite value from ") + what);
}
inline void check_finite(double v, const char *what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite value from ") + what);
}

} // namespace detail

/// Projection onto a ConstraintSet as a program callback.
[[nodiscard]] inline std::function<Vec(const Vec &)> projector_callback(ConstraintSet cs, double tol) {
  auto proj = std::make_shared<DykstraProjector>(std::move(cs));
  return [proj, tol](const Vec &x) { return proj->project(x, tol); };
}

/// Stops once ||x+ - x|| <= min(tol, tol max(1, sigma) / L) and L ||x+ - x|| <= tol
/// hold for 5 consecutive iterations. Hitting the cap returns converged = false.
[[nodiscard]] inline SolveResult solve(const RegularizedProgram &prog, const Vec &x0, double tol = 1e-10,
                                       std::size_t max_iter = 100000, const IterateObserver &observer = {}) {
  prog.validate();
  require(static_cast<std::size_t>(x0.size()) == prog.dim, "start point dimension mismatch");
  detail::check_finite(x0, "start point");
  require(tol > 0.0, "tolerance must be positive");

  const double L = prog.lsmooth;
  const double sigma = prog.sigma;
  const double move_tol = std::min(tol, tol * std::max(1.0, sigma) / L);
  const double map_tol = tol / L;
  const double stop = std::min(move_tol, map_tol);

  SolveResult res;
  Vec x = prog.project(x0);
  detail::check_finite(x, "projection");
  int calm = 0;

  if (prog.f_linear) {
    const Vec &c = *prog.f_linear;
    for (std::size_t t = 0; t < max_iter; ++t) {
      Vec grad = prog.g_gradient(x);
      detail::check_finite(grad, "regularizer gradient");
      Vec next = prog.project(x - (grad + c) / L);
      detail::check_finite(next, "projection");
      res.residual = (next - x).norm();
      x = std::move(next);
      res.iterations = t + 1;
      if (observer) observer(t, x);
      calm = res.residual <= stop ? calm + 1 : 0;
      if (calm >= 5) {
        res.converged = true;
        break;
      }
    }
  } else {
    // Projected subgradient, step 2 / (sigma (t+1)), iterates averaged with weight t.
    Vec avg = x;
    double wsum = 0.0;
    for (std::size_t t = 0; t < max_iter; ++t) {
      Vec g = prog.f_subgradient(x) + prog.g_gradient(x);
      detail::check_finite(g, "subgradient");
      const double step = 2.0 / (sigma * static_cast<double>(t + 2));
      x = prog.project(x - step * g);
      detail::check_finite(x, "projection");
      const double wt = static_cast<double>(t + 1);
      wsum += wt;
      Vec next_avg = avg + (wt / wsum) * (x - avg);
      res.residual = (next_avg - avg).norm();
      avg = std::move(next_avg);
      res.iterations = t + 1;
      if (observer) observer(t, avg);
      calm = res.residual <= stop ? calm + 1 : 0;
      if (calm >= 5) {
        res.converged = true;
        break;
      }
    }
    x = prog.project(avg);
  }
  res.objective = prog.objective(x);
  detail::check_finite(res.objective, "objective");
  res.x = std::move(x);
  return res;
}

/// Largest observed ||G(x) - G(y)|| / ||x - y|| for the gradient step
/// G(z) = z - eta grad g(z), over random pairs in [-1, 1]^dim.
[[nodiscard]] inline double gradient_step_expansiveness_check(const std::function<Vec(const Vec &)> &g_gradient,
                                                              std::size_t dim, double sigma, double lsmooth,
                                                              double eta, std::size_t trials, RandomTape &tape) {
  require(eta > 0.0 && eta <= 1.0 / lsmooth * (1.0 + 1e-12), "step size must satisfy eta <= 1/L");
  require(sigma > 0.0 && sigma <= lsmooth, "need 0 < sigma <= L");
  const auto d = static_cast<Eigen::Index>(dim);
  double worst = 0.0;
  for (std::size_t k = 0; k < trials; ++k) {
    Vec x(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = 2.0 * tape.next() - 1.0;
    for (Eigen::Index i = 0; i < d; ++i) y(i) = 2.0 * tape.next() - 1.0;
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    const Vec gx = x - eta * g_gradient(x);
    const Vec gy = y - eta * g_gradient(y);
    worst = std::max(worst, (gx - gy).norm() / dist);
  }
  return worst;
}

} // namespace lipgraph
