#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lipgraph/error.hpp"

namespace lipgraph {

using Vec = Eigen::VectorXd;

/// Linear constraint row: <a, x> = c (hyperplane) or <a, x> <= c (halfspace).
struct LinearRow {
  Vec a;
  double c = 0.0;
};

/// Intersection of a box, hyperplanes and halfspaces in R^dim.
struct ConstraintSet {
  Vec lo; // may hold -inf
  Vec hi; // may hold +inf
  std::vector<LinearRow> hyperplanes;
  std::vector<LinearRow> halfspaces;

  ConstraintSet() = default;
  explicit ConstraintSet(std::size_t dim)
      : lo(Vec::Constant(static_cast<Eigen::Index>(dim), -std::numeric_limits<double>::infinity())),
        hi(Vec::Constant(static_cast<Eigen::Index>(dim), std::numeric_limits<double>::infinity())) {}

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(lo.size()); }

  ConstraintSet &box(double l, double h) {
    lo.setConstant(l);
    hi.setConstant(h);
    return *this;
  }
  ConstraintSet &equal(Vec a, double c) {
    hyperplanes.push_back({std::move(a), c});
    return *this;
  }
  ConstraintSet &at_most(Vec a, double c) {
    halfspaces.push_back({std::move(a), c});
    return *this;
  }

  [[nodiscard]] std::size_t num_constraints() const noexcept {
    return 1 + hyperplanes.size() + halfspaces.size();
  }

  /// Largest violation over all rows (0 when feasible).
  [[nodiscard]] double violation(const Vec &x) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) v = std::max({v, lo(i) - x(i), x(i) - hi(i)});
    for (const auto &h : hyperplanes) v = std::max(v, std::abs(h.a.dot(x) - h.c));
    for (const auto &h : halfspaces) v = std::max(v, h.a.dot(x) - h.c);
    return v;
  }
};

/// Cached Dykstra projector onto a ConstraintSet.
///
/// Blocks, cycled in order: the box, the joint affine subspace of all
/// hyperplanes (one pseudo-inverse solve), then each halfspace.
class DykstraProjector {
public:
  explicit DykstraProjector(ConstraintSet cs) : cs_(std::move(cs)) {
    require(cs_.lo.size() == cs_.hi.size(), "box bounds have different lengths");
    for (Eigen::Index i = 0; i < cs_.lo.size(); ++i)
      require(cs_.lo(i) <= cs_.hi(i), "box has lo > hi at coordinate " + std::to_string(i));
    const auto d = static_cast<Eigen::Index>(cs_.dim());
    for (const auto &h : cs_.hyperplanes) require(h.a.size() == d, "hyperplane dimension mismatch");
    for (const auto &h : cs_.halfspaces) {
      require(h.a.size() == d, "halfspace dimension mismatch");
      norms2_.push_back(h.a.squaredNorm());
    }
    if (!cs_.hyperplanes.empty()) {
      const auto k = static_cast<Eigen::Index>(cs_.hyperplanes.size());
      A_.resize(k, d);
      c_.resize(k);
      for (Eigen::Index r = 0; r < k; ++r) {
        A_.row(r) = cs_.hyperplanes[static_cast<std::size_t>(r)].a.transpose();
        c_(r) = cs_.hyperplanes[static_cast<std::size_t>(r)].c;
      }
      pinv_ = A_.completeOrthogonalDecomposition().pseudoInverse();
    }
  }

  [[nodiscard]] const ConstraintSet &constraints() const noexcept { return cs_; }

  /// Euclidean projection of x0. Throws ConvergenceError if the cap is hit
  /// before the iterate is feasible within tol.
  [[nodiscard]] Vec project(const Vec &x0, double tol = 1e-11, std::size_t max_iter = 0) const {
    const auto d = static_cast<Eigen::Index>(cs_.dim());
    require(x0.size() == d, "point dimension differs from constraint set");
    if (!x0.allFinite()) throw NumericError("non-finite point passed to projection");
    if (max_iter == 0) max_iter = std::max<std::size_t>(1000, 10 * cs_.dim() * cs_.num_constraints());

    auto box = [&](Vec &x) { x = x.cwiseMax(cs_.lo).cwiseMin(cs_.hi); };
    // A bare box needs no iteration.
    if (cs_.hyperplanes.empty() && cs_.halfspaces.empty()) {
      Vec x = x0;
      box(x);
      return x;
    }

    const std::size_t nblocks = 2 + cs_.halfspaces.size();
    std::vector<Vec> incr(nblocks, Vec::Zero(d));
    Vec x = x0;
    for (std::size_t it = 0; it < max_iter; ++it) {
      const Vec start = x;
      // Movement of x alone can stall while the increments still shift.
      double incr_change = 0.0;
      {
        Vec y = x + incr[0];
        Vec p = y;
        box(p);
        incr_change += (y - p - incr[0]).squaredNorm();
        incr[0] = y - p;
        x = std::move(p);
      }
      // affine subspace (increments stay zero for affine sets; kept for symmetry)
      if (A_.rows() > 0) {
        Vec y = x + incr[1];
        Vec p = y - pinv_ * (A_ * y - c_);
        incr[1] = y - p;
        x = std::move(p);
      }
      for (std::size_t h = 0; h < cs_.halfspaces.size(); ++h) {
        const auto &row = cs_.halfspaces[h];
        Vec y = x + incr[2 + h];
        const double excess = row.a.dot(y) - row.c;
        Vec p = y;
        if (excess > 0.0 && norms2_[h] > 0.0) p -= (excess / norms2_[h]) * row.a;
        incr_change += (y - p - incr[2 + h]).squaredNorm();
        incr[2 + h] = y - p;
        x = std::move(p);
      }
      if (!x.allFinite()) throw NumericError("projection produced a non-finite iterate");
      if ((x - start).norm() <= tol && std::sqrt(incr_change) <= tol && cs_.violation(x) <= tol) return x;
    }
    if (cs_.violation(x) <= tol) return x;
    throw ConvergenceError("Dykstra projection hit its iteration cap before reaching feasibility",
                           std::vector<double>(x.data(), x.data() + x.size()));
  }

  /// One projection from the origin; throws if the region looks empty.
  void check_nonempty(double tol = 1e-9) const {
    try {
      (void)project(Vec::Zero(static_cast<Eigen::Index>(cs_.dim())), tol);
    } catch (const ConvergenceError &) {
      throw ValidationError("constraint set appears to be empty");
    }
  }

private:
  ConstraintSet cs_;
  std::vector<double> norms2_;
  Eigen::MatrixXd A_;
  Vec c_;
  Eigen::MatrixXd pinv_;
};

[[nodiscard]] inline Vec dykstra_project(const ConstraintSet &cs, const Vec &x0, double tol = 1e-11,
                                         std::size_t max_iter = 0) {
  return DykstraProjector(cs).project(x0, tol, max_iter);
}

} // namespace lipgraph
