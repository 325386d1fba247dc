#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "lipgraph/error.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// Uniform on [l, r] by inverse CDF of one shared draw. Two runs with the same
/// tape and the same interval return the same value.
[[nodiscard]] inline double stable_sample_uniform(double l, double r, RandomTape &tape) {
  require(l < r, "stable_sample_uniform needs l < r");
  return l + (r - l) * tape.next();
}

/// Probabilities proportional to exp(-eta x_i); +inf scores get probability 0.
[[nodiscard]] inline std::vector<double> expmech_probabilities(const std::vector<double> &x, double eta) {
  require(eta > 0.0, "exponential mechanism needs eta > 0");
  require(!x.empty(), "exponential mechanism needs at least one score");
  double best = std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (std::isnan(v)) throw NumericError("NaN score passed to exponential mechanism");
    best = std::min(best, v);
  }
  require(std::isfinite(best), "exponential mechanism needs at least one finite score");
  std::vector<double> p(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::isfinite(x[i]) ? std::exp(-eta * (x[i] - best)) : 0.0;
    total += p[i];
  }
  for (auto &v : p) v /= total;
  return p;
}

/// How one exponential-mechanism draw is realized from the tape.
///
/// Race: one uniform per index, winner = argmin -ln(1 - U_i) / p_i. Two runs
/// sharing the draws disagree with probability at most 2 TV / (1 + TV) <= ||p - p~||_1.
/// InverseCdf: one uniform against the cumulative sums in index order; the
/// disagreement probability can exceed ||p - p~||_1 once many boundaries shift.
enum class ExpMechCoupling { Race, InverseCdf };

[[nodiscard]] inline std::size_t sample_index(const std::vector<double> &p, RandomTape &tape,
                                              ExpMechCoupling coupling = ExpMechCoupling::Race) {
  require(!p.empty(), "cannot sample from an empty distribution");
  if (coupling == ExpMechCoupling::InverseCdf) {
    const double u = tape.next();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      last = i;
      acc += p[i];
      if (u < acc) return i;
    }
    return last;
  }
  std::size_t arg = p.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double u = tape.next();
    if (p[i] <= 0.0) continue;
    const double key = -std::log1p(-u) / p[i];
    if (arg == p.size() || key < best) {
      best = key;
      arg = i;
    }
  }
  require(arg < p.size(), "distribution has no positive mass");
  return arg;
}

[[nodiscard]] inline std::size_t sample_expmech(const std::vector<double> &x, double eta, RandomTape &tape,
                                                ExpMechCoupling coupling = ExpMechCoupling::Race) {
  return sample_index(expmech_probabilities(x, eta), tape, coupling);
}

/// Draws for x and x~ from the same stretch of tape. The tape advances once.
[[nodiscard]] inline std::pair<std::size_t, std::size_t>
coupled_expmech(const std::vector<double> &x, const std::vector<double> &x_tilde, double eta, RandomTape &tape,
                ExpMechCoupling coupling = ExpMechCoupling::Race) {
  require(x.size() == x_tilde.size(), "coupled exponential mechanism needs equal-length scores");
  RandomTape twin = tape;
  const auto i = sample_expmech(x, eta, tape, coupling);
  const auto j = sample_expmech(x_tilde, eta, twin, coupling);
  return {i, j};
}

[[nodiscard]] inline double l1_distance(const std::vector<double> &a, const std::vector<double> &b) {
  require(a.size() == b.size(), "l1_distance needs equal lengths");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

} // namespace lipgraph
