#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/harness/algorithms.hpp"
#include "lipgraph/harness/emd.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

enum class TapePolicy { Shared, Independent };

[[nodiscard]] inline const char *policy_name(TapePolicy p) { return p == TapePolicy::Shared ? "shared" : "independent"; }

[[nodiscard]] inline TapePolicy parse_policy(const std::string &s) {
  if (s == "shared") return TapePolicy::Shared;
  if (s == "independent") return TapePolicy::Independent;
  throw ValidationError("unknown tape policy '" + s + "' (expected shared or independent)");
}

/// One coupled trial: outputs on the base and the perturbed weights.
struct TrialRecord {
  std::size_t trial = 0;
  double distance = 0.0;
  double objective = 0.0;
  double objective_perturbed = 0.0;
  bool feasible = true;
  bool feasible_perturbed = true;
};

struct StabilityReport {
  std::string algorithm;
  std::string instance_digest;
  double delta = 0.0; // l1 size of the weight change
  std::size_t trials = 0;
  double mean_output_distance = 0.0;
  double sem_output_distance = 0.0;
  double lipschitz_quotient = 0.0; // mean_output_distance / delta, 0 when delta = 0
  double feasibility_rate = 0.0;
  double feasibility_rate_perturbed = 0.0;
  double objective_mean = 0.0;
  double objective_sem = 0.0;
  double theory_bound = 0.0;
  TapePolicy policy = TapePolicy::Shared;
  /// Exact EMD between the two empirical output distributions; only under the
  /// independent policy for set outputs over at most 12 elements.
  std::optional<double> emd_estimate;
};

struct StabilityOptions {
  AlgoParams params;
  TapePolicy policy = TapePolicy::Shared;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  DistanceNorm norm = DistanceNorm::L1;
  /// Largest admissible |delta| / w_e for estimate_lipschitz.
  double max_relative_delta = 1e-3;
};

namespace detail {

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots; the lowest-index exception is rethrown.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)> &body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

inline RandomTape trial_tape(std::uint64_t seed, std::size_t trial, std::size_t side, TapePolicy policy) {
  if (policy == TapePolicy::Shared) return RandomTape::derive(seed, trial);
  return RandomTape::derive(seed, 2 * static_cast<std::uint64_t>(trial) + side + (std::uint64_t{1} << 62));
}

struct Moments {
  double mean = 0.0;
  double sem = 0.0;
};

inline Moments moments(const std::vector<double> &xs) {
  Moments m;
  if (xs.empty()) return m;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sem = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

inline bool is_set_output(AlgoKind k) {
  return k == AlgoKind::CutExact || k == AlgoKind::CutExpmech || k == AlgoKind::CutKway || k == AlgoKind::CutNaive ||
         k == AlgoKind::MatchAuction || k == AlgoKind::PipRound;
}

inline std::uint64_t outcome_mask(const Outcome &o) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < o.point.size(); ++i)
    if (o.point[i] > 0.5) m |= std::uint64_t{1} << i;
  return m;
}

inline std::size_t min_trials(AlgoKind k) { return algo_info(k).randomized ? 100 : 1; }

/// Outcomes of `trials` runs of a prepared algorithm; run t on side `side`
/// uses the tape for (seed, t, side).
inline std::vector<Outcome> sample_runs(const PreparedAlgorithm &alg, const StabilityOptions &opt, std::size_t side) {
  std::vector<Outcome> out(opt.trials);
  parallel_for(opt.trials, opt.jobs, [&](std::size_t t) {
    auto tape = trial_tape(opt.seed, t, side, opt.policy);
    out[t] = alg.sample(tape);
  });
  return out;
}

inline StabilityReport summarize(AlgoKind kind, const Problem &base, double delta, double theory_bound,
                                 const std::vector<Outcome> &a, const std::vector<Outcome> &b,
                                 const StabilityOptions &opt, std::vector<TrialRecord> *rows) {
  StabilityReport r;
  r.algorithm = algo_name(kind);
  r.instance_digest = problem_digest(base);
  r.delta = delta;
  r.trials = a.size();
  r.policy = opt.policy;
  r.theory_bound = theory_bound;
  std::vector<double> dist(a.size()), obj(a.size());
  std::size_t feas = 0, feas2 = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    dist[t] = outcome_distance(a[t], b[t], opt.norm);
    obj[t] = a[t].objective;
    feas += a[t].feasible;
    feas2 += b[t].feasible;
    if (rows) rows->push_back({t, dist[t], a[t].objective, b[t].objective, a[t].feasible, b[t].feasible});
  }
  const auto dm = moments(dist), om = moments(obj);
  r.mean_output_distance = dm.mean;
  r.sem_output_distance = dm.sem;
  r.lipschitz_quotient = delta > 0.0 ? dm.mean / delta : 0.0;
  r.feasibility_rate = static_cast<double>(feas) / static_cast<double>(a.size());
  r.feasibility_rate_perturbed = static_cast<double>(feas2) / static_cast<double>(a.size());
  r.objective_mean = om.mean;
  r.objective_sem = om.sem;
  if (opt.policy == TapePolicy::Independent && is_set_output(kind) && !a.empty() && a.front().point.size() <= 12) {
    std::vector<std::uint64_t> ma, mb;
    for (auto &o : a) ma.push_back(outcome_mask(o));
    for (auto &o : b) mb.push_back(outcome_mask(o));
    auto da = empirical_distribution(ma), db = empirical_distribution(mb);
    if (da.size() <= 64 && db.size() <= 64) r.emd_estimate = emd_exact(da, db);
  }
  return r;
}

inline double l1_diff(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

} // namespace detail

/// Coupled runs of `kind` on two weight vectors of the same structure. Under
/// the shared policy trial t feeds the same tape to both runs, so the mean
/// distance upper-bounds the EMD between output distributions.
[[nodiscard]] inline StabilityReport compare_problems(AlgoKind kind, const Problem &base, const Problem &other,
                                                      const StabilityOptions &opt,
                                                      std::vector<TrialRecord> *rows = nullptr) {
  require(opt.trials >= 1, "trials must be at least 1");
  const auto wa = problem_weights(base), wb = problem_weights(other);
  require(wa.size() == wb.size(), "compared instances have different sizes");
  auto pa = prepare_algorithm(kind, opt.params, base);
  auto pb = prepare_algorithm(kind, opt.params, other);
  auto a = detail::sample_runs(*pa, opt, 0);
  auto b = detail::sample_runs(*pb, opt, 1);
  return detail::summarize(kind, base, detail::l1_diff(wa, wb), pa->theory_bound(), a, b, opt, rows);
}

/// Mean output distance under a single-weight perturbation, divided by |delta|.
[[nodiscard]] inline StabilityReport estimate_lipschitz(AlgoKind kind, const Problem &problem, const Perturbation &pert,
                                                        const StabilityOptions &opt,
                                                        std::vector<TrialRecord> *rows = nullptr) {
  const auto w = problem_weights(problem);
  require(pert.edge < w.size(), "perturbation index out of range");
  require(pert.delta != 0.0 && std::isfinite(pert.delta), "perturbation delta must be finite and non-zero");
  require(std::abs(pert.delta) <= opt.max_relative_delta * w[pert.edge] * (1.0 + 1e-12),
          "perturbation |delta| exceeds the admissible fraction of the weight (" +
              std::to_string(opt.max_relative_delta) + " * w_e)");
  require(opt.trials >= detail::min_trials(kind), "randomized algorithms need trials >= 100");
  return compare_problems(kind, problem, perturb_problem(problem, pert), opt, rows);
}

struct DeltaLadder {
  std::vector<StabilityReport> reports; // relative delta 1e-2, 1e-3, 1e-4
  bool monotone_trend = true;           // quotients move monotonically as delta shrinks
};

/// Quotients at three decreasing relative perturbation sizes. A non-monotone
/// sequence is flagged rather than treated as an error.
[[nodiscard]] inline DeltaLadder delta_ladder(AlgoKind kind, const Problem &problem, std::size_t edge,
                                              StabilityOptions opt) {
  const auto w = problem_weights(problem);
  require(edge < w.size(), "perturbation index out of range");
  opt.max_relative_delta = std::max(opt.max_relative_delta, 1e-2);
  DeltaLadder out;
  for (double rel : {1e-2, 1e-3, 1e-4}) out.reports.push_back(estimate_lipschitz(kind, problem, {edge, rel * w[edge]}, opt));
  const double q0 = out.reports[0].lipschitz_quotient, q1 = out.reports[1].lipschitz_quotient,
               q2 = out.reports[2].lipschitz_quotient;
  out.monotone_trend = (q0 <= q1 && q1 <= q2) || (q0 >= q1 && q1 >= q2);
  return out;
}

/// Waypoints from w to w_tilde along which every coordinate moves monotonically.
class PerturbationPath {
public:
  /// Straight line with N equal steps.
  [[nodiscard]] static PerturbationPath linear(const std::vector<double> &w, const std::vector<double> &w_tilde,
                                               std::size_t steps) {
    require(steps >= 1, "a path needs at least one step");
    require(w.size() == w_tilde.size(), "path endpoints have different lengths");
    std::vector<std::vector<double>> pts(steps + 1, std::vector<double>(w.size()));
    for (std::size_t k = 0; k <= steps; ++k) {
      const double r = static_cast<double>(k) / static_cast<double>(steps);
      for (std::size_t i = 0; i < w.size(); ++i) pts[k][i] = k == steps ? w_tilde[i] : w[i] + r * (w_tilde[i] - w[i]);
    }
    return PerturbationPath(std::move(pts));
  }

  explicit PerturbationPath(std::vector<std::vector<double>> points) : points_(std::move(points)) {
    require(points_.size() >= 2, "a path needs at least one step");
    const auto d = points_.front().size();
    for (const auto &p : points_) require(p.size() == d, "path waypoints have different lengths");
    for (std::size_t i = 0; i < d; ++i) {
      const double total = points_.back()[i] - points_.front()[i];
      for (std::size_t k = 1; k < points_.size(); ++k) {
        const double step = points_[k][i] - points_[k - 1][i];
        if (step * total < 0.0 || (total == 0.0 && step != 0.0))
          throw ValidationError("path is not monotone in coordinate " + std::to_string(i) + " at step " +
                                std::to_string(k));
      }
    }
  }

  [[nodiscard]] std::size_t steps() const { return points_.size() - 1; }
  [[nodiscard]] const std::vector<double> &point(std::size_t k) const { return points_.at(k); }
  [[nodiscard]] const std::vector<double> &w() const { return points_.front(); }
  [[nodiscard]] const std::vector<double> &w_tilde() const { return points_.back(); }
  [[nodiscard]] double l1_length() const { return detail::l1_diff(w(), w_tilde()); }

private:
  std::vector<std::vector<double>> points_;
};

struct PathSweepResult {
  std::vector<StabilityReport> steps;
  StabilityReport end_to_end;
  double total_distance = 0.0; // sum of per-step mean distances
  double c_sup = 0.0;          // largest per-step quotient
  double path_l1 = 0.0;
  double total_over_l1 = 0.0;  // total_distance / path_l1, 0 for a zero-length path
  bool subadditive = true;     // end-to-end <= total + 3 combined SEM
};

/// Runs `kind` at every waypoint with per-trial tapes shared along the path, so
/// per-trial distances obey the triangle inequality exactly under the shared
/// policy.
[[nodiscard]] inline PathSweepResult path_sweep(AlgoKind kind, const Problem &problem, const PerturbationPath &path,
                                                const StabilityOptions &opt) {
  require(opt.trials >= detail::min_trials(kind), "randomized algorithms need trials >= 100");
  require(path.w().size() == problem_weights(problem).size(), "path length differs from the instance weight count");
  std::vector<Problem> probs;
  std::vector<std::vector<Outcome>> outs;
  std::vector<double> bounds;
  for (std::size_t k = 0; k <= path.steps(); ++k) {
    probs.push_back(problem_with_weights(problem, path.point(k)));
    auto alg = prepare_algorithm(kind, opt.params, probs.back());
    bounds.push_back(alg->theory_bound());
    // Shared: every waypoint sees tape t. Independent: fresh tapes per waypoint.
    StabilityOptions o = opt;
    if (opt.policy == TapePolicy::Independent) o.seed = RandomTape::mix(opt.seed + k);
    outs.push_back(detail::sample_runs(*alg, o, 0));
  }
  PathSweepResult res;
  double var = 0.0;
  for (std::size_t k = 0; k < path.steps(); ++k) {
    const double d = detail::l1_diff(path.point(k), path.point(k + 1));
    auto rep = detail::summarize(kind, probs[k], d, bounds[k], outs[k], outs[k + 1], opt, nullptr);
    res.total_distance += rep.mean_output_distance;
    res.c_sup = std::max(res.c_sup, rep.lipschitz_quotient);
    var += rep.sem_output_distance * rep.sem_output_distance;
    res.steps.push_back(std::move(rep));
  }
  res.path_l1 = path.l1_length();
  res.end_to_end = detail::summarize(kind, probs.front(), res.path_l1, bounds.front(), outs.front(), outs.back(), opt, nullptr);
  res.total_over_l1 = res.path_l1 > 0.0 ? res.total_distance / res.path_l1 : 0.0;
  var += res.end_to_end.sem_output_distance * res.end_to_end.sem_output_distance;
  res.subadditive = res.end_to_end.mean_output_distance <= res.total_distance + 3.0 * std::sqrt(var) + 1e-9;
  return res;
}

struct RecourseStep {
  std::size_t step = 0;
  std::size_t edge = 0;
  double delta = 0.0;
  double mean_distance = 0.0;
  double lambda2 = std::numeric_limits<double>::quiet_NaN(); // after the update; NaN for PIP
  double reference = std::numeric_limits<double>::quiet_NaN(); // n / lambda2
};

struct RecourseResult {
  std::vector<RecourseStep> steps;
  double total_recourse = 0.0;
  double total_weight_change = 0.0;
  double mean_quotient = 0.0; // total_recourse / total_weight_change
  double lambda2_min = std::numeric_limits<double>::quiet_NaN();
  double reference = std::numeric_limits<double>::quiet_NaN(); // n / lambda2_min
  double net_drift = 0.0; // mean distance between first and last outputs
};

/// Re-runs the algorithm after every update and records how far consecutive
/// outputs move. Under the shared policy trial t keeps its tape for all steps.
[[nodiscard]] inline RecourseResult recourse_sim(AlgoKind kind, const Problem &problem,
                                                 const std::vector<Perturbation> &updates,
                                                 const StabilityOptions &opt) {
  require(opt.trials >= 1, "trials must be at least 1");
  auto graph_of = [](const Problem &p) -> const WeightedGraph * {
    if (auto c = std::get_if<CutInstance>(&p)) return &c->graph;
    if (auto g = std::get_if<WeightedGraph>(&p)) return g;
    return nullptr;
  };
  // Apply the whole stream first so a floor violation fails before any work.
  std::vector<Problem> probs{problem};
  for (std::size_t k = 0; k < updates.size(); ++k) {
    try {
      probs.push_back(perturb_problem(probs.back(), updates[k]));
    } catch (const ValidationError &e) {
      throw ValidationError("update at step " + std::to_string(k) + ": " + e.what());
    }
  }
  std::vector<std::vector<Outcome>> outs;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    auto alg = prepare_algorithm(kind, opt.params, probs[k]);
    StabilityOptions o = opt;
    if (opt.policy == TapePolicy::Independent) o.seed = RandomTape::mix(opt.seed + k);
    outs.push_back(detail::sample_runs(*alg, o, 0));
  }
  RecourseResult res;
  double l2min = std::numeric_limits<double>::infinity();
  if (auto g = graph_of(problem)) l2min = lambda2(*g);
  for (std::size_t k = 0; k < updates.size(); ++k) {
    RecourseStep s;
    s.step = k;
    s.edge = updates[k].edge;
    s.delta = updates[k].delta;
    double d = 0.0;
    for (std::size_t t = 0; t < opt.trials; ++t) d += outcome_distance(outs[k][t], outs[k + 1][t], opt.norm);
    s.mean_distance = d / static_cast<double>(opt.trials);
    if (auto g = graph_of(probs[k + 1])) {
      s.lambda2 = lambda2(*g);
      s.reference = static_cast<double>(g->num_vertices()) / s.lambda2;
      l2min = std::min(l2min, s.lambda2);
    }
    res.total_recourse += s.mean_distance;
    res.total_weight_change += std::abs(s.delta);
    res.steps.push_back(s);
  }
  res.mean_quotient = res.total_weight_change > 0.0 ? res.total_recourse / res.total_weight_change : 0.0;
  if (auto g = graph_of(problem)) {
    res.lambda2_min = l2min;
    res.reference = static_cast<double>(g->num_vertices()) / l2min;
  }
  double drift = 0.0;
  for (std::size_t t = 0; t < opt.trials; ++t) drift += outcome_distance(outs.front()[t], outs.back()[t], opt.norm);
  res.net_drift = drift / static_cast<double>(opt.trials);
  return res;
}

} // namespace lipgraph
