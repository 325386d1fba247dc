#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"
#include "lipgraph/harness/oracles.hpp"
#include "lipgraph/harness/sampling.hpp"
#include "lipgraph/instance_io.hpp"
#include "lipgraph/matching.hpp"
#include "lipgraph/min_cut.hpp"
#include "lipgraph/pip.hpp"
#include "lipgraph/random_tape.hpp"

namespace lipgraph {

/// Any instance the harness can perturb and re-run.
using Problem = std::variant<CutInstance, WeightedGraph, PipInstance>;

[[nodiscard]] inline std::vector<double> problem_weights(const Problem &p) {
  if (auto c = std::get_if<CutInstance>(&p)) return c->graph.weights();
  if (auto g = std::get_if<WeightedGraph>(&p)) return g->weights();
  const auto &w = std::get<PipInstance>(p).w;
  return {w.data(), w.data() + w.size()};
}

/// Same structure with a new weight vector; enforces the weight floor.
[[nodiscard]] inline Problem problem_with_weights(const Problem &p, std::vector<double> w) {
  if (auto c = std::get_if<CutInstance>(&p)) return c->with_weights(std::move(w));
  if (auto g = std::get_if<WeightedGraph>(&p)) return g->with_weights(std::move(w));
  const auto &pi = std::get<PipInstance>(p);
  require(w.size() == pi.cols(), "weight vector length differs from column count");
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!(w[i] >= kWeightFloor)) throw ValidationError("weight " + std::to_string(i) + " drops below the floor 1e-9");
  return PipInstance(pi.A, pi.b, Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size())), pi.c);
}

[[nodiscard]] inline Problem perturb_problem(const Problem &p, const Perturbation &pert) {
  auto w = problem_weights(p);
  require(pert.edge < w.size(), "perturbation index out of range");
  w[pert.edge] += pert.delta;
  if (!(w[pert.edge] >= kWeightFloor))
    throw ValidationError("perturbation drops weight " + std::to_string(pert.edge) + " below the floor 1e-9");
  return problem_with_weights(p, std::move(w));
}

[[nodiscard]] inline nlohmann::json pip_to_json(const PipInstance &pi) {
  nlohmann::json j;
  auto A = nlohmann::json::array();
  for (Eigen::Index r = 0; r < pi.A.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < pi.A.cols(); ++k) row.push_back(pi.A(r, k));
    A.push_back(std::move(row));
  }
  j["A"] = std::move(A);
  j["b"] = std::vector<double>(pi.b.data(), pi.b.data() + pi.b.size());
  j["w"] = std::vector<double>(pi.w.data(), pi.w.data() + pi.w.size());
  j["c"] = pi.c;
  return j;
}

[[nodiscard]] inline PipInstance pip_from_json(const nlohmann::json &j) {
  try {
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto w = j.at("w").get<std::vector<double>>();
    const double c = j.value("c", 2.0);
    require(!rows.empty() && !rows.front().empty(), "PIP matrix A must be non-empty");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      require(rows[r].size() == rows.front().size(), "PIP matrix rows have different lengths");
      for (std::size_t k = 0; k < rows[r].size(); ++k)
        A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k];
    }
    return PipInstance(std::move(A), Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size())),
                       Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size())), c);
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("malformed PIP JSON: ") + e.what());
  }
}

/// FNV-1a over the canonical serialization, as 16 hex digits.
[[nodiscard]] inline std::string problem_digest(const Problem &p) {
  std::ostringstream os;
  if (auto c = std::get_if<CutInstance>(&p)) write_instance(os, InstanceFile{c->graph, CutSides{c->S, c->T}});
  else if (auto g = std::get_if<WeightedGraph>(&p)) write_instance(os, InstanceFile{*g, std::nullopt});
  else os << pip_to_json(std::get<PipInstance>(p)).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

enum class AlgoKind { CutExact, CutFractional, CutExpmech, CutKway, CutNaive, MatchFractional, MatchAuction, PipFractional, PipRound };

struct AlgoInfo {
  AlgoKind kind;
  const char *name;
  bool randomized;
};

inline constexpr AlgoInfo kAlgorithms[] = {
    {AlgoKind::CutExact, "exact", false},
    {AlgoKind::CutFractional, "fractional", false},
    {AlgoKind::CutExpmech, "expmech", true},
    {AlgoKind::CutKway, "kway", true},
    {AlgoKind::CutNaive, "naive", true},
    {AlgoKind::MatchFractional, "match-fractional", false},
    {AlgoKind::MatchAuction, "match", true},
    {AlgoKind::PipFractional, "pip-fractional", false},
    {AlgoKind::PipRound, "pip", true},
};

[[nodiscard]] inline const AlgoInfo &algo_info(AlgoKind k) {
  for (const auto &a : kAlgorithms)
    if (a.kind == k) return a;
  throw ValidationError("unknown algorithm");
}

[[nodiscard]] inline AlgoKind parse_algo(const std::string &name) {
  for (const auto &a : kAlgorithms)
    if (name == a.name) return a.kind;
  throw ValidationError("unknown algorithm '" + name + "'");
}

[[nodiscard]] inline const char *algo_name(AlgoKind k) { return algo_info(k).name; }

struct AlgoParams {
  std::optional<double> eps; // per-algorithm default when unset
  double gamma = 0.25;
  double beta = 0.25;
  double Lambda = 0.1;
  ExpMechCoupling coupling = ExpMechCoupling::Race;
  double tol = 1e-10;
  std::size_t max_iter = 0; // solver iteration cap; 0 keeps each solver's default
};

namespace detail {

inline CutSolveOptions cut_solve_options(const AlgoParams &p) {
  CutSolveOptions so;
  so.tol = p.tol;
  if (p.max_iter > 0) so.max_iter = p.max_iter;
  return so;
}

inline std::size_t prox_iter_cap(const AlgoParams &p) { return p.max_iter > 0 ? p.max_iter : 200000; }

} // namespace detail

/// One algorithm output as a point: set indicators for cuts, matchings and
/// PIP solutions, raw vectors for fractional outputs. Distances are l1 or l2
/// between points; for sets l1 is the symmetric-difference size.
struct Outcome {
  std::vector<double> point;
  double objective = 0.0;
  bool feasible = true;
};

enum class DistanceNorm { L1, L2 };

[[nodiscard]] inline double outcome_distance(const Outcome &a, const Outcome &b, DistanceNorm norm = DistanceNorm::L1) {
  require(a.point.size() == b.point.size(), "outcomes have different lengths");
  double d = 0.0;
  for (std::size_t i = 0; i < a.point.size(); ++i) {
    const double x = a.point[i] - b.point[i];
    d += norm == DistanceNorm::L1 ? std::abs(x) : x * x;
  }
  return norm == DistanceNorm::L1 ? d : std::sqrt(d);
}

/// Deterministic part of an algorithm, done once per weight vector; sample()
/// consumes a tape and is cheap.
class PreparedAlgorithm {
public:
  virtual ~PreparedAlgorithm() = default;
  [[nodiscard]] virtual Outcome sample(RandomTape &tape) const = 0;
  /// Pointwise Lipschitz bound from theory (l1 output distance per unit l1
  /// weight change), constants as in the analysis where stated, else 1.
  [[nodiscard]] virtual double theory_bound() const = 0;
  /// Non-fatal condition the caller should surface, empty if none.
  [[nodiscard]] virtual std::string warning() const { return {}; }
};

namespace detail {

inline Outcome cut_outcome(const CutResult &r) {
  Outcome o;
  o.point.resize(r.A.size());
  for (std::size_t v = 0; v < r.A.size(); ++v) o.point[v] = r.A[v] ? 1.0 : 0.0;
  o.objective = r.weight;
  o.feasible = r.feasible;
  return o;
}

inline Outcome matching_outcome(const BMatching &M, std::size_t m) {
  Outcome o;
  o.point.assign(m, 0.0);
  for (auto e : M.edges) o.point[e] = 1.0;
  o.objective = M.weight;
  return o;
}

class CutExactAlgo final : public PreparedAlgorithm {
public:
  explicit CutExactAlgo(const CutInstance &inst) : out_(cut_outcome(mincut_exact(inst))), n_(inst.graph.num_vertices()) {}
  Outcome sample(RandomTape &) const override { return out_; }
  double theory_bound() const override { return static_cast<double>(n_); }

private:
  Outcome out_;
  std::size_t n_;
};

class CutFractionalAlgo final : public PreparedAlgorithm {
public:
  CutFractionalAlgo(const CutInstance &inst, const AlgoParams &p) {
    const double eps = p.eps.value_or(1.0);
    auto frac = solve_fractional(inst, eps, -1.0, 1.0, cut_solve_options(p));
    out_.point = frac.y;
    out_.objective = frac.objective_f;
    const double l2 = lambda2(inst.graph);
    // l2 bound 2 sqrt2 (1 + eps) / (eps lambda2), times sqrt(n) for l1.
    bound_ = std::sqrt(static_cast<double>(inst.graph.num_vertices())) * 2.0 * std::sqrt(2.0) * (1.0 + eps) / (eps * l2);
  }
  Outcome sample(RandomTape &) const override { return out_; }
  double theory_bound() const override { return bound_; }

private:
  Outcome out_;
  double bound_ = 0.0;
};

class CutExpmechAlgo final : public PreparedAlgorithm {
public:
  CutExpmechAlgo(const CutInstance &inst, const AlgoParams &p) : inst_(inst) {
    ExpMechOptions o;
    o.eps = p.eps;
    o.coupling = p.coupling;
    o.solve = cut_solve_options(p);
    prep_ = prepare_expmech(inst_, p.gamma, o);
  }
  Outcome sample(RandomTape &tape) const override { return cut_outcome(sample_expmech(prep_, inst_, tape)); }
  double theory_bound() const override { return static_cast<double>(inst_.graph.num_vertices()) / prep_.lambda2; }
  [[nodiscard]] const ExpMechPrepared &prepared() const { return prep_; }

private:
  CutInstance inst_;
  ExpMechPrepared prep_;
};

class CutKwayAlgo final : public PreparedAlgorithm {
public:
  CutKwayAlgo(const CutInstance &inst, const AlgoParams &p) : inst_(inst) {
    KwayOptions o;
    o.eps = p.eps.value_or(1.0);
    o.solve = cut_solve_options(p);
    prep_ = prepare_kway(inst_, p.beta, p.gamma, o);
    bound_ = std::sqrt(static_cast<double>(inst.graph.num_vertices())) * std::log(1.0 / p.gamma) /
             (p.beta * p.beta * lambda2(inst.graph));
  }
  Outcome sample(RandomTape &tape) const override { return cut_outcome(sample_kway(prep_, inst_, tape)); }
  double theory_bound() const override { return bound_; }
  std::string warning() const override { return prep_.warning; }

private:
  CutInstance inst_;
  KwayPrepared prep_;
  double bound_ = 0.0;
};

class CutNaiveAlgo final : public PreparedAlgorithm {
public:
  CutNaiveAlgo(const CutInstance &inst, const AlgoParams &p) : inst_(inst), Lambda_(p.Lambda) {
    frac_ = solve_naive_fractional(inst_, Lambda_, cut_solve_options(p));
  }
  Outcome sample(RandomTape &tape) const override { return cut_outcome(threshold_round(frac_, inst_, tape)); }
  double theory_bound() const override { return static_cast<double>(inst_.graph.num_vertices()) / (2.0 * Lambda_); }

private:
  CutInstance inst_;
  double Lambda_;
  CutFractional frac_;
};

class MatchFractionalAlgo final : public PreparedAlgorithm {
public:
  MatchFractionalAlgo(const WeightedGraph &g, const AlgoParams &p) {
    const double eps = p.eps.value_or(1.0);
    auto frac = solve_matching_fractional(g, eps, p.tol, prox_iter_cap(p));
    out_.point = frac.x;
    out_.objective = frac.objective;
    bound_ = 2.0 * std::sqrt(static_cast<double>(g.num_edges())) / g.min_weight() * (1.0 + 1.0 / eps);
  }
  Outcome sample(RandomTape &) const override { return out_; }
  double theory_bound() const override { return bound_; }

private:
  Outcome out_;
  double bound_ = 0.0;
};

class MatchAuctionAlgo final : public PreparedAlgorithm {
public:
  MatchAuctionAlgo(const WeightedGraph &g, const AlgoParams &p) : g_(g) {
    const double eps = p.eps.value_or(1.0);
    frac_ = solve_matching_fractional(g_, eps, p.tol, prox_iter_cap(p));
    // Rounding at most doubles the fractional distance.
    bound_ = 2.0 * 2.0 * std::sqrt(static_cast<double>(g.num_edges())) / g.min_weight() * (1.0 + 1.0 / eps);
  }
  Outcome sample(RandomTape &tape) const override {
    return matching_outcome(auction_round(frac_, g_, tape), g_.num_edges());
  }
  double theory_bound() const override { return bound_; }
  [[nodiscard]] const MatchFractional &fractional() const { return frac_; }

private:
  WeightedGraph g_;
  MatchFractional frac_;
  double bound_ = 0.0;
};

class PipFractionalAlgo final : public PreparedAlgorithm {
public:
  PipFractionalAlgo(const PipInstance &pi, const AlgoParams &p) {
    out_.point = solve_pip_fractional(pi, p.tol, prox_iter_cap(p));
    for (std::size_t i = 0; i < out_.point.size(); ++i) out_.objective += pi.w(static_cast<Eigen::Index>(i)) * out_.point[i];
    bound_ = 2.0 * std::sqrt(static_cast<double>(pi.cols())) / pi.w.minCoeff();
  }
  Outcome sample(RandomTape &) const override { return out_; }
  double theory_bound() const override { return bound_; }

private:
  Outcome out_;
  double bound_ = 0.0;
};

class PipRoundAlgo final : public PreparedAlgorithm {
public:
  PipRoundAlgo(const PipInstance &pi, const AlgoParams &p) : pi_(pi) {
    x_ = solve_pip_fractional(pi_, p.tol, prox_iter_cap(p));
    bound_ = 2.0 * std::sqrt(static_cast<double>(pi.cols())) / (pi.w.minCoeff() * pip_gamma(pi));
  }
  Outcome sample(RandomTape &tape) const override {
    auto s = round_pip(x_, pi_, tape);
    Outcome o;
    o.point.assign(s.y.begin(), s.y.end());
    o.objective = s.value;
    o.feasible = s.feasible;
    return o;
  }
  double theory_bound() const override { return bound_; }
  [[nodiscard]] const std::vector<double> &fractional() const { return x_; }

private:
  PipInstance pi_;
  std::vector<double> x_;
  double bound_ = 0.0;
};

} // namespace detail

[[nodiscard]] inline std::unique_ptr<PreparedAlgorithm> prepare_algorithm(AlgoKind kind, const AlgoParams &params,
                                                                          const Problem &problem) {
  auto need_cut = [&]() -> const CutInstance & {
    if (auto c = std::get_if<CutInstance>(&problem)) return *c;
    throw ValidationError(std::string("algorithm '") + algo_name(kind) + "' needs a cut instance (graph with S and T)");
  };
  auto need_graph = [&]() -> const WeightedGraph & {
    if (auto g = std::get_if<WeightedGraph>(&problem)) return *g;
    if (auto c = std::get_if<CutInstance>(&problem)) return c->graph;
    throw ValidationError(std::string("algorithm '") + algo_name(kind) + "' needs a bipartite graph");
  };
  auto need_pip = [&]() -> const PipInstance & {
    if (auto p = std::get_if<PipInstance>(&problem)) return *p;
    throw ValidationError(std::string("algorithm '") + algo_name(kind) + "' needs a PIP instance");
  };
  switch (kind) {
  case AlgoKind::CutExact: return std::make_unique<detail::CutExactAlgo>(need_cut());
  case AlgoKind::CutFractional: return std::make_unique<detail::CutFractionalAlgo>(need_cut(), params);
  case AlgoKind::CutExpmech: return std::make_unique<detail::CutExpmechAlgo>(need_cut(), params);
  case AlgoKind::CutKway: return std::make_unique<detail::CutKwayAlgo>(need_cut(), params);
  case AlgoKind::CutNaive: return std::make_unique<detail::CutNaiveAlgo>(need_cut(), params);
  case AlgoKind::MatchFractional: return std::make_unique<detail::MatchFractionalAlgo>(need_graph(), params);
  case AlgoKind::MatchAuction: return std::make_unique<detail::MatchAuctionAlgo>(need_graph(), params);
  case AlgoKind::PipFractional: return std::make_unique<detail::PipFractionalAlgo>(need_pip(), params);
  case AlgoKind::PipRound: return std::make_unique<detail::PipRoundAlgo>(need_pip(), params);
  }
  throw ValidationError("unknown algorithm");
}

} // namespace lipgraph
