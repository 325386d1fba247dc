#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "lipgraph/lipgraph.hpp"

namespace lipgraph::cli {

using nlohmann::json;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// LIPGRAPH_LOG: quiet | info | debug (default quiet).
inline LogLevel log_level() {
  const char *v = std::getenv("LIPGRAPH_LOG");
  if (!v) return LogLevel::Quiet;
  const std::string s(v);
  if (s == "debug" || s == "2") return LogLevel::Debug;
  if (s == "info" || s == "1") return LogLevel::Info;
  return LogLevel::Quiet;
}

struct RunConfig {
  std::string subcommand;
  std::string instance;
  std::string target;
  std::string algo;
  std::optional<double> eps;
  double gamma = 0.25;
  double beta = 0.25;
  double Lambda = 0.1;
  std::optional<double> c;
  std::size_t max_iter = 0;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 1;
  std::size_t jobs = 1;
  std::string out = "json";
  std::string output;
  // stability / recourse / sweep
  std::size_t edge = 0;
  std::optional<double> delta;
  double rel_delta = 1e-3;
  std::string policy = "shared";
  bool ladder = false;
  std::size_t steps = 8;
  std::string updates;
  std::string norm = "l1";
  // match
  std::string b_mode = "default";
  // gen
  std::string kind = "cut";
  std::size_t n = 8;
  double p = 0.5;
  std::size_t terminals = 1;
  std::size_t nl = 4, nr = 4, max_edges = 20;
  int max_cap = 1;
  std::size_t rows = 3, cols = 8;
  double B = 1.0;
  double C = 1.0, f = 4.0;
  bool tilde = false;
};

inline constexpr const char *kCsvMagic = "# lipgraph-csv v1 columns: ";

class Logger {
public:
  Logger(std::ostream &err, LogLevel level) : err_(err), level_(level) {}
  void warn(const std::string &m) const { err_ << "warning: " << m << '\n'; }
  void info(const std::string &m) const {
    if (level_ >= LogLevel::Info) err_ << "[lipgraph] " << m << '\n';
  }
  void debug(const std::string &m) const {
    if (level_ >= LogLevel::Debug) err_ << "[lipgraph:debug] " << m << '\n';
  }

private:
  std::ostream &err_;
  LogLevel level_;
};

namespace detail {

inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::string csv_row(const std::vector<std::string> &cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s + '\n';
}

inline std::string csv_header(const std::vector<std::string> &cols) {
  return std::string(kCsvMagic) + csv_row(cols) + csv_row(cols);
}

inline std::string fmt(double x) { return std::isfinite(x) ? format_double(x) : std::string("nan"); }

inline AlgoParams algo_params(const RunConfig &c) {
  AlgoParams p;
  p.eps = c.eps;
  p.gamma = c.gamma;
  p.beta = c.beta;
  p.Lambda = c.Lambda;
  p.max_iter = c.max_iter;
  return p;
}

inline PipInstance load_pip(const std::string &path, std::optional<double> c) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open instance file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error &e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  if (c) j["c"] = *c;
  return pip_from_json(j);
}

/// Instance for an algorithm: PIP JSON, a cut instance when the file has
/// terminals, else a plain graph.
inline Problem load_problem(const std::string &path, AlgoKind kind, std::optional<double> c) {
  if (kind == AlgoKind::PipFractional || kind == AlgoKind::PipRound) return load_pip(path, c);
  auto f = load_instance(path);
  if (kind == AlgoKind::MatchFractional || kind == AlgoKind::MatchAuction) {
    require(f.graph.is_bipartite(), "matching needs a bipartite instance (header `n m bipartite U`)");
    return f.graph;
  }
  return f.cut_instance();
}

inline bool set_output(AlgoKind k) {
  return k == AlgoKind::CutExact || k == AlgoKind::CutExpmech || k == AlgoKind::CutKway || k == AlgoKind::CutNaive ||
         k == AlgoKind::MatchAuction || k == AlgoKind::PipRound;
}

inline std::vector<std::size_t> members(const Outcome &o) {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < o.point.size(); ++i)
    if (o.point[i] > 0.5) m.push_back(i);
  return m;
}

inline json params_json(const RunConfig &c) {
  json p;
  p["eps"] = c.eps ? json(*c.eps) : json(nullptr);
  p["gamma"] = c.gamma;
  p["beta"] = c.beta;
  p["lambda"] = c.Lambda;
  if (c.c) p["c"] = *c.c;
  return p;
}

inline json report_json(const StabilityReport &r) {
  json j;
  j["algorithm"] = r.algorithm;
  j["instance_digest"] = r.instance_digest;
  j["delta"] = num(r.delta);
  j["trials"] = r.trials;
  j["mean_output_distance"] = num(r.mean_output_distance);
  j["sem_output_distance"] = num(r.sem_output_distance);
  j["lipschitz_quotient"] = num(r.lipschitz_quotient);
  j["feasibility_rate"] = num(r.feasibility_rate);
  j["feasibility_rate_perturbed"] = num(r.feasibility_rate_perturbed);
  j["objective_mean"] = num(r.objective_mean);
  j["objective_sem"] = num(r.objective_sem);
  j["theory_bound"] = num(r.theory_bound);
  j["policy"] = policy_name(r.policy);
  j["emd_estimate"] = r.emd_estimate ? num(*r.emd_estimate) : json(nullptr);
  return j;
}

inline json header(const RunConfig &c) {
  json j;
  j["lipgraph_report"] = 1;
  j["command"] = c.subcommand;
  j["seed"] = *c.seed;
  return j;
}

inline StabilityOptions stability_options(const RunConfig &c) {
  StabilityOptions o;
  o.params = algo_params(c);
  o.policy = parse_policy(c.policy);
  o.trials = c.trials;
  o.seed = *c.seed;
  o.jobs = c.jobs;
  if (c.norm == "l2") o.norm = DistanceNorm::L2;
  else require(c.norm == "l1", "--norm must be l1 or l2");
  return o;
}

// --- subcommands ------------------------------------------------------------

/// mincut / match / pip: run the algorithm `trials` times on derived tapes.
inline std::string run_solve(const RunConfig &c, AlgoKind kind, const Logger &log) {
  auto problem = load_problem(c.instance, kind, c.c);
  if (kind == AlgoKind::MatchFractional || kind == AlgoKind::MatchAuction) {
    auto &g = std::get<WeightedGraph>(problem);
    if (c.b_mode == "default") problem = g.with_capacities(std::vector<int>(g.num_vertices(), 1));
    else require(c.b_mode == "file", "--b must be default or file");
  }
  require(c.trials >= 1, "--trials must be at least 1");
  log.info(std::string("preparing ") + algo_name(kind) + " on " + problem_digest(problem));
  auto alg = prepare_algorithm(kind, algo_params(c), problem);
  if (const auto w = alg->warning(); !w.empty()) log.warn(w);
  std::vector<Outcome> runs(algo_info(kind).randomized ? c.trials : 1);
  for (std::size_t t = 0; t < runs.size(); ++t) {
    auto tape = RandomTape::derive(*c.seed, t);
    runs[t] = alg->sample(tape);
  }
  const bool sets = set_output(kind);
  if (c.out == "csv") {
    std::string s = csv_header({"trial", "objective", "feasible", "size", "output"});
    for (std::size_t t = 0; t < runs.size(); ++t) {
      std::string o;
      if (sets)
        for (auto v : members(runs[t])) o += (o.empty() ? "" : " ") + std::to_string(v);
      else
        for (double x : runs[t].point) o += (o.empty() ? "" : " ") + fmt(x);
      s += csv_row({std::to_string(t), fmt(runs[t].objective), runs[t].feasible ? "1" : "0",
                    std::to_string(sets ? members(runs[t]).size() : runs[t].point.size()), o});
    }
    return s;
  }
  json j = header(c);
  j["algorithm"] = algo_name(kind);
  j["instance_digest"] = problem_digest(problem);
  j["params"] = params_json(c);
  if (auto ci = std::get_if<CutInstance>(&problem)) {
    j["n"] = ci->graph.num_vertices();
    j["m"] = ci->graph.num_edges();
    j["lambda2"] = num(lambda2(ci->graph));
  } else if (auto g = std::get_if<WeightedGraph>(&problem)) {
    j["n"] = g->num_vertices();
    j["m"] = g->num_edges();
  } else {
    const auto &pi = std::get<PipInstance>(problem);
    j["rows"] = pi.rows();
    j["cols"] = pi.cols();
    j["gamma_scale"] = pip_gamma(pi);
  }
  json arr = json::array();
  double feas = 0.0, obj = 0.0;
  for (std::size_t t = 0; t < runs.size(); ++t) {
    json r;
    r["trial"] = t;
    if (sets) r["members"] = members(runs[t]);
    else {
      json pt = json::array();
      for (double x : runs[t].point) pt.push_back(num(x));
      r["point"] = std::move(pt);
    }
    r["objective"] = num(runs[t].objective);
    r["feasible"] = runs[t].feasible;
    feas += runs[t].feasible;
    obj += runs[t].objective;
    arr.push_back(std::move(r));
  }
  j["runs"] = std::move(arr);
  if (const auto w = alg->warning(); !w.empty()) j["warning"] = w;
  j["summary"] = {{"trials", runs.size()},
                  {"feasibility_rate", feas / static_cast<double>(runs.size())},
                  {"mean_objective", num(obj / static_cast<double>(runs.size()))},
                  {"theory_bound", num(alg->theory_bound())}};
  return j.dump(2) + '\n';
}

inline std::string run_stability(const RunConfig &c, const Logger &log) {
  const auto kind = parse_algo(c.algo);
  auto problem = load_problem(c.instance, kind, c.c);
  auto opt = stability_options(c);
  const auto w = problem_weights(problem);
  require(c.edge < w.size(), "--edge out of range (instance has " + std::to_string(w.size()) + " weights)");
  const double delta = c.delta.value_or(c.rel_delta * w[c.edge]);
  opt.max_relative_delta = std::max(opt.max_relative_delta, c.rel_delta);
  log.info("stability of " + c.algo + " on " + problem_digest(problem) + ", edge " + std::to_string(c.edge));
  std::vector<TrialRecord> rows;
  auto rep = estimate_lipschitz(kind, problem, {c.edge, delta}, opt, &rows);
  if (c.out == "csv") {
    std::string s = csv_header({"trial", "distance", "objective", "objective_perturbed", "feasible", "feasible_perturbed"});
    for (const auto &r : rows)
      s += csv_row({std::to_string(r.trial), fmt(r.distance), fmt(r.objective), fmt(r.objective_perturbed),
                    r.feasible ? "1" : "0", r.feasible_perturbed ? "1" : "0"});
    return s;
  }
  json j = header(c);
  j["params"] = params_json(c);
  j["perturbation"] = {{"edge", c.edge}, {"delta", delta}};
  j["report"] = report_json(rep);
  if (c.ladder) {
    auto lad = delta_ladder(kind, problem, c.edge, opt);
    json arr = json::array();
    for (auto &r : lad.reports) arr.push_back(report_json(r));
    j["ladder"] = std::move(arr);
    j["monotone_trend"] = lad.monotone_trend;
  }
  return j.dump(2) + '\n';
}

inline std::vector<Perturbation> read_updates(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open update file '" + path + "'");
  std::vector<Perturbation> ups;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    long long e;
    double d;
    if (!(ls >> e)) continue;
    if (!(ls >> d) || e < 0) throw ParseError(no, "expected `edge delta`");
    ups.push_back({static_cast<std::size_t>(e), d});
  }
  return ups;
}

/// Random +-rel * w_e stream drawn from the seed; never crosses the floor.
inline std::vector<Perturbation> random_updates(const std::vector<double> &w0, std::size_t steps, double rel,
                                                std::uint64_t seed) {
  require(rel > 0.0 && rel < 1.0, "--rel-delta must lie in (0, 1) for a random update stream");
  auto tape = RandomTape::derive(seed, 0x7265636fULL);
  auto w = w0;
  std::vector<Perturbation> ups;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto e = std::min(w.size() - 1, static_cast<std::size_t>(tape.next() * static_cast<double>(w.size())));
    const double d = (tape.next() < 0.5 ? -1.0 : 1.0) * rel * w[e];
    w[e] += d;
    ups.push_back({e, d});
  }
  return ups;
}

inline std::string run_recourse(const RunConfig &c, const Logger &log) {
  const auto kind = parse_algo(c.algo);
  auto problem = load_problem(c.instance, kind, c.c);
  auto opt = stability_options(c);
  auto ups = c.updates.empty() ? random_updates(problem_weights(problem), c.steps, c.rel_delta, *c.seed)
                               : read_updates(c.updates);
  log.info("recourse over " + std::to_string(ups.size()) + " updates");
  auto res = recourse_sim(kind, problem, ups, opt);
  if (c.out == "csv") {
    std::string s = csv_header({"step", "edge", "delta", "mean_distance", "lambda2", "reference"});
    for (auto &st : res.steps)
      s += csv_row({std::to_string(st.step), std::to_string(st.edge), fmt(st.delta), fmt(st.mean_distance),
                    fmt(st.lambda2), fmt(st.reference)});
    return s;
  }
  json j = header(c);
  j["algorithm"] = algo_name(kind);
  j["instance_digest"] = problem_digest(problem);
  j["params"] = params_json(c);
  j["trials"] = c.trials;
  j["policy"] = c.policy;
  json arr = json::array();
  for (auto &st : res.steps)
    arr.push_back({{"step", st.step}, {"edge", st.edge}, {"delta", st.delta}, {"mean_distance", num(st.mean_distance)},
                   {"lambda2", num(st.lambda2)}, {"reference", num(st.reference)}});
  j["steps"] = std::move(arr);
  j["summary"] = {{"total_recourse", num(res.total_recourse)},   {"total_weight_change", num(res.total_weight_change)},
                  {"mean_quotient", num(res.mean_quotient)},     {"lambda2_min", num(res.lambda2_min)},
                  {"reference", num(res.reference)},             {"net_drift", num(res.net_drift)}};
  return j.dump(2) + '\n';
}

inline std::string run_sweep(const RunConfig &c, const Logger &log) {
  const auto kind = parse_algo(c.algo);
  auto problem = load_problem(c.instance, kind, c.c);
  require(!c.target.empty(), "sweep needs --target (same instance with the end-point weights)");
  auto target = load_problem(c.target, kind, c.c);
  auto opt = stability_options(c);
  auto path = PerturbationPath::linear(problem_weights(problem), problem_weights(target), c.steps);
  log.info("sweep over " + std::to_string(c.steps) + " steps, path l1 " + fmt(path.l1_length()));
  auto res = path_sweep(kind, problem, path, opt);
  if (c.out == "csv") {
    std::string s = csv_header({"step", "delta", "mean_output_distance", "sem_output_distance", "lipschitz_quotient",
                                "feasibility_rate", "theory_bound"});
    for (std::size_t k = 0; k < res.steps.size(); ++k) {
      const auto &r = res.steps[k];
      s += csv_row({std::to_string(k), fmt(r.delta), fmt(r.mean_output_distance), fmt(r.sem_output_distance),
                    fmt(r.lipschitz_quotient), fmt(r.feasibility_rate), fmt(r.theory_bound)});
    }
    return s;
  }
  json j = header(c);
  j["params"] = params_json(c);
  json arr = json::array();
  for (auto &r : res.steps) arr.push_back(report_json(r));
  j["steps"] = std::move(arr);
  j["end_to_end"] = report_json(res.end_to_end);
  j["summary"] = {{"total_distance", num(res.total_distance)}, {"c_sup", num(res.c_sup)},
                  {"path_l1", num(res.path_l1)},               {"total_over_l1", num(res.total_over_l1)},
                  {"subadditive", res.subadditive}};
  return j.dump(2) + '\n';
}

inline std::string run_gen(const RunConfig &c) {
  auto tape = RandomTape::derive(*c.seed, 0);
  const bool as_json = c.out == "json";
  std::ostringstream os;
  auto emit = [&](const InstanceFile &f) {
    if (as_json) os << instance_to_json(f).dump(2) << '\n';
    else write_instance(os, f);
  };
  if (c.kind == "cut") {
    require(c.n >= 2, "--n must be at least 2");
    auto inst = random_cut_instance(c.n, c.p, tape, c.terminals);
    emit({inst.graph, CutSides{inst.S, inst.T}});
  } else if (c.kind == "bipartite") {
    emit({random_bipartite_graph(c.nl, c.nr, c.p, c.max_edges, tape, c.max_cap), std::nullopt});
  } else if (c.kind == "pip") {
    require(c.B >= 1.0, "PIP budget B = min(b) must satisfy B ≥ 1");
    os << pip_to_json(random_pip_instance(c.rows, c.cols, c.B, c.c.value_or(2.0), tape)).dump(2) << '\n';
  } else if (c.kind == "lowerbound") {
    auto lb = lower_bound_instance(c.n, c.C, c.f);
    auto inst = c.tilde ? lb.instance.with_weights(lb.w_tilde) : lb.instance;
    emit({inst.graph, CutSides{inst.S, inst.T}});
  } else {
    throw ValidationError("--kind must be cut, bipartite, pip or lowerbound");
  }
  return os.str();
}

inline const std::vector<std::string> &report_commands() {
  static const std::vector<std::string> cmds{"mincut", "match", "pip", "stability", "recourse", "sweep"};
  return cmds;
}

inline std::string validate_report(const json &j) {
  const auto cmd = j.at("command").get<std::string>();
  require(std::find(report_commands().begin(), report_commands().end(), cmd) != report_commands().end(),
          "unknown report command '" + cmd + "'");
  require(j.at("seed").is_number_unsigned(), "report seed must be an unsigned integer");
  auto need = [&](const char *k) { require(j.contains(k), "report is missing field '" + std::string(k) + "'"); };
  if (cmd == "mincut" || cmd == "match" || cmd == "pip") {
    need("runs");
    need("summary");
    for (const auto &r : j.at("runs")) require(r.contains("objective") && r.contains("feasible"), "malformed run entry");
  } else if (cmd == "stability") {
    need("report");
    const auto &r = j.at("report");
    for (auto k : {"algorithm", "instance_digest", "delta", "trials", "mean_output_distance", "lipschitz_quotient",
                   "feasibility_rate", "theory_bound", "policy"})
      require(r.contains(k), "stability report is missing '" + std::string(k) + "'");
    require(r.at("trials").get<long long>() >= 1, "stability report has trials < 1");
    const double d = r.at("delta").get<double>(), m = r.at("mean_output_distance").get<double>(),
                 q = r.at("lipschitz_quotient").get<double>();
    if (d > 0.0) require(std::abs(q - m / d) <= 1e-9 * std::max(1.0, std::abs(q)), "quotient differs from distance / delta");
  } else if (cmd == "recourse") {
    need("steps");
    need("summary");
  } else {
    need("steps");
    need("end_to_end");
    need("summary");
  }
  return cmd;
}

inline std::string validate_csv(std::istream &in) {
  std::string magic, head, line;
  std::getline(in, magic);
  std::getline(in, head);
  require(magic.rfind(kCsvMagic, 0) == 0, "missing CSV version header");
  require(magic.substr(std::string(kCsvMagic).size()) == head, "CSV column row differs from the versioned header");
  const auto cols = static_cast<std::size_t>(std::count(head.begin(), head.end(), ',')) + 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto k = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (k != cols) throw ParseError(rows + 2, "expected " + std::to_string(cols) + " columns");
  }
  return std::to_string(rows) + " rows, " + std::to_string(cols) + " columns";
}

inline std::string run_validate(const RunConfig &c) {
  std::ifstream in(c.instance);
  if (!in) throw ValidationError("cannot open '" + c.instance + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.rfind(kCsvMagic, 0) == 0) {
    std::istringstream is(text);
    return "# ok: csv report, " + validate_csv(is) + '\n';
  }
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ParseError(0, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (j.contains("lipgraph_report")) return "# ok: " + validate_report(j) + " report\n";
    } catch (const json::exception &e) {
      throw ValidationError(std::string("malformed report: ") + e.what());
    }
    if (j.contains("A")) {
      auto pi = pip_from_json(j);
      return "# ok: pip instance " + std::to_string(pi.rows()) + "x" + std::to_string(pi.cols()) + '\n' +
             pip_to_json(pi).dump(2) + '\n';
    }
    auto f = instance_from_json(j);
    if (f.cut) (void)f.cut_instance();
    return "# ok: instance\n" + instance_to_json(f).dump(2) + '\n';
  }
  std::istringstream is(text);
  auto f = read_instance(is);
  if (f.cut) (void)f.cut_instance();
  std::ostringstream os;
  os << "# ok: instance n=" << f.graph.num_vertices() << " m=" << f.graph.num_edges() << '\n';
  write_instance(os, f);
  return os.str();
}

} // namespace detail

/// Parses argv and runs one subcommand. Exit codes: 0 success, 2 invalid
/// input or arguments, 3 solver non-convergence, 1 anything else.
inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  RunConfig c;
  CLI::App app{"lipgraph: Lipschitz-continuous graph algorithms and stability harness"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App *s, bool need_seed, const std::string &out_values) {
    auto *o = s->add_option("--seed", seed, "master seed for the random tape");
    if (need_seed) o->required();
    s->add_option("--out", c.out, "report format (" + out_values + ")")->capture_default_str();
    s->add_option("--output", c.output, "write the report to this file instead of stdout");
  };
  auto add_params = [&](CLI::App *s) {
    s->add_option("--eps", c.eps, "regularization strength");
    s->add_option("--gamma", c.gamma, "failure probability")->capture_default_str();
    s->add_option("--beta", c.beta, "balance parameter")->capture_default_str();
    s->add_option("--lambda", c.Lambda, "naive baseline regularization")->capture_default_str();
    s->add_option("--c", c.c, "PIP confidence parameter");
    s->add_option("--max-iter", c.max_iter, "solver iteration cap (0 keeps the default)");
  };

  auto *mincut = app.add_subcommand("mincut", "stable s-t min cut");
  mincut->add_option("instance", c.instance, "instance file")->required();
  mincut->add_option("--algo", c.algo, "expmech | kway | naive | fractional | exact")->required();
  mincut->add_option("--trials", c.trials, "independent runs")->capture_default_str();
  add_params(mincut);
  add_common(mincut, true, "json|csv");

  auto *match = app.add_subcommand("match", "stable bipartite b-matching");
  match->add_option("instance", c.instance, "bipartite instance file")->required();
  match->add_option("--b", c.b_mode, "capacities: default (all 1) or file")->capture_default_str();
  match->add_option("--trials", c.trials, "independent runs")->capture_default_str();
  match->add_option("--eps", c.eps, "regularization strength");
  match->add_option("--max-iter", c.max_iter, "solver iteration cap (0 keeps the default)");
  add_common(match, true, "json|csv");

  auto *pip = app.add_subcommand("pip", "stable packing integer program");
  pip->add_option("instance", c.instance, "PIP JSON {A, b, w, c}")->required();
  pip->add_option("--trials", c.trials, "independent runs")->capture_default_str();
  pip->add_option("--c", c.c, "override the confidence parameter");
  pip->add_option("--max-iter", c.max_iter, "solver iteration cap (0 keeps the default)");
  add_common(pip, true, "json|csv");

  auto add_harness = [&](CLI::App *s) {
    s->add_option("instance", c.instance, "instance file")->required();
    s->add_option("--algo", c.algo, "algorithm id")->required();
    s->add_option("--policy", c.policy, "shared | independent")->capture_default_str();
    s->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
    s->add_option("--norm", c.norm, "output distance: l1 | l2")->capture_default_str();
    add_params(s);
    add_common(s, true, "json|csv");
  };
  auto *stab = app.add_subcommand("stability", "coupled-run Lipschitz estimate");
  add_harness(stab);
  c.trials = 1000;
  stab->add_option("--trials", c.trials, "coupled trials")->capture_default_str();
  stab->add_option("--edge", c.edge, "perturbed weight index")->capture_default_str();
  stab->add_option("--delta", c.delta, "absolute perturbation");
  stab->add_option("--rel-delta", c.rel_delta, "perturbation relative to the weight")->capture_default_str();
  stab->add_flag("--ladder", c.ladder, "also report relative deltas 1e-2, 1e-3, 1e-4");

  auto *rec = app.add_subcommand("recourse", "dynamic recourse under an update stream");
  add_harness(rec);
  rec->add_option("--trials", c.trials, "trials per step");
  rec->add_option("--steps", c.steps, "random updates when no --updates file");
  rec->add_option("--rel-delta", c.rel_delta, "random update size relative to the weight");
  rec->add_option("--updates", c.updates, "file of `edge delta` lines");

  auto *sweep = app.add_subcommand("sweep", "monotone perturbation path sweep");
  add_harness(sweep);
  sweep->add_option("--target", c.target, "instance with the end-point weights")->required();
  sweep->add_option("--steps", c.steps, "path steps")->capture_default_str();
  sweep->add_option("--trials", c.trials, "trials per waypoint");

  auto *gen = app.add_subcommand("gen", "instance generators");
  gen->add_option("--kind", c.kind, "cut | bipartite | pip | lowerbound")->capture_default_str();
  gen->add_option("--n", c.n, "vertices")->capture_default_str();
  gen->add_option("--p", c.p, "edge probability")->capture_default_str();
  gen->add_option("--terminals", c.terminals, "max terminals per side")->capture_default_str();
  gen->add_option("--nl", c.nl, "left side size")->capture_default_str();
  gen->add_option("--nr", c.nr, "right side size")->capture_default_str();
  gen->add_option("--max-edges", c.max_edges, "edge cap")->capture_default_str();
  gen->add_option("--max-cap", c.max_cap, "largest vertex capacity")->capture_default_str();
  gen->add_option("--rows", c.rows, "PIP rows")->capture_default_str();
  gen->add_option("--cols", c.cols, "PIP columns")->capture_default_str();
  gen->add_option("--B", c.B, "PIP budget")->capture_default_str();
  gen->add_option("--c", c.c, "PIP confidence parameter");
  gen->add_option("--C", c.C, "lower-bound accuracy constant")->capture_default_str();
  gen->add_option("--f", c.f, "lower-bound f(n)")->capture_default_str();
  gen->add_flag("--tilde", c.tilde, "emit the perturbed weights of the lower-bound instance");
  add_common(gen, true, "text|json");

  auto *val = app.add_subcommand("validate", "parse an instance or report and pretty-print it");
  val->add_option("file", c.instance, "instance, PIP JSON, or report")->required();

  try {
    // Defaults that differ by subcommand are fixed after parsing.
    const std::size_t trials_default = c.trials;
    app.parse(argc, argv);
    auto *sub = app.get_subcommands().front();
    c.subcommand = sub->get_name();
    auto given = [sub](const char *name) {
      const auto *o = sub->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    if (c.subcommand != "validate") c.seed = seed;
    if (c.subcommand == "gen" && !given("--out")) c.out = "text";
    if (!given("--trials")) {
      if (c.subcommand == "stability") c.trials = trials_default;
      else if (c.subcommand == "recourse" || c.subcommand == "sweep") c.trials = 100;
      else c.trials = 1;
    }
    if (c.subcommand == "recourse" && !given("--steps")) c.steps = 20;
    if (c.subcommand == "recourse" && !given("--rel-delta")) c.rel_delta = 0.05;
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  Logger log(err, log_level());
  try {
    if (c.subcommand == "gen") require(c.out == "text" || c.out == "json", "--out must be text or json for gen");
    else if (c.subcommand != "validate") require(c.out == "json" || c.out == "csv", "--out must be json or csv");
    require(c.jobs >= 1, "--jobs must be at least 1");
    std::string body;
    if (c.subcommand == "mincut") {
      const auto kind = parse_algo(c.algo);
      require(kind == AlgoKind::CutExact || kind == AlgoKind::CutFractional || kind == AlgoKind::CutExpmech ||
                  kind == AlgoKind::CutKway || kind == AlgoKind::CutNaive,
              "--algo must be expmech, kway, naive, fractional or exact");
      body = detail::run_solve(c, kind, log);
    } else if (c.subcommand == "match") {
      body = detail::run_solve(c, AlgoKind::MatchAuction, log);
    } else if (c.subcommand == "pip") {
      body = detail::run_solve(c, AlgoKind::PipRound, log);
    } else if (c.subcommand == "stability") {
      body = detail::run_stability(c, log);
    } else if (c.subcommand == "recourse") {
      body = detail::run_recourse(c, log);
    } else if (c.subcommand == "sweep") {
      body = detail::run_sweep(c, log);
    } else if (c.subcommand == "gen") {
      body = detail::run_gen(c);
    } else {
      body = detail::run_validate(c);
    }
    if (c.output.empty()) {
      out << body;
    } else {
      std::ofstream f(c.output);
      if (!f) throw ValidationError("cannot write '" + c.output + "'");
      f << body;
    }
    return 0;
  } catch (const ConvergenceError &e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError &e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

} // namespace lipgraph::cli
