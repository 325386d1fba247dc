#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipgraph/error.hpp"
#include "lipgraph/graph.hpp"

namespace lipgraph {

/// Terminal sets as stored in an instance file.
struct CutSides {
  std::vector<std::size_t> S;
  std::vector<std::size_t> T;
  friend bool operator==(const CutSides &, const CutSides &) = default;
};

/// Contents of one instance file: a graph and, optionally, terminal sets.
struct InstanceFile {
  WeightedGraph graph;
  std::optional<CutSides> cut;

  [[nodiscard]] CutInstance cut_instance() const {
    if (!cut) throw ValidationError("instance has no `cut S: ... / T: ...` line");
    return CutInstance(graph, cut->S, cut->T);
  }
  friend bool operator==(const InstanceFile &, const InstanceFile &) = default;
};

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Text format
//
//   n m [bipartite U]
//   u v w            (m lines)
//   cap v b          (optional, any number)
//   cut S: ids / T: ids   (optional)
//
// Blank lines and anything after '#' are ignored.

inline void write_instance(std::ostream &os, const InstanceFile &f) {
  const auto &g = f.graph;
  os << g.num_vertices() << ' ' << g.num_edges();
  if (g.left_size()) os << " bipartite " << *g.left_size();
  os << '\n';
  for (std::size_t i = 0; i < g.num_edges(); ++i)
    os << g.edge(i).u << ' ' << g.edge(i).v << ' ' << format_double(g.weight(i)) << '\n';
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (g.capacity(v) != 1) os << "cap " << v << ' ' << g.capacity(v) << '\n';
  if (f.cut) {
    os << "cut S:";
    for (auto s : f.cut->S) os << ' ' << s;
    os << " / T:";
    for (auto t : f.cut->T) os << ' ' << t;
    os << '\n';
  }
}

inline InstanceFile read_instance(std::istream &is) {
  std::string raw;
  std::size_t lineno = 0;
  auto next_line = [&](std::string &out) {
    while (std::getline(is, raw)) {
      ++lineno;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") != std::string::npos) {
        out = raw;
        return true;
      }
    }
    return false;
  };
  auto fail = [&](const std::string &msg) { throw ParseError(lineno, msg); };
  auto parse_index = [&](const std::string &tok) -> std::size_t {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (tok.empty() || tok[0] == '-') throw std::invalid_argument(tok);
      v = std::stoull(tok, &pos);
    } catch (const std::exception &) {
      fail("expected a non-negative integer, got '" + tok + "'");
    }
    if (pos != tok.size()) fail("expected a non-negative integer, got '" + tok + "'");
    return static_cast<std::size_t>(v);
  };
  auto parse_real = [&](const std::string &tok) -> double {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception &) {
      fail("expected a number, got '" + tok + "'");
    }
    if (pos != tok.size()) fail("expected a number, got '" + tok + "'");
    return v;
  };
  auto tokens = [](const std::string &s) {
    std::istringstream ss(s);
    std::vector<std::string> out;
    for (std::string t; ss >> t;) out.push_back(t);
    return out;
  };

  std::string line;
  if (!next_line(line)) throw ParseError(lineno == 0 ? 1 : lineno, "missing header line `n m`");
  auto head = tokens(line);
  if (head.size() != 2 && !(head.size() == 4 && head[2] == "bipartite"))
    fail("header must be `n m` or `n m bipartite U`");
  const auto n = parse_index(head[0]);
  const auto m = parse_index(head[1]);
  std::optional<std::size_t> left;
  if (head.size() == 4) left = parse_index(head[3]);

  std::vector<Edge> edges;
  std::vector<double> weights;
  edges.reserve(m);
  weights.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!next_line(line)) throw ParseError(lineno + 1, "expected " + std::to_string(m) + " edge lines");
    auto t = tokens(line);
    if (t.size() != 3) fail("edge line must be `u v w`");
    edges.push_back({parse_index(t[0]), parse_index(t[1])});
    weights.push_back(parse_real(t[2]));
    if (edges.back().u >= n || edges.back().v >= n) fail("edge endpoint out of range");
    if (edges.back().u == edges.back().v) fail("self-loop");
    if (!(weights.back() >= kWeightFloor)) fail("weight below the floor 1e-9");
  }

  std::vector<int> caps;
  std::optional<CutSides> cut;
  while (next_line(line)) {
    auto t = tokens(line);
    if (t[0] == "cap") {
      if (t.size() != 3) fail("capacity line must be `cap v b`");
      auto v = parse_index(t[1]);
      auto b = parse_index(t[2]);
      if (v >= n) fail("capacity vertex out of range");
      if (b < 1) fail("capacity must be >= 1");
      if (caps.empty()) caps.assign(n, 1);
      caps[v] = static_cast<int>(b);
    } else if (t[0] == "cut") {
      if (cut) fail("duplicate cut line");
      CutSides sides;
      std::vector<std::size_t> *cur = nullptr;
      for (std::size_t k = 1; k < t.size(); ++k) {
        if (t[k] == "S:") cur = &sides.S;
        else if (t[k] == "T:") cur = &sides.T;
        else if (t[k] == "/") cur = nullptr;
        else if (cur) cur->push_back(parse_index(t[k]));
        else fail("cut line must be `cut S: ids / T: ids`");
      }
      cut = std::move(sides);
    } else {
      fail("unexpected line starting with '" + t[0] + "'");
    }
  }

  try {
    InstanceFile f{WeightedGraph(n, std::move(edges), std::move(weights), left, std::move(caps)), std::move(cut)};
    if (f.cut) (void)f.cut_instance();
    return f;
  } catch (const ParseError &) {
    throw;
  } catch (const ValidationError &e) {
    throw ParseError(lineno, e.what());
  }
}

// ---------------------------------------------------------------------------
// JSON mirror: {"n", "m", "bipartite"?, "edges": [[u,v,w],...], "cap"?: [[v,b],...],
// "cut"?: {"S": [...], "T": [...]}}

inline nlohmann::json instance_to_json(const InstanceFile &f) {
  const auto &g = f.graph;
  nlohmann::json j;
  j["n"] = g.num_vertices();
  j["m"] = g.num_edges();
  if (g.left_size()) j["bipartite"] = *g.left_size();
  auto edges = nlohmann::json::array();
  for (std::size_t i = 0; i < g.num_edges(); ++i)
    edges.push_back({g.edge(i).u, g.edge(i).v, g.weight(i)});
  j["edges"] = std::move(edges);
  auto caps = nlohmann::json::array();
  for (std::size_t v = 0; v < g.num_vertices(); ++v)
    if (g.capacity(v) != 1) caps.push_back({v, g.capacity(v)});
  if (!caps.empty()) j["cap"] = std::move(caps);
  if (f.cut) j["cut"] = {{"S", f.cut->S}, {"T", f.cut->T}};
  return j;
}

inline InstanceFile instance_from_json(const nlohmann::json &j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::optional<std::size_t> left;
    if (j.contains("bipartite")) left = j.at("bipartite").get<std::size_t>();
    std::vector<Edge> edges;
    std::vector<double> weights;
    for (const auto &e : j.at("edges")) {
      require(e.is_array() && e.size() == 3, "each edge must be [u, v, w]");
      edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
      weights.push_back(e[2].get<double>());
    }
    if (j.contains("m")) require(j.at("m").get<std::size_t>() == edges.size(), "m differs from edge count");
    std::vector<int> caps;
    if (j.contains("cap")) {
      caps.assign(n, 1);
      for (const auto &c : j.at("cap")) {
        require(c.is_array() && c.size() == 2, "each cap entry must be [v, b]");
        auto v = c[0].get<std::size_t>();
        require(v < n, "capacity vertex out of range");
        caps[v] = c[1].get<int>();
      }
    }
    std::optional<CutSides> cut;
    if (j.contains("cut"))
      cut = CutSides{j.at("cut").at("S").get<std::vector<std::size_t>>(),
                     j.at("cut").at("T").get<std::vector<std::size_t>>()};
    InstanceFile f{WeightedGraph(n, std::move(edges), std::move(weights), left, std::move(caps)), std::move(cut)};
    if (f.cut) (void)f.cut_instance();
    return f;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(std::string("malformed instance JSON: ") + e.what());
  }
}

inline InstanceFile load_instance(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open instance file '" + path + "'");
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (is_json) {
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(0, std::string("invalid JSON: ") + e.what());
    }
    return instance_from_json(j);
  }
  return read_instance(in);
}

inline void save_instance(const std::string &path, const InstanceFile &f) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write instance file '" + path + "'");
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (is_json) out << instance_to_json(f).dump(2) << '\n';
  else write_instance(out, f);
}

} // namespace lipgraph
