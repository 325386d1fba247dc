#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lipgraph/harness/algorithms.hpp"
#include "lipgraph/matching.hpp"
#include "lipgraph/pip.hpp"
#include "support.hpp"

using namespace lipgraph;
using lipgraph::testing::bernoulli_sem;
using lipgraph::testing::mean_sem;

namespace {

PipInstance scalar_pip(double w = 1.0) {
  return PipInstance(Eigen::MatrixXd::Ones(1, 1), Vec::Ones(1), Vec::Constant(1, w), 1.0);
}

/// LP optimum max w^T x over {x in [0,1]^m : A x <= b} by enumerating every
/// vertex: choose m tight rows among the box faces and the packing rows.
double lp_vertex_oracle(const PipInstance &pi) {
  const auto m = static_cast<Eigen::Index>(pi.cols());
  const auto p = static_cast<Eigen::Index>(pi.rows());
  const Eigen::Index total = 2 * m + p;
  Eigen::MatrixXd G(total, m);
  Vec h(total);
  G.setZero();
  for (Eigen::Index i = 0; i < m; ++i) {
    G(i, i) = 1.0; // x_i <= 1
    h(i) = 1.0;
    G(m + i, i) = -1.0; // -x_i <= 0
    h(m + i) = 0.0;
  }
  G.bottomRows(p) = pi.A;
  h.tail(p) = pi.b;
  double best = 0.0;
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(m));
  auto rec = [&](auto &&self, Eigen::Index start, Eigen::Index depth) -> void {
    if (depth == m) {
      Eigen::MatrixXd S(m, m);
      Vec r(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        S.row(k) = G.row(pick[static_cast<std::size_t>(k)]);
        r(k) = h(pick[static_cast<std::size_t>(k)]);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (!lu.isInvertible()) return;
      const Vec x = lu.solve(r);
      if (((G * x - h).array() <= 1e-9).all()) best = std::max(best, pi.w.dot(x));
      return;
    }
    for (Eigen::Index i = start; i < total; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      self(self, i + 1, depth + 1);
    }
  };
  rec(rec, 0, 0);
  return best;
}

double brute_force_pip(const PipInstance &pi) {
  const auto m = pi.cols();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
    Vec y = Vec::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) y(static_cast<Eigen::Index>(i)) = mask >> i & 1U;
    if (((pi.A * y - pi.b).array() <= 1e-12).all()) best = std::max(best, pi.w.dot(y));
  }
  return best;
}

double dot(const Vec &w, const std::vector<double> &x) {
  return w.dot(Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size())));
}

} // namespace

TEST(PipFractional, ScalarExample) {
  auto x = solve_pip_fractional(scalar_pip());
  EXPECT_NEAR(x[0], 1.0, 1e-9);
}

TEST(PipFractional, ScalingWeightsLeavesSolutionUnchanged) {
  RandomTape gen(81);
  auto pi = random_pip_instance(3, 6, 1.0, 2.0, gen);
  auto x = solve_pip_fractional(pi, 1e-12);
  auto y = solve_pip_fractional(PipInstance(pi.A, pi.b, 3.0 * pi.w, pi.c), 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], y[i], 1e-8);
}

TEST(PipFractional, MatchesMatchingProgramOnIncidenceInstance) {
  RandomTape gen(82);
  for (int k = 0; k < 10; ++k) {
    auto g = random_bipartite_graph(3, 4, 0.5, 10, gen, 2);
    auto x = solve_pip_fractional(pip_from_bmatching(g), 1e-12);
    auto f = solve_matching_fractional(g, 1.0, 1e-12);
    for (std::size_t e = 0; e < x.size(); ++e) EXPECT_NEAR(x[e], f.x[e], 1e-7);
  }
}

TEST(PipFractional, FeasibleAndHalfOfLpOptimum) {
  RandomTape gen(83);
  for (int k = 0; k < 30; ++k) {
    auto pi = random_pip_instance(1 + k % 3, 2 + k % 4, 1.0 + k % 2, 2.0, gen);
    auto x = solve_pip_fractional(pi);
    const Vec xv = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
    EXPECT_LE((pi.A * xv - pi.b).maxCoeff(), 1e-8);
    EXPECT_GE(xv.minCoeff(), -1e-9);
    EXPECT_LE(xv.maxCoeff(), 1.0 + 1e-9);
    const double lp = lp_vertex_oracle(pi);
    EXPECT_GE(pi.w.dot(xv), 0.5 * lp - 1e-8);
    EXPECT_LE(pi.w.dot(xv), lp + 1e-8);
    EXPECT_GE(lp, brute_force_pip(pi) - 1e-9);
  }
}

TEST(PipRound, GammaAndScalarRounding) {
  auto pi = scalar_pip();
  EXPECT_DOUBLE_EQ(pip_gamma(pi), std::exp(1.0));
  const std::size_t N = 40000;
  std::size_t ones = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(84, t);
    auto s = round_pip({1.0}, pi, tape);
    ones += s.y[0];
    EXPECT_TRUE(s.feasible);
  }
  const double p = std::exp(-1.0);
  EXPECT_NEAR(static_cast<double>(ones) / N, p, 4.0 * bernoulli_sem(p, N));
}

TEST(PipRound, ZeroFractionalRoundsToZero) {
  RandomTape gen(85);
  auto pi = random_pip_instance(3, 5, 1.0, 2.0, gen);
  for (std::size_t t = 0; t < 100; ++t) {
    auto tape = RandomTape::derive(86, t);
    auto s = round_pip(std::vector<double>(5, 0.0), pi, tape);
    EXPECT_EQ(s.y, std::vector<int>(5, 0));
    EXPECT_TRUE(s.feasible);
    EXPECT_EQ(tape.counter(), 5U);
  }
}

TEST(PipRound, FeasibilityValueAndEndToEnd) {
  RandomTape gen(87);
  for (int k = 0; k < 12; ++k) {
    const double B = 1.0 + k % 2;
    auto pi = random_pip_instance(1 + k % 6, 4 + k % 12, B, 2.0, gen);
    auto x = solve_pip_fractional(pi);
    const double gamma = pip_gamma(pi);
    const double opt = brute_force_pip(pi);
    const std::size_t N = 4000;
    std::vector<double> value, feas;
    for (std::size_t t = 0; t < N; ++t) {
      auto tape = RandomTape::derive(88 + k, t);
      auto s = round_pip(x, pi, tape);
      value.push_back(s.value);
      feas.push_back(s.feasible ? 1.0 : 0.0);
    }
    const auto vf = mean_sem(feas), vv = mean_sem(value);
    EXPECT_GE(vf.mean, 1.0 - 1.0 / pi.c - 3.0 * vf.sem) << "instance " << k;
    EXPECT_NEAR(vv.mean, dot(pi.w, x) / gamma, 3.5 * vv.sem + 1e-12) << "instance " << k;
    EXPECT_GE(vv.mean, opt / (2.0 * gamma * (1.0 + 1e-9)) - 3.0 * vv.sem) << "instance " << k;
  }
}

TEST(PipRound, IdentityCouplingDistanceEqualsScaledFractionalDistance) {
  RandomTape gen(89);
  auto pi = random_pip_instance(3, 8, 1.0, 2.0, gen);
  auto pert = pi.perturbed(2, 0.05 * pi.w(2));
  auto x = solve_pip_fractional(pi), xt = solve_pip_fractional(pert);
  const double gamma = pip_gamma(pi);
  double expect = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) expect += std::abs(x[i] - xt[i]) / gamma;
  std::vector<double> d;
  for (std::size_t t = 0; t < 20000; ++t) {
    auto ta = RandomTape::derive(90, t), tb = ta;
    auto a = round_pip(x, pi, ta), b = round_pip(xt, pert, tb);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.y.size(); ++i) diff += a.y[i] != b.y[i];
    d.push_back(diff);
  }
  const auto ms = mean_sem(d);
  EXPECT_NEAR(ms.mean, expect, 3.5 * ms.sem + 1e-12);
}

TEST(PipExact, SmallCases) {
  EXPECT_EQ(pip_exact_small(scalar_pip(2.0)).value, 2.0);
  Eigen::MatrixXd A = Eigen::MatrixXd::Constant(2, 3, 0.25);
  auto slack = PipInstance(A, Vec::Ones(2), Vec::Ones(3), 2.0);
  EXPECT_EQ(pip_exact_small(slack).y, (std::vector<int>{1, 1, 1}));
  RandomTape gen(91);
  for (int k = 0; k < 50; ++k) {
    auto pi = random_pip_instance(3, 5, 1.0, 2.0, gen);
    auto s = pip_exact_small(pi);
    EXPECT_TRUE(s.feasible);
    EXPECT_EQ(s.value, brute_force_pip(pi));
  }
}

TEST(PipInstance, Validation) {
  try {
    PipInstance bad(Eigen::MatrixXd::Ones(1, 1), Vec::Constant(1, 0.5), Vec::Ones(1), 2.0);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("B ≥ 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(PipInstance(Eigen::MatrixXd::Constant(1, 1, 1.5), Vec::Ones(1), Vec::Ones(1), 2.0), ValidationError);
  EXPECT_THROW(PipInstance(Eigen::MatrixXd::Ones(1, 1), Vec::Ones(1), Vec::Zero(1), 2.0), ValidationError);
  EXPECT_THROW(PipInstance(Eigen::MatrixXd::Ones(1, 1), Vec::Ones(1), Vec::Ones(1), 0.5), ValidationError);
}

TEST(PipInstance, JsonRoundTrip) {
  RandomTape gen(92);
  auto pi = random_pip_instance(3, 4, 2.0, 3.0, gen);
  auto back = pip_from_json(pip_to_json(pi));
  EXPECT_EQ(back.A, pi.A);
  EXPECT_EQ(back.b, pi.b);
  EXPECT_EQ(back.w, pi.w);
  EXPECT_EQ(back.c, pi.c);
}
