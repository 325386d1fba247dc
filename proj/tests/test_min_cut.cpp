#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lipgraph/harness/oracles.hpp"
#include "lipgraph/min_cut.hpp"
#include "support.hpp"

using namespace lipgraph;
using lipgraph::testing::bernoulli_sem;

namespace {

CutInstance single_edge(double w = 1.0) { return CutInstance(WeightedGraph(2, {{0, 1}}, {w}), {0}, {1}); }

CutInstance four_cycle() {
  return CutInstance(WeightedGraph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, std::vector<double>(4, 1.0)), {0}, {2});
}

CutInstance unit_path3() { return CutInstance(WeightedGraph(3, {{0, 1}, {1, 2}}, {1.0, 1.0}), {0}, {2}); }

double l2(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

} // namespace

TEST(Fractional, SingleEdge) {
  auto frac = solve_fractional(single_edge(2.0), 1.0);
  EXPECT_NEAR(frac.y[0], -0.5, 1e-9);
  EXPECT_NEAR(frac.y[1], 0.5, 1e-9);
  EXPECT_NEAR(frac.objective_f, 2.0, 1e-9);
}

TEST(Fractional, FourCycleWithinOnePlusEps) {
  for (double eps : {0.1, 0.5, 1.0}) {
    auto frac = solve_fractional(four_cycle(), eps);
    EXPECT_LE(frac.objective_f, (1.0 + eps) * 2.0 + 1e-9);
    EXPECT_GE(frac.objective_f, 2.0 - 1e-9);
  }
}

TEST(Fractional, InvariantsAndRelaxationBound) {
  RandomTape tape(41);
  for (int k = 0; k < 40; ++k) {
    auto inst = random_cut_instance(4 + k % 10, 0.35, tape, 3);
    auto frac = solve_fractional(inst, 0.3 + tape.next());
    const auto &y = frac.y;
    const double ys = y[inst.s0()], yt = y[inst.t0()];
    EXPECT_NEAR(yt - ys, 1.0, 1e-6);
    EXPECT_NEAR(std::accumulate(y.begin(), y.end(), 0.0), 0.0, 1e-6);
    for (auto s : inst.S) EXPECT_NEAR(y[s], ys, 1e-9);
    for (auto t : inst.T) EXPECT_NEAR(y[t], yt, 1e-9);
    for (double v : y) {
      EXPECT_GE(v, -1.0 - 1e-6);
      EXPECT_LE(v, 1.0 + 1e-6);
      EXPECT_GE(v, ys - 1e-6);
      EXPECT_LE(v, yt + 1e-6);
    }
    EXPECT_GE(frac.objective_f, mincut_maxflow(inst).weight - 1e-6);
  }
}

TEST(Fractional, PerturbationWithinCalibratedBound) {
  const double C = lipgraph::testing::calibration().at("fractional_constant").get<double>();
  RandomTape tape(42);
  for (int k = 0; k < 20; ++k) {
    auto inst = random_cut_instance(5 + k % 8, 0.4, tape, 2);
    const double eps = 0.5 + tape.next();
    const auto e = static_cast<std::size_t>(tape.next() * static_cast<double>(inst.graph.num_edges()));
    const double delta = 1e-3 * inst.graph.weight(e);
    auto a = solve_fractional(inst, eps, -1.0, 1.0);
    auto b = solve_fractional(perturb(inst, {e, delta}), eps, -1.0, 1.0);
    EXPECT_LE(l2(a.y, b.y), C * delta / (eps * lambda2(inst.graph)) + 1e-7);
  }
}

TEST(Fractional, IterationCapRaisesConvergenceError) {
  CutSolveOptions opt;
  opt.max_iter = 1;
  EXPECT_THROW((void)solve_fractional(four_cycle(), 1.0, -1.0, 1.0, opt), ConvergenceError);
}

TEST(Fractional, RejectsBadParameters) {
  EXPECT_THROW((void)solve_fractional(four_cycle(), 0.0), ValidationError);
  EXPECT_THROW((void)solve_fractional(four_cycle(), 1.0, 0.5, 0.5), ValidationError);
}

TEST(Threshold, PathExpectationIsOne) {
  const std::vector<double> y{0.0, 0.5, 1.0};
  auto ex = threshold_expectation(y, unit_path3(), 0.0, 1.0);
  EXPECT_DOUBLE_EQ(ex.expected_cut, 1.0);
  EXPECT_DOUBLE_EQ(ex.feasible_mass, 1.0);
}

TEST(Threshold, BelowMinimumGivesEmptyInfeasibleSet) {
  auto inst = unit_path3();
  auto r = make_cut_result(inst, threshold_set({0.0, 0.5, 1.0}, -0.1));
  EXPECT_EQ(std::count(r.A.begin(), r.A.end(), true), 0);
  EXPECT_FALSE(r.feasible);
  EXPECT_EQ(r.weight, 0.0);
}

TEST(Threshold, FullIntervalExpectationIsHalfTheFractionalValue) {
  RandomTape tape(43);
  for (int k = 0; k < 20; ++k) {
    auto inst = random_cut_instance(4 + k % 10, 0.35, tape, 2);
    auto frac = solve_fractional(inst, 1.0);
    auto ex = threshold_expectation(frac.y, inst, -1.0, 1.0);
    EXPECT_NEAR(ex.expected_cut, 0.5 * frac.objective_f, 1e-9);

    const std::size_t N = 4000;
    std::vector<double> draws;
    for (std::size_t t = 0; t < N; ++t) {
      auto tt = RandomTape::derive(k, t);
      draws.push_back(threshold_round(frac, inst, tt).weight);
    }
    auto ms = lipgraph::testing::mean_sem(draws);
    EXPECT_NEAR(ms.mean, ex.expected_cut, 4.0 * ms.sem + 1e-12);
  }
}

TEST(Threshold, BestRoundingRecoversIntegralOptimum) {
  RandomTape tape(44);
  for (int k = 0; k < 30; ++k) {
    auto inst = random_cut_instance(4 + k % 11, 0.35, tape, 2);
    const double opt = mincut_maxflow(inst).weight;
    auto frac = solve_fractional(inst, 0.01);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < 1000; ++t) {
      auto tt = RandomTape::derive(100 + k, t);
      auto r = threshold_round(frac, inst, tt);
      if (r.feasible) best = std::min(best, r.weight);
    }
    EXPECT_EQ(best, opt) << "instance " << k;
  }
}

TEST(ExpMech, DominantBucketChosenWithProbabilityOneMinusGamma) {
  const double gamma = 0.25, eta = 2.0;
  const double a = std::log(3.0 / gamma) / eta;
  const std::vector<double> theta{0.0, a, a, a};
  const std::size_t N = 20000;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(45, t);
    hits += sample_expmech(theta, eta, tape) == 0;
  }
  const double p = 1.0 / (1.0 + gamma);
  EXPECT_NEAR(static_cast<double>(hits) / N, p, 4.0 * bernoulli_sem(p, N));
  EXPECT_GE(static_cast<double>(hits) / N, 1.0 - gamma);
}

TEST(ExpMech, EqualScoresGiveUniformBuckets) {
  const std::vector<double> theta(4, 1.5);
  const std::size_t N = 20000;
  std::vector<std::size_t> count(4, 0);
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(46, t);
    ++count[sample_expmech(theta, 3.0, tape)];
  }
  for (auto c : count) EXPECT_NEAR(static_cast<double>(c) / N, 0.25, 4.0 * bernoulli_sem(0.25, N));
}

TEST(ExpMech, SingleEdgeFeasibleOutputIsSource) {
  auto inst = single_edge();
  auto prep = prepare_expmech(inst, 0.5);
  ASSERT_EQ(prep.buckets.size(), 2U);
  EXPECT_EQ(prep.theta[0], prep.theta[1]);
  const std::size_t N = 20000;
  std::size_t feasible = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(47, t);
    auto r = sample_expmech(prep, inst, tape);
    if (r.feasible) {
      ++feasible;
      EXPECT_EQ(r.A, (VertexSet{true, false}));
    }
  }
  EXPECT_NEAR(static_cast<double>(feasible) / N, 2.0 / 3.0, 4.0 * bernoulli_sem(2.0 / 3.0, N));
}

TEST(ExpMech, TapeOrderIsLambdaThenBucketsThenThreshold) {
  auto inst = four_cycle();
  auto prep = prepare_expmech(inst, 0.25);
  RandomTape tape(48);
  RandomTape replay(48);
  ExpMechDraw d;
  (void)sample_expmech(prep, inst, tape, &d);
  EXPECT_EQ(tape.counter(), 1U + prep.buckets.size() + 1U);
  const double u0 = replay.next();
  EXPECT_DOUBLE_EQ(d.Lambda2, prep.lambda2 / 2.0 + u0 * prep.lambda2 / 2.0);
  for (std::size_t i = 0; i < prep.buckets.size(); ++i) (void)replay.next();
  const auto &b = prep.buckets[d.bucket];
  EXPECT_DOUBLE_EQ(d.tau, b.lo + (b.hi - b.lo) * replay.next());
}

TEST(ExpMech, BucketDistributionMovesWithScores) {
  RandomTape gen(49);
  auto inst = random_cut_instance(8, 0.4, gen, 1);
  auto pert = perturb(inst, {0, 0.05});
  auto a = prepare_expmech(inst, 0.25), b = prepare_expmech(pert, 0.25);
  const double n = static_cast<double>(inst.graph.num_vertices());
  const double eta = a.gamma / (a.epsilon * a.lambda2 * std::sqrt(n));
  double sup = 0.0;
  for (std::size_t i = 0; i < a.theta.size(); ++i)
    if (std::isfinite(a.theta[i])) sup = std::max(sup, std::abs(a.theta[i] - b.theta[i]));
  const auto pa = expmech_probabilities(a.theta, eta), pb = expmech_probabilities(b.theta, eta);
  const double l1 = l1_distance(pa, pb);
  EXPECT_LE(l1, std::exp(2.0 * eta * sup) - 1.0 + 1e-12);

  const std::size_t N = 20000;
  std::size_t disagree = 0;
  for (std::size_t t = 0; t < N; ++t) {
    auto tape = RandomTape::derive(50, t);
    auto [i, j] = coupled_expmech(a.theta, b.theta, eta, tape);
    disagree += i != j;
  }
  EXPECT_LE(static_cast<double>(disagree) / N, l1 + 3.0 * bernoulli_sem(std::max(l1, 1.0 / N), N));
}

TEST(ExpMech, RejectsDisconnectedGraphAndNonIntegralBuckets) {
  CutInstance disc(WeightedGraph(4, {{0, 1}, {2, 3}}, {1.0, 1.0}), {0}, {3});
  EXPECT_THROW((void)prepare_expmech(disc, 0.25), ValidationError);
  EXPECT_THROW((void)prepare_expmech(four_cycle(), 0.3), ValidationError);
  EXPECT_EQ(bucket_count(0.25), 4U);
  EXPECT_EQ(bucket_count(1.0 / 3.0), 3U);
}

TEST(Kway, CombineExamples) {
  const std::vector<VertexSet> sets{{false, true, true, false}, {false, false, true, true}, {false, false, true, false}};
  EXPECT_EQ(combine_kway(sets, 2), (VertexSet{false, false, true, false}));
  EXPECT_EQ(combine_kway(sets, 1), (VertexSet{false, true, true, true}));
  const std::vector<VertexSet> same(5, VertexSet{true, false, true});
  EXPECT_EQ(combine_kway(same, 5), same.front());
  EXPECT_THROW((void)combine_kway(sets, 0), ValidationError);
  EXPECT_THROW((void)combine_kway(sets, 4), ValidationError);
}

TEST(Kway, ParameterExample) {
  auto kp = kway_params(0.25, 0.1);
  EXPECT_EQ(kp.k, 576U);
  EXPECT_EQ(kp.r_min, 288U);
  EXPECT_EQ(kp.r_max, 324U);
  EXPECT_THROW((void)kway_params(0.5, 0.1), ValidationError);
  EXPECT_THROW((void)kway_params(0.25, 1.0), ValidationError);
}

TEST(Kway, RangeAverageWithinSubmodularBound) {
  RandomTape gen(51);
  for (int k = 0; k < 10; ++k) {
    auto inst = random_cut_instance(6 + k % 8, 0.4, gen, 1);
    auto prep = prepare_kway(inst, 0.25, 0.25);
    ASSERT_TRUE(prep.balanced);
    for (std::size_t t = 0; t < 20; ++t) {
      auto tape = RandomTape::derive(52 + k, t);
      KwayDraw d;
      auto r = sample_kway(prep, inst, tape, &d);
      const double avg = std::accumulate(d.range_cuts.begin(), d.range_cuts.end(), 0.0) /
                         static_cast<double>(d.range_cuts.size());
      const double kk = static_cast<double>(prep.params.k);
      EXPECT_LE(avg, 4.0 / (prep.beta * kk) * d.sum_set_cuts + 1e-9);
      EXPECT_EQ(r.A, combine_kway(d.sets, d.r));
      EXPECT_EQ(tape.counter(), prep.params.k + 1);
    }
  }
}

TEST(Kway, UnbalancedTerminalsAreFlaggedInfeasible) {
  CutInstance inst(WeightedGraph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}, std::vector<double>(4, 1.0)), {0, 1, 2, 3},
                   {4});
  auto prep = prepare_kway(inst, 0.25, 0.25);
  EXPECT_FALSE(prep.balanced);
  EXPECT_FALSE(prep.warning.empty());
  for (std::size_t t = 0; t < 20; ++t) {
    auto tape = RandomTape::derive(53, t);
    EXPECT_FALSE(sample_kway(prep, inst, tape).feasible);
  }
}

TEST(Naive, SingleEdge) {
  auto frac = solve_naive_fractional(single_edge(1.5), 0.1);
  EXPECT_EQ(frac.y, (std::vector<double>{0.0, 1.0}));
  EXPECT_DOUBLE_EQ(frac.objective_f, 1.5);
}

TEST(Naive, ObjectiveAndPerturbationBounds) {
  RandomTape gen(54);
  for (int k = 0; k < 20; ++k) {
    auto inst = random_cut_instance(5 + k % 9, 0.4, gen, 2);
    const double n = static_cast<double>(inst.graph.num_vertices());
    const double opt = mincut_maxflow(inst).weight;
    for (double Lambda : {1e-4, 0.1, 1.0}) {
      auto frac = solve_naive_fractional(inst, Lambda);
      EXPECT_GE(frac.objective_f, opt - 1e-6);
      EXPECT_LE(frac.objective_f, opt + Lambda * n / 2.0 + 1e-6);
    }
    const double Lambda = 0.5;
    const double delta = 1e-3 * inst.graph.weight(0);
    auto a = solve_naive_fractional(inst, Lambda);
    auto b = solve_naive_fractional(perturb(inst, {0, delta}), Lambda);
    // Strong convexity: Lambda ||y - y~||^2 <= delta |(y - y~)_u - (y - y~)_v| <= sqrt2 delta ||y - y~||.
    EXPECT_LE(l2(a.y, b.y), std::sqrt(2.0) * delta / Lambda + 1e-7);
  }
}

TEST(Oracle, MaxFlowAgreesWithEnumeration) {
  RandomTape gen(55);
  for (int k = 0; k < 1000; ++k) {
    auto inst = random_cut_instance(2 + k % 11, 0.3, gen, 3);
    auto flow = mincut_maxflow(inst);
    auto en = mincut_enumerate(inst);
    ASSERT_TRUE(en);
    EXPECT_EQ(flow.weight, en->weight) << "instance " << k;
    EXPECT_EQ(flow.A, en->A) << "instance " << k;
    EXPECT_TRUE(flow.feasible);
  }
}

TEST(Oracle, KnownCuts) {
  auto r = mincut_exact(single_edge(2.5));
  EXPECT_EQ(r.A, (VertexSet{true, false}));
  EXPECT_EQ(r.weight, 2.5);
  auto lb = lower_bound_instance(12, 1.0, 1.0);
  auto c = mincut_exact(lb.instance);
  EXPECT_EQ(std::count(c.A.begin(), c.A.end(), true), 1);
  EXPECT_TRUE(c.A[lb.instance.s0()]);
  EXPECT_NEAR(c.weight, static_cast<double>(lb.left_size) * lb.light_weight, 1e-12);
}
