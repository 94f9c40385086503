#include "gnes/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gnes/errors.hpp"
#include "suite.hpp"

using namespace gnes;

TEST(UpdateProbabilities, StarAndPathHandValues) {
  // Star center is active on every event; a leaf only when it wakes or the
  // center picks it.
  const PlayerGraph star(4, {{1, 2}, {1, 3}, {1, 4}});
  const Eigen::VectorXd p = update_probabilities(star);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(p.sum(), 2.0, 1e-12);

  const PlayerGraph path(3, {{1, 2}, {2, 3}});
  const Eigen::VectorXd q = update_probabilities(path);
  EXPECT_NEAR(q[0], 0.5, 1e-15);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  EXPECT_NEAR(q[2], 0.5, 1e-15);
}

TEST(UpdateProbabilities, AlwaysSumToTwo) {
  Rng rng(5150u);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(10));
    const PlayerGraph g = suite::random_connected_graph(n, 0.4, rng);
    EXPECT_NEAR(update_probabilities(g).sum(), 2.0, 1e-12);
  }
}

TEST(GammaOf, TwoPlayersAverageInOneShot) {
  // With a single pair the only exchange already reaches consensus, so
  // nothing survives outside the consensus subspace.
  const PlayerGraph pair(2, {{1, 2}});
  const double g = gamma_of(pair, pair, PairDistribution::uniform_wakeup(pair));
  EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(GammaOf, LiesStrictlyInsideTheUnitIntervalAndCrossChecks) {
  Rng rng(86753u);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(8));
    const PlayerGraph g_i = suite::random_connected_graph(n, 0.4, rng);
    const PlayerGraph g_c = maximal_triangle_free_spanning_subgraph(g_i);
    // gamma_of internally reconciles the spectrum of the expected exchange
    // with the expected residual energy and throws on disagreement.
    double gamma = 0.0;
    EXPECT_NO_THROW(gamma = gamma_of(g_i, g_c, PairDistribution::uniform_wakeup(g_c)));
    EXPECT_GT(gamma, 0.0);
    EXPECT_LT(gamma, 1.0);
  }
}

TEST(GammaFullCoupling, RingHandValue) {
  // Expected pairwise averaging on a 3-ring with equal edge probabilities is
  // a circulant with spectrum {1, 1/2, 1/2}.
  const PlayerGraph ring3 = PlayerGraph::complete(3);
  EXPECT_NEAR(gamma_full_coupling(ring3, PairDistribution::edge_uniform(ring3)), 0.5, 1e-12);

  const PlayerGraph pair(2, {{1, 2}});
  EXPECT_NEAR(gamma_full_coupling(pair, PairDistribution::uniform_wakeup(pair)), 0.0, 1e-12);
}

TEST(GammaOf, MatchesFullCouplingWhenEveryoneInterferes) {
  // On a complete interference graph the sparse estimate space is the full
  // one, so both rates describe the same process.
  for (int n = 3; n <= 5; ++n) {
    const PlayerGraph g_i = PlayerGraph::complete(n);
    const PlayerGraph g_c = maximal_triangle_free_spanning_subgraph(g_i);
    const PairDistribution probs = PairDistribution::uniform_wakeup(g_c);
    EXPECT_NEAR(gamma_of(g_i, g_c, probs), gamma_full_coupling(g_c, probs), 1e-12) << n;
  }
}

TEST(ResidualProjection, AnnihilatesConsensusStates) {
  const PlayerGraph g_i(4, {{1, 2}, {2, 3}, {3, 4}, {1, 4}});
  const IndexMap map(g_i);
  const HMatrices hm = h_matrices(map);
  const int m = map.total_slots();
  const Eigen::MatrixXd r = Eigen::MatrixXd::Identity(m, m) - hm.h * hm.h_bar;
  // Spectral norm exactly one: the residual directions pass through whole.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  EXPECT_NEAR(svd.singularValues()[0], 1.0, 1e-10);
  // Q = R W kills replicated states for every realization.
  Rng rng(5618u);
  for (const Edge& e : g_i.edges()) {
    const Eigen::MatrixXd q = r * comm_matrix(map, g_i, e.first, e.second).dense();
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::VectorXd z(4);
      for (int i = 0; i < 4; ++i) z[i] = rng.uniform_in(-5, 5);
      EXPECT_LT((q * (hm.h * z)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(PhiTest, MatchesTheWorkedExample) {
  RateInputs in;
  in.rho = 1.0;
  in.mu = 1.0;
  in.p_max = 0.5;
  in.p_min = 0.5;
  in.alpha_max = 0.1;
  in.alpha_min = 0.1;
  const PhiResult ph = phi(in);
  EXPECT_NEAR(ph.value, 0.91, 1e-15);
  EXPECT_TRUE(ph.valid);
}

TEST(PhiTest, FlagsUselessContractions) {
  RateInputs in;
  in.rho = 1.0;
  in.mu = 0.0;  // no strong monotonicity: phi >= 1
  in.p_max = in.p_min = 0.5;
  in.alpha_max = in.alpha_min = 0.1;
  EXPECT_FALSE(phi(in).valid);

  in.mu = 1.0;
  in.alpha_max = 2.0;  // oversized step on the positive side
  EXPECT_FALSE(phi(in).valid);
}

TEST(NavConstantsTest, AssemblyFollowsTheDerivation) {
  RateInputs in;
  in.n = 1;
  in.rho = 1.0;
  in.mu = 1.0;
  in.p_max = in.p_min = 1.0;
  in.alpha_max = in.alpha_min = 0.03;
  in.lipschitz = 1.0;
  in.grad_bound = 1.0;
  in.x_max = 1.0;
  in.x_min0 = 1.0;
  in.d_star = 0.0;
  const double c1 = 1.0, c2 = 1.0;
  const NavConstants c = derive_nav_constants(in, c1, c2);
  // Straight-line rederivation with the same numbers.
  const double phi_val = 1.0 + (1.0 + 1.0 + 2.0 * 0.03) * 1.0 * 0.03 -
                         (1.0 + 1.0 + 2.0 * 1.0) * 1.0 * 0.03;
  const double head = 1.0 * 1.0 * 1.0;
  const double tail = 4.0 * 1.0 * 1.0 * 1.0 * 0.03 * 0.03 + 2.0 * 1.0 * 1.0 * 1.0 * c2;
  EXPECT_NEAR(c.c3, std::max(head, tail) / (1.0 - phi_val), 1e-12);
  EXPECT_NEAR(c.c4, 2.0 * 1.0 * 1.0 * 1.0 * c1 / (1.0 - phi_val), 1e-12);
  EXPECT_NEAR(c.a, c.c4, 1e-15);  // x_min0 = 1
  EXPECT_NEAR(c.b, c.c3, 1e-15);  // d_star = 0

  // A huge steady-state offset floors b at zero instead of going negative.
  in.d_star = 100.0;
  EXPECT_DOUBLE_EQ(derive_nav_constants(in, c1, c2).b, 0.0);
}

TEST(NavConstantsTest, RejectsDegenerateInputs) {
  RateInputs in;
  in.n = 1;
  in.rho = 1.0;
  in.mu = 0.0;  // phi invalid
  in.p_max = in.p_min = 1.0;
  in.alpha_max = in.alpha_min = 0.03;
  in.x_min0 = 1.0;
  EXPECT_THROW(derive_nav_constants(in, 1.0, 1.0), ValidationError);
  in.mu = 1.0;
  in.x_min0 = 0.0;
  EXPECT_THROW(derive_nav_constants(in, 1.0, 1.0), ValidationError);
}

TEST(NavLowerBound, MatchesTheWorkedExampleExactly) {
  // log(1 / 0.125) / log(1 / 0.5) = 3.
  const NavBound b = nav_lower_bound(0.25, 1.0, 0.0, 0.5);
  ASSERT_TRUE(b.defined);
  EXPECT_DOUBLE_EQ(b.value, 3.0);
}

TEST(NavLowerBound, UndefinedBelowTheConstantFloor) {
  EXPECT_FALSE(nav_lower_bound(0.25, 1.0, 0.2, 0.5).defined);  // eps^3 = 0.125 <= b
  EXPECT_FALSE(nav_lower_bound(0.0, 1.0, 0.0, 0.5).defined);
  EXPECT_FALSE(nav_lower_bound(1.0, 1.0, 0.0, 0.5).defined);
  EXPECT_FALSE(nav_lower_bound(0.25, 0.0, 0.0, 0.5).defined);
}

namespace {

GameSpec coupled_pair() {
  Eigen::MatrixXd q(2, 2);
  q << 2, -0.5, -0.5, 2;
  Eigen::VectorXd c(2);
  c << 1, 1;
  return make_quadratic_game(q, c, {{-10, 10}, {-10, 10}});
}

}  // namespace

TEST(EmpiricalNav, RequiresConstantStepsCommonStartAndSeeds) {
  const GameSpec game = coupled_pair();
  const PlayerGraph pair(2, {{1, 2}});
  const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(2, -2.0 / 3.0);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(empirical_nav(game, pair, Simulation::Coupling::graphical,
                             StepSizePolicy::diminishing(), InitRule::explicit_values(x0),
                             x_star, 0.3, {1, 2}, 100, 9u, 100),
               ValidationError);
  EXPECT_THROW(empirical_nav(game, pair, Simulation::Coupling::graphical,
                             StepSizePolicy::constant(0.05), InitRule::uniform_random(), x_star,
                             0.3, {1, 2}, 100, 9u, 100),
               ValidationError);
  EXPECT_THROW(empirical_nav(game, pair, Simulation::Coupling::graphical,
                             StepSizePolicy::constant(0.05), InitRule::explicit_values(x0),
                             x_star, 0.3, {}, 100, 9u, 100),
               ValidationError);
  // The box midpoint is zero, which the normalization cannot absorb.
  EXPECT_THROW(empirical_nav(game, pair, Simulation::Coupling::graphical,
                             StepSizePolicy::constant(0.05), InitRule::midpoint(), x_star, 0.3,
                             {1, 2}, 100, 9u, 100),
               InfeasibleInit);
}

TEST(EmpiricalNav, SettlesAndShrinksWithLooserTolerance) {
  const GameSpec game = coupled_pair();
  const PlayerGraph pair(2, {{1, 2}});
  const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(2, -2.0 / 3.0);
  const InitRule init = InitRule::explicit_values(Eigen::VectorXd::Ones(2));
  const StepSizePolicy policy = StepSizePolicy::constant(0.05);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);

  const NavEstimate loose = empirical_nav(game, pair, Simulation::Coupling::graphical, policy,
                                          init, x_star, 0.3, seeds, 5000, 99u, 5000);
  ASSERT_TRUE(loose.reached);
  EXPECT_GE(loose.k, 0);
  EXPECT_EQ(loose.n_seeds, 20);
  EXPECT_DOUBLE_EQ(loose.x0_norm, std::sqrt(2.0));
  EXPECT_GE(loose.d_star, 0.0);

  const NavEstimate tight = empirical_nav(game, pair, Simulation::Coupling::graphical, policy,
                                          init, x_star, 0.15, seeds, 5000, 99u, 5000);
  ASSERT_TRUE(tight.reached);
  EXPECT_LE(loose.k, tight.k);
}

TEST(EmpiricalNav, ReportsAHorizonCap) {
  // The pilot runs long enough to locate the settled offset, but the scan
  // stops after three events, long before any seed can get there.
  const GameSpec game = coupled_pair();
  const PlayerGraph pair(2, {{1, 2}});
  const NavEstimate est = empirical_nav(
      game, pair, Simulation::Coupling::graphical, StepSizePolicy::constant(0.05),
      InitRule::explicit_values(Eigen::VectorXd::Ones(2)),
      Eigen::VectorXd::Constant(2, -2.0 / 3.0), 0.05, {1, 2, 3}, 3, 9u, 5000);
  EXPECT_FALSE(est.reached);
  EXPECT_EQ(est.k, -1);
}

TEST(TimingModelTest, TwoPlayerHandValues) {
  // The pair shares no third neighbor, so only the pipeline term remains:
  // t_av1 = s, against the baseline r + s.
  const PlayerGraph pair(2, {{1, 2}});
  const TimingModel t = timing_model(pair, pair, 1.0, 1.0);
  EXPECT_NEAR(t.t_av1, 1.0, 1e-15);
  EXPECT_NEAR(t.t_av2, 2.0, 1e-15);
}

TEST(TimingModelTest, TriangleHandValues) {
  // Every pair swaps exactly the third player's estimate: t_av1 = r + s.
  const PlayerGraph k3 = PlayerGraph::complete(3);
  const TimingModel t = timing_model(k3, k3, 1.0, 1.0);
  EXPECT_NEAR(t.t_av1, 2.0, 1e-12);
  EXPECT_NEAR(t.t_av2, 3.0, 1e-15);
}

TEST(TimingModelTest, ValidatesItsInputs) {
  const PlayerGraph pair(2, {{1, 2}});
  EXPECT_THROW(timing_model(pair, pair, -1.0, 1.0), ValidationError);
  EXPECT_THROW(timing_model(pair, pair, 1.0, 0.0), ValidationError);
  EXPECT_THROW(timing_model(pair, pair, Eigen::MatrixXd::Identity(3, 3), 1, 1),
               BadDistribution);
  Eigen::MatrixXd neg(2, 2);
  neg << 0, -1, 1, 0;
  EXPECT_THROW(timing_model(pair, pair, neg, 1, 1), BadDistribution);
  Eigen::MatrixXd self(2, 2);
  self << 1, 0, 0, 1;  // probability mass on a non-edge (the diagonal)
  EXPECT_THROW(timing_model(pair, pair, self, 1, 1), BadDistribution);
  Eigen::MatrixXd short_row(2, 2);
  short_row << 0, 0.5, 1, 0;
  EXPECT_THROW(timing_model(pair, pair, short_row, 1, 1), BadDistribution);
}

TEST(TimingModelTest, SparseProtocolNeverCostsMore) {
  Rng rng(30309u);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(10));
    const PlayerGraph g_i = suite::random_connected_graph(n, 0.4, rng);
    const PlayerGraph g_c = maximal_triangle_free_spanning_subgraph(g_i);
    const double r = rng.uniform_in(0.1, 3.0);
    const double s = rng.uniform_in(0.1, 3.0);
    const TimingModel t = timing_model(g_i, g_c, r, s);
    EXPECT_LE(t.t_av1, t.t_av2 + 1e-12);
    EXPECT_GT(t.t_av1, 0.0);
  }
}

TEST(SpeedupReportTest, CombinesIterationAndTimingAdvantages) {
  TimingModel t;
  t.t_av1 = 1.0;
  t.t_av2 = 2.0;
  const SpeedupReport rep = speedup_report(100, 400, true, t);
  EXPECT_EQ(rep.k_graphical, 100);
  EXPECT_EQ(rep.k_full, 400);
  EXPECT_FALSE(rep.full_censored);
  EXPECT_DOUBLE_EQ(rep.iteration_ratio, 4.0);
  EXPECT_DOUBLE_EQ(rep.timing_ratio, 2.0);
  EXPECT_DOUBLE_EQ(rep.speedup, 8.0);

  const SpeedupReport censored = speedup_report(100, 400, false, t);
  EXPECT_TRUE(censored.full_censored);
  EXPECT_DOUBLE_EQ(censored.speedup, 8.0);

  EXPECT_THROW(speedup_report(0, 400, true, t), TargetNotReached);
  EXPECT_THROW(speedup_report(-1, 400, true, t), TargetNotReached);
  EXPECT_THROW(speedup_report(100, 0, true, t), TargetNotReached);
}

TEST(SpeedupReportTest, TraceOverloadReadsFirstHits) {
  TimingModel t;
  t.t_av1 = 1.0;
  t.t_av2 = 3.0;
  RunTrace graphical, full;
  graphical.first_hit = {50};
  full.first_hit = {200};
  const SpeedupReport rep = speedup_report(graphical, full, 0, t);
  EXPECT_DOUBLE_EQ(rep.iteration_ratio, 4.0);
  EXPECT_DOUBLE_EQ(rep.speedup, 12.0);

  RunTrace missed;
  missed.first_hit = {-1};
  EXPECT_THROW(speedup_report(missed, full, 0, t), TargetNotReached);
  EXPECT_THROW(speedup_report(graphical, missed, 0, t), TargetNotReached);
}
