#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "gnes/engine.hpp"
#include "gnes/errors.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/indexing.hpp"

namespace gnes {

// Probability that player i is one of the two active players on an event,
// under uniform wake-up with uniform neighbor choice: the player wakes
// itself, or one of its neighbors wakes and picks it. Sums to 2 over V.
inline Eigen::VectorXd update_probabilities(const PlayerGraph& g_c) {
  const int n = g_c.n_players();
  Eigen::VectorXd p(n);
  for (int i = 1; i <= n; ++i) {
    double acc = 1.0 / n;
    for (int j : g_c.neighbors(i)) acc += (1.0 / n) * (1.0 / g_c.degree(j));
    p[i - 1] = acc;
  }
  return p;
}

namespace detail {

inline Eigen::VectorXd eigenvalues_descending(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error("eigenvalue decomposition failed");
  return es.eigenvalues().reverse();
}

}  // namespace detail

// Consensus contraction rate: the largest eigenvalue of the expected
// communication matrix below its N-fold eigenvalue 1. Cross-checked against
// the largest eigenvalue of E[Q'Q], Q = (I - H H_bar) W, which measures how
// much of an exchange survives outside the consensus subspace; the two
// characterizations must agree tightly or the index space is inconsistent.
inline double gamma_of(const IndexMap& map, const PlayerGraph& g_c,
                       const PairDistribution& probs) {
  const int m = map.total_slots();
  const int n = map.n_players();
  const Eigen::MatrixXd w_bar = expected_comm_matrix(map, g_c, probs);
  const Eigen::VectorXd eigs = detail::eigenvalues_descending(w_bar);
  const double lambda2 = eigs[n];  // eigenvalue 1 has multiplicity exactly N

  const HMatrices hm = h_matrices(map);
  const Eigen::MatrixXd residual_proj = Eigen::MatrixXd::Identity(m, m) - hm.h * hm.h_bar;
  Eigen::MatrixXd e_qtq = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [e, p] : probs.entries()) {
    const Eigen::MatrixXd q = residual_proj * comm_matrix(map, g_c, e.first, e.second).dense();
    e_qtq += p * q.transpose() * q;
  }
  const double lambda_qtq = detail::eigenvalues_descending(e_qtq)[0];
  if (std::abs(lambda2 - lambda_qtq) > 1e-10)
    throw ValidationError("consensus rate mismatch: lambda2(W_bar)=" + std::to_string(lambda2) +
                          " vs lambda_max(E[Q'Q])=" + std::to_string(lambda_qtq));
  return lambda2;
}

inline double gamma_of(const PlayerGraph& g_i, const PlayerGraph& g_c,
                       const PairDistribution& probs) {
  return gamma_of(IndexMap(g_i), g_c, probs);
}

// Contraction rate of the fully-coupled baseline. Its expected communication
// matrix is the expected pairwise-averaging matrix on N coordinates expanded
// by an identity block per player, so the rate is the second largest
// eigenvalue of the N x N expectation.
inline double gamma_full_coupling(const PlayerGraph& g_c, const PairDistribution& probs) {
  const int n = g_c.n_players();
  Eigen::MatrixXd w_bar = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [e, p] : probs.entries()) {
    const auto [i, j] = e;
    w_bar(i - 1, i - 1) -= 0.5 * p;
    w_bar(j - 1, j - 1) -= 0.5 * p;
    w_bar(i - 1, j - 1) += 0.5 * p;
    w_bar(j - 1, i - 1) += 0.5 * p;
  }
  return detail::eigenvalues_descending(w_bar)[1];
}

// Everything the rate bounds consume.
struct RateInputs {
  int n = 0;               // number of players
  double gamma = 0.0;      // consensus contraction rate
  double mu = 0.0;         // strong-monotonicity modulus
  double rho = 0.0;        // pseudo-gradient Lipschitz constant (spectral)
  double p_max = 0.0;      // extremes of the per-player update probabilities
  double p_min = 0.0;
  double alpha_max = 0.0;  // extremes of the constant step sizes
  double alpha_min = 0.0;
  double lipschitz = 0.0;  // max per-player gradient Lipschitz constant L
  double grad_bound = 0.0; // C: sup over the action set of |dJ_i/dx_i|
  double x_max = 0.0;      // largest action magnitude allowed by the box
  double x_min0 = 0.0;     // smallest initial action magnitude
  double d_star = 0.0;     // steady-state offset of the constant-step iterate
};

// One-step contraction factor of the expected squared error under constant
// steps; the bound is informative only when it lies strictly inside (0,1).
struct PhiResult {
  double value = 1.0;
  bool valid = false;
};

inline PhiResult phi(const RateInputs& in) {
  PhiResult out;
  out.value = 1.0 + (1.0 + in.rho * in.rho + 2.0 * in.alpha_max) * in.p_max * in.alpha_max -
              (1.0 + in.rho * in.rho + 2.0 * in.mu) * in.p_min * in.alpha_min;
  out.valid = out.value > 0.0 && out.value < 1.0;
  return out;
}

// Constants of the epsilon-averaging-time bound, assembled from the two
// run-dependent envelope constants (c1, c2) that the theory leaves free.
struct NavConstants {
  double c3 = 0.0;
  double c4 = 0.0;
  double a = 0.0;
  double b = 0.0;
};

inline NavConstants derive_nav_constants(const RateInputs& in, double c1, double c2) {
  const PhiResult ph = phi(in);
  if (!ph.valid)
    throw ValidationError("step sizes give no contraction: phi = " + std::to_string(ph.value));
  if (in.x_min0 <= 0.0)
    throw ValidationError("initial actions must be bounded away from zero for the bound");
  NavConstants out;
  const double l2p = 2.0 * in.lipschitz * in.lipschitz * in.p_max;
  const double n = static_cast<double>(in.n);
  const double head = n * in.x_max * in.x_max;
  const double tail =
      4.0 * n * in.grad_bound * in.grad_bound * in.p_max * in.alpha_max * in.alpha_max +
      l2p * c2;
  out.c3 = std::max(head, tail) / (1.0 - ph.value);
  out.c4 = l2p * c1 / (1.0 - ph.value);
  out.a = out.c4 / (in.x_min0 * in.x_min0);
  out.b = std::max(0.0, out.c3 - in.d_star * in.d_star) / (in.x_min0 * in.x_min0);
  return out;
}

// Lower bound on the number of events before the normalized excess error can
// stay below eps with confidence eps. Undefined whenever eps^3 fails to clear
// the constant floor b.
struct NavBound {
  double value = 0.0;
  bool defined = false;
};

inline NavBound nav_lower_bound(double gamma, double a, double b, double eps) {
  NavBound out;
  if (!(gamma > 0.0 && gamma < 1.0)) return out;
  const double denom = eps * eps * eps - b;
  if (denom <= 0.0 || a <= 0.0) return out;
  out.value = std::log(a / denom) / std::log(1.0 / std::sqrt(gamma));
  out.defined = true;
  return out;
}

// Empirical epsilon-averaging time: the first event index at which the
// fraction of seeds whose normalized excess distance to x* is at least eps
// drops to eps or below.
struct NavEstimate {
  long k = -1;
  bool reached = false;
  double d_star = 0.0;
  double x0_norm = 0.0;
  int n_seeds = 0;
};

inline NavEstimate empirical_nav(const GameSpec& game, const PlayerGraph& g_c,
                                 Simulation::Coupling coupling, const StepSizePolicy& policy,
                                 const InitRule& init, const Eigen::VectorXd& x_star, double eps,
                                 const std::vector<std::uint64_t>& seeds, long horizon,
                                 std::uint64_t pilot_seed, long pilot_iters) {
  if (policy.kind != StepSizePolicy::Kind::constant)
    throw ValidationError("the averaging-time definition assumes constant step sizes");
  if (init.kind == InitRule::Kind::uniform_random)
    throw ValidationError("averaging time needs a common initial state across seeds");
  if (seeds.empty()) throw ValidationError("need at least one seed");

  NavEstimate out;
  out.n_seeds = static_cast<int>(seeds.size());

  // Common initial state; also enforces the nonzero-initial-action guard the
  // normalization relies on.
  {
    Simulation probe(game, g_c, coupling, 1u, init, policy);
    const Eigen::VectorXd x0 = probe.actions();
    for (int i = 0; i < x0.size(); ++i) {
      if (x0[i] == 0.0)
        throw InfeasibleInit("player " + std::to_string(i + 1) +
                             " starts at zero; the normalized bound needs |x_i(0)| > 0");
    }
    out.x0_norm = x0.norm();
  }

  // Pilot: the steady-state offset is the smallest distance to x* seen along
  // one long run.
  {
    Simulation pilot(game, g_c, coupling, pilot_seed, init, policy);
    double best = (pilot.actions() - x_star).norm();
    for (long k = 1; k <= pilot_iters; ++k) {
      pilot.step();
      best = std::min(best, (pilot.actions() - x_star).norm());
    }
    out.d_star = best;
  }

  std::vector<int> exceed(static_cast<std::size_t>(horizon) + 1, 0);
  for (std::uint64_t seed : seeds) {
    Simulation sim(game, g_c, coupling, seed, init, policy);
    for (long k = 0; k <= horizon; ++k) {
      if (k > 0) sim.step();
      const double excess = ((sim.actions() - x_star).norm() - out.d_star) / out.x0_norm;
      if (excess >= eps) ++exceed[k];
    }
  }
  const double limit = eps * static_cast<double>(seeds.size());
  for (long k = 0; k <= horizon; ++k) {
    if (static_cast<double>(exceed[k]) <= limit) {
      out.k = k;
      out.reached = true;
      return out;
    }
  }
  return out;  // horizon-capped
}

// Average wall-clock cost of one gossip event under the abstract timing model
// (r per scalar exchanged both ways, s per gradient-step pipeline of the
// block owner), against the fully-coupled baseline that always ships N-1
// estimates. The sparse protocol can never be slower.
struct TimingModel {
  double t_av1 = 0.0;  // estimate-sparse protocol
  double t_av2 = 0.0;  // fully-coupled baseline
};

inline TimingModel timing_model(const PlayerGraph& g_i, const PlayerGraph& g_c,
                                const Eigen::MatrixXd& select_prob, double r, double s) {
  if (!(r > 0.0) || !(s > 0.0)) throw ValidationError("timing constants must be positive");
  const int n = g_i.n_players();
  if (select_prob.rows() != n || select_prob.cols() != n)
    throw BadDistribution("selection matrix has the wrong shape");
  TimingModel out;
  for (int i = 1; i <= n; ++i) {
    double row_sum = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p = select_prob(i - 1, j - 1);
      if (p < 0.0) throw BadDistribution("negative selection probability");
      if (p > 0.0 && !g_c.has_edge(i, j))
        throw BadDistribution("selection probability on a non-communication pair");
      row_sum += p;
    }
    if (std::abs(row_sum - 1.0) > 1e-12)
      throw BadDistribution("selection probabilities of player " + std::to_string(i) +
                            " sum to " + std::to_string(row_sum));
  }
  for (int i = 1; i <= n; ++i) {
    // Shared open-neighborhood size in the interference graph: the number of
    // third-party estimates the pair swaps.
    for (int j : g_c.neighbors(i)) {
      const auto& ni = g_i.neighbors(i);
      const auto& nj = g_i.neighbors(j);
      std::size_t a = 0, b = 0;
      int shared = 0;
      while (a < ni.size() && b < nj.size()) {
        if (ni[a] == nj[b]) {
          ++shared;
          ++a;
          ++b;
        } else if (ni[a] < nj[b]) {
          ++a;
        } else {
          ++b;
        }
      }
      const double m_i = static_cast<double>(g_i.degree(i) + 1);
      out.t_av1 += (1.0 / n) * select_prob(i - 1, j - 1) *
                   (static_cast<double>(shared) * r + (m_i / n) * s);
    }
  }
  out.t_av2 = static_cast<double>(n - 1) * r + s;
  return out;
}

inline Eigen::MatrixXd uniform_selection(const PlayerGraph& g_c) {
  const int n = g_c.n_players();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j : g_c.neighbors(i)) p(i - 1, j - 1) = 1.0 / g_c.degree(i);
  }
  return p;
}

inline TimingModel timing_model(const PlayerGraph& g_i, const PlayerGraph& g_c, double r,
                                double s) {
  return timing_model(g_i, g_c, uniform_selection(g_c), r, s);
}

// Combined advantage of the sparse protocol: how many fewer events it needs
// to a common error target, times how much cheaper each event is.
struct SpeedupReport {
  long k_graphical = 0;
  long k_full = 0;
  bool full_censored = false;  // baseline never hit the target; k_full is its horizon
  double iteration_ratio = 0.0;
  double timing_ratio = 0.0;
  double speedup = 0.0;
};

inline SpeedupReport speedup_report(long k_graphical, long k_full, bool full_reached,
                                    const TimingModel& t) {
  if (k_graphical <= 0)
    throw TargetNotReached("sparse protocol never reached the error target");
  if (k_full <= 0) throw TargetNotReached("baseline horizon must be positive");
  SpeedupReport out;
  out.k_graphical = k_graphical;
  out.k_full = k_full;
  out.full_censored = !full_reached;
  out.iteration_ratio = static_cast<double>(k_full) / static_cast<double>(k_graphical);
  out.timing_ratio = t.t_av2 / t.t_av1;
  out.speedup = out.iteration_ratio * out.timing_ratio;
  return out;
}

inline SpeedupReport speedup_report(const RunTrace& graphical, const RunTrace& full,
                                    std::size_t target_index, const TimingModel& t) {
  const long k1 = graphical.first_hit.at(target_index);
  const long k2 = full.first_hit.at(target_index);
  if (k1 < 0) throw TargetNotReached("sparse protocol never reached the error target");
  if (k2 < 0) throw TargetNotReached("baseline never reached the error target");
  return speedup_report(k1, k2, true, t);
}

}  // namespace gnes
