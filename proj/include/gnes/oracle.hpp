#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "gnes/errors.hpp"
#include "gnes/game.hpp"

namespace gnes {

struct OracleOptions {
  double step = 0.0;           // 0: pick 1/L from the regularity estimate
  double tol = 1e-10;          // stop when the iterate moves less than this
  long max_iters = 1'000'000;
};

struct OracleResult {
  Eigen::VectorXd x;
  std::string method;
  long iterations = 0;
  double residual = 0.0;  // max_i |x_i - P(x - step F(x))_i| at the step used
  double step = 0.0;
};

// Worst per-player distance of x from being a fixed point of the projected
// unit-step gradient map; zero exactly at an equilibrium.
inline double vi_residual(const GameSpec& game, const Eigen::VectorXd& x) {
  return (x - game.project(x - game.pseudo_gradient(x))).cwiseAbs().maxCoeff();
}

// Synchronous projected pseudo-gradient iteration with a fixed step. Uses the
// totalized gradient so that a step through a cost singularity recovers
// instead of aborting; the returned residual is measured at the final point.
inline OracleResult solve_projected_gradient(const GameSpec& game, Eigen::VectorXd x0,
                                             OracleOptions opts = {}) {
  double step = opts.step;
  if (step <= 0.0) {
    const RegularityEstimates reg = estimate_regularity(game);
    step = reg.lipschitz > 0.0 ? 1.0 / reg.lipschitz : 1.0;
  }
  Eigen::VectorXd x = game.project(std::move(x0));
  for (long k = 1; k <= opts.max_iters; ++k) {
    const Eigen::VectorXd next = game.project(x - step * game.pseudo_gradient_capped(x));
    const double moved = (next - x).norm();
    x = next;
    if (moved <= opts.tol) {
      OracleResult out;
      out.x = x;
      out.method = "projected-gradient";
      out.iterations = k;
      out.step = step;
      out.residual = (x - game.project(x - step * game.pseudo_gradient_capped(x)))
                         .cwiseAbs()
                         .maxCoeff();
      return out;
    }
  }
  throw NoConvergence(opts.max_iters, "projected gradient did not settle within " +
                                          std::to_string(opts.max_iters) + " iterations");
}

struct GridSolveResult {
  Eigen::VectorXd x;
  long sweeps = 0;
};

// Independent equilibrium check on a discretized action space: all players
// simultaneously move to their best grid response until the profile repeats.
// An immediate repeat is a (grid) equilibrium; a longer repeat is a genuine
// best-response cycle and is reported as such. Grid points whose cost is
// undefined count as infinitely bad. Ties resolve to the smaller action.
inline GridSolveResult solve_best_response_grid(const GameSpec& game, int points_per_axis,
                                                long max_sweeps = 10'000) {
  if (points_per_axis < 2) throw ValidationError("need at least two grid points per player");
  const int n = game.n_players();
  auto grid_value = [&](int i, int t) {
    const auto& iv = game.interval(i);
    return iv.lo + iv.width() * static_cast<double>(t) / (points_per_axis - 1);
  };

  std::vector<int> idx(n, 0);  // start every player at the low end
  std::map<std::vector<int>, long> seen;
  seen[idx] = 0;
  Eigen::VectorXd x(n);
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (int i = 1; i <= n; ++i) x[i - 1] = grid_value(i, idx[i - 1]);
    std::vector<int> next(n);
    for (int i = 1; i <= n; ++i) {
      Eigen::VectorXd probe = x;
      double best = std::numeric_limits<double>::infinity();
      int best_t = idx[i - 1];
      for (int t = 0; t < points_per_axis; ++t) {
        probe[i - 1] = grid_value(i, t);
        double value;
        try {
          value = game.cost(i, probe);
        } catch (const Error&) {
          continue;
        }
        if (value < best) {  // strict: earlier (smaller) grid point wins ties
          best = value;
          best_t = t;
        }
      }
      if (best == std::numeric_limits<double>::infinity())
        throw OutOfDomain("player " + std::to_string(i) + " has no feasible grid action");
      next[i - 1] = best_t;
    }
    if (next == idx) {
      GridSolveResult out;
      out.x = x;
      out.sweeps = sweep;
      return out;
    }
    if (auto it = seen.find(next); it != seen.end()) {
      throw CycleDetected(sweep - it->second,
                          "best-response dynamics entered a cycle of period " +
                              std::to_string(sweep - it->second));
    }
    seen[next] = sweep;
    idx = std::move(next);
  }
  throw NoConvergence(max_sweeps, "best-response sweeps did not settle");
}

}  // namespace gnes
