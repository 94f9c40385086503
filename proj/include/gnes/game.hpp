#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gnes/errors.hpp"
#include "gnes/graph.hpp"
#include "gnes/rng.hpp"

namespace gnes {

// Closed interval of admissible actions for one player.
struct ActionInterval {
  double lo = 0.0;
  double hi = 1.0;

  double project(double v) const { return std::min(hi, std::max(lo, v)); }
  double width() const { return hi - lo; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

// J_i(x) = 1/2 q(i,i) x_i^2 + x_i * sum_{j != i} q(i,j) x_j + c_i x_i.
// The pseudo-gradient is then F(x) = Q x + c.
struct QuadraticCost {
  Eigen::MatrixXd q;
  Eigen::VectorXd c;
};

// Congestion game on a wireless ad-hoc network: user i sends at rate x_i over
// the links on its route, pays a capacity penalty on each and is rewarded for
// its own throughput. Link ids are 1-based.
struct WanetCost {
  std::vector<std::vector<int>> paths;  // paths[i-1]: link ids used by user i
  std::vector<double> capacity;         // capacity[j-1]: capacity of link j
  double kappa = 1.0;                   // weight of the congestion penalty
  std::vector<double> chi;              // chi[i-1]: utility weight of user i

  int n_links() const { return static_cast<int>(capacity.size()); }

  double load(int link, const Eigen::VectorXd& x) const {
    double sum = 0.0;
    for (std::size_t u = 0; u < paths.size(); ++u) {
      for (int l : paths[u]) {
        if (l == link) sum += x[static_cast<int>(u)];
      }
    }
    return sum;
  }
};

// Arbitrary cost supplied as callables; locality against the declared
// interference graph is the caller's responsibility.
struct CustomCost {
  std::function<double(int, const Eigen::VectorXd&)> cost;      // J_i(x)
  std::function<double(int, const Eigen::VectorXd&)> grad_own;  // dJ_i/dx_i
};

namespace detail {

// Margin below a link capacity at which the barrier is treated as singular.
inline constexpr double kCapacityMargin = 1e-9;
// Substitute magnitude for gradients past a singularity.
inline constexpr double kGradCap = 1e6;

}  // namespace detail

// Players interfere when their routes share a link.
inline PlayerGraph interference_from_paths(const std::vector<std::vector<int>>& paths) {
  const int n = static_cast<int>(paths.size());
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      bool shared = false;
      for (int a : paths[i - 1]) {
        for (int b : paths[j - 1]) {
          if (a == b) shared = true;
        }
      }
      if (shared) edges.emplace_back(i, j);
    }
  }
  return PlayerGraph(n, edges);
}

// A game over scalar actions: interference graph, per-player action interval,
// and one of the cost families above. Costs are evaluated on a full-length
// action vector; locality guarantees only coordinates in tilde-N(i) matter
// for player i.
class GameSpec {
 public:
  using CostModel = std::variant<QuadraticCost, WanetCost, CustomCost>;

  GameSpec(PlayerGraph interference, std::vector<ActionInterval> omega, CostModel cost)
      : interference_(std::move(interference)),
        omega_(std::move(omega)),
        cost_(std::move(cost)) {
    const int n = interference_.n_players();
    if (static_cast<int>(omega_.size()) != n)
      throw ValidationError("expected one action interval per player");
    for (const auto& iv : omega_) {
      if (!(iv.lo <= iv.hi)) throw ValidationError("action interval with lo > hi");
    }
    if (const auto* q = std::get_if<QuadraticCost>(&cost_)) {
      if (q->q.rows() != n || q->q.cols() != n || q->c.size() != n)
        throw ValidationError("quadratic cost dimensions do not match the player count");
      for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
          if (i != j && !interference_.has_edge(i, j) && q->q(i - 1, j - 1) != 0.0) {
            throw ValidationError("quadratic coupling between non-neighbors " +
                                  std::to_string(i) + " and " + std::to_string(j));
          }
        }
      }
    } else if (const auto* w = std::get_if<WanetCost>(&cost_)) {
      if (static_cast<int>(w->paths.size()) != n || static_cast<int>(w->chi.size()) != n)
        throw ValidationError("network cost dimensions do not match the player count");
      for (const auto& path : w->paths) {
        if (path.empty()) throw ValidationError("every user needs at least one link");
        for (int l : path) {
          if (l < 1 || l > w->n_links()) throw ValidationError("path references unknown link");
        }
      }
      // The declared graph must cover every shared-link dependency.
      const PlayerGraph derived = interference_from_paths(w->paths);
      for (const auto& [i, j] : derived.edges()) {
        if (!interference_.has_edge(i, j))
          throw ValidationError("users " + std::to_string(i) + " and " + std::to_string(j) +
                                " share a link but are not interference neighbors");
      }
    } else {
      const auto& c = std::get<CustomCost>(cost_);
      if (!c.cost || !c.grad_own) throw ValidationError("custom cost needs both callables");
    }
  }

  int n_players() const { return interference_.n_players(); }
  const PlayerGraph& interference() const { return interference_; }
  const std::vector<ActionInterval>& intervals() const { return omega_; }
  const ActionInterval& interval(int i) const { return omega_.at(i - 1); }
  const CostModel& cost_model() const { return cost_; }
  bool is_quadratic() const { return std::holds_alternative<QuadraticCost>(cost_); }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (int i = 0; i < x.size(); ++i) x[i] = omega_[i].project(x[i]);
    return x;
  }

  Eigen::VectorXd midpoint() const {
    Eigen::VectorXd x(n_players());
    for (int i = 0; i < x.size(); ++i) x[i] = omega_[i].midpoint();
    return x;
  }

  // J_i at the profile x. Throws when x is outside the cost's domain.
  double cost(int i, const Eigen::VectorXd& x) const {
    if (const auto* q = std::get_if<QuadraticCost>(&cost_)) {
      const double xi = x[i - 1];
      double coupling = 0.0;
      for (int j = 1; j <= n_players(); ++j) {
        if (j != i) coupling += q->q(i - 1, j - 1) * x[j - 1];
      }
      return 0.5 * q->q(i - 1, i - 1) * xi * xi + xi * coupling + q->c[i - 1] * xi;
    }
    if (const auto* w = std::get_if<WanetCost>(&cost_)) {
      const double xi = x[i - 1];
      if (xi <= -1.0) throw OutOfDomain("rate must exceed -1 for the throughput term");
      double total = -w->chi[i - 1] * std::log(xi + 1.0);
      for (int l : w->paths[i - 1]) {
        const double slack = w->capacity[l - 1] - w->load(l, x);
        if (slack <= detail::kCapacityMargin)
          throw SingularCost("link " + std::to_string(l) + " is at capacity");
        total += w->kappa / slack;
      }
      return total;
    }
    return std::get<CustomCost>(cost_).cost(i, x);
  }

  // dJ_i/dx_i at the profile x. Throws alongside cost().
  double grad_own(int i, const Eigen::VectorXd& x) const {
    if (const auto* q = std::get_if<QuadraticCost>(&cost_)) {
      return q->q.row(i - 1).dot(x) + q->c[i - 1];
    }
    if (const auto* w = std::get_if<WanetCost>(&cost_)) {
      const double xi = x[i - 1];
      if (xi <= -1.0) throw OutOfDomain("rate must exceed -1 for the throughput term");
      double total = -w->chi[i - 1] / (xi + 1.0);
      for (int l : w->paths[i - 1]) {
        const double slack = w->capacity[l - 1] - w->load(l, x);
        if (slack <= detail::kCapacityMargin)
          throw SingularCost("link " + std::to_string(l) + " is at capacity");
        total += w->kappa / (slack * slack);
      }
      return total;
    }
    return std::get<CustomCost>(cost_).grad_own(i, x);
  }

  // Totalized gradient for iterative schemes: a saturated link contributes a
  // large positive push (driving the rate down) instead of a throw, and the
  // result is clamped so a single bad event cannot blow up the iterate.
  double grad_own_capped(int i, const Eigen::VectorXd& x) const {
    double g;
    if (const auto* w = std::get_if<WanetCost>(&cost_)) {
      const double xi = std::max(x[i - 1], -1.0 + 1e-12);
      g = -w->chi[i - 1] / (xi + 1.0);
      for (int l : w->paths[i - 1]) {
        const double slack = w->capacity[l - 1] - w->load(l, x);
        if (slack <= detail::kCapacityMargin) {
          g += detail::kGradCap;
        } else {
          g += w->kappa / (slack * slack);
        }
      }
    } else {
      g = grad_own(i, x);
    }
    return std::min(detail::kGradCap, std::max(-detail::kGradCap, g));
  }

  // F(x): stacked own-gradients, one per player.
  Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd f(n_players());
    for (int i = 1; i <= n_players(); ++i) f[i - 1] = grad_own(i, x);
    return f;
  }

  Eigen::VectorXd pseudo_gradient_capped(const Eigen::VectorXd& x) const {
    Eigen::VectorXd f(n_players());
    for (int i = 1; i <= n_players(); ++i) f[i - 1] = grad_own_capped(i, x);
    return f;
  }

 private:
  PlayerGraph interference_;
  std::vector<ActionInterval> omega_;
  CostModel cost_;
};

inline GameSpec make_quadratic_game(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                    std::vector<ActionInterval> omega) {
  const int n = static_cast<int>(q.rows());
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (q(i - 1, j - 1) != 0.0 || q(j - 1, i - 1) != 0.0) edges.emplace_back(i, j);
    }
  }
  return GameSpec(PlayerGraph(n, edges), std::move(omega), QuadraticCost{q, c});
}

inline GameSpec make_wanet_game(WanetCost cost, std::vector<ActionInterval> omega) {
  PlayerGraph g = interference_from_paths(cost.paths);
  return GameSpec(std::move(g), std::move(omega), std::move(cost));
}

// Constants governing convergence: strong-monotonicity modulus of the
// pseudo-gradient, its Lipschitz constant, and a bound on individual
// gradient magnitudes over the action set.
struct RegularityEstimates {
  double mu = 0.0;         // (F(x)-F(y))'(x-y) >= mu |x-y|^2
  double lipschitz = 0.0;  // |F(x)-F(y)| <= lipschitz |x-y|
  double grad_bound = 0.0; // max_i sup |dJ_i/dx_i|
  bool exact = false;      // true when computed in closed form
};

namespace detail {

// Draw a point of the action box at which the cost is finite, shrinking
// toward a feasible anchor when needed (rate games are only defined while
// every link keeps slack).
inline Eigen::VectorXd sample_feasible(const GameSpec& game, const Eigen::VectorXd& anchor,
                                       Rng& rng) {
  const int n = game.n_players();
  Eigen::VectorXd u(n);
  for (int i = 1; i <= n; ++i) {
    const auto& iv = game.interval(i);
    u[i - 1] = rng.uniform_in(iv.lo, iv.hi);
  }
  double t = 1.0;
  for (int attempt = 0; attempt < 80; ++attempt) {
    Eigen::VectorXd x = anchor + t * (u - anchor);
    try {
      (void)game.pseudo_gradient(x);
      return x;
    } catch (const Error&) {
      t *= 0.5;
    }
  }
  throw OutOfDomain("could not find a feasible action profile near the anchor");
}

}  // namespace detail

// For quadratic costs the constants follow from the coupling matrix alone;
// otherwise they are estimated from sampled pairs of feasible profiles.
// Negative observed monotonicity is reported as an error rather than folded
// into a bogus modulus.
inline RegularityEstimates estimate_regularity(const GameSpec& game, int n_samples = 200,
                                               std::uint64_t seed = 20240517u) {
  RegularityEstimates out;
  if (const auto* qc = std::get_if<QuadraticCost>(&game.cost_model())) {
    const Eigen::MatrixXd sym = 0.5 * (qc->q + qc->q.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    out.mu = es.eigenvalues().minCoeff();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qc->q);
    out.lipschitz = svd.singularValues()[0];
    // |(Qx + c)_i| over the box, bounded coordinate-wise at the corners.
    double bound = 0.0;
    for (int i = 1; i <= game.n_players(); ++i) {
      double row = std::abs(qc->c[i - 1]);
      for (int j = 1; j <= game.n_players(); ++j) {
        const auto& iv = game.interval(j);
        row += std::abs(qc->q(i - 1, j - 1)) * std::max(std::abs(iv.lo), std::abs(iv.hi));
      }
      bound = std::max(bound, row);
    }
    out.grad_bound = bound;
    out.exact = true;
    return out;
  }

  Rng rng(seed);
  Eigen::VectorXd anchor(game.n_players());
  for (int i = 1; i <= game.n_players(); ++i) anchor[i - 1] = game.interval(i).lo;
  try {
    (void)game.pseudo_gradient(anchor);
  } catch (const Error&) {
    anchor = game.midpoint();
    (void)game.pseudo_gradient(anchor);  // let a genuinely empty domain propagate
  }

  double mu = std::numeric_limits<double>::infinity();
  double lip = 0.0;
  double bound = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x = detail::sample_feasible(game, anchor, rng);
    const Eigen::VectorXd y = detail::sample_feasible(game, anchor, rng);
    const Eigen::VectorXd fx = game.pseudo_gradient(x);
    const Eigen::VectorXd fy = game.pseudo_gradient(y);
    bound = std::max(bound, fx.cwiseAbs().maxCoeff());
    const double dist2 = (x - y).squaredNorm();
    if (dist2 < 1e-16) continue;
    const double inner = (fx - fy).dot(x - y);
    mu = std::min(mu, inner / dist2);
    lip = std::max(lip, (fx - fy).norm() / std::sqrt(dist2));
  }
  if (mu < -1e-9)
    throw MonotonicityViolation("sampled pseudo-gradient is not monotone (modulus " +
                                std::to_string(mu) + ")");
  out.mu = std::max(mu, 0.0);
  out.lipschitz = lip;
  out.grad_bound = bound;
  out.exact = false;
  return out;
}

}  // namespace gnes
