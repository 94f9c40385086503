#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gnes/errors.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/indexing.hpp"
#include "gnes/rng.hpp"

namespace gnes {

// Step-size schedule for the active players' gradient steps.
struct StepSizePolicy {
  enum class Kind { diminishing, constant };

  Kind kind = Kind::diminishing;
  std::vector<double> alpha;  // constant mode: one entry, or one per player

  static StepSizePolicy diminishing() { return {}; }

  static StepSizePolicy constant(double a) {
    StepSizePolicy p;
    p.kind = Kind::constant;
    p.alpha = {a};
    return p;
  }

  static StepSizePolicy constant_per_player(std::vector<double> a) {
    StepSizePolicy p;
    p.kind = Kind::constant;
    p.alpha = std::move(a);
    return p;
  }

  // nu is the player's update count including the current activation, so a
  // player's first ever step uses 1/1.
  double step_for(int player, long nu) const {
    if (kind == Kind::diminishing) return 1.0 / static_cast<double>(nu);
    if (alpha.size() == 1) return alpha[0];
    return alpha.at(player - 1);
  }

  double alpha_max() const {
    double m = 0.0;
    for (double a : alpha) m = std::max(m, a);
    return m;
  }
  double alpha_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (double a : alpha) m = std::min(m, a);
    return alpha.empty() ? 0.0 : m;
  }
};

// How the temporary estimates start off.
struct InitRule {
  enum class Kind { midpoint, uniform_random, explicit_values };

  Kind kind = Kind::midpoint;
  Eigen::VectorXd values;  // explicit mode: length N (consistent) or m (per slot)

  static InitRule midpoint() { return {}; }

  static InitRule uniform_random() {
    InitRule r;
    r.kind = Kind::uniform_random;
    return r;
  }

  static InitRule explicit_values(Eigen::VectorXd v) {
    InitRule r;
    r.kind = Kind::explicit_values;
    r.values = std::move(v);
    return r;
  }
};

// One recorded point of a run. k counts gossip events; the pair is the one
// that acted on event k (zero at the initial row, which no event produced).
struct TraceRow {
  long k = 0;
  int i = 0, j = 0;
  Eigen::VectorXd x;           // actions
  double res_consensus = 0.0;  // |x_tilde - Z|
  double res_xz = 0.0;         // |x - z|
  double res_ne = std::numeric_limits<double>::quiet_NaN();  // |x-x*|/|x*|
  double cum_consensus2 = 0.0;  // running sums, filled when tracking is on
  double cum_xz2 = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<long> first_hit;  // per error target: first k at/below it, -1 if never
  double final_error = std::numeric_limits<double>::quiet_NaN();
};

struct RunOptions {
  long stride = 10;  // record every stride-th event (initial and final rows always)
  std::optional<Eigen::VectorXd> x_star;  // enables the normalized-error column
  std::vector<double> error_targets;      // normalized thresholds checked every event
  bool track_consensus = false;           // accumulate the squared-residual sums
};

// The asynchronous gossip loop. One event: a uniformly random player wakes,
// picks a uniformly random communication neighbor, the two average every
// estimate they both maintain, then each takes a projected gradient step on
// its own action using its freshly averaged neighborhood estimates.
//
// The estimate space either mirrors the interference graph (each player
// tracks only its cost neighbors) or covers all players (the fully-coupled
// baseline); costs read true neighbors in both modes.
class Simulation {
 public:
  enum class Coupling { graphical, full };

  Simulation(GameSpec game, PlayerGraph g_c, Coupling coupling, std::uint64_t seed,
             const InitRule& init = InitRule::midpoint(),
             StepSizePolicy policy = StepSizePolicy::diminishing())
      : game_(std::move(game)),
        comm_(std::move(g_c)),
        coupling_(coupling),
        index_(coupling == Coupling::full ? IndexMap(PlayerGraph::complete(game_.n_players()))
                                          : IndexMap(game_.interference())),
        policy_(std::move(policy)),
        rng_(seed) {
    if (coupling_ == Coupling::graphical) {
      validate_communication(game_.interference(), comm_);
    } else {
      // The fully-coupled baseline relays everything everywhere, so any
      // connected spanning communication graph is admissible.
      if (comm_.n_players() != game_.n_players())
        throw ValidationError("communication graph has the wrong number of players");
      if (!comm_.is_connected())
        throw DisconnectedGraph("communication graph is not connected: " +
                                describe_components(comm_.components()));
    }
    if (policy_.kind == StepSizePolicy::Kind::constant) {
      const std::size_t n = policy_.alpha.size();
      if (n != 1 && n != static_cast<std::size_t>(game_.n_players()))
        throw ValidationError("constant step sizes: need one value or one per player");
      for (double a : policy_.alpha)
        if (!(a > 0)) throw ValidationError("constant step sizes must be positive");
    }
    nu_.assign(game_.n_players() + 1, 0);
    x_tilde_ = initial_estimates(init);
  }

  const GameSpec& game() const { return game_; }
  const PlayerGraph& comm_graph() const { return comm_; }
  const IndexMap& index() const { return index_; }
  Coupling coupling() const { return coupling_; }
  long k() const { return k_; }
  const Eigen::VectorXd& x_tilde() const { return x_tilde_; }
  long nu(int player) const { return nu_.at(player); }

  Eigen::VectorXd actions() const {
    Eigen::VectorXd x(game_.n_players());
    for (int i = 1; i <= game_.n_players(); ++i) x[i - 1] = x_tilde_[index_.action_slot(i) - 1];
    return x;
  }

  // Wake a uniformly random player and draw a uniformly random communication
  // neighbor. Consumes exactly two RNG values per event.
  std::pair<int, int> select_pair() {
    const int i = 1 + static_cast<int>(rng_.uniform_int(game_.n_players()));
    const auto& nbrs = comm_.neighbors(i);
    const int j = nbrs[rng_.uniform_int(nbrs.size())];
    return {i, j};
  }

  // Average every slot pair the two players both maintain, in place. Pure
  // protocol step, usable standalone against the matrix form.
  static void gossip_exchange(const IndexMap& map, int i, int j, Eigen::VectorXd& x_tilde) {
    for (int l : map.common_interest(i, j)) {
      const int a = map.slot(i, l) - 1;
      const int b = map.slot(j, l) - 1;
      const double avg = 0.5 * (x_tilde[a] + x_tilde[b]);
      x_tilde[a] = avg;
      x_tilde[b] = avg;
    }
  }

  // Run one gossip event and return the pair that acted.
  std::pair<int, int> step() {
    const auto [i, j] = select_pair();
    // Actions entering the gradient are the pre-exchange ones; the exchange
    // only refreshes what each player believes about the others.
    const double xi_pre = x_tilde_[index_.action_slot(i) - 1];
    const double xj_pre = x_tilde_[index_.action_slot(j) - 1];
    gossip_exchange(index_, i, j, x_tilde_);
    local_update(i, xi_pre);
    local_update(j, xj_pre);
    ++k_;
    return {i, j};
  }

  RunTrace run(long n_iters, const RunOptions& opts = {}) {
    RunTrace trace;
    trace.first_hit.assign(opts.error_targets.size(), -1);
    const double x_star_norm = opts.x_star ? opts.x_star->norm() : 0.0;
    if (opts.x_star && x_star_norm == 0.0)
      throw ValidationError("normalized error is undefined for a zero equilibrium");
    double cum_consensus2 = 0.0;
    double cum_xz2 = 0.0;

    auto normalized_error = [&](const Eigen::VectorXd& x) {
      return (x - *opts.x_star).norm() / x_star_norm;
    };
    auto record = [&](int i, int j) {
      TraceRow row;
      row.k = k_;
      row.i = i;
      row.j = j;
      row.x = actions();
      const ConsensusResidual c = consensus_residual(index_, x_tilde_);
      row.res_consensus = c.residual;
      row.res_xz = (row.x - c.z).norm();
      if (opts.x_star) row.res_ne = normalized_error(row.x);
      row.cum_consensus2 = cum_consensus2;
      row.cum_xz2 = cum_xz2;
      trace.rows.push_back(std::move(row));
    };

    const long stride = std::max<long>(1, opts.stride);
    record(0, 0);
    for (long n = 1; n <= n_iters; ++n) {
      const auto [i, j] = step();
      if (opts.track_consensus) {
        const ConsensusResidual c = consensus_residual(index_, x_tilde_);
        cum_consensus2 += c.residual * c.residual;
        cum_xz2 += (actions() - c.z).squaredNorm();
      }
      if (opts.x_star && !opts.error_targets.empty()) {
        const double ne = normalized_error(actions());
        for (std::size_t t = 0; t < opts.error_targets.size(); ++t) {
          if (trace.first_hit[t] < 0 && ne <= opts.error_targets[t]) trace.first_hit[t] = k_;
        }
      }
      if (n % stride == 0 || n == n_iters) record(i, j);
    }
    if (opts.x_star) trace.final_error = trace.rows.back().res_ne;
    return trace;
  }

 private:
  Eigen::VectorXd initial_estimates(const InitRule& init) {
    const int m = index_.total_slots();
    const int n = game_.n_players();
    Eigen::VectorXd x(m);
    switch (init.kind) {
      case InitRule::Kind::midpoint:
        for (int s = 1; s <= m; ++s) x[s - 1] = game_.interval(index_.owner(s).second).midpoint();
        return x;
      case InitRule::Kind::uniform_random:
        // Slot order (player, then tracked index ascending) fixes the draw
        // order, keeping runs reproducible.
        for (int s = 1; s <= m; ++s) {
          const auto& iv = game_.interval(index_.owner(s).second);
          x[s - 1] = rng_.uniform_in(iv.lo, iv.hi);
        }
        return x;
      case InitRule::Kind::explicit_values:
        if (init.values.size() == n) {
          for (int s = 1; s <= m; ++s) x[s - 1] = init.values[index_.owner(s).second - 1];
        } else if (init.values.size() == m) {
          x = init.values;
        } else {
          throw InfeasibleInit("explicit init needs " + std::to_string(n) + " or " +
                               std::to_string(m) + " values, got " +
                               std::to_string(init.values.size()));
        }
        for (int s = 1; s <= m; ++s) {
          const auto& iv = game_.interval(index_.owner(s).second);
          if (x[s - 1] < iv.lo || x[s - 1] > iv.hi)
            throw InfeasibleInit("initial estimate for player " +
                                 std::to_string(index_.owner(s).second) +
                                 " lies outside its action interval");
        }
        return x;
    }
    throw ValidationError("unknown init rule");
  }

  // Projected gradient step on the player's own action, then write it back
  // into its action slot; estimates of others keep their exchanged values.
  void local_update(int p, double x_pre) {
    Eigen::VectorXd profile = Eigen::VectorXd::Zero(game_.n_players());
    profile[p - 1] = x_pre;
    for (int l : game_.interference().neighbors(p)) {
      profile[l - 1] = x_tilde_[index_.slot(p, l) - 1];
    }
    const double g = game_.grad_own_capped(p, profile);
    ++nu_[p];
    const double alpha = policy_.step_for(p, nu_[p]);
    x_tilde_[index_.action_slot(p) - 1] = game_.interval(p).project(x_pre - alpha * g);
  }

  GameSpec game_;
  PlayerGraph comm_;
  Coupling coupling_;
  IndexMap index_;
  StepSizePolicy policy_;
  Rng rng_;
  Eigen::VectorXd x_tilde_;
  std::vector<long> nu_;
  long k_ = 0;
};

// Trace CSV: header k,i_k,j_k,x_1..x_N,res_consensus,res_ne; one line per
// recorded event. The initial row carries no event pair and is not emitted,
// so a zero-event run produces a header-only file. Values are printed with
// enough digits to round-trip doubles exactly.
inline void write_trace_csv(const std::string& path, const RunTrace& trace, int n_players) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open trace file for writing: " + path);
  std::fputs("k,i_k,j_k", f);
  for (int i = 1; i <= n_players; ++i) std::fprintf(f, ",x_%d", i);
  std::fputs(",res_consensus,res_ne\n", f);
  for (const TraceRow& row : trace.rows) {
    if (row.i == 0 && row.j == 0) continue;
    std::fprintf(f, "%ld,%d,%d", row.k, row.i, row.j);
    for (int i = 0; i < row.x.size(); ++i) std::fprintf(f, ",%.17g", row.x[i]);
    std::fprintf(f, ",%.17g,%.17g\n", row.res_consensus, row.res_ne);
  }
  if (std::fclose(f) != 0) throw Error("failed to close trace file: " + path);
}

}  // namespace gnes
