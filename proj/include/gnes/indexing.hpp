#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "gnes/errors.hpp"
#include "gnes/graph.hpp"

namespace gnes {

// Maps estimate coordinates (i tracks j) to slots of the stacked vector.
// Player i's block is contiguous and holds one slot per j in tilde-N(i),
// ascending in j; block offsets are the running sums of the block sizes m_r.
// Slot numbering is 1-based to match the player numbering.
class IndexMap {
 public:
  explicit IndexMap(const PlayerGraph& g_i) : graph_(g_i), profile_(degree_profile(g_i)) {
    const int n = g_i.n_players();
    slot_table_ = Eigen::MatrixXi::Zero(n, n);
    owner_.assign(profile_.m + 1, {0, 0});
    neighbor_slots_.resize(n + 1);
    estimating_slots_.resize(n + 1);
    int offset = 0;
    for (int i = 1; i <= n; ++i) {
      int count = 0;
      for (int j = 1; j <= n; ++j) {
        if (i != j && !g_i.has_edge(i, j)) continue;
        ++count;
        const int s = offset + count;
        slot_table_(i - 1, j - 1) = s;
        owner_[s] = {i, j};
        if (j != i) neighbor_slots_[i].push_back(s);
        estimating_slots_[j].push_back(s);
      }
      offset += profile_.m_vec[i - 1];
    }
  }

  const PlayerGraph& graph() const { return graph_; }
  const DegreeProfile& profile() const { return profile_; }
  int n_players() const { return graph_.n_players(); }
  int total_slots() const { return profile_.m; }

  bool interested(int i, int j) const { return i == j || graph_.has_edge(i, j); }

  // s_ij: 1-based slot holding player i's estimate of player j's action.
  int slot(int i, int j) const {
    const int s = slot_table_(i - 1, j - 1);
    if (s == 0) {
      throw NotANeighbor("player " + std::to_string(j) + " does not affect player " +
                         std::to_string(i));
    }
    return s;
  }

  int action_slot(int i) const { return slot(i, i); }

  // (i, j) owning a slot.
  std::pair<int, int> owner(int s) const { return owner_.at(s); }

  // Slots of player i's estimates of its interference neighbors (own action
  // excluded); this is what the local gradient step reads.
  const std::vector<int>& neighbor_slots(int i) const { return neighbor_slots_.at(i); }

  // All slots that hold some player's estimate of j's action; averaging them
  // gives the network-wide mean estimate of j.
  const std::vector<int>& slots_estimating(int j) const { return estimating_slots_.at(j); }

  // Players whose actions both i and j track: tilde-N(i) intersect tilde-N(j).
  std::vector<int> common_interest(int i, int j) const {
    std::vector<int> out;
    for (int l = 1; l <= n_players(); ++l) {
      if (interested(i, l) && interested(j, l)) out.push_back(l);
    }
    return out;
  }

  // Unit vector at slot s_ij, or the zero vector when j does not affect i.
  Eigen::VectorXd unit_selector(int i, int j) const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(total_slots());
    if (interested(i, j)) e[slot(i, j) - 1] = 1.0;
    return e;
  }

 private:
  PlayerGraph graph_;
  DegreeProfile profile_;
  Eigen::MatrixXi slot_table_;
  std::vector<std::pair<int, int>> owner_;
  std::vector<std::vector<int>> neighbor_slots_;
  std::vector<std::vector<int>> estimating_slots_;
};

// One gossip event's averaging matrix, kept as the list of slot pairs it
// averages. W = I - 1/2 * sum over paired slots of the rank-one differences;
// applying it averages x[a] and x[b] for each pair and leaves the rest alone.
struct CommMatrix {
  int m = 0;
  int i = 0, j = 0;
  std::vector<std::pair<int, int>> slot_pairs;  // (s_il, s_jl), 1-based

  void apply_in_place(Eigen::VectorXd& x) const {
    for (const auto& [a, b] : slot_pairs) {
      const double avg = 0.5 * (x[a - 1] + x[b - 1]);
      x[a - 1] = avg;
      x[b - 1] = avg;
    }
  }

  Eigen::VectorXd apply(Eigen::VectorXd x) const {
    apply_in_place(x);
    return x;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(m, m);
    for (const auto& [a, b] : slot_pairs) {
      w(a - 1, a - 1) = 0.5;
      w(b - 1, b - 1) = 0.5;
      w(a - 1, b - 1) = 0.5;
      w(b - 1, a - 1) = 0.5;
    }
    return w;
  }
};

inline CommMatrix comm_matrix(const IndexMap& map, const PlayerGraph& g_c, int i_k, int j_k) {
  if (!g_c.has_edge(i_k, j_k)) {
    throw NotCommNeighbors("players " + std::to_string(i_k) + " and " + std::to_string(j_k) +
                           " are not communication neighbors");
  }
  CommMatrix w;
  w.m = map.total_slots();
  w.i = i_k;
  w.j = j_k;
  const auto shared = map.common_interest(i_k, j_k);
  // A communication edge is an interference edge, so the pair itself is
  // always among the shared indices; anything else indicates a broken map.
  bool has_i = false, has_j = false;
  for (int l : shared) {
    has_i |= (l == i_k);
    has_j |= (l == j_k);
    w.slot_pairs.emplace_back(map.slot(i_k, l), map.slot(j_k, l));
  }
  if (!has_i || !has_j)
    throw ValidationError("gossip pair does not track its own actions; index map is inconsistent");
  return w;
}

// H stacks the slot selectors per tracked player (column j marks every slot
// holding an estimate of j); H_bar averages each column's slots. H_bar * H
// is the identity.
struct HMatrices {
  Eigen::MatrixXd h;      // m x N
  Eigen::MatrixXd h_bar;  // N x m
};

inline HMatrices h_matrices(const IndexMap& map) {
  const int m = map.total_slots();
  const int n = map.n_players();
  HMatrices out;
  out.h = Eigen::MatrixXd::Zero(m, n);
  out.h_bar = Eigen::MatrixXd::Zero(n, m);
  for (int j = 1; j <= n; ++j) {
    const auto& slots = map.slots_estimating(j);
    for (int s : slots) {
      out.h(s - 1, j - 1) = 1.0;
      out.h_bar(j - 1, s - 1) = 1.0 / static_cast<double>(slots.size());
    }
  }
  return out;
}

// Probability of each unordered communication pair being the one that gossips.
class PairDistribution {
 public:
  // Scheduler model: a uniformly random player wakes and picks a uniformly
  // random communication neighbor.
  static PairDistribution uniform_wakeup(const PlayerGraph& g_c) {
    PairDistribution d;
    const double n = g_c.n_players();
    for (const auto& [i, j] : g_c.edges()) {
      const double p = (1.0 / n) * (1.0 / g_c.degree(i) + 1.0 / g_c.degree(j));
      d.entries_.emplace_back(Edge{i, j}, p);
    }
    d.validate();
    return d;
  }

  // Every communication edge equally likely.
  static PairDistribution edge_uniform(const PlayerGraph& g_c) {
    PairDistribution d;
    const double p = 1.0 / static_cast<double>(g_c.edges().size());
    for (const auto& e : g_c.edges()) d.entries_.emplace_back(e, p);
    d.validate();
    return d;
  }

  static PairDistribution explicit_probs(std::vector<std::pair<Edge, double>> entries) {
    PairDistribution d;
    d.entries_ = std::move(entries);
    for (auto& [e, p] : d.entries_)
      if (e.first > e.second) std::swap(e.first, e.second);
    d.validate();
    return d;
  }

  const std::vector<std::pair<Edge, double>>& entries() const { return entries_; }

 private:
  void validate() const {
    double sum = 0.0;
    for (const auto& [e, p] : entries_) {
      if (p < 0) throw BadDistribution("negative pair probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw BadDistribution("pair probabilities sum to " + std::to_string(sum));
  }

  std::vector<std::pair<Edge, double>> entries_;
};

// Expectation of the per-event averaging matrix under the given pair law.
inline Eigen::MatrixXd expected_comm_matrix(const IndexMap& map, const PlayerGraph& g_c,
                                            const PairDistribution& probs) {
  const int m = map.total_slots();
  Eigen::MatrixXd w_bar = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [e, p] : probs.entries()) {
    w_bar += p * comm_matrix(map, g_c, e.first, e.second).dense();
  }
  return w_bar;
}

// Same expectation written directly as identity minus the probability-weighted
// sum of pairwise slot differences; normalizing every ordered neighbor pair by
// twice the total communication degree makes each edge equally likely, so this
// equals expected_comm_matrix under the edge-uniform law.
inline Eigen::MatrixXd expected_comm_matrix_closed_form(const IndexMap& map,
                                                        const PlayerGraph& g_c) {
  const int m = map.total_slots();
  double total_degree = 0;
  for (int i = 1; i <= g_c.n_players(); ++i) total_degree += g_c.degree(i);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i <= g_c.n_players(); ++i) {
    for (int j : g_c.neighbors(i)) {
      for (int l : map.common_interest(i, j)) {
        const Eigen::VectorXd d = map.unit_selector(i, l) - map.unit_selector(j, l);
        acc += d * d.transpose();
      }
    }
  }
  return Eigen::MatrixXd::Identity(m, m) - acc / (2.0 * total_degree);
}

// Mean estimate per tracked player (z), its replication onto the slots (Z),
// and the distance between the stacked vector and Z.
struct ConsensusResidual {
  Eigen::VectorXd z;  // length N
  Eigen::VectorXd big_z;  // length m
  double residual = 0.0;
};

inline ConsensusResidual consensus_residual(const IndexMap& map, const Eigen::VectorXd& x_tilde) {
  ConsensusResidual out;
  const int n = map.n_players();
  out.z = Eigen::VectorXd::Zero(n);
  out.big_z = Eigen::VectorXd::Zero(map.total_slots());
  for (int j = 1; j <= n; ++j) {
    const auto& slots = map.slots_estimating(j);
    double sum = 0;
    for (int s : slots) sum += x_tilde[s - 1];
    out.z[j - 1] = sum / static_cast<double>(slots.size());
    for (int s : slots) out.big_z[s - 1] = out.z[j - 1];
  }
  out.residual = (x_tilde - out.big_z).norm();
  return out;
}

}  // namespace gnes
