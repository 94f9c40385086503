#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gnes/errors.hpp"

namespace gnes {

using Edge = std::pair<int, int>;

// Undirected simple graph over players 1..N. Edges are stored normalized
// (i < j), sorted and deduplicated, so two graphs with the same edge set
// compare equal regardless of input order.
class PlayerGraph {
 public:
  PlayerGraph(int n_players, std::vector<Edge> edges) : n_(n_players), adj_(n_players + 1) {
    if (n_ < 0) throw ValidationError("n_players must be nonnegative");
    for (auto& [a, b] : edges) {
      if (a < 1 || a > n_ || b < 1 || b > n_) {
        throw ValidationError("edge endpoint out of range: (" + std::to_string(a) + "," +
                              std::to_string(b) + ") with n_players=" + std::to_string(n_));
      }
      if (a == b) throw ValidationError("self-loop at player " + std::to_string(a));
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    for (const auto& [a, b] : edges_) {
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
  }

  static PlayerGraph complete(int n) {
    std::vector<Edge> e;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) e.emplace_back(i, j);
    return {n, std::move(e)};
  }

  int n_players() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adj_.at(i); }
  int degree(int i) const { return static_cast<int>(adj_.at(i).size()); }

  bool has_edge(int i, int j) const {
    if (i < 1 || j < 1 || i > n_ || j > n_) return false;
    const auto& nb = adj_[i];
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  // Connected components discovered by search from each unvisited vertex.
  std::vector<std::vector<int>> components() const {
    std::vector<std::vector<int>> comps;
    std::vector<char> seen(n_ + 1, 0);
    for (int start = 1; start <= n_; ++start) {
      if (seen[start]) continue;
      std::vector<int> comp, stack{start};
      seen[start] = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        comp.push_back(v);
        for (int w : adj_[v])
          if (!seen[w]) {
            seen[w] = 1;
            stack.push_back(w);
          }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  }

  bool is_connected() const { return n_ > 0 && components().size() == 1; }

  bool operator==(const PlayerGraph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

// Per-player estimate block sizes: m_i = deg(i) + 1, m = sum of m_i.
struct DegreeProfile {
  std::vector<int> m_vec;  // m_vec[i-1] = m_i
  int m = 0;
};

inline DegreeProfile degree_profile(const PlayerGraph& g) {
  DegreeProfile p;
  p.m_vec.resize(g.n_players());
  for (int i = 1; i <= g.n_players(); ++i) {
    p.m_vec[i - 1] = g.degree(i) + 1;
    p.m += p.m_vec[i - 1];
  }
  return p;
}

// Adjacency plus identity. Row i has a 1 in column j iff j's action can enter
// player i's cost (including j = i); row sums equal the block sizes m_i.
inline Eigen::MatrixXi b_matrix(const PlayerGraph& g) {
  const int n = g.n_players();
  Eigen::MatrixXi b = Eigen::MatrixXi::Identity(n, n);
  for (const auto& [i, j] : g.edges()) {
    b(i - 1, j - 1) = 1;
    b(j - 1, i - 1) = 1;
  }
  return b;
}

inline std::string describe_components(const std::vector<std::vector<int>>& comps) {
  std::ostringstream os;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    os << (c ? " | " : "") << "{";
    for (std::size_t k = 0; k < comps[c].size(); ++k) os << (k ? "," : "") << comps[c][k];
    os << "}";
  }
  return os.str();
}

// Accepts the interference graph iff it spans a single connected component.
inline PlayerGraph validate_interference(const PlayerGraph& g) {
  if (g.n_players() == 0) throw EmptyGraph("interference graph has no players");
  auto comps = g.components();
  if (comps.size() != 1) {
    throw DisconnectedGraph("interference graph is disconnected: " + describe_components(comps));
  }
  return g;
}

// Greedy triangle-free subgraph: scan edges in the given order, keep an edge
// iff it closes no triangle with the edges kept so far. For a connected input
// the result is spanning, connected, and maximal (every rejected edge has a
// covering triangle among kept edges).
inline PlayerGraph maximal_triangle_free_spanning_subgraph(const PlayerGraph& g,
                                                           const std::vector<Edge>& edge_order) {
  const int n = g.n_players();
  std::vector<Edge> sorted_input = g.edges();
  {
    std::vector<Edge> normalized = edge_order;
    for (auto& [a, b] : normalized)
      if (a > b) std::swap(a, b);
    auto check = normalized;
    std::sort(check.begin(), check.end());
    if (check != sorted_input)
      throw ValidationError("edge_order must be a permutation of the graph's edges");
  }
  std::vector<std::vector<char>> kept(n + 1, std::vector<char>(n + 1, 0));
  std::vector<std::vector<int>> kept_nbrs(n + 1);
  std::vector<Edge> out;
  for (auto [a, b] : edge_order) {
    if (a > b) std::swap(a, b);
    bool closes_triangle = false;
    for (int w : kept_nbrs[a]) {
      if (kept[b][w]) {
        closes_triangle = true;
        break;
      }
    }
    if (closes_triangle) continue;
    kept[a][b] = kept[b][a] = 1;
    kept_nbrs[a].push_back(b);
    kept_nbrs[b].push_back(a);
    out.emplace_back(a, b);
  }
  return {n, std::move(out)};
}

inline PlayerGraph maximal_triangle_free_spanning_subgraph(const PlayerGraph& g) {
  return maximal_triangle_free_spanning_subgraph(g, g.edges());  // lexicographic default
}

// Communication-graph admissibility:
//   (a) every communication edge is an interference edge,
//   (b) the communication graph spans all players and is connected,
//   (c) every pruned interference edge (u,v) has a common communication
//       neighbor w, so u and v keep receiving each other's estimates via w.
// Condition (c) certifies that g_c contains a maximal triangle-free spanning
// subgraph of g_i without enumerating them.
inline void validate_communication(const PlayerGraph& g_i, const PlayerGraph& g_c) {
  if (g_c.n_players() != g_i.n_players())
    throw NotSubgraph("communication graph has a different player count");
  for (const auto& [a, b] : g_c.edges()) {
    if (!g_i.has_edge(a, b)) {
      throw NotSubgraph("communication edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") is not an interference edge");
    }
  }
  auto comps = g_c.components();
  if (comps.size() != 1) {
    throw DisconnectedGraph("communication graph is disconnected: " + describe_components(comps));
  }
  if (g_c.edges() == g_i.edges()) return;  // G_C = G_I is always admissible
  for (const auto& [u, v] : g_i.edges()) {
    if (g_c.has_edge(u, v)) continue;
    const auto& nu = g_c.neighbors(u);
    const auto& nv = g_c.neighbors(v);
    bool covered = false;
    std::size_t p = 0, q = 0;
    while (p < nu.size() && q < nv.size()) {
      if (nu[p] == nv[q]) {
        covered = true;
        break;
      }
      (nu[p] < nv[q] ? p : q) += 1;
    }
    if (!covered) {
      throw MissingTriangleCover(u, v,
                                 "pruned edge (" + std::to_string(u) + "," + std::to_string(v) +
                                     ") has no common communication neighbor");
    }
  }
}

}  // namespace gnes
