#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gnes/engine.hpp"
#include "gnes/errors.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/rng.hpp"
#include "gnes/wanet.hpp"

namespace gnes {

struct OracleSettings {
  bool enabled = true;
  double step = 0.0;  // 0: auto
  double tol = 1e-10;
  long max_iters = 1'000'000;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) ok |= (key == a);
    if (!ok) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
T get_as(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for \"" + std::string(key) + "\" in " + where + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_as<T>(j, key, where);
}

inline std::vector<Edge> parse_edges(const json& j, const char* key, const std::string& where) {
  std::vector<Edge> edges;
  for (const auto& e : j.at(key)) {
    if (!e.is_array() || e.size() != 2)
      throw ConfigError("\"" + std::string(key) + "\" in " + where +
                        " must be a list of [i, j] pairs");
    edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  }
  return edges;
}

inline std::vector<ActionInterval> parse_intervals(const json& j, const std::string& where) {
  std::vector<ActionInterval> out;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2)
      throw ConfigError("\"intervals\" in " + where + " must be a list of [lo, hi] pairs");
    out.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
  }
  return out;
}

}  // namespace detail

// Everything one simulation or analysis run needs, loadable from a single
// JSON document. Parsing is strict (unknown keys are errors) and loading
// normalizes the document: optional keys get their defaults filled in, edge
// lists are sorted with i < j, so emit-after-parse is a fixed point.
struct RunConfig {
  // game descriptor
  std::string game_type;  // "quadratic" | "wanet" | "wanet_benchmark"
  Eigen::MatrixXd q;      // quadratic
  Eigen::VectorXd c;
  WanetCost wanet;        // wanet
  double bench_kappa = 2.0;  // wanet_benchmark
  std::vector<ActionInterval> intervals;
  std::vector<Edge> interference_edges;

  // communication graph: derived greedily unless edges are given
  bool auto_gm = true;
  std::vector<Edge> comm_edges;

  StepSizePolicy policy;
  InitRule init;
  std::uint64_t seed = 1;
  long n_iters = 1000;
  long stride = 10;
  std::string algorithm = "graphical";  // or "full"
  std::string output_dir = "out";
  OracleSettings oracle;

  static RunConfig from_json(const nlohmann::json& root) {
    using detail::get_as;
    using detail::get_or;
    using nlohmann::json;
    RunConfig cfg;
    detail::reject_unknown_keys(root,
                                {"game", "interference_edges", "communication", "step_size",
                                 "init", "seed", "n_iters", "stride", "algorithm", "output_dir",
                                 "oracle"},
                                "config");
    if (!root.contains("game")) throw ConfigError("missing key \"game\" in config");
    const json& g = root.at("game");
    cfg.game_type = get_as<std::string>(g, "type", "game");
    if (cfg.game_type == "quadratic") {
      detail::reject_unknown_keys(g, {"type", "q", "c", "intervals"}, "game");
      const auto rows = get_as<std::vector<std::vector<double>>>(g, "q", "game");
      const auto c = get_as<std::vector<double>>(g, "c", "game");
      const int n = static_cast<int>(rows.size());
      if (n == 0) throw ConfigError("quadratic game needs at least one player");
      cfg.q.resize(n, n);
      for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
          throw ConfigError("\"q\" must be a square matrix");
        for (int j = 0; j < n; ++j) cfg.q(i, j) = rows[i][j];
      }
      if (static_cast<int>(c.size()) != n) throw ConfigError("\"c\" length must match \"q\"");
      cfg.c = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
      if (!g.contains("intervals")) throw ConfigError("missing key \"intervals\" in game");
      cfg.intervals = detail::parse_intervals(g.at("intervals"), "game");
    } else if (cfg.game_type == "wanet") {
      detail::reject_unknown_keys(g, {"type", "paths", "capacities", "kappa", "chi", "intervals"},
                                  "game");
      cfg.wanet.paths = get_as<std::vector<std::vector<int>>>(g, "paths", "game");
      cfg.wanet.capacity = get_as<std::vector<double>>(g, "capacities", "game");
      cfg.wanet.kappa = get_as<double>(g, "kappa", "game");
      cfg.wanet.chi = get_as<std::vector<double>>(g, "chi", "game");
      if (!g.contains("intervals")) throw ConfigError("missing key \"intervals\" in game");
      cfg.intervals = detail::parse_intervals(g.at("intervals"), "game");
    } else if (cfg.game_type == "wanet_benchmark") {
      detail::reject_unknown_keys(g, {"type", "kappa"}, "game");
      cfg.bench_kappa = get_or<double>(g, "kappa", "game", 2.0);
      const WanetBenchmark b = WanetBenchmark::standard(cfg.bench_kappa);
      cfg.wanet = b.cost;
      cfg.intervals = b.omega;
    } else {
      throw ConfigError("unknown game type \"" + cfg.game_type + "\"");
    }

    if (root.contains("interference_edges")) {
      cfg.interference_edges = detail::parse_edges(root, "interference_edges", "config");
    }

    if (root.contains("communication")) {
      const json& comm = root.at("communication");
      detail::reject_unknown_keys(comm, {"auto_gm", "edges"}, "communication");
      if (comm.contains("edges")) {
        if (get_or<bool>(comm, "auto_gm", "communication", false))
          throw ConfigError("give either communication edges or auto_gm, not both");
        cfg.auto_gm = false;
        cfg.comm_edges = detail::parse_edges(comm, "edges", "communication");
      } else if (!get_or<bool>(comm, "auto_gm", "communication", true)) {
        throw ConfigError("communication needs either auto_gm=true or an edge list");
      }
    }

    if (root.contains("step_size")) {
      const json& s = root.at("step_size");
      detail::reject_unknown_keys(s, {"kind", "alpha"}, "step_size");
      const auto kind = get_as<std::string>(s, "kind", "step_size");
      if (kind == "diminishing") {
        cfg.policy = StepSizePolicy::diminishing();
      } else if (kind == "constant") {
        if (!s.contains("alpha")) throw ConfigError("constant step sizes need \"alpha\"");
        if (s.at("alpha").is_array()) {
          cfg.policy =
              StepSizePolicy::constant_per_player(get_as<std::vector<double>>(s, "alpha", "step_size"));
        } else {
          cfg.policy = StepSizePolicy::constant(get_as<double>(s, "alpha", "step_size"));
        }
      } else {
        throw ConfigError("unknown step-size kind \"" + kind + "\"");
      }
    }

    if (root.contains("init")) {
      const json& in = root.at("init");
      detail::reject_unknown_keys(in, {"kind", "values"}, "init");
      const auto kind = get_as<std::string>(in, "kind", "init");
      if (kind == "midpoint") {
        cfg.init = InitRule::midpoint();
      } else if (kind == "uniform_random") {
        cfg.init = InitRule::uniform_random();
      } else if (kind == "explicit") {
        const auto vals = get_as<std::vector<double>>(in, "values", "init");
        cfg.init = InitRule::explicit_values(
            Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size())));
      } else {
        throw ConfigError("unknown init kind \"" + kind + "\"");
      }
    }

    cfg.seed = get_or<std::uint64_t>(root, "seed", "config", 1);
    cfg.n_iters = get_or<long>(root, "n_iters", "config", 1000);
    cfg.stride = get_or<long>(root, "stride", "config", 10);
    cfg.algorithm = get_or<std::string>(root, "algorithm", "config", "graphical");
    if (cfg.algorithm != "graphical" && cfg.algorithm != "full")
      throw ConfigError("algorithm must be \"graphical\" or \"full\"");
    cfg.output_dir = get_or<std::string>(root, "output_dir", "config", "out");
    if (cfg.n_iters < 0) throw ConfigError("n_iters must be nonnegative");
    if (cfg.stride < 1) throw ConfigError("stride must be at least 1");

    if (root.contains("oracle")) {
      const json& o = root.at("oracle");
      detail::reject_unknown_keys(o, {"enabled", "step", "tol", "max_iters"}, "oracle");
      cfg.oracle.enabled = get_or<bool>(o, "enabled", "oracle", true);
      cfg.oracle.step = get_or<double>(o, "step", "oracle", 0.0);
      cfg.oracle.tol = get_or<double>(o, "tol", "oracle", 1e-10);
      cfg.oracle.max_iters = get_or<long>(o, "max_iters", "oracle", 1'000'000);
    }

    // Materialize the game once so bad configs fail at load time, and fill
    // the derived fields the normalized form always carries.
    const GameSpec game = cfg.make_game();
    cfg.interference_edges = game.interference().edges();
    if (!cfg.auto_gm) {
      cfg.comm_edges = PlayerGraph(game.n_players(), cfg.comm_edges).edges();
    }
    if (cfg.init.kind == InitRule::Kind::explicit_values) {
      const long n = cfg.init.values.size();
      if (n != game.n_players()) {
        // A per-slot vector is only checkable against a specific coupling
        // mode; accept the graphical slot count here.
        const int m = degree_profile(game.interference()).m;
        if (n != m)
          throw ConfigError("explicit init needs " + std::to_string(game.n_players()) + " or " +
                            std::to_string(m) + " values");
      }
    }
    return cfg;
  }

  nlohmann::json game_json() const {
    nlohmann::json g;
    g["type"] = game_type;
    if (game_type == "quadratic") {
      std::vector<std::vector<double>> rows(q.rows(), std::vector<double>(q.cols()));
      for (int i = 0; i < q.rows(); ++i)
        for (int j = 0; j < q.cols(); ++j) rows[i][j] = q(i, j);
      g["q"] = rows;
      g["c"] = std::vector<double>(c.data(), c.data() + c.size());
      g["intervals"] = intervals_json();
    } else if (game_type == "wanet") {
      g["paths"] = wanet.paths;
      g["capacities"] = wanet.capacity;
      g["kappa"] = wanet.kappa;
      g["chi"] = wanet.chi;
      g["intervals"] = intervals_json();
    } else {
      g["kappa"] = bench_kappa;
    }
    return g;
  }

  nlohmann::json to_json() const {
    nlohmann::json root;
    root["game"] = game_json();
    root["interference_edges"] = edges_json(interference_edges);
    if (auto_gm) {
      root["communication"] = {{"auto_gm", true}};
    } else {
      root["communication"] = {{"edges", edges_json(comm_edges)}};
    }
    if (policy.kind == StepSizePolicy::Kind::diminishing) {
      root["step_size"] = {{"kind", "diminishing"}};
    } else if (policy.alpha.size() == 1) {
      root["step_size"] = {{"kind", "constant"}, {"alpha", policy.alpha[0]}};
    } else {
      root["step_size"] = {{"kind", "constant"}, {"alpha", policy.alpha}};
    }
    switch (init.kind) {
      case InitRule::Kind::midpoint:
        root["init"] = {{"kind", "midpoint"}};
        break;
      case InitRule::Kind::uniform_random:
        root["init"] = {{"kind", "uniform_random"}};
        break;
      case InitRule::Kind::explicit_values:
        root["init"] = {{"kind", "explicit"},
                        {"values", std::vector<double>(init.values.data(),
                                                       init.values.data() + init.values.size())}};
        break;
    }
    root["seed"] = seed;
    root["n_iters"] = n_iters;
    root["stride"] = stride;
    root["algorithm"] = algorithm;
    root["output_dir"] = output_dir;
    root["oracle"] = {{"enabled", oracle.enabled},
                      {"step", oracle.step},
                      {"tol", oracle.tol},
                      {"max_iters", oracle.max_iters}};
    return root;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json root;
    try {
      in >> root;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return from_json(root);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << to_json().dump(2) << '\n';
  }

  GameSpec make_game() const {
    if (game_type == "quadratic") {
      if (!interference_edges.empty() || !auto_interference()) {
        return GameSpec(PlayerGraph(static_cast<int>(q.rows()), interference_edges), intervals,
                        QuadraticCost{q, c});
      }
      return make_quadratic_game(q, c, intervals);
    }
    WanetCost cost = wanet;
    std::vector<ActionInterval> omega = intervals;
    if (!interference_edges.empty()) {
      // Take the player count before the cost is moved into the game.
      const int n = static_cast<int>(cost.paths.size());
      return GameSpec(PlayerGraph(n, interference_edges), std::move(omega), std::move(cost));
    }
    return make_wanet_game(std::move(cost), std::move(omega));
  }

  PlayerGraph make_comm(const GameSpec& game) const {
    if (auto_gm) {
      return maximal_triangle_free_spanning_subgraph(validate_interference(game.interference()));
    }
    return PlayerGraph(game.n_players(), comm_edges);
  }

  Simulation::Coupling coupling() const {
    return algorithm == "full" ? Simulation::Coupling::full : Simulation::Coupling::graphical;
  }

  // Stable identity of the game (cost + action set), for keying cached
  // equilibria.
  std::string game_hash() const {
    const std::string dump = nlohmann::json{{"game", game_json()}}.dump();
    const std::uint64_t h = fnv1a64(dump.data(), dump.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  bool auto_interference() const { return interference_edges.empty(); }

  nlohmann::json intervals_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& iv : intervals) arr.push_back({iv.lo, iv.hi});
    return arr;
  }

  static nlohmann::json edges_json(const std::vector<Edge>& edges) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [i, j] : edges) arr.push_back({i, j});
    return arr;
  }
};

}  // namespace gnes
