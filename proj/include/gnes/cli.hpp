#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gnes/config.hpp"
#include "gnes/engine.hpp"
#include "gnes/errors.hpp"
#include "gnes/game.hpp"
#include "gnes/graph.hpp"
#include "gnes/indexing.hpp"
#include "gnes/oracle.hpp"
#include "gnes/spectral.hpp"
#include "gnes/wanet.hpp"

namespace gnes::cli {

// Exit codes: 0 success, 2 config problems, 3 model/graph validation
// failures, 4 runtime failures (non-convergence, singular costs, ...).
inline constexpr int kExitConfig = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitRuntime = 4;

inline int classify(const std::exception& e, std::string& category) {
  if (dynamic_cast<const ConfigError*>(&e)) {
    category = "config";
    return kExitConfig;
  }
  const bool validation = dynamic_cast<const ValidationError*>(&e) ||
                          dynamic_cast<const EmptyGraph*>(&e) ||
                          dynamic_cast<const DisconnectedGraph*>(&e) ||
                          dynamic_cast<const NotSubgraph*>(&e) ||
                          dynamic_cast<const MissingTriangleCover*>(&e) ||
                          dynamic_cast<const BadDistribution*>(&e) ||
                          dynamic_cast<const InfeasibleInit*>(&e) ||
                          dynamic_cast<const NotANeighbor*>(&e) ||
                          dynamic_cast<const NotCommNeighbors*>(&e);
  if (validation) {
    category = "validation";
    return kExitValidation;
  }
  category = "runtime";
  return kExitRuntime;
}

// One machine-readable line on stderr so scripted callers can react without
// parsing prose.
inline int report_error(const std::exception& e) {
  std::string category;
  const int code = classify(e, category);
  nlohmann::json record = {{"error", {{"category", category}, {"what", e.what()}}}};
  std::fprintf(stderr, "%s\n", record.dump().c_str());
  return code;
}

// Plain key = value report, doubles printed round-trip exact.
class ReportWriter {
 public:
  explicit ReportWriter(const std::string& path) : out_(path) {
    if (!out_) throw Error("cannot open report file for writing: " + path);
  }

  void kv(const std::string& key, const std::string& value) {
    out_ << key << " = " << value << '\n';
  }
  void kv(const std::string& key, const char* value) { kv(key, std::string(value)); }
  void kv(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    kv(key, std::string(buf));
  }
  void kv(const std::string& key, long value) { out_ << key << " = " << value << '\n'; }
  void kv(const std::string& key, int value) { kv(key, static_cast<long>(value)); }
  void kv(const std::string& key, bool value) { kv(key, std::string(value ? "true" : "false")); }

 private:
  std::ofstream out_;
};

namespace detail {

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

inline std::string edges_to_string(const std::vector<Edge>& edges) {
  std::string s;
  for (const auto& [i, j] : edges) {
    if (!s.empty()) s += ' ';
    s += '(' + std::to_string(i) + ',' + std::to_string(j) + ')';
  }
  return s.empty() ? "(none)" : s;
}

}  // namespace detail

// Compute the equilibrium for the configured game, reusing a cached result
// keyed by the game's content hash when it is at least as precise as asked.
inline OracleResult oracle_with_cache(const RunConfig& cfg, const GameSpec& game,
                                      bool* from_cache = nullptr) {
  const std::string path = detail::out_path(cfg, "oracle-" + cfg.game_hash() + ".json");
  if (from_cache) *from_cache = false;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    if (in && !(in >> j).fail() && j.value("game_hash", "") == cfg.game_hash() &&
        j.value("tol", 1.0) <= cfg.oracle.tol) {
      const auto xs = j.at("x").get<std::vector<double>>();
      if (static_cast<int>(xs.size()) == game.n_players()) {
        OracleResult cached;
        cached.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<int>(xs.size()));
        cached.method = j.value("method", "projected-gradient");
        cached.iterations = j.value("iterations", 0L);
        cached.residual = j.value("residual", 0.0);
        cached.step = j.value("step", 0.0);
        if (from_cache) *from_cache = true;
        return cached;
      }
    }
  }
  OracleOptions opts;
  opts.step = cfg.oracle.step;
  opts.tol = cfg.oracle.tol;
  opts.max_iters = cfg.oracle.max_iters;
  const OracleResult result = solve_projected_gradient(game, game.midpoint(), opts);
  nlohmann::json j = {
      {"x", std::vector<double>(result.x.data(), result.x.data() + result.x.size())},
      {"method", result.method},
      {"iterations", result.iterations},
      {"residual", result.residual},
      {"step", result.step},
      {"tol", cfg.oracle.tol},
      {"game_hash", cfg.game_hash()},
  };
  std::ofstream out(path);
  if (!out) throw Error("cannot write oracle cache: " + path);
  out << j.dump(2) << '\n';
  return result;
}

// `run`: simulate the configured game and emit trace.csv plus a summary
// report; the normalized config is copied next to them for reproducibility.
inline void cmd_run(const RunConfig& cfg) {
  const GameSpec game = cfg.make_game();
  const PlayerGraph comm = cfg.make_comm(game);

  std::optional<Eigen::VectorXd> x_star;
  OracleResult oracle;
  if (cfg.oracle.enabled) {
    oracle = oracle_with_cache(cfg, game);
    x_star = oracle.x;
  }

  Simulation sim(game, comm, cfg.coupling(), cfg.seed, cfg.init, cfg.policy);
  RunOptions opts;
  opts.stride = cfg.stride;
  opts.x_star = x_star;
  const RunTrace trace = sim.run(cfg.n_iters, opts);

  write_trace_csv(detail::out_path(cfg, "trace.csv"), trace, game.n_players());
  cfg.save(detail::out_path(cfg, "config_used.json"));

  ReportWriter report(detail::out_path(cfg, "report.txt"));
  report.kv("command", "run");
  report.kv("game", cfg.game_type);
  report.kv("algorithm", cfg.algorithm);
  report.kv("n_players", game.n_players());
  report.kv("m_slots", sim.index().total_slots());
  report.kv("comm_edges", static_cast<long>(comm.edges().size()));
  report.kv("seed", static_cast<long>(cfg.seed));
  report.kv("n_iters", cfg.n_iters);
  report.kv("stride", cfg.stride);
  const TraceRow& last = trace.rows.back();
  report.kv("final_k", last.k);
  for (int i = 1; i <= game.n_players(); ++i)
    report.kv("x_" + std::to_string(i), last.x[i - 1]);
  report.kv("res_consensus_final", last.res_consensus);
  if (x_star) {
    report.kv("res_ne_final", last.res_ne);
    report.kv("normalized_error_percent", 100.0 * last.res_ne);
    report.kv("oracle_residual", oracle.residual);
  }
}

// `oracle`: compute (or fetch) the equilibrium and report it.
inline void cmd_oracle(const RunConfig& cfg) {
  const GameSpec game = cfg.make_game();
  bool from_cache = false;
  const OracleResult result = oracle_with_cache(cfg, game, &from_cache);
  ReportWriter report(detail::out_path(cfg, "report.txt"));
  report.kv("command", "oracle");
  report.kv("game", cfg.game_type);
  report.kv("method", result.method);
  report.kv("from_cache", from_cache);
  report.kv("iterations", result.iterations);
  report.kv("step", result.step);
  report.kv("residual", result.residual);
  report.kv("vi_residual", vi_residual(game, result.x));
  for (int i = 1; i <= game.n_players(); ++i)
    report.kv("x_star_" + std::to_string(i), result.x[i - 1]);
  report.kv("cache_file", "oracle-" + cfg.game_hash() + ".json");
}

// `graph`: derive the gossip overlay from the interference structure and
// validate the configured communication graph against it.
inline void cmd_graph(const RunConfig& cfg) {
  const GameSpec game = cfg.make_game();
  const PlayerGraph g_i = validate_interference(game.interference());
  const PlayerGraph g_m = maximal_triangle_free_spanning_subgraph(g_i);
  const PlayerGraph comm = cfg.make_comm(game);
  validate_communication(g_i, comm);

  ReportWriter report(detail::out_path(cfg, "report.txt"));
  report.kv("command", "graph");
  report.kv("n_players", g_i.n_players());
  report.kv("interference_edge_count", static_cast<long>(g_i.edges().size()));
  report.kv("interference_edges", detail::edges_to_string(g_i.edges()));
  report.kv("gm_edge_count", static_cast<long>(g_m.edges().size()));
  report.kv("gm_edges", detail::edges_to_string(g_m.edges()));
  report.kv("comm_source", cfg.auto_gm ? "auto_gm" : "explicit");
  report.kv("comm_edge_count", static_cast<long>(comm.edges().size()));
  report.kv("comm_edges", detail::edges_to_string(comm.edges()));
  report.kv("m_slots", degree_profile(g_i).m);
  report.kv("validation", "PASS");
}

// `analyze`: spectral and timing quantities of the configured pair of
// graphs, plus the full spectrum of the expected communication matrix.
inline void cmd_analyze(const RunConfig& cfg) {
  const GameSpec game = cfg.make_game();
  const PlayerGraph g_i = validate_interference(game.interference());
  const PlayerGraph comm = cfg.make_comm(game);
  validate_communication(g_i, comm);

  const IndexMap map(g_i);
  const PairDistribution probs = PairDistribution::uniform_wakeup(comm);
  const double gamma_graphical = gamma_of(map, comm, probs);
  const double gamma_full = gamma_full_coupling(comm, probs);
  const Eigen::VectorXd p = update_probabilities(comm);
  const RegularityEstimates reg = estimate_regularity(game);
  const TimingModel timing = timing_model(g_i, comm, 1.0, 1.0);

  const Eigen::MatrixXd w_bar = expected_comm_matrix(map, comm, probs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w_bar);
  const Eigen::VectorXd spectrum = es.eigenvalues().reverse();
  {
    const std::string path = detail::out_path(cfg, "spectra.csv");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open spectra file for writing: " + path);
    std::fputs("index,lambda\n", f);
    for (int i = 0; i < spectrum.size(); ++i)
      std::fprintf(f, "%d,%.17g\n", i + 1, spectrum[i]);
    if (std::fclose(f) != 0) throw Error("failed to close spectra file: " + path);
  }

  ReportWriter report(detail::out_path(cfg, "report.txt"));
  report.kv("command", "analyze");
  report.kv("game", cfg.game_type);
  report.kv("n_players", game.n_players());
  report.kv("m_slots", map.total_slots());
  report.kv("comm_edge_count", static_cast<long>(comm.edges().size()));
  report.kv("gamma_graphical", gamma_graphical);
  report.kv("gamma_full_coupling", gamma_full);
  report.kv("lambda_max", spectrum[0]);
  report.kv("mu", reg.mu);
  report.kv("rho", reg.lipschitz);
  report.kv("grad_bound", reg.grad_bound);
  report.kv("regularity_exact", reg.exact);
  for (int i = 1; i <= game.n_players(); ++i) report.kv("p_" + std::to_string(i), p[i - 1]);
  report.kv("p_max", p.maxCoeff());
  report.kv("p_min", p.minCoeff());
  if (cfg.policy.kind == StepSizePolicy::Kind::constant) {
    RateInputs in;
    in.n = game.n_players();
    in.gamma = gamma_graphical;
    in.mu = reg.mu;
    in.rho = reg.lipschitz;
    in.p_max = p.maxCoeff();
    in.p_min = p.minCoeff();
    in.alpha_max = cfg.policy.alpha_max();
    in.alpha_min = cfg.policy.alpha_min();
    const PhiResult ph = phi(in);
    report.kv("phi", ph.value);
    report.kv("phi_valid", ph.valid);
  }
  report.kv("timing_r", 1.0);
  report.kv("timing_s", 1.0);
  report.kv("t_av1", timing.t_av1);
  report.kv("t_av2", timing.t_av2);
}

// `bench wanet`: run the sparse protocol and the fully-coupled baseline on
// the shipped congestion game to a common error target and compare.
inline void cmd_bench_wanet(const RunConfig& cfg, double target = 0.05) {
  const WanetBenchmark bench = WanetBenchmark::standard(cfg.bench_kappa);
  const GameSpec game = bench.game();
  const PlayerGraph g_i = validate_interference(game.interference());
  const PlayerGraph comm = maximal_triangle_free_spanning_subgraph(g_i);

  const OracleResult oracle = oracle_with_cache(cfg, game);
  const InitRule init = InitRule::explicit_values(bench.benchmark_init());

  RunOptions opts;
  opts.stride = std::max<long>(1, cfg.n_iters / 1000);
  opts.x_star = oracle.x;
  opts.error_targets = {target};

  Simulation sparse(game, comm, Simulation::Coupling::graphical, cfg.seed, init, cfg.policy);
  const RunTrace trace_sparse = sparse.run(cfg.n_iters, opts);
  Simulation full(game, comm, Simulation::Coupling::full, cfg.seed, init, cfg.policy);
  const RunTrace trace_full = full.run(cfg.n_iters, opts);

  write_trace_csv(detail::out_path(cfg, "trace_graphical.csv"), trace_sparse, game.n_players());
  write_trace_csv(detail::out_path(cfg, "trace_full.csv"), trace_full, game.n_players());

  const PairDistribution probs = PairDistribution::uniform_wakeup(comm);
  const TimingModel timing = timing_model(g_i, comm, 1.0, 1.0);

  ReportWriter report(detail::out_path(cfg, "report.txt"));
  report.kv("command", "bench_wanet");
  report.kv("kappa", cfg.bench_kappa);
  report.kv("n_players", game.n_players());
  report.kv("m_slots_graphical", degree_profile(g_i).m);
  report.kv("m_slots_full", game.n_players() * game.n_players());
  report.kv("seed", static_cast<long>(cfg.seed));
  report.kv("n_iters", cfg.n_iters);
  report.kv("target_normalized_error", target);
  report.kv("gamma_graphical", gamma_of(IndexMap(g_i), comm, probs));
  report.kv("gamma_full_coupling", gamma_full_coupling(comm, probs));
  report.kv("oracle_residual", oracle.residual);
  report.kv("final_error_graphical", trace_sparse.final_error);
  report.kv("final_error_full", trace_full.final_error);
  report.kv("final_error_graphical_percent", 100.0 * trace_sparse.final_error);
  report.kv("final_error_full_percent", 100.0 * trace_full.final_error);
  const long k1 = trace_sparse.first_hit[0];
  const long k2 = trace_full.first_hit[0];
  report.kv("target_reached_graphical", k1 >= 0);
  report.kv("target_reached_full", k2 >= 0);
  if (k1 >= 0) report.kv("k_to_target_graphical", k1);
  if (k2 >= 0) report.kv("k_to_target_full", k2);
  report.kv("t_av1", timing.t_av1);
  report.kv("t_av2", timing.t_av2);
  if (k1 >= 0) {
    const SpeedupReport s = speedup_report(k1, k2 >= 0 ? k2 : cfg.n_iters, k2 >= 0, timing);
    report.kv("iteration_ratio", s.iteration_ratio);
    report.kv("iteration_ratio_censored", s.full_censored);
    report.kv("timing_ratio", s.timing_ratio);
    report.kv("speedup", s.speedup);
  }
}

}  // namespace gnes::cli
