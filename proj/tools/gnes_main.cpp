// Command-line front end: run simulations, analyze graph spectra, compute
// equilibria, derive gossip overlays, and run the bundled benchmark.

#include <CLI11.hpp>
#include <cstdio>
#include <optional>
#include <string>

#include "gnes/cli.hpp"
#include "gnes/config.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> iters;
  std::optional<long> stride;
  std::optional<std::string> out_dir;
  std::optional<std::string> algorithm;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* opt = cmd->add_option("--config", flags.config_path, "Path to a JSON run config");
  if (config_required) opt->required();
  cmd->add_option("--seed", flags.seed, "Override the config's RNG seed");
  cmd->add_option("--iters", flags.iters, "Override the number of gossip events");
  cmd->add_option("--stride", flags.stride, "Override the trace recording stride");
  cmd->add_option("--out", flags.out_dir, "Override the output directory");
  cmd->add_option("--algorithm", flags.algorithm, "graphical|full")
      ->check(CLI::IsMember({"graphical", "full"}));
}

gnes::RunConfig load_config(const CommonFlags& flags) {
  gnes::RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = gnes::RunConfig::load(flags.config_path);
  } else {
    // Only the benchmark has a self-contained default configuration.
    cfg.game_type = "wanet_benchmark";
    const gnes::WanetBenchmark b = gnes::WanetBenchmark::standard(cfg.bench_kappa);
    cfg.wanet = b.cost;
    cfg.intervals = b.omega;
    cfg.interference_edges = b.interference().edges();
    cfg.n_iters = 1'000'000;
  }
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.iters) cfg.n_iters = *flags.iters;
  if (flags.stride) cfg.stride = *flags.stride;
  if (flags.out_dir) cfg.output_dir = *flags.out_dir;
  if (flags.algorithm) cfg.algorithm = *flags.algorithm;
  if (cfg.n_iters < 0) throw gnes::ConfigError("n_iters must be nonnegative");
  if (cfg.stride < 1) throw gnes::ConfigError("stride must be at least 1");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous gossip Nash-equilibrium seeking over graphical games"};
  app.require_subcommand(1);

  CommonFlags run_flags, analyze_flags, oracle_flags, graph_flags, bench_flags;
  double bench_target = 0.05;
  double bench_kappa = 0.0;  // 0: keep the config's value

  CLI::App* run = app.add_subcommand("run", "Simulate and write trace.csv + report.txt");
  add_common(run, run_flags, true);
  CLI::App* analyze =
      app.add_subcommand("analyze", "Spectral/timing analysis: report.txt + spectra.csv");
  add_common(analyze, analyze_flags, true);
  CLI::App* oracle = app.add_subcommand("oracle", "Compute and cache the equilibrium");
  add_common(oracle, oracle_flags, true);
  CLI::App* graph =
      app.add_subcommand("graph", "Derive the gossip overlay and validate the graphs");
  add_common(graph, graph_flags, true);
  CLI::App* bench = app.add_subcommand("bench", "Bundled benchmarks");
  bench->require_subcommand(1);
  CLI::App* bench_wanet =
      bench->add_subcommand("wanet", "Compare both algorithms on the congestion game");
  add_common(bench_wanet, bench_flags, false);
  bench_wanet->add_option("--target", bench_target, "Normalized-error target (fraction)")
      ->check(CLI::PositiveNumber);
  bench_wanet->add_option("--kappa", bench_kappa, "Congestion weight of the benchmark game")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      gnes::cli::cmd_run(load_config(run_flags));
    } else if (analyze->parsed()) {
      gnes::cli::cmd_analyze(load_config(analyze_flags));
    } else if (oracle->parsed()) {
      gnes::cli::cmd_oracle(load_config(oracle_flags));
    } else if (graph->parsed()) {
      gnes::cli::cmd_graph(load_config(graph_flags));
    } else if (bench_wanet->parsed()) {
      gnes::RunConfig cfg = load_config(bench_flags);
      if (bench_kappa > 0.0) cfg.bench_kappa = bench_kappa;
      gnes::cli::cmd_bench_wanet(cfg, bench_target);
    }
  } catch (const std::exception& e) {
    return gnes::cli::report_error(e);
  }
  return 0;
}
