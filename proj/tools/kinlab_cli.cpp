// kinlab command line: one subcommand per experiment, CSV + manifest.json per run.
#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include "kinlab/harness.hpp"

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool reproducible = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "INI experiment file")->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed, overrides [run] seed");
  app->add_option("--out", o.out, "output directory, overrides [run] output");
  app->add_option("--threads", o.threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app->add_flag("--reproducible", o.reproducible, "fixed-order reductions");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  cfg.reproducible = cfg.reproducible || o.reproducible;
  if (o.threads > 0) omp_set_num_threads(o.threads);
  if (cfg.reproducible) omp_set_dynamic(0);
  cfg.validate();
  fs::create_directories(cfg.output);
  return cfg;
}

const char* yes(bool b) { return b ? "yes" : "no"; }

int cmd_simulate(const ExperimentConfig& cfg, std::optional<double> lambda) {
  auto m = start_manifest(cfg, "simulate");
  const auto s = run_ensemble(cfg, lambda.value_or(cfg.lambdas.front()));
  m.outputs.push_back(write_ensemble_csv(cfg.output, s));
  m.outputs.push_back(write_sweep_summary(cfg.output, {s}));
  write_manifest(m, cfg.output);
  std::printf("lambda=%g eta=%g t=%g n=%zu mean=%.10g", s.lambda, s.eta, s.t, s.values.size(), s.mean());
  if (s.variance_defined())
    std::printf(" variance=%.6g stderr=%.3g\n", s.variance(), s.stderr_mean());
  else
    std::printf(" variance=undefined\n");
  return 0;
}

int cmd_selfavg(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "selfavg");
  const auto r = run_selfaveraging(cfg);
  for (const auto& s : r.sweep) m.outputs.push_back(write_ensemble_csv(cfg.output, s));
  m.outputs.push_back(write_sweep_summary(cfg.output, r.sweep));
  m.outputs.push_back(write_selfaveraging_csv(cfg.output, r));
  write_manifest(m, cfg.output);
  for (std::size_t i = 0; i < r.sweep.size(); ++i)
    std::printf("lambda=%-6g variance=%.6g +- %.2g\n", r.sweep[i].lambda, r.sweep[i].variance(),
                r.stderr_variance[i]);
  std::printf("strictly decreasing: %s; slope %.3f, bootstrap 5%%..95%% [%.3f, %.3f]\n", yes(r.strictly_decreasing),
              r.slope, r.slope_q05, r.slope_q95);
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "compare");
  const auto sweep = run_lambda_sweep(cfg);
  const auto table = build_dos_table(cfg);
  const auto r = analyze_comparison(sweep, boltzmann_limit(cfg, table));
  m.outputs.push_back(write_sweep_summary(cfg.output, sweep));
  m.outputs.push_back(write_comparison_csv(cfg.output, r));
  write_manifest(m, cfg.output);
  for (const auto& x : r.rows)
    std::printf("lambda=%-6g quantum=%.6g limit=%.6g gap=%.3g (bar %.3g)\n", x.lambda, x.quantum_mean, x.limit_mean,
                x.gap, x.error_bar);
  std::printf("nonincreasing: %s; relative gap at smallest lambda %.3f\n", yes(r.nonincreasing),
              r.relative_gap_last);
  return 0;
}

int cmd_supnorm(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "supnorm");
  const auto r = run_timegrid_sup(cfg);
  m.outputs.push_back(write_timegrid_csv(cfg.output, r));
  write_manifest(m, cfg.output);
  for (const auto& row : r.rows) std::printf("lambda=%-6g sup=%.4g at tau=%g\n", row.lambda, row.sup, row.argsup);
  std::printf("decreasing: %s\n", yes(r.decreasing));
  return 0;
}

int cmd_resolvent(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "resolvent");
  for (const auto& s : run_resolvent_suite(cfg)) {
    m.outputs.push_back(write_resolvent_csv(cfg.output, s));
    std::printf("%-16s exponent %.4f  band %.3f  residual %.2g\n", s.name.c_str(), s.fit.exponent, s.band_ratio,
                s.fit.residual);
  }
  write_manifest(m, cfg.output);
  return 0;
}

int cmd_graphs(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "graphs");
  const auto rows = run_graph_census(cfg.graphs.max_nbar);
  m.outputs.push_back(write_graph_csv(cfg.output, rows));
  m.outputs.push_back(write_schedule_csv(cfg.output, schedule_echo(cfg.graphs)));
  write_manifest(m, cfg.output);
  for (const auto& r : rows)
    std::printf("n1=%d n2=%d connected=%llu formula=%llu classified=%llu\n", r.n1, r.n2,
                (unsigned long long)r.connected, (unsigned long long)r.formula, (unsigned long long)r.classified());
  for (const auto& e : example_pairings())
    std::printf("%-32s %s\n", e.name.c_str(), classify(e.pairing).label().c_str());
  return 0;
}

int cmd_duhamel(const ExperimentConfig& cfg) {
  auto m = start_manifest(cfg, "duhamel");
  const auto rows = run_duhamel_study(cfg);
  m.outputs.push_back(write_duhamel_csv(cfg.output, rows));
  write_manifest(m, cfg.output);
  for (const auto& r : rows) std::printf("N=%d |phi_N|=%.4g |remainder|=%.4g\n", r.N, r.term_norm, r.remainder_norm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinlab: lattice Schroedinger dynamics against the linear Boltzmann limit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(KINLAB_VERSION));

  CommonOptions opt;
  std::optional<double> lambda;
  std::function<int(const ExperimentConfig&)> run;

  auto* sim = app.add_subcommand("simulate", "ensemble of disorder realizations at one lambda");
  add_common(sim, opt);
  sim->add_option("--lambda", lambda, "coupling (default: first of the config list)");
  sim->callback([&] { run = [&](const ExperimentConfig& c) { return cmd_simulate(c, lambda); }; });

  const std::vector<std::pair<const char*, const char*>> plain{
      {"selfavg", "variance of <J,W> against lambda"},
      {"compare", "mean of <J,W> against the Boltzmann limit"},
      {"supnorm", "deviation along a time grid, one sample path"},
      {"resolvent", "resolvent integral sweeps and scaling fits"},
      {"graphs", "pairing census and schedule echo"},
      {"duhamel", "Duhamel remainder against expansion order"}};
  const std::map<std::string, std::function<int(const ExperimentConfig&)>> handlers{
      {"selfavg", cmd_selfavg}, {"compare", cmd_compare},     {"supnorm", cmd_supnorm},
      {"resolvent", cmd_resolvent}, {"graphs", cmd_graphs}, {"duhamel", cmd_duhamel}};
  for (const auto& [name, help] : plain) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, opt);
    const std::string key = name;
    sub->callback([&, key] { run = handlers.at(key); });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return run(resolve(opt));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kinlab: %s\n", e.what());
    return 1;
  }
}
