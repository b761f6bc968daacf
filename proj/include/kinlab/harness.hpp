#pragma once

#include <nlohmann/json.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kinlab/boltzmann.hpp"
#include "kinlab/config.hpp"
#include "kinlab/csv.hpp"
#include "kinlab/dynamics.hpp"
#include "kinlab/graphs.hpp"
#include "kinlab/resolvent.hpp"
#include "kinlab/stats.hpp"
#include "kinlab/wigner.hpp"

#ifndef KINLAB_VERSION
#define KINLAB_VERSION "unversioned"
#endif

namespace kinlab {

// stream tags hung off the master seed
namespace seed_tag {
inline constexpr std::uint64_t disorder = 101;
inline constexpr std::uint64_t bootstrap = 131;
inline constexpr std::uint64_t particles = 201;
inline constexpr std::uint64_t dos_table = 202;
inline constexpr std::uint64_t duhamel = 301;
}  // namespace seed_tag

inline std::map<std::string, std::uint64_t> task_seeds(std::uint64_t master) {
  return {{"disorder", derive_seed(master, seed_tag::disorder)},
          {"bootstrap", derive_seed(master, seed_tag::bootstrap)},
          {"particles", derive_seed(master, seed_tag::particles)},
          {"dos_table", derive_seed(master, seed_tag::dos_table)},
          {"duhamel", derive_seed(master, seed_tag::duhamel)}};
}

// ---- quantum ensemble ----

struct EnsembleStats {
  double lambda = 0;
  double eta = 0;
  double coupling = 0;
  double t = 0;
  RunningStats real;               ///< Re <J, W^eta> over realizations
  std::vector<double> values;      ///< per realization, index order
  std::vector<double> imag;
  double max_imag_ratio = 0;       ///< max |Im| / |Re|, sanity channel for real observables
  double truncation_error = 0;     ///< largest xi-truncation bound over realizations

  bool variance_defined() const { return real.variance_defined(); }
  double mean() const { return real.mean; }
  /// NaN when undefined (n < 2), so that it is reported as missing, never as zero.
  double variance() const { return real.variance(); }
  double stderr_mean() const { return real.stderr_mean(); }
  double central_moment(int r) const { return real.central_moment(r); }
};

inline WaveFunction initial_state(const ExperimentConfig& cfg, double eta) {
  return wkb_state(cfg.wkb, eta, BoxSpec(cfg.box));
}

/// One disorder realization, evolved to T/eta and paired with J at scale eta.
inline WignerPairing run_realization(const ExperimentConfig& cfg, double lambda, std::size_t index,
                                     const WaveFunction& psi0, const TestObservable& J) {
  const double eta = lambda * lambda, t = cfg.T / eta;
  const double coupling = cfg.coupling_override.value_or(lambda);
  const BoxSpec box(cfg.box);
  WaveFunction psi = psi0;
  if (t > 0) {
    if (coupling == 0) {
      psi = evolve_free(psi0, t);
    } else {
      const auto V = sample_disorder(box, derive_seed(cfg.seed, seed_tag::disorder), index);
      psi = SplitStepPropagator(V, coupling, cfg.dt).advance(psi0, t);
    }
  }
  return pair_wigner(J, psi, eta);
}

inline EnsembleStats run_ensemble(const ExperimentConfig& cfg, double lambda) {
  cfg.validate();
  EnsembleStats out;
  out.lambda = lambda;
  out.eta = lambda * lambda;
  out.coupling = cfg.coupling_override.value_or(lambda);
  out.t = cfg.T / out.eta;
  const auto J = cfg.observable.build();
  const auto psi0 = initial_state(cfg, out.eta);
  const std::size_t n = cfg.realizations;
  std::vector<WignerPairing> res(n);
  std::vector<std::string> failures(n);
  // realizations do not share mutable state; each owns its disorder stream
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
    try {
      res[i] = run_realization(cfg, lambda, std::size_t(i), psi0, J);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!failures[i].empty()) throw Error("realization " + std::to_string(i) + ": " + failures[i]);

  out.values.resize(n);
  out.imag.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.values[i] = res[i].value.real();
    out.imag[i] = res[i].value.imag();
    out.truncation_error = std::max(out.truncation_error, res[i].truncation_error);
    if (out.values[i] != 0)
      out.max_imag_ratio = std::max(out.max_imag_ratio, std::abs(out.imag[i]) / std::abs(out.values[i]));
  }
  if (cfg.reproducible) {
    out.real = ordered_stats(out.values);
  } else {
    // per-thread partial stats merged as they finish; equal up to rounding
    RunningStats total;
#pragma omp parallel
    {
      RunningStats part;
#pragma omp for schedule(dynamic, 4) nowait
      for (std::int64_t i = 0; i < std::int64_t(n); ++i) part.push(out.values[i]);
#pragma omp critical
      total.merge(part);
    }
    out.real = total;
  }
  return out;
}

inline std::vector<EnsembleStats> run_lambda_sweep(const ExperimentConfig& cfg) {
  std::vector<EnsembleStats> out;
  for (double lam : cfg.lambdas) out.push_back(run_ensemble(cfg, lam));
  return out;
}

// ---- self-averaging ----

struct SelfAveragingReport {
  std::vector<EnsembleStats> sweep;
  bool strictly_decreasing = false;
  double slope = 0;             ///< fitted d log Var / d log lambda
  double slope_q05 = 0, slope_q95 = 0;
  bool slope_positive_95 = false;
  std::vector<double> envelope;  ///< lambda^{1/90} reference, NaN where the bound's hypothesis fails
  std::vector<double> stderr_variance;
};

inline double fitted_log_slope(const std::vector<double>& lambdas, const std::vector<double>& vars) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    x.push_back(std::log(lambdas[i]));
    y.push_back(std::log(vars[i]));
  }
  return least_squares(x, y).slope;
}

inline SelfAveragingReport analyze_selfaveraging(const ExperimentConfig& cfg, std::vector<EnsembleStats> sweep) {
  if (sweep.size() < 3) throw ConfigError("self-averaging needs at least 3 lambda values");
  SelfAveragingReport rep;
  std::vector<double> lam, var;
  for (const auto& s : sweep) {
    if (!s.variance_defined()) throw ConfigError("self-averaging needs at least 2 realizations");
    lam.push_back(s.lambda);
    var.push_back(s.variance());
    rep.stderr_variance.push_back(s.real.stderr_variance());
    double env = std::numeric_limits<double>::quiet_NaN();
    try {
      env = variance_bound(std::max(cfg.T, 1e-12), s.lambda).envelope;
    } catch (const HypothesisViolated&) {
    }
    rep.envelope.push_back(env);
  }
  rep.strictly_decreasing = true;
  for (std::size_t i = 1; i < var.size(); ++i)
    if (!(var[i] < var[i - 1])) rep.strictly_decreasing = false;
  rep.slope = fitted_log_slope(lam, var);

  // bootstrap over realizations, independently per lambda
  std::vector<double> slopes;
  slopes.reserve(cfg.bootstrap);
  CounterRng rng(derive_seed(cfg.seed, seed_tag::bootstrap), 0);
  for (std::size_t b = 0; b < cfg.bootstrap; ++b) {
    std::vector<double> v;
    for (const auto& s : sweep) {
      RunningStats r;
      const std::size_t n = s.values.size();
      for (std::size_t i = 0; i < n; ++i) r.push(s.values[uniform_index(rng, n)]);
      v.push_back(r.variance());
    }
    bool ok = true;
    for (double x : v) ok = ok && x > 0;
    slopes.push_back(ok ? fitted_log_slope(lam, v) : -std::numeric_limits<double>::infinity());
  }
  rep.slope_q05 = percentile(slopes, 0.05);
  rep.slope_q95 = percentile(slopes, 0.95);
  rep.slope_positive_95 = rep.slope_q05 > 0;
  rep.sweep = std::move(sweep);
  return rep;
}

inline SelfAveragingReport run_selfaveraging(const ExperimentConfig& cfg) {
  return analyze_selfaveraging(cfg, run_lambda_sweep(cfg));
}

// ---- kinetic comparison ----

struct LimitEstimate {
  MonteCarloEstimate estimate;
  double T = 0;
  std::size_t particles = 0;
};

inline DosTable build_dos_table(const ExperimentConfig& cfg) {
  return DosTable::build(cfg.boltzmann.dos_samples, derive_seed(cfg.seed, seed_tag::dos_table));
}

inline ShellSamplerConfig shell_config(const ExperimentConfig& cfg) {
  ShellSamplerConfig s;
  s.shell_half_width = cfg.boltzmann.shell_half_width;
  return s;
}

/// <J, mu_T> from the linear Boltzmann solver started at the WKB limit measure.
inline LimitEstimate boltzmann_limit(const ExperimentConfig& cfg, const DosTable& table) {
  const auto sampler = wkb_limit_sampler(cfg.wkb);
  const auto ens = solve(sampler, cfg.T, cfg.boltzmann.particles, shell_config(cfg), table,
                         derive_seed(cfg.seed, seed_tag::particles), cfg.boltzmann.collisions);
  return {observable(ens, cfg.observable.build()), cfg.T, cfg.boltzmann.particles};
}

struct ComparisonRow {
  double lambda = 0;
  double quantum_mean = 0, quantum_stderr = 0, truncation = 0;
  double limit_mean = 0, limit_stderr = 0;
  double gap = 0;       ///< |E<J,W> - <J,mu_T>|
  double error_bar = 0; ///< 2 sqrt(se_q^2 + se_b^2) + truncation
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool nonincreasing = false;   ///< gap_{i+1} <= gap_i + e_i + e_{i+1}
  double relative_gap_last = 0; ///< gap / |<J,mu_T>| at the smallest lambda
};

inline ComparisonReport analyze_comparison(const std::vector<EnsembleStats>& sweep, const LimitEstimate& lim) {
  ComparisonReport rep;
  const double bm = lim.estimate.value.real(), bs = lim.estimate.stderr_real;
  for (const auto& s : sweep) {
    ComparisonRow r;
    r.lambda = s.lambda;
    r.quantum_mean = s.mean();
    r.quantum_stderr = s.variance_defined() ? s.stderr_mean() : 0.0;
    r.truncation = s.truncation_error;
    r.limit_mean = bm;
    r.limit_stderr = bs;
    r.gap = std::abs(r.quantum_mean - bm);
    r.error_bar = 2 * std::hypot(r.quantum_stderr, bs) + r.truncation;
    rep.rows.push_back(r);
  }
  rep.nonincreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto &a = rep.rows[i - 1], &b = rep.rows[i];
    if (b.gap > a.gap + a.error_bar + b.error_bar) rep.nonincreasing = false;
  }
  if (!rep.rows.empty()) rep.relative_gap_last = rep.rows.back().gap / std::abs(bm);
  return rep;
}

inline ComparisonReport run_kinetic_comparison(const ExperimentConfig& cfg) {
  const auto sweep = run_lambda_sweep(cfg);
  const auto table = build_dos_table(cfg);
  return analyze_comparison(sweep, boltzmann_limit(cfg, table));
}

// ---- sup over a time grid, one sample path ----

struct TimeGridRow {
  double lambda = 0;
  std::vector<double> tau, quantum, limit, deviation;
  double sup = 0;
  double argsup = 0;
};

struct TimeGridReport {
  std::vector<TimeGridRow> rows;
  bool decreasing = false;
};

inline std::vector<double> tau_grid(const ExperimentConfig& cfg) {
  std::vector<double> tau;
  if (cfg.tau_points == 1) return {0.0};
  for (int k = 0; k < cfg.tau_points; ++k) tau.push_back(cfg.T * k / double(cfg.tau_points - 1));
  return tau;
}

/// The Boltzmann side on the tau grid, advanced piecewise on one ensemble.
inline std::vector<double> limit_path(const ExperimentConfig& cfg, const DosTable& table,
                                      const std::vector<double>& tau) {
  const auto J = cfg.observable.build();
  auto ens = initial_ensemble(wkb_limit_sampler(cfg.wkb), cfg.boltzmann.particles,
                              derive_seed(cfg.seed, seed_tag::particles));
  std::vector<double> out;
  double now = 0;
  for (double s : tau) {
    if (s > now) advance_ensemble(ens, s - now, table, shell_config(cfg), cfg.boltzmann.collisions);
    now = s;
    out.push_back(observable(ens, J).value.real());
  }
  return out;
}

inline TimeGridRow timegrid_row(const ExperimentConfig& cfg, double lambda, const std::vector<double>& tau,
                                const std::vector<double>& limit) {
  TimeGridRow row;
  row.lambda = lambda;
  row.tau = tau;
  row.limit = limit;
  const double eta = lambda * lambda, coupling = cfg.coupling_override.value_or(lambda);
  const auto J = cfg.observable.build();
  const BoxSpec box(cfg.box);
  WaveFunction psi = initial_state(cfg, eta);
  const auto V = sample_disorder(box, derive_seed(cfg.seed, seed_tag::disorder), 0);
  const SplitStepPropagator prop(V, coupling, cfg.dt);
  double now = 0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double target = tau[k] / eta;
    if (target > now) psi = prop.advance(psi, target - now);
    now = target;
    row.quantum.push_back(pair_wigner(J, psi, eta).value.real());
    row.deviation.push_back(std::abs(row.quantum.back() - limit[k]));
    if (row.deviation.back() >= row.sup) {
      row.sup = row.deviation.back();
      row.argsup = tau[k];
    }
  }
  return row;
}

inline TimeGridReport run_timegrid_sup(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto tau = tau_grid(cfg);
  if (tau.size() != 1 && tau.size() < 4) throw ConfigError("tau grid needs >= 4 points (or exactly one)");
  const auto table = build_dos_table(cfg);
  const auto limit = limit_path(cfg, table, tau);
  TimeGridReport rep;
  for (double lam : cfg.lambdas) rep.rows.push_back(timegrid_row(cfg, lam, tau, limit));
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].sup < rep.rows[i - 1].sup)) rep.decreasing = false;
  return rep;
}

// ---- resolvent sweeps ----

struct ResolventRow {
  double epsilon = 0, value = 0, normalized = 0;
  int N = 0;
};

struct ResolventSweep {
  std::string name;
  int degree = 0;
  std::vector<double> gammas;
  Vec3 point{};
  std::vector<ResolventRow> rows;
  ScalingFit fit;
  double band_ratio = 0;  ///< max/min of the normalized values
};

/// The desk sweeps have 3-4 points over 0.7-1.5 decades, below the default fit contract.
inline constexpr FitOptions sweep_fit_options{3, 0.5};

inline void finish_sweep(ResolventSweep& s) {
  std::vector<double> e, v;
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (auto& r : s.rows) {
    r.normalized = r.value / std::pow(std::abs(std::log(r.epsilon)), s.degree);
    lo = std::min(lo, r.normalized);
    hi = std::max(hi, r.normalized);
    e.push_back(r.epsilon);
    v.push_back(r.value);
  }
  s.band_ratio = hi / lo;
  s.fit = fit_scaling(e, v, s.degree, sweep_fit_options);
}

inline ResolventSweep sweep_1res(const ResolventSettings& r) {
  ResolventSweep s{"one_resolvent", 1, {r.gamma1}, {}, {}, {}, 0};
  for (double eps : r.eps1) {
    const int N = minimum_grid(eps);
    s.rows.push_back({eps, integral_1res(r.gamma1, eps, N), 0, N});
  }
  finish_sweep(s);
  return s;
}

inline ResolventSweep sweep_2res(const ResolventSettings& r) {
  ResolventSweep s{"two_resolvent", 2, {r.gamma2a, r.gamma2b}, r.p2, {}, {}, 0};
  for (double eps : r.eps2) {
    const int N = minimum_grid(eps);
    s.rows.push_back({eps, integral_2res(r.p2, r.gamma2a, r.gamma2b, eps, N), 0, N});
  }
  finish_sweep(s);
  return s;
}

inline ResolventSweep sweep_3res(const ResolventSettings& r) {
  ResolventSweep s{"three_resolvent", 4, {r.gamma3a, r.gamma3b, r.gamma3c}, r.k3, {}, {}, 0};
  for (double eps : r.eps3) {
    const int N = std::max(r.grid3, minimum_grid(eps));
    s.rows.push_back({eps, integral_3res(r.k3, r.gamma3a, r.gamma3b, r.gamma3c, eps, N), 0, N});
  }
  finish_sweep(s);
  return s;
}

inline std::vector<ResolventSweep> run_resolvent_suite(const ExperimentConfig& cfg) {
  return {sweep_1res(cfg.resolvent), sweep_2res(cfg.resolvent), sweep_3res(cfg.resolvent)};
}

// ---- pairing census and schedule echo ----

struct GraphCensusRow {
  int n1 = 0, n2 = 0;
  std::uint64_t total = 0, connected = 0, formula = 0;
  std::uint64_t gc_line1 = 0, gc_line2 = 0, gc_both = 0;
  std::uint64_t parallel_only = 0, antiparallel_only = 0, both = 0, crossing_transfer = 0;
  bool below_factorial_bound = false;

  std::uint64_t classified() const {
    return gc_line1 + gc_line2 + gc_both + parallel_only + antiparallel_only + both + crossing_transfer;
  }
};

inline std::vector<GraphCensusRow> run_graph_census(int max_nbar) {
  std::vector<GraphCensusRow> out;
  for (int nbar = 1; nbar <= max_nbar; ++nbar)
    for (int n1 = 0; n1 <= nbar; ++n1) {
      GraphCensusRow r;
      r.n1 = n1;
      r.n2 = nbar - n1;
      const auto all = enumerate_all(n1, r.n2);
      r.total = all.size();
      r.formula = connected_count(nbar);
      for (const auto& p : all) {
        if (!p.is_connected()) continue;
        ++r.connected;
        const auto c = classify(p);
        switch (c.kind) {
          case PairingKind::generalized_crossing:
            (c.crossing_lines == 3 ? r.gc_both : c.crosses_on(1) ? r.gc_line1 : r.gc_line2)++;
            break;
          case PairingKind::crossing_transfer:
            ++r.crossing_transfer;
            break;
          case PairingKind::transfer:
            (c.parallel && c.antiparallel ? r.both : c.parallel ? r.parallel_only : r.antiparallel_only)++;
            break;
        }
      }
      r.below_factorial_bound = double(r.connected) <= std::pow(2.0, nbar) * std::tgamma(nbar + 1.0);
      out.push_back(r);
    }
  return out;
}

struct NamedPairing {
  std::string name;
  Pairing pairing;
  std::string expected;
};

/// Reference examples with known classes: a crossing on line 1, the two transfer-induced crossings on line 2,
/// crossing, parallel and antiparallel transfers.
inline std::vector<NamedPairing> example_pairings() {
  return {
      {"internal_crossing_line1",
       Pairing::from_list(3, 2, {{1, 1, 1, 3}, {1, 2, 1, 4}, {1, 5, 2, 1}, {2, 2, 2, 3}, {2, 4, 2, 5}}),
       "generalized_crossing(1)"},
      {"transfer_into_line2_pair_short",
       Pairing::from_list(3, 2, {{1, 3, 2, 2}, {2, 1, 2, 3}, {2, 4, 2, 5}, {1, 1, 1, 2}, {1, 4, 1, 5}}),
       "generalized_crossing(2)"},
      {"transfer_into_line2_pair_long",
       Pairing::from_list(3, 3, {{1, 3, 2, 5}, {2, 4, 2, 6}, {1, 1, 1, 2}, {1, 4, 1, 5}, {2, 1, 2, 2}, {1, 6, 2, 3}}),
       "generalized_crossing(2)"},
      {"crossing_transfers", Pairing::from_list(2, 1, {{1, 1, 2, 1}, {1, 2, 2, 3}, {1, 3, 2, 2}}), "crossing_transfer"},
      {"three_parallel", Pairing::from_list(2, 1, {{1, 1, 2, 1}, {1, 2, 2, 2}, {1, 3, 2, 3}}), "parallel"},
      {"three_antiparallel", Pairing::from_list(2, 1, {{1, 1, 2, 3}, {1, 2, 2, 2}, {1, 3, 2, 1}}), "antiparallel"},
  };
}

struct ScheduleRow {
  double lambda = 0;
  Schedule schedule;
  double main_variance = std::numeric_limits<double>::quiet_NaN();
  double remainder = std::numeric_limits<double>::quiet_NaN();
  double first_moment = std::numeric_limits<double>::quiet_NaN();
  double envelope = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

inline std::vector<ScheduleRow> schedule_echo(const GraphSettings& g) {
  std::vector<ScheduleRow> out;
  for (double lam : g.schedule_lambdas) {
    ScheduleRow r;
    r.lambda = lam;
    r.schedule = make_schedule(g.schedule_T, lam, g.a, g.b);
    try {
      const auto v = variance_bound(g.schedule_T, lam, g.a, g.b, g.delta, g.c_J);
      r.main_variance = v.main_variance;
      r.remainder = v.remainder_bound;
      r.first_moment = v.first_moment;
      r.envelope = v.envelope;
    } catch (const std::exception& e) {
      r.note = e.what();
    }
    out.push_back(r);
  }
  return out;
}

// ---- Duhamel remainder study ----

struct DuhamelRow {
  int N = 0;
  double term_norm = 0;
  double remainder_norm = 0;
};

inline std::vector<DuhamelRow> run_duhamel_study(const ExperimentConfig& cfg) {
  const auto& d = cfg.duhamel;
  const BoxSpec box(d.box);
  WkbSpec spec;
  spec.envelope = {{0, 0, 0}, d.width};
  spec.phase.linear = {two_pi * d.velocity[0], two_pi * d.velocity[1], two_pi * d.velocity[2]};
  const auto psi0 = wkb_state(spec, d.eta, box);
  const auto V = sample_disorder(box, derive_seed(cfg.seed, seed_tag::duhamel), 0);
  const auto full = as_position(SplitStepPropagator(V, d.lambda, d.dt).advance(psi0, d.t));
  const auto ladder = duhamel_ladder(psi0, V, d.lambda, d.t, d.dt, d.max_order);
  std::vector<DuhamelRow> out;
  for (int N = 0; N <= d.max_order; ++N) {
    const auto s = ladder.partial_sum(N);
    out.push_back({N, ladder.norms[N], distance(full, s)});
  }
  return out;
}

// ---- outputs ----

struct RunManifest {
  std::string digest;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::string version = KINLAB_VERSION;
  std::string command;
  std::string started, finished;
  bool reproducible = false;
  int threads = 1;
  std::vector<std::string> outputs;
};

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunManifest start_manifest(const ExperimentConfig& cfg, const std::string& command) {
  RunManifest m;
  m.digest = config_digest(cfg);
  m.seed = cfg.seed;
  m.seeds = task_seeds(cfg.seed);
  m.command = command;
  m.started = utc_now();
  m.reproducible = cfg.reproducible;
  m.threads = omp_get_max_threads();
  return m;
}

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["config_digest"] = m.digest;
  j["master_seed"] = m.seed;
  j["task_seeds"] = m.seeds;
  j["version"] = m.version;
  j["command"] = m.command;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["reproducible"] = m.reproducible;
  j["threads"] = m.threads;
  j["outputs"] = m.outputs;
  return j;
}

inline void write_manifest(RunManifest m, const std::filesystem::path& dir) {
  m.finished = utc_now();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << to_json(m).dump(2) << "\n";
}

inline std::string fmt(double x) { return format_double(x); }

inline std::string write_ensemble_csv(const std::filesystem::path& dir, const EnsembleStats& s) {
  const auto name = "ensemble_lambda_" + fmt(s.lambda) + ".csv";
  CsvWriter w((dir / name).string(), {"realization", "re", "im"});
  for (std::size_t i = 0; i < s.values.size(); ++i) w.row({std::to_string(i), fmt(s.values[i]), fmt(s.imag[i])});
  return name;
}

inline std::string nan_text(double x) { return std::isnan(x) ? "" : fmt(x); }

inline std::string write_sweep_summary(const std::filesystem::path& dir, const std::vector<EnsembleStats>& sweep) {
  const std::string name = "ensemble_summary.csv";
  CsvWriter w((dir / name).string(), {"lambda", "eta", "coupling", "t", "realizations", "mean", "stderr_mean",
                                      "variance", "stderr_variance", "m4", "max_imag_ratio", "truncation"});
  for (const auto& s : sweep)
    w.row({fmt(s.lambda), fmt(s.eta), fmt(s.coupling), fmt(s.t), std::to_string(s.values.size()), fmt(s.mean()),
           nan_text(s.stderr_mean()), nan_text(s.variance()), nan_text(s.real.stderr_variance()),
           nan_text(s.variance_defined() ? s.central_moment(4) : std::numeric_limits<double>::quiet_NaN()),
           fmt(s.max_imag_ratio), fmt(s.truncation_error)});
  return name;
}

inline std::string write_selfaveraging_csv(const std::filesystem::path& dir, const SelfAveragingReport& r) {
  const std::string name = "selfavg.csv";
  CsvWriter w((dir / name).string(), {"lambda", "variance", "stderr_variance", "envelope", "slope", "slope_q05",
                                      "slope_q95", "strictly_decreasing"});
  for (std::size_t i = 0; i < r.sweep.size(); ++i)
    w.row({fmt(r.sweep[i].lambda), fmt(r.sweep[i].variance()), fmt(r.stderr_variance[i]), nan_text(r.envelope[i]),
           fmt(r.slope), fmt(r.slope_q05), fmt(r.slope_q95), r.strictly_decreasing ? "1" : "0"});
  return name;
}

inline std::string write_comparison_csv(const std::filesystem::path& dir, const ComparisonReport& r) {
  const std::string name = "compare.csv";
  CsvWriter w((dir / name).string(), {"lambda", "quantum_mean", "quantum_stderr", "truncation", "limit_mean",
                                      "limit_stderr", "gap", "error_bar"});
  for (const auto& x : r.rows)
    w.numbers({x.lambda, x.quantum_mean, x.quantum_stderr, x.truncation, x.limit_mean, x.limit_stderr, x.gap,
               x.error_bar});
  return name;
}

inline std::string write_timegrid_csv(const std::filesystem::path& dir, const TimeGridReport& r) {
  const std::string name = "supnorm.csv";
  CsvWriter w((dir / name).string(), {"lambda", "tau", "quantum", "limit", "deviation"});
  for (const auto& row : r.rows)
    for (std::size_t k = 0; k < row.tau.size(); ++k)
      w.numbers({row.lambda, row.tau[k], row.quantum[k], row.limit[k], row.deviation[k]});
  return name;
}

inline std::string write_resolvent_csv(const std::filesystem::path& dir, const ResolventSweep& s) {
  const std::string name = s.name + ".csv";
  CsvWriter w((dir / name).string(),
              {"epsilon", "value", "normalized", "N", "gamma1", "gamma2", "gamma3", "p_or_k", "fit_exponent"});
  auto g = [&](std::size_t i) { return i < s.gammas.size() ? fmt(s.gammas[i]) : std::string(); };
  const std::string pk = fmt(s.point[0]) + " " + fmt(s.point[1]) + " " + fmt(s.point[2]);
  for (const auto& r : s.rows)
    w.row({fmt(r.epsilon), fmt(r.value), fmt(r.normalized), std::to_string(r.N), g(0), g(1), g(2), pk,
           fmt(s.fit.exponent)});
  return name;
}

inline std::string write_graph_csv(const std::filesystem::path& dir, const std::vector<GraphCensusRow>& rows) {
  const std::string name = "pairings.csv";
  CsvWriter w((dir / name).string(), {"n1", "n2", "total", "connected", "formula", "gc_line1", "gc_line2", "gc_both",
                                      "parallel", "antiparallel", "single_transfer", "crossing_transfer"});
  for (const auto& r : rows)
    w.row({std::to_string(r.n1), std::to_string(r.n2), std::to_string(r.total), std::to_string(r.connected),
           std::to_string(r.formula), std::to_string(r.gc_line1), std::to_string(r.gc_line2),
           std::to_string(r.gc_both), std::to_string(r.parallel_only), std::to_string(r.antiparallel_only),
           std::to_string(r.both), std::to_string(r.crossing_transfer)});
  return name;
}

inline std::string write_schedule_csv(const std::filesystem::path& dir, const std::vector<ScheduleRow>& rows) {
  const std::string name = "schedule.csv";
  CsvWriter w((dir / name).string(), {"lambda", "t", "epsilon", "N", "kappa", "a", "b", "main_variance", "remainder",
                                      "first_moment", "envelope", "note"});
  for (const auto& r : rows)
    w.row({fmt(r.lambda), fmt(r.schedule.t), fmt(r.schedule.epsilon), std::to_string(r.schedule.N),
           fmt(r.schedule.kappa), fmt(r.schedule.a), fmt(r.schedule.b), nan_text(r.main_variance),
           nan_text(r.remainder), nan_text(r.first_moment), nan_text(r.envelope), r.note});
  return name;
}

inline std::string write_duhamel_csv(const std::filesystem::path& dir, const std::vector<DuhamelRow>& rows) {
  const std::string name = "duhamel.csv";
  CsvWriter w((dir / name).string(), {"N", "term_norm", "remainder_norm"});
  for (const auto& r : rows) w.row({std::to_string(r.N), fmt(r.term_norm), fmt(r.remainder_norm)});
  return name;
}

}  // namespace kinlab
