// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// `acceptance 3 6` runs only the listed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "kinlab/harness.hpp"

using namespace kinlab;

#ifndef KINLAB_SELFAVG_CONFIG
#define KINLAB_SELFAVG_CONFIG "configs/selfavg.ini"
#endif

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

WaveFunction random_state(const BoxSpec& box, CounterRng& rng) {
  WaveFunction psi(box, Domain::position);
  for (auto& z : psi.values) z = {rng.normal(), rng.normal()};
  return psi;
}

TestObservable random_observable(CounterRng& rng) {
  auto u = [&] { return 2 * rng.uniform() - 1; };
  SpatialGaussian g{{u(), u(), u()}, {1.5 + 0.3 * u(), 1.5 + 0.3 * u(), 1.5 + 0.3 * u()}, cplx(u(), u())};
  VelocityPolynomial h;
  for (int t = 0; t < 3; ++t)
    h.modes.push_back({{int(std::lround(2 * u())), int(std::lround(2 * u())), int(std::lround(u()))}, cplx(u(), u())});
  return TestObservable(g, h);
}

void propagator(Verdict& v) {
  const BoxSpec box(4);
  const auto V = sample_disorder(box, 5, 0);
  CounterRng rng(4, 0);
  auto psi = random_state(box, rng);
  const double s = psi.norm();
  for (auto& z : psi.values) z /= s;
  const auto exact = evolve_dense(psi, V, 0.5, 1.0);
  const double e1 = distance(SplitStepPropagator(V, 0.5, 1e-3).advance(psi, 1.0), exact);
  const double e2 = distance(SplitStepPropagator(V, 0.5, 5e-4).advance(psi, 1.0), exact);
  v.detail << "error " << e1 << ", halving ratio " << e1 / e2;
  v.check(e1 <= 1e-5, "error <= 1e-5");
  v.check(e1 / e2 >= 3.5 && e1 / e2 <= 4.5, "ratio in [3.5, 4.5]");
}

void wigner(Verdict& v) {
  CounterRng rng(17, 0);
  const BoxSpec small(8);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto phi = random_state(small, rng), psi = random_state(small, rng);
    const auto J = random_observable(rng);
    const auto w = pair_wigner_bilinear(J, phi, psi, 1.0);
    worst = std::max(worst, std::abs(w.value) / (J.bound_constant() * phi.norm() * psi.norm()));
  }
  v.detail << "bound ratio max " << worst;
  v.check(worst <= 1 + 1e-12, "bound on 1000 pairs");

  WkbSpec spec;
  spec.envelope = {{0, 0, 0}, 0.3};
  spec.phase.linear = {two_pi * 0.2, 0, two_pi * 0.1};
  const auto psi = wkb_state(spec, 0.1, BoxSpec(128));
  const TestObservable one(SpatialGaussian{{0, 0, 0}, {2.5, 2.5, 2.5}, 1.0}, VelocityPolynomial{{{{0, 0, 0}, 1.0}}});
  const double mass = pair_wigner(one, psi, 0.1).value.real() / psi.norm_squared();
  v.detail << ", mass ratio " << mass;
  v.check(std::abs(mass - 1) <= 0.02, "mass identity within 2%");

  WaveFunction d(BoxSpec(32), Domain::position);
  d.values[site_index(32, 16, 16, 16)] = 1.0;
  const SpatialGaussian g{{0.2, -0.1, 0.3}, {1.0, 1.0, 1.0}, 1.7};
  const TestObservable J(g, VelocityPolynomial{{{{0, 0, 0}, 1.0}, {{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}});
  const double delta_err = std::abs(pair_wigner(J, d, 0.25).value - std::conj(g({0, 0, 0})));
  v.detail << ", delta state error " << delta_err;
  v.check(delta_err <= 1e-6, "delta state to 1e-6");
}

void resolvent(Verdict& v) {
  const auto suite = run_resolvent_suite(ExperimentConfig{});
  const auto &one = suite[0], &two = suite[1], &three = suite[2];
  v.detail << "1res band " << one.band_ratio << ", 2res exponent " << two.fit.exponent << ", 3res exponent "
           << three.fit.exponent << " (N=" << three.rows.back().N << ")";
  v.check(one.band_ratio <= 3, "1res within a factor-3 band");
  v.check(two.fit.exponent <= 0.85, "2res exponent <= 0.85");
  v.check(three.fit.exponent <= 0.82, "3res exponent <= 0.82");
}

void combinatorics(Verdict& v) {
  const auto rows = run_graph_census(5);
  std::uint64_t total = 0;
  for (const auto& r : rows) {
    total += r.connected;
    v.check(r.connected == r.formula, "count formula at n1=" + std::to_string(r.n1) + " n2=" + std::to_string(r.n2));
    v.check(r.classified() == r.connected, "one class each at n1=" + std::to_string(r.n1));
    v.check(r.below_factorial_bound, "factorial bound at n1=" + std::to_string(r.n1));
  }
  int examples = 0;
  for (const auto& e : example_pairings()) {
    v.check(classify(e.pairing).label() == e.expected, e.name);
    ++examples;
  }
  v.detail << rows.size() << " splits, " << total << " connected pairings, " << examples << " reference examples";
}

void boltzmann(Verdict& v) {
  const auto table = DosTable::build(10'000'000, 2024);
  const ShellSamplerConfig cfg;
  const std::size_t n = 100'000;
  const double E = 3, T = 2;
  const InitialSampler shell = [&](CounterRng& rng) {
    PhasePoint p;
    p.X = {rng.normal(), rng.normal(), rng.normal()};
    p.V = sample_energy_shell(E, cfg, rng).k;
    return p;
  };
  const auto start = initial_ensemble(shell, n, 31);
  const auto end = solve(shell, T, n, cfg, table, 31);
  double drift = 0, weight = 0;
  bool exact_weights = true;
  for (std::size_t i = 0; i < n; ++i) {
    drift = std::max(drift, std::abs(dispersion(end.particles[i].V) - dispersion(start.particles[i].V)));
    exact_weights = exact_weights && end.particles[i].weight == start.particles[i].weight;
    weight += end.particles[i].weight;
  }
  v.check(exact_weights && end.particles.size() == n, "mass conserved");
  v.check(drift <= 1e-8, "energy drift <= 1e-8");

  // velocity law before and after, binned on the cosines of two axes
  auto cell = [](const Vec3& V) {
    auto b = [](double u) { return std::min(7, int((std::cos(two_pi * u) + 1) / 2 * 8)); };
    return b(V[0]) * 8 + b(V[1]);
  };
  std::vector<std::uint64_t> before(64, 0), after(64, 0);
  for (const auto& p : start.particles) before[cell(p.V)]++;
  for (const auto& p : end.particles) after[cell(p.V)]++;
  // the two ensembles share initial draws, so compare against an independent fresh shell sample
  const auto fresh = initial_ensemble(shell, n, 32);
  std::vector<std::uint64_t> ref(64, 0);
  for (const auto& p : fresh.particles) ref[cell(p.V)]++;
  const double p_stat = chi2_two_sample_pvalue(after, ref);

  const auto integral = table.integral();
  const double p_sym = table.symmetry_pvalue();
  v.detail << "total weight " << weight << ", max drift " << drift << ", stationarity p=" << p_stat
           << ", dos integral " << integral.value << " +- " << integral.stderr_ << ", symmetry p=" << p_sym;
  v.check(p_stat > 1e-3, "stationarity p > 0.001");
  v.check(std::abs(integral.value - 1) <= std::max(3 * integral.stderr_, 1e-12), "dos integrates to 1");
  v.check(p_sym > 1e-3, "dos symmetric about 3");
}

const ExperimentConfig& sweep_config() {
  static const ExperimentConfig cfg = [] {
    auto c = load_config(KINLAB_SELFAVG_CONFIG);
    c.reproducible = true;
    return c;
  }();
  return cfg;
}

const std::vector<EnsembleStats>& sweep() {
  static const auto s = run_lambda_sweep(sweep_config());
  return s;
}

void selfaveraging(Verdict& v) {
  const auto r = analyze_selfaveraging(sweep_config(), sweep());
  for (const auto& s : r.sweep) v.detail << "var(" << s.lambda << ")=" << s.variance() << " ";
  v.detail << "slope " << r.slope << " [q05 " << r.slope_q05 << ", q95 " << r.slope_q95 << "]";
  v.check(r.strictly_decreasing, "variance strictly decreasing");
  v.check(r.slope_positive_95, "slope positive at 95%");
}

void kinetic(Verdict& v) {
  const auto& cfg = sweep_config();
  const auto table = build_dos_table(cfg);
  const auto r = analyze_comparison(sweep(), boltzmann_limit(cfg, table));
  for (const auto& x : r.rows) v.detail << "gap(" << x.lambda << ")=" << x.gap << "+-" << x.error_bar << " ";
  v.detail << "relative gap " << r.relative_gap_last;
  v.check(r.nonincreasing, "gap nonincreasing within error bars");
  v.check(r.relative_gap_last <= 0.25, "relative gap <= 25% at the smallest lambda");
}

void duhamel(Verdict& v) {
  const auto rows = run_duhamel_study(ExperimentConfig{});
  const double drop = rows[1].remainder_norm / rows[4].remainder_norm;
  v.detail << "remainder N=1 " << rows[1].remainder_norm << ", N=4 " << rows[4].remainder_norm << ", drop " << drop;
  v.check(drop >= 5, "5x decrease from N=1 to N=4");

  const BoxSpec box(8);
  const auto V = sample_disorder(box, 11, 3);
  WkbSpec spec;
  spec.envelope = {{0, 0, 0}, 0.4};
  spec.phase.linear = {two_pi * 0.2, two_pi * 0.1, 0};
  const auto psi0 = wkb_state(spec, 0.5, box);
  double worst = 0;
  for (int n = 1; n <= 4; ++n) {
    const auto a = duhamel_term(n, 1.0, psi0, V, 0.15, 1e-2);
    const auto b = duhamel_term(n, 1.0, psi0, V, 0.3, 1e-2);
    const double r = std::pow(0.5, n);
    double d = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) d += std::norm(a.values[i] - r * b.values[i]);
    worst = std::max(worst, std::sqrt(d) / a.norm());
  }
  v.detail << ", homogeneity error " << worst;
  v.check(worst <= 1e-10, "homogeneity to 1e-10");
}

void schedule(Verdict& v) {
  int cases = 0;
  for (double T : {0.5, 1.0, 2.0})
    for (double lambda : {0.5, 0.3, 0.1, 0.01, 1e-3}) {
      const auto got = variance_bound(T, lambda).schedule;
      const double t = T / (lambda * lambda), eps = 1 / (3 + t), lg = std::abs(std::log(eps));
      const double a = 2.0 / 85, b = 100;
      v.check(got.a == a && got.b == b, "default a, b");
      v.check(got.t == t && got.epsilon == eps, "epsilon");
      v.check(got.N == int(std::floor(a * lg / std::abs(std::log(lg)))), "N");
      v.check(got.kappa == std::ceil(std::pow(lg, b)), "kappa");
      ++cases;
    }
  const auto s = make_schedule(1, 0.001);
  v.detail << cases << " (T, lambda) cases; e.g. lambda=1e-3: eps=" << s.epsilon << " N=" << s.N
           << " kappa=" << s.kappa;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"propagator oracle", propagator},  {"wigner identities", wigner},
      {"resolvent scaling", resolvent},   {"pairing combinatorics", combinatorics},
      {"boltzmann solver", boltzmann},    {"self-averaging trend", selfaveraging},
      {"kinetic-limit mean", kinetic},    {"duhamel consistency", duhamel},
      {"schedule fidelity", schedule}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.str().c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
