#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "kinlab/harness.hpp"

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

// strong coupling, small box: cheap but exercises every path
const char* small_ini = R"(
[run]
seed = 77
bootstrap = 400
[experiment]
lambdas = 0.95, 0.9, 0.85
T = 0.3
box = 16
dt = 0.05
realizations = 12
tau_points = 4
[wkb]
center = 0, 0, 0
width = 0.3
velocity = 0.25, 0, 0
[observable]
center = 0.1, 0, 0
widths = 1.5, 1.5, 1.5
modes = 0 0 0 1 0; 1 0 0 0 -0.5; -1 0 0 0 0.5
[boltzmann]
particles = 20000
dos_samples = 2000000
)";

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("kinlab_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("config loading", "[harness]") {
  const auto c = parse_config(small_ini);
  REQUIRE(c.lambdas == std::vector<double>{0.95, 0.9, 0.85});
  REQUIRE(c.box == 16);
  REQUIRE(c.seed == 77);
  REQUIRE(c.wkb.phase.linear[0] == Catch::Approx(two_pi * 0.25));
  REQUIRE(c.observable.modes.size() == 3);
  REQUIRE(c.observable.modes[1].coeff == cplx(0, -0.5));
  REQUIRE(c.observable.build().is_real());

  SECTION("file round trip and digest") {
    const auto dir = scratch("cfg");
    std::ofstream(dir / "a.ini") << small_ini;
    const auto d = load_config((dir / "a.ini").string());
    REQUIRE(config_digest(d) == config_digest(c));
    auto e = c;
    e.seed = 78;
    REQUIRE(config_digest(e) != config_digest(c));
    auto f = c;
    f.output = "elsewhere";
    REQUIRE(config_digest(f) == config_digest(c));
  }
  SECTION("rejections") {
    REQUIRE_THROWS_AS(parse_config("[experiment]\nbogus = 1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[experiment]\nlambdas = 0.3, 0.6\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[experiment]\nT = abc\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[observable]\nmodes = 1 0 0 1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config("[observable]\nmodes = 0.5 0 0 1 0\n"), ConfigError);
    // box rule: 2 (T/eta + 6 sigma/eta) = 2 (5.56 + 26) > 48
    REQUIRE_THROWS_AS(parse_config("[experiment]\nlambdas = 0.3\nbox = 48\n[wkb]\nwidth = 0.39\n"), ConfigError);
    REQUIRE_NOTHROW(parse_config("[experiment]\nlambdas = 0.3\nbox = 64\n[wkb]\nwidth = 0.39\n"));
  }
  SECTION("defaults satisfy the box rule") {
    ExperimentConfig d;
    REQUIRE_NOTHROW(d.validate());
    REQUIRE(d.required_box(0.3) <= 64);
  }
}

TEST_CASE("ensemble statistics", "[harness]") {
  auto cfg = parse_config(small_ini);
  cfg.reproducible = true;

  SECTION("bit-identical reruns") {
    const auto a = run_ensemble(cfg, 0.9), b = run_ensemble(cfg, 0.9);
    REQUIRE(a.values == b.values);
    REQUIRE(a.variance() == b.variance());
    REQUIRE(a.max_imag_ratio <= 1e-8);
    REQUIRE(a.values.size() == 12);
  }
  SECTION("seed isolation") {
    auto more = cfg;
    more.realizations = 20;
    const auto a = run_ensemble(cfg, 0.9), b = run_ensemble(more, 0.9);
    for (std::size_t i = 0; i < a.values.size(); ++i) REQUIRE(a.values[i] == b.values[i]);
  }
  SECTION("merged partial statistics agree with the ordered pass") {
    auto loose = cfg;
    loose.reproducible = false;
    const auto a = run_ensemble(cfg, 0.9), b = run_ensemble(loose, 0.9);
    REQUIRE(a.values == b.values);
    REQUIRE(b.variance() == Catch::Approx(a.variance()).epsilon(1e-12));
  }
  SECTION("single realization leaves the variance undefined") {
    auto one = cfg;
    one.realizations = 1;
    const auto a = run_ensemble(one, 0.9);
    REQUIRE_FALSE(a.variance_defined());
    REQUIRE(std::isnan(a.variance()));
    const auto dir = scratch("one");
    write_sweep_summary(dir, {a});
    const auto t = read_csv((dir / "ensemble_summary.csv").string());
    REQUIRE(t.rows.at(0).at(t.column("variance")).empty());
  }
  SECTION("free evolution has no disorder dependence") {
    auto free = cfg;
    free.coupling_override = 0.0;
    const auto a = run_ensemble(free, 0.9);
    REQUIRE(a.coupling == 0);
    REQUIRE(a.variance() <= 1e-12);
  }
  SECTION("disorder makes realizations differ") { REQUIRE(run_ensemble(cfg, 0.9).variance() > 0); }
}

TEST_CASE("stderr of the variance falls by sqrt 2 per doubling", "[harness]") {
  // squared stderr halves within 30%
  std::vector<double> ratios;
  CounterRng rng(5, 0);
  RunningStats a, b;
  for (int i = 0; i < 4000; ++i) {
    const double x = rng.normal();
    a.push(x);
    b.push(x);
  }
  for (int i = 0; i < 4000; ++i) b.push(rng.normal());
  const double r = std::pow(a.stderr_variance() / b.stderr_variance(), 2);
  REQUIRE(r > 2 / 1.3);
  REQUIRE(r < 2 * 1.3);
}

TEST_CASE("self-averaging report", "[harness]") {
  auto cfg = parse_config(small_ini);
  cfg.reproducible = true;
  const auto r = run_selfaveraging(cfg);
  REQUIRE(r.sweep.size() == 3);
  REQUIRE(r.slope_q05 <= r.slope);
  REQUIRE(r.slope <= r.slope_q95);
  // lambda > 1/2 is outside the bound's hypothesis
  for (double e : r.envelope) REQUIRE(std::isnan(e));
  auto two = cfg;
  two.lambdas = {0.95, 0.9};
  REQUIRE_THROWS_AS(run_selfaveraging(two), ConfigError);

  const auto dir = scratch("selfavg");
  write_selfaveraging_csv(dir, r);
  const auto t = read_csv((dir / "selfavg.csv").string());
  for (std::size_t i = 0; i < 3; ++i) REQUIRE(t.number(i, "variance") == r.sweep[i].variance());
}

TEST_CASE("kinetic comparison at T = 0", "[harness]") {
  auto cfg = parse_config(small_ini);
  cfg.T = 0;
  cfg.lambdas = {0.3};
  cfg.box = 48;
  cfg.realizations = 2;
  cfg.boltzmann.particles = 100'000;
  // velocity-blind observable: the initial Wigner mass is a Riemann sum of the limit density
  cfg.observable.widths = {0.5, 0.5, 0.5};
  cfg.observable.modes = {{{0, 0, 0}, 1.0}};
  const auto table = build_dos_table(cfg);
  const auto rep = analyze_comparison(run_lambda_sweep(cfg), boltzmann_limit(cfg, table));
  const auto& row = rep.rows.at(0);
  INFO("quantum " << row.quantum_mean << " limit " << row.limit_mean << " +- " << row.limit_stderr);
  REQUIRE(row.quantum_stderr == 0);
  REQUIRE(row.gap <= 3 * row.limit_stderr + row.truncation);
}

TEST_CASE("free streaming against the collisionless limit", "[harness][slow]") {
  auto cfg = parse_config(small_ini);
  cfg.lambdas = {0.2};
  cfg.T = 0.5;
  cfg.box = 96;
  cfg.realizations = 1;
  cfg.coupling_override = 0.0;
  cfg.wkb.envelope.width = 0.2;
  cfg.observable.center = {0.25, 0, 0};
  cfg.observable.widths = {0.3, 1.0, 1.0};
  cfg.observable.modes = {{{0, 0, 0}, 1.0}};
  cfg.boltzmann.collisions = false;
  cfg.boltzmann.particles = 100'000;
  cfg.validate();
  const auto table = build_dos_table(cfg);
  const auto rep = analyze_comparison(run_lambda_sweep(cfg), boltzmann_limit(cfg, table));
  const auto& row = rep.rows.at(0);
  INFO("quantum " << row.quantum_mean << " limit " << row.limit_mean);
  REQUIRE(row.gap <= 0.03 * std::abs(row.limit_mean));
}

TEST_CASE("sup over the time grid", "[harness]") {
  auto cfg = parse_config(small_ini);
  cfg.boltzmann.particles = 5000;
  const auto r = run_timegrid_sup(cfg);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    REQUIRE(row.tau.size() == 4);
    for (double d : row.deviation) REQUIRE(row.sup >= d);
    REQUIRE(row.limit == r.rows[0].limit);
  }
  SECTION("a single grid point is the T = 0 case") {
    auto one = cfg;
    one.tau_points = 1;
    const auto s = run_timegrid_sup(one);
    REQUIRE(s.rows[0].tau == std::vector<double>{0.0});
    const auto table = build_dos_table(one);
    auto zero = one;
    zero.T = 0;
    const auto lim = boltzmann_limit(zero, table);
    REQUIRE(s.rows[0].limit[0] == lim.estimate.value.real());
  }
  SECTION("too short a grid is refused") {
    auto bad = cfg;
    bad.tau_points = 3;
    REQUIRE_THROWS_AS(run_timegrid_sup(bad), ConfigError);
  }
}

TEST_CASE("sup deviation shrinks with lambda on most sample paths", "[harness][slow]") {
  auto cfg = parse_config(small_ini);
  cfg.lambdas = {0.6, 0.3};
  cfg.T = 0.5;
  cfg.box = 64;
  cfg.dt = 0.05;
  cfg.wkb.envelope.width = 0.39;
  cfg.observable.center = {0.25, 0, 0};
  cfg.observable.widths = {0.5, 0.5, 0.5};
  cfg.tau_points = 4;
  cfg.boltzmann.particles = 20'000;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto r = run_timegrid_sup(cfg);
    if (r.rows[1].sup < r.rows[0].sup) ++wins;
  }
  REQUIRE(wins >= 4);
}

TEST_CASE("resolvent and graph suites", "[harness]") {
  ResolventSettings r;
  r.eps1 = {1.0 / 3, 0.2, 0.1};
  r.eps2 = {1.0 / 3, 0.2, 0.1};
  r.eps3 = {1.0 / 3, 0.2, 0.1};
  r.grid3 = 40;
  const auto s1 = sweep_1res(r);
  REQUIRE(s1.rows.size() == 3);
  REQUIRE(s1.rows[2].N == 80);
  REQUIRE(s1.rows[0].normalized == Catch::Approx(s1.rows[0].value / std::log(3.0)));
  const auto s3 = sweep_3res(r);
  REQUIRE(s3.rows[2].N == 80);
  const auto dir = scratch("suites");
  write_resolvent_csv(dir, s1);
  const auto t = read_csv((dir / "one_resolvent.csv").string());
  REQUIRE(t.number(1, "value") == s1.rows[1].value);

  const auto census = run_graph_census(4);
  REQUIRE(census.size() == 2 + 3 + 4 + 5);
  for (const auto& row : census) {
    REQUIRE(row.connected == row.formula);
    REQUIRE(row.classified() == row.connected);
    REQUIRE(row.below_factorial_bound);
  }
  for (const auto& e : example_pairings()) REQUIRE(classify(e.pairing).label() == e.expected);

  const auto echo = schedule_echo(GraphSettings{});
  REQUIRE(echo.size() == 4);
  for (std::size_t i = 0; i < echo.size(); ++i) REQUIRE(echo[i].lambda == GraphSettings{}.schedule_lambdas[i]);
}

TEST_CASE("duhamel study", "[harness]") {
  auto cfg = parse_config(small_ini);
  cfg.duhamel.box = 12;
  cfg.duhamel.t = 0.5;
  cfg.duhamel.dt = 0.01;
  cfg.duhamel.width = 0.3;
  cfg.duhamel.eta = 0.5;
  cfg.duhamel.max_order = 3;
  const auto rows = run_duhamel_study(cfg);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) REQUIRE(rows[i].remainder_norm < rows[i - 1].remainder_norm);
}

TEST_CASE("manifest", "[harness]") {
  const auto cfg = parse_config(small_ini);
  auto m = start_manifest(cfg, "simulate");
  m.outputs = {"a.csv"};
  const auto dir = scratch("manifest");
  write_manifest(m, dir);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  REQUIRE(j["config_digest"] == config_digest(cfg));
  REQUIRE(j["master_seed"] == 77);
  REQUIRE(j["task_seeds"]["disorder"] == derive_seed(77, seed_tag::disorder));
  REQUIRE(j["outputs"][0] == "a.csv");
  REQUIRE(j["version"] == KINLAB_VERSION);
}
