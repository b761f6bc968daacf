#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "kinlab/csv.hpp"
#include "kinlab/errors.hpp"
#include "kinlab/lattice.hpp"
#include "kinlab/rng.hpp"
#include "kinlab/stats.hpp"
#include "kinlab/wigner.hpp"

namespace kinlab {

struct Particle {
  Vec3 X{};
  Vec3 V{};  ///< torus point, components in [0,1)
  double weight = 1;
};

inline Vec3 uniform_torus_point(CounterRng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform()}; }

// ---- density of states ----

struct DosEstimate {
  double value = 0;
  double stderr_ = 0;
};

/// Volume of {|e - E| < delta} / (2 delta) by plain Monte Carlo.
inline DosEstimate dos(double E, std::uint64_t n_samples, double delta, CounterRng& rng) {
  if (E < -delta || E > 6 + delta || n_samples == 0) return {};
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n_samples; ++i)
    if (std::abs(dispersion(uniform_torus_point(rng)) - E) < delta) ++hits;
  const double p = double(hits) / double(n_samples);
  return {p / (2 * delta), std::sqrt(p * (1 - p) / double(n_samples)) / (2 * delta)};
}

/// Histogram of e(U) for uniform U, read back by linear interpolation between bin
/// centres (and down to zero at the band edges).
class DosTable {
 public:
  static DosTable build(std::uint64_t n_samples, std::uint64_t seed, int bins = 512) {
    if (n_samples == 0 || bins < 2) throw std::invalid_argument("dos table needs samples and >= 2 bins");
    constexpr std::uint64_t chunk = 1 << 20;
    const std::uint64_t chunks = (n_samples + chunk - 1) / chunk;
    std::vector<std::uint64_t> counts(bins, 0);
#pragma omp parallel
    {
      std::vector<std::uint64_t> local(bins, 0);
#pragma omp for schedule(static)
      for (std::int64_t c = 0; c < std::int64_t(chunks); ++c) {
        CounterRng rng(seed, std::uint64_t(c));
        const std::uint64_t end = std::min<std::uint64_t>(n_samples, (c + 1) * chunk);
        for (std::uint64_t i = c * chunk; i < end; ++i) {
          const double e = dispersion(uniform_torus_point(rng));
          local[std::min(bins - 1, int(e / 6.0 * bins))]++;
        }
      }
#pragma omp critical
      for (int b = 0; b < bins; ++b) counts[b] += local[b];
    }
    return DosTable(counts, n_samples);
  }

  DosTable(const std::vector<std::uint64_t>& counts, std::uint64_t n_samples)
      : counts_(counts), n_(n_samples), width_(6.0 / double(counts.size())) {
    for (auto c : counts) {
      const double p = double(c) / double(n_);
      values_.push_back(p / width_);
      errors_.push_back(std::sqrt(p * (1 - p) / double(n_)) / width_);
    }
  }

  int bins() const { return int(values_.size()); }
  double bin_width() const { return width_; }
  double center(int b) const { return (b + 0.5) * width_; }
  std::uint64_t samples() const { return n_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& errors() const { return errors_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  double operator()(double E) const {
    if (E <= 0 || E >= 6) return 0;
    const double u = E / width_ - 0.5;
    const int n = bins();
    if (u < 0) return values_.front() * (E / (0.5 * width_));
    if (u >= n - 1) return values_.back() * ((6 - E) / (0.5 * width_));
    const int b = int(u);
    const double f = u - b;
    return (1 - f) * values_[b] + f * values_[b + 1];
  }

  /// Bin-integral of the table and its standard error.
  DosEstimate integral() const {
    double s = 0;
    for (double v : values_) s += v * width_;
    // multinomial counts sum to n, so the integral has no sampling spread
    return {s, 0.0};
  }

  /// Chi-square p-value for Phi(E) = Phi(6-E) over mirrored bin pairs.
  double symmetry_pvalue() const {
    const int n = bins();
    double stat = 0;
    int dof = 0;
    for (int b = 0; b < n / 2; ++b) {
      const double d = values_[b] - values_[n - 1 - b];
      const double v = errors_[b] * errors_[b] + errors_[n - 1 - b] * errors_[n - 1 - b];
      if (v == 0) continue;
      stat += d * d / v;
      ++dof;
    }
    return chi2_survival(stat, dof);
  }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t n_;
  double width_;
  std::vector<double> values_, errors_;
};

// ---- energy shell sampling ----

enum class ShellMethod {
  sliced,    ///< draw two coordinates, accept by the exact length of the third one's slice
  rejection  ///< uniform point, accept if inside the shell
};

struct ShellSamplerConfig {
  double shell_half_width = 1e-3;
  double projection_tolerance = 1e-12;
  std::uint64_t max_tries = 100'000'000;
  ShellMethod method = ShellMethod::sliced;

  void validate() const {
    if (!(shell_half_width > 0 && shell_half_width <= 0.1))
      throw std::invalid_argument("shell half-width must lie in (0, 0.1]");
    if (!(projection_tolerance > 0)) throw std::invalid_argument("projection tolerance must be positive");
  }
};

/// Tries and acceptances, so the sampler doubles as a shell-volume estimator.
struct ShellTally {
  std::uint64_t tries = 0;
  std::uint64_t accepted = 0;
  std::uint64_t restarts = 0;
};

namespace detail {

// U3 measure of {cos(2 pi U3) in [lo, hi]}
inline double slice_length(double lo, double hi) { return (std::acos(lo) - std::acos(hi)) / std::numbers::pi; }

// Newton steps along grad e onto e = E; false when the gradient vanishes or it fails to settle.
inline bool project_to_level(Vec3& U, double E, double tol) {
  for (int it = 0; it < 50; ++it) {
    const double r = dispersion(U) - E;
    if (std::abs(r) <= tol) {
      U = TorusPoint::reduce(U).k;
      return std::abs(dispersion(U) - E) <= tol;
    }
    Vec3 g;
    double g2 = 0;
    for (int j = 0; j < 3; ++j) {
      g[j] = two_pi * std::sin(two_pi * U[j]);
      g2 += g[j] * g[j];
    }
    if (std::sqrt(g2) < 1e-8) return false;
    for (int j = 0; j < 3; ++j) U[j] -= r * g[j] / g2;
  }
  return false;
}

inline bool draw_shell_candidate(double E, const ShellSamplerConfig& cfg, CounterRng& rng, Vec3& U) {
  const double d = cfg.shell_half_width;
  if (cfg.method == ShellMethod::rejection) {
    U = uniform_torus_point(rng);
    return std::abs(dispersion(U) - E) < d;
  }
  const double u1 = rng.uniform(), u2 = rng.uniform(), accept = rng.uniform();
  const double a = 3 - E - std::cos(two_pi * u1) - std::cos(two_pi * u2);
  const double lo = std::max(a - d, -1.0), hi = std::min(a + d, 1.0);
  if (lo >= hi) return false;
  const double longest = slice_length(1 - 2 * std::min(d, 1.0), 1.0);
  if (accept * longest >= slice_length(lo, hi)) return false;
  // uniform angle within one of the two mirror arcs
  const double theta = std::acos(hi) + rng.uniform() * (std::acos(lo) - std::acos(hi));
  const double u3 = theta / two_pi;
  U = {u1, u2, rng.uniform() < 0.5 ? u3 : TorusPoint::wrap(1.0 - u3)};
  return true;
}

}  // namespace detail

/// Shell-uniform point at energy E, projected onto the exact level set.
inline TorusPoint sample_energy_shell(double E, const ShellSamplerConfig& cfg, CounterRng& rng,
                                      ShellTally* tally = nullptr) {
  cfg.validate();
  if (!(E > 0 && E < 6)) throw ShellEmpty("energy " + std::to_string(E) + " is not inside the band (0,6)");
  std::uint64_t tries = 0, restarts = 0;
  for (;;) {
    Vec3 U;
    bool hit = false;
    std::uint64_t round = 0;
    while (!hit) {
      if (tries >= cfg.max_tries)
        throw ShellEmpty("no sample within " + std::to_string(cfg.max_tries) + " tries at E=" + std::to_string(E));
      ++tries;
      ++round;
      hit = detail::draw_shell_candidate(E, cfg, rng, U);
    }
    if (tally) {
      tally->tries += round;
      tally->accepted += 1;
    }
    if (detail::project_to_level(U, E, cfg.projection_tolerance)) {
      if (tally) tally->restarts += restarts;
      return TorusPoint{U};
    }
    if (++restarts > 1000)
      throw ProjectionStalled("gradient of e vanishes on every candidate near E=" + std::to_string(E));
  }
}

/// Phi(E) estimated from sampler bookkeeping: accepted volume over the shell width.
inline DosEstimate shell_density_estimate(const ShellTally& t, const ShellSamplerConfig& cfg) {
  const double p = double(t.accepted) / double(t.tries);
  const double se = std::sqrt(p * (1 - p) / double(t.tries));
  const double d = cfg.shell_half_width;
  const double scale = cfg.method == ShellMethod::sliced ? detail::slice_length(1 - 2 * d, 1.0) : 1.0;
  return {p * scale / (2 * d), se * scale / (2 * d)};
}

// ---- transport with collisions ----

inline double collision_rate(const Vec3& V, const DosTable& table) { return two_pi * table(dispersion(V)); }

/// Piecewise ballistic flight; at each exponential clock ring the velocity is redrawn on
/// the particle's own energy shell. The energy target is fixed at the start of the step.
inline Particle step_particle(Particle p, double dT, const DosTable& table, const ShellSamplerConfig& cfg,
                              CounterRng& rng, bool collisions = true) {
  if (dT < 0) throw std::invalid_argument("step length must be >= 0");
  const double E = dispersion(p.V);
  const double rate = collisions ? collision_rate(p.V, table) : 0.0;
  double left = dT;
  for (;;) {
    const double tau = rate > 0 ? rng.exponential(rate) : std::numeric_limits<double>::infinity();
    const Vec3 v = group_velocity(p.V);
    const double fly = std::min(tau, left);
    for (int j = 0; j < 3; ++j) p.X[j] += fly * v[j];
    if (tau >= left) break;
    left -= tau;
    p.V = sample_energy_shell(E, cfg, rng).k;
  }
  return p;
}

using InitialSampler = std::function<PhasePoint(CounterRng&)>;

struct ParticleEnsemble {
  std::vector<Particle> particles;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> rng_position;  ///< per-particle draw counter for the dynamics stream
  double time = 0;

  double total_weight() const {
    double s = 0;
    for (const auto& p : particles) s += p.weight;
    return s;
  }
};

/// n particles of weight 1/n; particle i draws from stream i only.
inline ParticleEnsemble initial_ensemble(const InitialSampler& sampler, std::size_t n, std::uint64_t seed) {
  ParticleEnsemble ens;
  ens.seed = seed;
  ens.particles.resize(n);
  ens.rng_position.assign(n, 0);
  const std::uint64_t init_seed = derive_seed(seed, 1);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
    CounterRng rng(init_seed, std::uint64_t(i));
    const auto pp = sampler(rng);
    ens.particles[i] = Particle{pp.X, pp.V, 1.0 / double(n)};
  }
  return ens;
}

inline void advance_ensemble(ParticleEnsemble& ens, double dT, const DosTable& table, const ShellSamplerConfig& cfg,
                             bool collisions = true) {
  const std::uint64_t dyn_seed = derive_seed(ens.seed, 2);
  std::vector<std::string> failures(ens.particles.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < std::int64_t(ens.particles.size()); ++i) {
    CounterRng rng(dyn_seed, std::uint64_t(i), ens.rng_position[i]);
    try {
      ens.particles[i] = step_particle(ens.particles[i], dT, table, cfg, rng, collisions);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
    ens.rng_position[i] = rng.position();
  }
  for (std::size_t i = 0; i < failures.size(); ++i)
    if (!failures[i].empty()) throw Error("particle " + std::to_string(i) + ": " + failures[i]);
  ens.time += dT;
}

inline ParticleEnsemble solve(const InitialSampler& sampler, double T, std::size_t n, const ShellSamplerConfig& cfg,
                              const DosTable& table, std::uint64_t seed, bool collisions = true) {
  if (T < 0) throw std::invalid_argument("T must be >= 0");
  auto ens = initial_ensemble(sampler, n, seed);
  if (T > 0) advance_ensemble(ens, T, table, cfg, collisions);
  return ens;
}

struct MonteCarloEstimate {
  cplx value = 0;
  double stderr_real = 0;
  double stderr_imag = 0;
  std::size_t n = 0;
  double stderr_abs() const { return std::hypot(stderr_real, stderr_imag); }
};

/// sum_i w_i conj(J(X_i, V_i)) with a CLT standard error.
inline MonteCarloEstimate observable(const ParticleEnsemble& ens, const TestObservable& J) {
  const std::size_t n = ens.particles.size();
  std::vector<double> re(n), im(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < std::int64_t(n); ++i) {
    const auto& p = ens.particles[i];
    const cplx y = double(n) * p.weight * std::conj(J(p.X, p.V));
    re[i] = y.real();
    im[i] = y.imag();
  }
  const auto sr = ordered_stats(re), si = ordered_stats(im);
  MonteCarloEstimate out;
  out.value = {sr.mean, si.mean};
  out.stderr_real = n > 1 ? sr.stderr_mean() : 0.0;
  out.stderr_imag = n > 1 ? si.stderr_mean() : 0.0;
  out.n = n;
  return out;
}

inline void write_ensemble_csv(const std::string& path, const ParticleEnsemble& ens) {
  CsvWriter w(path, {"X1", "X2", "X3", "V1", "V2", "V3", "weight"});
  for (const auto& p : ens.particles) w.numbers({p.X[0], p.X[1], p.X[2], p.V[0], p.V[1], p.V[2], p.weight});
}

inline std::vector<Particle> read_ensemble_csv(const std::string& path) {
  const auto t = read_csv(path);
  std::vector<Particle> out;
  for (const auto& r : t.rows) {
    if (r.size() != 7) throw std::runtime_error("ensemble CSV rows need 7 columns");
    out.push_back({{std::stod(r[0]), std::stod(r[1]), std::stod(r[2])},
                   {std::stod(r[3]), std::stod(r[4]), std::stod(r[5])},
                   std::stod(r[6])});
  }
  return out;
}

}  // namespace kinlab
