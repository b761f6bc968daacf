#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinlab/errors.hpp"
#include "kinlab/lattice.hpp"

namespace kinlab {

enum class Scheme { strang_split, dense_oracle };

struct PropagatorConfig {
  double dt = 1e-2;
  Scheme scheme = Scheme::strang_split;
  std::size_t dense_max_dimension = 1024;
};

namespace detail {
inline void multiply_phase(std::vector<cplx>& v, const std::vector<double>& energy, double t) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::polar(1.0, -t * energy[i]);
}
inline std::vector<cplx> phase_table(const std::vector<double>& energy, double t) {
  std::vector<cplx> out(energy.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::polar(1.0, -t * energy[i]);
  return out;
}
inline void multiply(std::vector<cplx>& v, const std::vector<cplx>& f) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= f[i];
}
}  // namespace detail

/// exp(-i t H0): a phase per momentum.
inline WaveFunction evolve_free(const WaveFunction& psi, double t) {
  if (t < 0) throw std::invalid_argument("evolve_free: t must be >= 0");
  WaveFunction out = as_momentum(psi);
  detail::multiply_phase(out.values, dispersion_grid(psi.box), t);
  return psi.domain == Domain::momentum ? out : to_position(std::move(out));
}

/// Strang splitting, free half / potential / free half, with neighbouring
/// half steps fused. Phase tables are built once per propagator.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const DisorderField& V, double lambda, double dt)
      : box_(V.box), dt_(dt), lambda_(lambda), energy_(dispersion_grid(V.box)), potential_(V.values) {
    if (!(dt > 0)) throw std::invalid_argument("time step must be positive");
    for (auto& v : potential_) v *= lambda;
    half_ = detail::phase_table(energy_, 0.5 * dt);
    full_ = detail::phase_table(energy_, dt);
    kick_ = detail::phase_table(potential_, dt);
  }

  double dt() const { return dt_; }
  double coupling() const { return lambda_; }

  WaveFunction advance(const WaveFunction& psi, double t) const {
    if (t < 0) throw std::invalid_argument("evolve: t must be >= 0");
    WaveFunction w = as_momentum(psi);
    const long steps = t == 0 ? 0 : long(std::ceil(t / dt_ - 1e-9));
    if (steps > 0) {
      const double last = t - double(steps - 1) * dt_;
      const bool short_last = std::abs(last - dt_) > 1e-14 * dt_;
      if (steps == 1 && short_last)
        detail::multiply_phase(w.values, energy_, 0.5 * last);
      else
        detail::multiply(w.values, half_);
      for (long s = 0; s < steps; ++s) {
        const bool is_last = s == steps - 1;
        w = to_position(std::move(w));
        if (is_last && short_last)
          detail::multiply_phase(w.values, potential_, last);
        else
          detail::multiply(w.values, kick_);
        w = to_momentum(std::move(w));
        if (!is_last) {
          if (s == steps - 2 && short_last)
            detail::multiply_phase(w.values, energy_, 0.5 * (dt_ + last));
          else
            detail::multiply(w.values, full_);
        } else {
          if (short_last)
            detail::multiply_phase(w.values, energy_, 0.5 * last);
          else
            detail::multiply(w.values, half_);
        }
      }
    }
    return psi.domain == Domain::momentum ? w : to_position(std::move(w));
  }

 private:
  BoxSpec box_;
  double dt_, lambda_;
  std::vector<double> energy_, potential_;
  std::vector<cplx> half_, full_, kick_;
};

/// Dense real symmetric H = -Laplacian/2 + lambda V on the periodic box (diagonal 3, hops -1/2).
inline Eigen::MatrixXd dense_hamiltonian(const DisorderField& V, double lambda) {
  const int L = V.box.side();
  const auto n = Eigen::Index(V.box.volume());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) {
        const auto a = Eigen::Index(site_index(L, i, j, k));
        H(a, a) = 3.0 + lambda * V.values[a];
        const Eigen::Index nb[3] = {Eigen::Index(site_index(L, (i + 1) % L, j, k)),
                                    Eigen::Index(site_index(L, i, (j + 1) % L, k)),
                                    Eigen::Index(site_index(L, i, j, (k + 1) % L))};
        for (auto b : nb) {
          H(a, b) -= 0.5;
          H(b, a) -= 0.5;
        }
      }
  return H;
}

/// exp(-i t H) psi by full eigendecomposition. Test oracle for small boxes.
inline WaveFunction evolve_dense(const WaveFunction& psi, const DisorderField& V, double lambda, double t,
                                 std::size_t max_dimension = 1024) {
  if (V.box.volume() > max_dimension)
    throw DimensionTooLarge(std::to_string(V.box.volume()) + " sites exceed the dense limit " +
                            std::to_string(max_dimension));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense_hamiltonian(V, lambda));
  const auto& U = eig.eigenvectors();
  const WaveFunction x = as_position(psi);
  const auto n = Eigen::Index(x.values.size());
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = x.values[i];
  Eigen::VectorXcd c = U.transpose().cast<cplx>() * v;
  for (Eigen::Index i = 0; i < n; ++i) c[i] *= std::polar(1.0, -t * eig.eigenvalues()[i]);
  Eigen::VectorXcd out = U.cast<cplx>() * c;
  WaveFunction r(psi.box, Domain::position);
  for (Eigen::Index i = 0; i < n; ++i) r.values[i] = out[i];
  return psi.domain == Domain::momentum ? to_momentum(std::move(r)) : r;
}

inline WaveFunction evolve_full(const WaveFunction& psi, const DisorderField& V, double lambda, double t,
                                const PropagatorConfig& cfg = {}) {
  if (cfg.scheme == Scheme::dense_oracle) return evolve_dense(psi, V, lambda, t, cfg.dense_max_dimension);
  return SplitStepPropagator(V, lambda, cfg.dt).advance(psi, t);
}

// ---- Duhamel expansion ----

struct DuhamelLadder {
  int order_cap = 0;
  double t = 0;
  double dt = 0;                   ///< actual grid step, t / steps
  std::vector<WaveFunction> terms; ///< order 0..order_cap at time t, position domain
  std::vector<double> norms;

  WaveFunction partial_sum(int N) const {
    WaveFunction s(terms.front().box, Domain::position);
    for (int n = 0; n <= N; ++n)
      for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] += terms[n].values[i];
    return s;
  }
};

/// Terms phi_n(t) = -i lambda int_0^t exp(-i(t-s)H0) V phi_{n-1}(s) ds, trapezoid rule on a
/// uniform grid of step <= dt. Each order is stored on the whole grid in momentum space.
inline DuhamelLadder duhamel_ladder(const WaveFunction& psi0, const DisorderField& V, double lambda, double t,
                                    double dt, int order_cap) {
  if (order_cap < 0) throw std::invalid_argument("order cap must be >= 0");
  if (t < 0 || !(dt > 0)) throw std::invalid_argument("need t >= 0 and dt > 0");
  const long M = t == 0 ? 1 : std::max(1L, long(std::ceil(t / dt - 1e-9)));
  const double h = t / double(M);
  const auto energy = dispersion_grid(psi0.box);
  const auto step = detail::phase_table(energy, h);

  DuhamelLadder out;
  out.order_cap = order_cap;
  out.t = t;
  out.dt = h;

  std::vector<WaveFunction> prev;
  prev.reserve(M + 1);
  prev.push_back(as_momentum(psi0));
  for (long j = 1; j <= M; ++j) {
    WaveFunction w = prev.back();
    detail::multiply(w.values, step);
    prev.push_back(std::move(w));
  }
  out.terms.push_back(to_position(prev.back()));
  out.norms.push_back(out.terms.back().norm());

  const cplx pref = cplx(0, -lambda * h);
  for (int n = 1; n <= order_cap; ++n) {
    std::vector<WaveFunction> cur;
    cur.reserve(M + 1);
    auto kicked = [&](const WaveFunction& w) {
      WaveFunction x = to_position(w);
      for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] *= V.values[i];
      return to_momentum(std::move(x));
    };
    WaveFunction vphi = kicked(prev[0]);
    WaveFunction acc = vphi;  // B_j = sum_i c_i exp(-i(t_j - s_i)H0) V phi(s_i), c_0 = c_j = 1/2
    for (auto& z : acc.values) z *= 0.5;
    cur.emplace_back(psi0.box, Domain::momentum);
    for (long j = 1; j <= M; ++j) {
      detail::multiply(acc.values, step);
      vphi = kicked(prev[j]);
      WaveFunction term(psi0.box, Domain::momentum);
      for (std::size_t i = 0; i < acc.values.size(); ++i) {
        acc.values[i] += vphi.values[i];
        term.values[i] = pref * (acc.values[i] - 0.5 * vphi.values[i]);
      }
      cur.push_back(std::move(term));
    }
    prev = std::move(cur);
    out.terms.push_back(to_position(prev.back()));
    out.norms.push_back(out.terms.back().norm());
  }
  return out;
}

inline WaveFunction duhamel_term(int n, double t, const WaveFunction& psi0, const DisorderField& V, double lambda,
                                 double dt) {
  if (n < 0) throw std::invalid_argument("Duhamel order must be >= 0");
  if (n == 0) return as_position(evolve_free(psi0, t));
  return duhamel_ladder(psi0, V, lambda, t, dt, n).terms[n];
}

/// evolve_full minus the Duhamel terms of order <= N.
inline WaveFunction remainder(int N, double t, const WaveFunction& psi0, const DisorderField& V, double lambda,
                              const PropagatorConfig& cfg = {}) {
  if (N < 0) throw std::invalid_argument("remainder order must be >= 0");
  auto full = as_position(evolve_full(psi0, V, lambda, t, cfg));
  auto sum = duhamel_ladder(psi0, V, lambda, t, cfg.dt, N).partial_sum(N);
  for (std::size_t i = 0; i < full.values.size(); ++i) full.values[i] -= sum.values[i];
  return full;
}

struct RemainderBoundParams {
  int N = 1;
  double kappa = 1;
  double epsilon = 0.1;
  double lambda = 0.1;
  double t = 1;
  double C = 1;
  double phi0_norm = 1;
};

/// Bound on E||R_{N,t}||^2 from partial time integration, evaluated literally.
/// Long double keeps the factorials finite well past N = 100.
inline long double remainder_bound_ld(const RemainderBoundParams& p) {
  if (p.N < 0 || p.kappa <= 0 || p.epsilon <= 0 || p.lambda < 0 || p.t <= 0)
    throw std::invalid_argument("remainder_bound: invalid parameters");
  if (p.epsilon > 1.0 / p.t)
    throw HypothesisViolated("epsilon=" + std::to_string(p.epsilon) + " exceeds 1/t=" + std::to_string(1.0 / p.t));
  using ld = long double;
  const ld eps = p.epsilon, kap = p.kappa, N = p.N;
  const ld lg = std::fabs(std::log(eps));
  const ld x = ld(p.C) * p.lambda * p.lambda / eps;
  const ld y = x * lg;
  const ld f4 = std::tgamma(4 * N + 1);
  const ld p20 = std::pow(4 * N, 20 * N);  // pow(0,0) == 1
  const ld fourN = 4 * N;
  const ld t1 = N * N * kap * kap * std::pow(x, 4 * N) / std::sqrt(std::tgamma(N + 1));
  const ld t2 = N * N * kap * kap * std::pow(y, 4 * N) * lg * lg * lg *
                (std::pow(eps, 0.2L) * f4 + eps * eps * p20);
  const ld t3 = std::pow(y, 4 * N) * lg * lg * lg / (eps * eps) *
                (std::pow(kap, -N) * f4 + std::pow(kap, -N + 5) * eps * f4 * std::pow(fourN, 4) +
                 std::pow(kap, -N + 9) * eps * eps * f4 * std::pow(fourN, 8) + eps * eps * eps * p20);
  return ld(p.phi0_norm) * p.phi0_norm * (t1 + t2 + t3);
}

inline double remainder_bound(const RemainderBoundParams& p) { return double(remainder_bound_ld(p)); }

}  // namespace kinlab
