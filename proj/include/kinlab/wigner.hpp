#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "kinlab/errors.hpp"
#include "kinlab/lattice.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

/// g(X) = A exp(-sum_j (X_j - c_j)^2 / (2 s_j^2)).
struct SpatialGaussian {
  Vec3 center{};
  Vec3 widths{1, 1, 1};
  cplx amplitude = 1.0;

  cplx operator()(const Vec3& X) const {
    double q = 0;
    for (int j = 0; j < 3; ++j) q += (X[j] - center[j]) * (X[j] - center[j]) / (2 * widths[j] * widths[j]);
    return amplitude * std::exp(-q);
  }
  /// int g(X) exp(-2 pi i zeta.X) dX
  cplx fourier(const Vec3& zeta) const {
    double q = 0, ph = 0, vol = 1;
    for (int j = 0; j < 3; ++j) {
      q += 2 * std::numbers::pi * std::numbers::pi * widths[j] * widths[j] * zeta[j] * zeta[j];
      ph += zeta[j] * center[j];
      vol *= widths[j];
    }
    return amplitude * std::pow(two_pi, 1.5) * vol * std::exp(-q) * std::polar(1.0, -two_pi * ph);
  }
  double fourier_l1() const { return std::abs(amplitude); }
};

struct TrigMode {
  std::array<int, 3> m{};
  cplx coeff = 0;
};

/// h(V) = sum_m c_m exp(2 pi i m.V)
struct VelocityPolynomial {
  std::vector<TrigMode> modes;

  cplx operator()(const Vec3& V) const {
    cplx s = 0;
    for (const auto& t : modes) s += t.coeff * std::polar(1.0, two_pi * (t.m[0] * V[0] + t.m[1] * V[1] + t.m[2] * V[2]));
    return s;
  }
  cplx coefficient(const std::array<int, 3>& m) const {
    cplx s = 0;
    for (const auto& t : modes)
      if (t.m == m) s += t.coeff;
    return s;
  }
  /// Real-valued iff c_{-m} = conj(c_m).
  bool is_real(double tol = 1e-14) const {
    for (const auto& t : modes)
      if (std::abs(coefficient({-t.m[0], -t.m[1], -t.m[2]}) - std::conj(coefficient(t.m))) > tol) return false;
    return true;
  }
  /// max over the torus of |h|: grid scan, then coordinate-wise golden-section polish.
  double max_modulus() const {
    if (modes.empty()) return 0;
    int top = 0;
    for (const auto& t : modes)
      for (int j = 0; j < 3; ++j) top = std::max(top, std::abs(t.m[j]));
    if (top == 0) return std::abs((*this)({0, 0, 0}));
    const int n = std::clamp(12 * top, 24, 96);
    std::vector<std::pair<double, Vec3>> best;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          Vec3 v{double(i) / n, double(j) / n, double(k) / n};
          best.emplace_back(std::abs((*this)(v)), v);
        }
    std::partial_sort(best.begin(), best.begin() + 8, best.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double result = best.front().first;
    const double step = 1.0 / n;
    for (int s = 0; s < 8; ++s) {
      Vec3 v = best[s].second;
      double width = step;
      for (int sweep = 0; sweep < 40; ++sweep) {
        for (int axis = 0; axis < 3; ++axis) {
          auto f = [&](double x) {
            Vec3 w = v;
            w[axis] = x;
            return std::abs((*this)(w));
          };
          double a = v[axis] - width, b = v[axis] + width;
          const double gr = (std::sqrt(5.0) - 1) / 2;
          double c = b - gr * (b - a), d = a + gr * (b - a);
          double fc = f(c), fd = f(d);
          for (int it = 0; it < 60; ++it) {
            if (fc > fd) {
              b = d; d = c; fd = fc; c = b - gr * (b - a); fc = f(c);
            } else {
              a = c; c = d; fc = fd; d = a + gr * (b - a); fd = f(d);
            }
          }
          const double x = 0.5 * (a + b);
          if (f(x) > std::abs((*this)(v))) v[axis] = x;
        }
        width *= 0.5;
      }
      result = std::max(result, std::abs((*this)(v)));
    }
    return result;
  }
};

/// J(X,V) = g(X) h(V).
class TestObservable {
 public:
  TestObservable(SpatialGaussian g, VelocityPolynomial h)
      : g_(std::move(g)), h_(std::move(h)), cj_(g_.fourier_l1() * h_.max_modulus()) {}

  const SpatialGaussian& spatial() const { return g_; }
  const VelocityPolynomial& velocity() const { return h_; }

  cplx operator()(const Vec3& X, const Vec3& V) const { return g_(X) * h_(V); }
  /// Fourier transform in X only.
  cplx fourier(const Vec3& xi, const Vec3& v) const { return g_.fourier(xi) * h_(v); }
  /// int d xi sup_v |J^(xi, v)|
  double bound_constant() const { return cj_; }
  bool is_real() const { return std::abs(g_.amplitude.imag()) == 0 && h_.is_real(); }

  TestObservable conjugate() const {
    SpatialGaussian g = g_;
    g.amplitude = std::conj(g.amplitude);
    VelocityPolynomial h;
    for (const auto& t : h_.modes) h.modes.push_back({{-t.m[0], -t.m[1], -t.m[2]}, std::conj(t.coeff)});
    return TestObservable(g, h);
  }

 private:
  SpatialGaussian g_;
  VelocityPolynomial h_;
  double cj_;
};

struct WignerPairing {
  cplx value = 0;
  double eta = 0;
  Vec3 xi_cutoff{};
  double truncation_error = 0;
};

struct PairingOptions {
  double tail_threshold = 1e-10;       ///< per-axis Gaussian cut relative to the peak
  double resolution_tolerance = 0.01;  ///< Riemann-sum defect allowed for the xi grid
};

namespace detail {

struct XiWindow {
  Vec3 cutoff{};
  std::array<int, 3> half{};  ///< grid radius per axis in units of 1/L
  double truncation_fraction = 0;
};

inline XiWindow xi_window(const SpatialGaussian& g, double eta, int L, const PairingOptions& opt) {
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("pairing: eta must lie in (0,1]");
  XiWindow w;
  double inside = 1.0, defect = 1.0;
  const double pi = std::numbers::pi;
  for (int j = 0; j < 3; ++j) {
    const double s = g.widths[j];
    w.cutoff[j] = eta * std::sqrt(std::log(1.0 / opt.tail_threshold) / (2 * pi * pi * s * s));
    w.half[j] = int(std::floor(w.cutoff[j] * L));
    inside *= std::erf(w.cutoff[j] * pi * s * std::numbers::sqrt2 / eta);
    // Riemann sum of the 1D factor on spacing 1/L against its exact integral
    double sum = 0;
    for (int n = -w.half[j]; n <= w.half[j]; ++n) {
      const double z = double(n) / L / eta;
      sum += std::exp(-2 * pi * pi * s * s * z * z);
    }
    const double exact = eta * L / (s * std::sqrt(2 * pi));
    defect *= sum / exact;
  }
  if (std::abs(defect - 1.0) > opt.resolution_tolerance)
    throw ResolutionTooCoarse("xi grid 1/" + std::to_string(L) + " misses the observable's Fourier width at eta=" +
                              std::to_string(eta) + " (relative defect " + std::to_string(defect - 1.0) + ")");
  w.truncation_fraction = 1.0 - inside;
  return w;
}

inline int wrap_index(int n, int L) {
  int r = n % L;
  return r < 0 ? r + L : r;
}

}  // namespace detail

/// <J, W^eta[phi, psi]>: conjugate-linear in phi, linear in psi, J enters conjugated.
///
/// Evaluated by grouping the momentum pair sum by the velocity mode m: each mode
/// reduces to one transform of conj(phi(x+m)) psi(x), which the xi window then reads.
inline WignerPairing pair_wigner_bilinear(const TestObservable& J, const WaveFunction& phi, const WaveFunction& psi,
                                          double eta, const PairingOptions& opt = {}) {
  if (!(phi.box == psi.box)) throw std::invalid_argument("pairing: boxes differ");
  const int L = psi.box.side();
  const auto win = detail::xi_window(J.spatial(), eta, L, opt);
  const WaveFunction a = as_position(phi), b = as_position(psi);

  std::map<std::array<int, 3>, cplx> coeffs;
  for (const auto& t : J.velocity().modes) coeffs[t.m] += t.coeff;

  const double inv = 1.0 / (double(psi.box.volume()) * eta * eta * eta);
  std::vector<cplx> P(psi.box.volume());
  cplx total = 0;
  for (const auto& [m, c] : coeffs) {
    if (c == cplx(0)) continue;
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j)
        for (int k = 0; k < L; ++k) {
          const auto s = site_index(L, i, j, k);
          const auto t = site_index(L, detail::wrap_index(i + m[0], L), detail::wrap_index(j + m[1], L),
                                    detail::wrap_index(k + m[2], L));
          P[s] = std::conj(a.values[t]) * b.values[s];
        }
    fft3_forward(P.data(), L);
    cplx part = 0;
    for (int n0 = -win.half[0]; n0 <= win.half[0]; ++n0)
      for (int n1 = -win.half[1]; n1 <= win.half[1]; ++n1)
        for (int n2 = -win.half[2]; n2 <= win.half[2]; ++n2) {
          const Vec3 xi{double(n0) / L, double(n1) / L, double(n2) / L};
          const cplx gh = std::conj(J.spatial().fourier({xi[0] / eta, xi[1] / eta, xi[2] / eta}));
          const double sign = ((n0 + n1 + n2) % 2 == 0) ? 1.0 : -1.0;
          const cplx shift = std::polar(1.0, -std::numbers::pi * (m[0] * xi[0] + m[1] * xi[1] + m[2] * xi[2]));
          const auto idx = site_index(L, detail::wrap_index(n0, L), detail::wrap_index(n1, L), detail::wrap_index(n2, L));
          part += gh * sign * shift * P[idx];
        }
    total += std::conj(c) * part;
  }
  WignerPairing out;
  out.value = total * inv;
  out.eta = eta;
  out.xi_cutoff = win.cutoff;
  out.truncation_error = J.bound_constant() * win.truncation_fraction * a.norm() * b.norm();
  return out;
}

inline WignerPairing pair_wigner(const TestObservable& J, const WaveFunction& psi, double eta,
                                 const PairingOptions& opt = {}) {
  return pair_wigner_bilinear(J, psi, psi, eta, opt);
}

/// Literal momentum pair sum  L^-3 sum_a sum_xi conj(J^_eta(xi, a + xi/2)) conj(phi^(a)) psi^(a + xi).
/// Cost L^3 times the window; meant for small boxes and cross-checks.
inline WignerPairing pair_wigner_direct(const TestObservable& J, const WaveFunction& phi, const WaveFunction& psi,
                                        double eta, const PairingOptions& opt = {}) {
  if (!(phi.box == psi.box)) throw std::invalid_argument("pairing: boxes differ");
  const int L = psi.box.side();
  const auto win = detail::xi_window(J.spatial(), eta, L, opt);
  const WaveFunction a = as_momentum(phi), b = as_momentum(psi);
  const double e3 = eta * eta * eta;
  cplx total = 0;
  for (std::size_t ia = 0; ia < a.values.size(); ++ia) {
    const cplx fa = std::conj(a.values[ia]);
    if (fa == cplx(0)) continue;
    const auto ta = site_triple(L, ia);
    const Vec3 ka = grid_momentum(psi.box, ia);
    for (int n0 = -win.half[0]; n0 <= win.half[0]; ++n0)
      for (int n1 = -win.half[1]; n1 <= win.half[1]; ++n1)
        for (int n2 = -win.half[2]; n2 <= win.half[2]; ++n2) {
          const Vec3 xi{double(n0) / L, double(n1) / L, double(n2) / L};
          const Vec3 v{ka[0] + xi[0] / 2, ka[1] + xi[1] / 2, ka[2] + xi[2] / 2};
          const cplx jh = J.fourier({xi[0] / eta, xi[1] / eta, xi[2] / eta}, v) / e3;
          const auto ib = site_index(L, detail::wrap_index(ta[0] + n0, L), detail::wrap_index(ta[1] + n1, L),
                                     detail::wrap_index(ta[2] + n2, L));
          total += std::conj(jh) * fa * b.values[ib];
        }
  }
  WignerPairing out;
  out.value = total / double(psi.box.volume());
  out.eta = eta;
  out.xi_cutoff = win.cutoff;
  out.truncation_error = J.bound_constant() * win.truncation_fraction * a.norm() * b.norm();
  return out;
}

struct PhasePoint {
  Vec3 X{};
  Vec3 V{};
};

/// Samples |h(X)|^2 dX (x) delta(V - grad S(X)/(2 pi) mod 1).
class WkbLimitSampler {
 public:
  explicit WkbLimitSampler(WkbSpec spec) : spec_(std::move(spec)) {}
  PhasePoint operator()(CounterRng& rng) const {
    PhasePoint p;
    const double sd = spec_.envelope.density_sd();
    for (int j = 0; j < 3; ++j) p.X[j] = spec_.envelope.center[j] + sd * rng.normal();
    p.V = limit_velocity(spec_, p.X).k;
    return p;
  }
  const WkbSpec& spec() const { return spec_; }

 private:
  WkbSpec spec_;
};

inline WkbLimitSampler wkb_limit_sampler(const WkbSpec& spec) { return WkbLimitSampler(spec); }

}  // namespace kinlab
