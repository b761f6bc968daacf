#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinlab/errors.hpp"
#include "kinlab/fft.hpp"
#include "kinlab/rng.hpp"

namespace kinlab {

using Vec3 = std::array<double, 3>;
using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Periodic cubic box with an even number of sites per axis.
class BoxSpec {
 public:
  explicit BoxSpec(int side) : side_(side) {
    if (side < 4 || side % 2 != 0)
      throw std::invalid_argument("box side must be even and >= 4, got " + std::to_string(side));
  }
  int side() const { return side_; }
  std::size_t volume() const { return std::size_t(side_) * side_ * side_; }
  bool operator==(const BoxSpec&) const = default;

 private:
  int side_;
};

/// Point of the unit torus, each component in [0,1).
struct TorusPoint {
  Vec3 k{};

  static double wrap(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
  }
  static TorusPoint reduce(const Vec3& v) { return {{wrap(v[0]), wrap(v[1]), wrap(v[2])}}; }
  TorusPoint reduced() const { return reduce(k); }
  double operator[](int j) const { return k[j]; }
};

inline double dispersion(const Vec3& k) {
  return 3.0 - std::cos(two_pi * k[0]) - std::cos(two_pi * k[1]) - std::cos(two_pi * k[2]);
}
inline double dispersion(const TorusPoint& p) { return dispersion(p.k); }

inline Vec3 group_velocity(const Vec3& k) {
  return {std::sin(two_pi * k[0]), std::sin(two_pi * k[1]), std::sin(two_pi * k[2])};
}
inline Vec3 group_velocity(const TorusPoint& p) { return group_velocity(p.k); }

// ---- storage layout: index = (i*L + j)*L + k, axis 3 fastest ----

inline std::size_t site_index(int side, int i, int j, int k) {
  return (std::size_t(i) * side + j) * side + k;
}

inline std::array<int, 3> site_triple(int side, std::size_t idx) {
  const int k = int(idx % side);
  const int j = int((idx / side) % side);
  const int i = int(idx / (std::size_t(side) * side));
  return {i, j, k};
}

/// Physical coordinate of a storage index; the origin sits at index L/2.
inline std::array<int, 3> site_coordinate(const BoxSpec& box, std::size_t idx) {
  auto t = site_triple(box.side(), idx);
  const int h = box.side() / 2;
  return {t[0] - h, t[1] - h, t[2] - h};
}

/// Momentum m/L of a storage index in momentum domain.
inline Vec3 grid_momentum(const BoxSpec& box, std::size_t idx) {
  auto t = site_triple(box.side(), idx);
  const double L = box.side();
  return {t[0] / L, t[1] / L, t[2] / L};
}

enum class Domain { position, momentum };

struct WaveFunction {
  BoxSpec box;
  Domain domain = Domain::position;
  std::vector<cplx> values;

  WaveFunction(BoxSpec b, Domain d) : box(b), domain(d), values(b.volume()) {}
  WaveFunction(BoxSpec b, Domain d, std::vector<cplx> v) : box(b), domain(d), values(std::move(v)) {
    if (values.size() != box.volume()) throw std::invalid_argument("wave function size mismatch");
  }

  double norm_squared() const {
    double s = 0;
    for (const auto& z : values) s += std::norm(z);
    return s;
  }
  double norm() const { return std::sqrt(norm_squared()); }
};

inline cplx inner(const WaveFunction& a, const WaveFunction& b) {
  cplx s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::conj(a.values[i]) * b.values[i];
  return s;
}

inline double distance(const WaveFunction& a, const WaveFunction& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
  return std::sqrt(s);
}

/// Stored momentum amplitudes are unitary; multiply by this to get the plain
/// lattice sum  sum_x psi(x) exp(-2 pi i k.x).
inline double continuum_fourier_factor(const BoxSpec& box) { return std::sqrt(double(box.volume())); }

namespace detail {
// (-1)^(m1+m2+m3): shift from storage index j to coordinate x = j - L/2.
inline void apply_centering_sign(std::vector<cplx>& v, int side, double scale) {
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      cplx* row = v.data() + site_index(side, i, j, 0);
      const double s = ((i + j) % 2 ? -scale : scale);
      for (int k = 0; k < side; ++k) row[k] *= (k % 2 ? -s : s);
    }
}
}  // namespace detail

inline WaveFunction to_momentum(WaveFunction psi) {
  if (psi.domain != Domain::position) throw std::invalid_argument("to_momentum expects position domain");
  const int L = psi.box.side();
  fft3_forward(psi.values.data(), L);
  detail::apply_centering_sign(psi.values, L, 1.0 / std::sqrt(double(psi.box.volume())));
  psi.domain = Domain::momentum;
  return psi;
}

inline WaveFunction to_position(WaveFunction psi) {
  if (psi.domain != Domain::momentum) throw std::invalid_argument("to_position expects momentum domain");
  const int L = psi.box.side();
  detail::apply_centering_sign(psi.values, L, 1.0 / std::sqrt(double(psi.box.volume())));
  fft3_backward(psi.values.data(), L);
  psi.domain = Domain::position;
  return psi;
}

inline WaveFunction as_position(const WaveFunction& psi) {
  return psi.domain == Domain::position ? psi : to_position(psi);
}
inline WaveFunction as_momentum(const WaveFunction& psi) {
  return psi.domain == Domain::momentum ? psi : to_momentum(psi);
}

/// e(k) on the momentum grid in storage order.
inline std::vector<double> dispersion_grid(const BoxSpec& box) {
  const int L = box.side();
  std::vector<double> c(L);
  for (int m = 0; m < L; ++m) c[m] = std::cos(two_pi * m / L);
  std::vector<double> e(box.volume());
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k) e[site_index(L, i, j, k)] = 3.0 - c[i] - c[j] - c[k];
  return e;
}

struct DisorderField {
  BoxSpec box;
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline DisorderField sample_disorder(const BoxSpec& box, std::uint64_t seed, std::uint64_t stream) {
  DisorderField v{box, std::vector<double>(box.volume()), seed, stream};
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] = counter_normal(seed, stream, i);
  return v;
}

// ---- WKB initial data ----

/// h(X) = (pi w^2)^(-3/4) exp(-|X-c|^2 / (2 w^2)), unit L2 norm.
struct GaussianEnvelope {
  Vec3 center{};
  double width = 1.0;

  double operator()(const Vec3& X) const {
    double r2 = 0;
    for (int j = 0; j < 3; ++j) r2 += (X[j] - center[j]) * (X[j] - center[j]);
    return std::pow(std::numbers::pi * width * width, -0.75) * std::exp(-r2 / (2 * width * width));
  }
  /// |h|^2 is a normal law with this per-axis standard deviation.
  double density_sd() const { return width / std::numbers::sqrt2; }
};

/// a cos(2 pi q.X) + b sin(2 pi q.X)
struct PhaseMode {
  Vec3 wavevector{};
  double cos_coeff = 0;
  double sin_coeff = 0;
};

/// S(X) = p.X + sum of modes.
struct Phase {
  Vec3 linear{};
  std::vector<PhaseMode> modes;

  double operator()(const Vec3& X) const {
    double s = linear[0] * X[0] + linear[1] * X[1] + linear[2] * X[2];
    for (const auto& m : modes) {
      const double a = two_pi * (m.wavevector[0] * X[0] + m.wavevector[1] * X[1] + m.wavevector[2] * X[2]);
      s += m.cos_coeff * std::cos(a) + m.sin_coeff * std::sin(a);
    }
    return s;
  }
  Vec3 gradient(const Vec3& X) const {
    Vec3 g = linear;
    for (const auto& m : modes) {
      const double a = two_pi * (m.wavevector[0] * X[0] + m.wavevector[1] * X[1] + m.wavevector[2] * X[2]);
      const double d = two_pi * (-m.cos_coeff * std::sin(a) + m.sin_coeff * std::cos(a));
      for (int j = 0; j < 3; ++j) g[j] += d * m.wavevector[j];
    }
    return g;
  }
};

struct WkbSpec {
  GaussianEnvelope envelope;
  Phase phase;
};

/// Velocity carried by the state near X: grad S / (2 pi) mod 1.
inline TorusPoint limit_velocity(const WkbSpec& spec, const Vec3& X) {
  auto g = spec.phase.gradient(X);
  return TorusPoint::reduce({g[0] / two_pi, g[1] / two_pi, g[2] / two_pi});
}

struct WkbOptions {
  double tail_threshold = 1e-8;
  bool clamp_norm = true;  ///< rescale to norm min(1, raw norm); off returns the raw Riemann sum
};

/// Mass of |h|^2 outside the macroscopic region covered by the box at scale eta.
inline double envelope_tail_mass(const GaussianEnvelope& h, double eta, const BoxSpec& box) {
  const double L = box.side();
  const double lo = eta * (-L / 2 - 0.5), hi = eta * (L / 2 - 0.5);
  const double s = h.density_sd() * std::numbers::sqrt2;  // erfc argument scale
  double inside = 1.0;
  for (int j = 0; j < 3; ++j) {
    const double out = 0.5 * std::erfc((h.center[j] - lo) / s) + 0.5 * std::erfc((hi - h.center[j]) / s);
    inside *= 1.0 - out;
  }
  return 1.0 - inside;
}

inline WaveFunction wkb_state(const WkbSpec& spec, double eta, const BoxSpec& box, const WkbOptions& opt = {}) {
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("wkb_state: eta must lie in (0,1]");
  const double tail = envelope_tail_mass(spec.envelope, eta, box);
  if (tail > opt.tail_threshold)
    throw BoxTooSmall("envelope mass " + std::to_string(tail) + " outside a box of side " +
                      std::to_string(box.side()) + " at eta=" + std::to_string(eta));
  WaveFunction psi(box, Domain::position);
  const double pref = std::pow(eta, 1.5);
  for (std::size_t idx = 0; idx < psi.values.size(); ++idx) {
    auto x = site_coordinate(box, idx);
    const Vec3 X{eta * x[0], eta * x[1], eta * x[2]};
    psi.values[idx] = pref * spec.envelope(X) * std::polar(1.0, spec.phase(X) / eta);
  }
  const double n = psi.norm();
  // raw Riemann sums can overshoot 1 slightly
  if (opt.clamp_norm && n > 1.0)
    for (auto& z : psi.values) z /= n;
  return psi;
}

}  // namespace kinlab
