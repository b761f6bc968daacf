#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kinlab/errors.hpp"
#include "kinlab/fft.hpp"
#include "kinlab/lattice.hpp"
#include "kinlab/stats.hpp"

namespace kinlab {

/// Smallest grid that resolves the eps layer around level sets.
inline int minimum_grid(double epsilon) { return int(std::ceil(8.0 / epsilon - 1e-9)); }

struct ResolventProbe {
  double gamma = 3;
  double epsilon = 0.1;
  int grid = 80;

  void validate() const {
    if (!(gamma >= -1 && gamma <= 7)) throw std::invalid_argument("gamma must lie in [-1, 7]");
    if (!(epsilon > 0 && epsilon <= 1.0 / 3 + 1e-12)) throw std::invalid_argument("epsilon must lie in (0, 1/3]");
    if (grid < minimum_grid(epsilon))
      throw std::invalid_argument("grid " + std::to_string(grid) + " is below ceil(8/eps) = " +
                                  std::to_string(minimum_grid(epsilon)));
  }
};

/// The two momenta where the two-resolvent integral degenerates.
inline constexpr std::array<Vec3, 2> exceptional_set{{{0, 0, 0}, {0.5, 0.5, 0.5}}};

inline double torus_distance(const Vec3& a, const Vec3& b) {
  double s = 0;
  for (int j = 0; j < 3; ++j) {
    double d = std::abs(TorusPoint::wrap(a[j] - b[j]));
    d = std::min(d, 1 - d);
    s += d * d;
  }
  return std::sqrt(s);
}

inline double distance_to_exceptional_set(const Vec3& p) {
  return std::min(torus_distance(p, exceptional_set[0]), torus_distance(p, exceptional_set[1]));
}

namespace detail {

// cos(2 pi (i/N + shift)) for i < N; exact rotation of the unshifted table when shift is on-grid.
// The unshifted table is built from min(i, N-i) so that reflection is exact too.
inline std::vector<double> shifted_cosines(int N, double shift) {
  std::vector<double> c(N);
  const double steps = shift * N;
  if (std::abs(steps - std::round(steps)) < 1e-9) {
    const long s = long(std::llround(steps));
    for (int i = 0; i < N; ++i) {
      const long r = ((i + s) % N + N) % N;
      c[i] = std::cos(two_pi * double(std::min<long>(r, N - r)) / N);
    }
  } else {
    for (int i = 0; i < N; ++i) c[i] = std::cos(two_pi * (double(i) / N + shift));
  }
  return c;
}

inline double inv_modulus(double e, double gamma, double eps) { return 1.0 / std::hypot(e - gamma, eps); }

}  // namespace detail

/// 1/|e(k) - gamma - i eps| on the points i/N, storage order axis 3 fastest.
inline std::vector<double> resolvent_modulus_grid(double gamma, double epsilon, int N) {
  ResolventProbe{gamma, epsilon, N}.validate();
  const auto c = detail::shifted_cosines(N, 0);
  std::vector<double> out(std::size_t(N) * N * N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        out[site_index(N, i, j, k)] = detail::inv_modulus(3 - c[i] - c[j] - c[k], gamma, epsilon);
  return out;
}

/// Grid average of 1/|e - gamma - i eps| over the torus.
inline double integral_1res(double gamma, double epsilon, int N) {
  ResolventProbe{gamma, epsilon, N}.validate();
  const auto c = detail::shifted_cosines(N, 0);
  std::vector<double> plane(N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    double s_i = 0;
    for (int j = 0; j < N; ++j) {
      const double base = 3 - c[i] - c[j];
      double s = 0;
      for (int k = 0; k < N; ++k) s += detail::inv_modulus(base - c[k], gamma, epsilon);
      s_i += s;
    }
    plane[i] = s_i;
  }
  double total = 0;
  for (double s : plane) total += s;
  return total / (double(N) * N * N);
}

/// Average of 1/|e(u+p) - g1 - i eps| * 1/|e(u) - g2 - i eps|.
inline double integral_2res(const Vec3& p, double gamma1, double gamma2, double epsilon, int N) {
  ResolventProbe{gamma1, epsilon, N}.validate();
  ResolventProbe{gamma2, epsilon, N}.validate();
  const auto c = detail::shifted_cosines(N, 0);
  std::array<std::vector<double>, 3> s;
  for (int j = 0; j < 3; ++j) s[j] = detail::shifted_cosines(N, p[j]);
  std::vector<double> plane(N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    double s_i = 0;
    for (int j = 0; j < N; ++j) {
      const double b1 = 3 - s[0][i] - s[1][j], b2 = 3 - c[i] - c[j];
      double acc = 0;
      for (int k = 0; k < N; ++k)
        acc += detail::inv_modulus(b1 - s[2][k], gamma1, epsilon) * detail::inv_modulus(b2 - c[k], gamma2, epsilon);
      s_i += acc;
    }
    plane[i] = s_i;
  }
  double total = 0;
  for (double v : plane) total += v;
  return total / (double(N) * N * N);
}

enum class ConvolutionSign { plus, minus };

struct ThreeResolventIntegral {
  double value = 0;
  double inner_max = 0;  ///< max over the grid of the inner (q) average
};

/// int int dp dq |R1(p)| |R2(q)| |R3(p +- q + k)|, inner q-average by FFT.
inline ThreeResolventIntegral integral_3res_detail(const Vec3& k, double gamma1, double gamma2, double gamma3,
                                                   double epsilon, int N, ConvolutionSign sign) {
  for (double g : {gamma1, gamma2, gamma3}) ResolventProbe{g, epsilon, N}.validate();
  const auto c = detail::shifted_cosines(N, 0);
  std::array<std::vector<double>, 3> s;
  for (int j = 0; j < 3; ++j) s[j] = detail::shifted_cosines(N, k[j]);

  PaddedRealCube a(N), b(N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        a.at(i, j, l) = detail::inv_modulus(3 - c[i] - c[j] - c[l], gamma2, epsilon);
        b.at(i, j, l) = detail::inv_modulus(3 - s[0][i] - s[1][j] - s[2][l], gamma3, epsilon);
      }
  a.forward();
  b.forward();
  // correlation for +q, convolution for -q
  cplx* fa = a.spectrum();
  cplx* fb = b.spectrum();
  const std::size_t m = a.spectrum_size();
  const double norm = 1.0 / (double(N) * N * N * double(N) * N * N);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < std::int64_t(m); ++i)
    fb[i] *= (sign == ConvolutionSign::plus ? std::conj(fa[i]) : fa[i]) * norm;
  b.backward();

  std::vector<double> plane(N), pmax(N);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < N; ++i) {
    double acc = 0, mx = 0;
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        const double g = b.at(i, j, l);
        mx = std::max(mx, g);
        acc += detail::inv_modulus(3 - c[i] - c[j] - c[l], gamma1, epsilon) * g;
      }
    plane[i] = acc;
    pmax[i] = mx;
  }
  ThreeResolventIntegral out;
  for (int i = 0; i < N; ++i) {
    out.value += plane[i];
    out.inner_max = std::max(out.inner_max, pmax[i]);
  }
  out.value /= double(N) * N * N;
  return out;
}

inline double integral_3res(const Vec3& k, double gamma1, double gamma2, double gamma3, double epsilon, int N,
                            ConvolutionSign sign = ConvolutionSign::plus) {
  return integral_3res_detail(k, gamma1, gamma2, gamma3, epsilon, N, sign).value;
}

struct ScalingFit {
  std::vector<double> eps;  ///< descending
  std::vector<double> values;
  int degree = 0;
  double exponent = 0;
  double intercept = 0;
  double residual = 0;
};

struct FitOptions {
  std::size_t min_points = 4;
  double min_decades = 1.5;
};

/// Slope of log(value / |log eps|^degree) against log(1/eps).
inline ScalingFit fit_scaling(std::vector<double> eps, std::vector<double> values, int degree,
                              const FitOptions& opt = {}) {
  if (eps.size() != values.size()) throw std::invalid_argument("fit_scaling: size mismatch");
  if (eps.size() < opt.min_points)
    throw DegenerateFit(std::to_string(eps.size()) + " points, need " + std::to_string(opt.min_points));
  std::vector<std::size_t> order(eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return eps[x] > eps[y]; });
  ScalingFit f;
  f.degree = degree;
  for (auto i : order) {
    if (!(eps[i] > 0 && eps[i] < 1) || !(values[i] > 0)) throw DegenerateFit("need 0 < eps < 1 and positive values");
    f.eps.push_back(eps[i]);
    f.values.push_back(values[i]);
  }
  const double span = std::log10(f.eps.front() / f.eps.back());
  if (span < opt.min_decades - 1e-12)
    throw DegenerateFit("eps span of " + std::to_string(span) + " decades, need " + std::to_string(opt.min_decades));
  std::vector<double> x, y;
  for (std::size_t i = 0; i < f.eps.size(); ++i) {
    const double lg = std::abs(std::log(f.eps[i]));
    x.push_back(std::log(1 / f.eps[i]));
    y.push_back(std::log(f.values[i]) - degree * std::log(lg));
  }
  const auto line = least_squares(x, y);
  f.exponent = line.slope;
  f.intercept = line.intercept;
  f.residual = line.residual;
  return f;
}

}  // namespace kinlab
