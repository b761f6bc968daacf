#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kinlab/rng.hpp"

namespace kinlab {

/// Streaming mean and central moments (Welford / Pebay updates), mergeable.
struct RunningStats {
  std::uint64_t n = 0;
  double mean = 0, m2 = 0, m3 = 0, m4 = 0;

  void push(double x) {
    RunningStats one;
    one.n = 1;
    one.mean = x;
    merge(one);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = double(n), nb = double(o.n), nn = na + nb;
    const double d = o.mean - mean, d2 = d * d, d3 = d2 * d, d4 = d2 * d2;
    const double m4n = m4 + o.m4 + d4 * na * nb * (na * na - na * nb + nb * nb) / (nn * nn * nn) +
                       6 * d2 * (na * na * o.m2 + nb * nb * m2) / (nn * nn) + 4 * d * (na * o.m3 - nb * m3) / nn;
    const double m3n = m3 + o.m3 + d3 * na * nb * (na - nb) / (nn * nn) + 3 * d * (na * o.m2 - nb * m2) / nn;
    m2 = m2 + o.m2 + d2 * na * nb / nn;
    m3 = m3n;
    m4 = m4n;
    mean += d * nb / nn;
    n += o.n;
  }

  bool variance_defined() const { return n >= 2; }
  /// Unbiased sample variance; NaN when fewer than two values.
  double variance() const { return n >= 2 ? m2 / double(n - 1) : std::numeric_limits<double>::quiet_NaN(); }
  double stderr_mean() const { return n >= 2 ? std::sqrt(variance() / double(n)) : std::numeric_limits<double>::quiet_NaN(); }
  /// Sample central moment of order 2 or 4 (biased, 1/n).
  double central_moment(int r) const {
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (r == 2) return m2 / double(n);
    if (r == 4) return m4 / double(n);
    if (r == 3) return m3 / double(n);
    throw std::invalid_argument("central moment order must be 2, 3 or 4");
  }
  /// Large-sample standard error of the sample variance.
  double stderr_variance() const {
    if (n < 4) return std::numeric_limits<double>::quiet_NaN();
    const double nn = double(n), s2 = variance(), mu4 = central_moment(4);
    const double v = (mu4 - (nn - 3) / (nn - 1) * s2 * s2) / nn;
    return std::sqrt(std::max(v, 0.0));
  }
};

/// Fold values in index order, so the result never depends on who computed what.
inline RunningStats ordered_stats(const std::vector<double>& xs) {
  RunningStats s;
  for (double x : xs) s.push(x);
  return s;
}

struct LineFit {
  double slope = 0, intercept = 0, residual = 0;
};

/// Ordinary least squares y = intercept + slope x; residual is the RMS misfit.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("least squares needs >= 2 matching points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("least squares: abscissae coincide");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    r += e * e;
  }
  f.residual = std::sqrt(r / double(n));
  return f;
}

inline double chi2_survival(double stat, double dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(stat, 0.0)));
}

/// Pearson test that counts are equally likely across cells.
inline double chi2_uniform_pvalue(const std::vector<std::uint64_t>& counts) {
  double total = 0;
  for (auto c : counts) total += double(c);
  const double expect = total / double(counts.size());
  double stat = 0;
  for (auto c : counts) stat += (double(c) - expect) * (double(c) - expect) / expect;
  return chi2_survival(stat, double(counts.size()) - 1);
}

/// Two-sample homogeneity test on binned counts; empty cell pairs are dropped.
inline double chi2_two_sample_pvalue(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("histograms differ in size");
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += double(a[i]);
    nb += double(b[i]);
  }
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  double stat = 0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double s = double(a[i]) + double(b[i]);
    if (s == 0) continue;
    const double d = ka * double(a[i]) - kb * double(b[i]);
    stat += d * d / s;
    ++cells;
  }
  return chi2_survival(stat, cells - 1);
}

/// Percentile (linear interpolation between order statistics), q in [0,1].
inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * double(xs.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - double(lo)) * (xs[hi] - xs[lo]);
}

/// Uniform index in [0, n) without modulo bias.
inline std::uint64_t uniform_index(CounterRng& rng, std::uint64_t n) {
  const std::uint64_t limit = rng.max() - rng.max() % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % n;
  }
}

}  // namespace kinlab
