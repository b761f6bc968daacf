#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kinlab/stats.hpp"
#include "kinlab/wigner.hpp"

using namespace kinlab;
using Catch::Approx;

namespace {

// Random state supported on |x_j| <= radius.
WaveFunction localized_state(const BoxSpec& box, int radius, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n;
  WaveFunction psi(box, Domain::position);
  for (std::size_t i = 0; i < psi.values.size(); ++i) {
    auto x = site_coordinate(box, i);
    if (std::abs(x[0]) <= radius && std::abs(x[1]) <= radius && std::abs(x[2]) <= radius)
      psi.values[i] = {n(gen), n(gen)};
  }
  const double s = psi.norm();
  for (auto& z : psi.values) z /= s;
  return psi;
}

WaveFunction random_state(const BoxSpec& box, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  WaveFunction psi(box, Domain::position);
  for (auto& z : psi.values) z = {n(gen), n(gen)};
  return psi;
}

TestObservable random_observable(std::mt19937_64& gen, bool real) {
  std::uniform_real_distribution<double> u(-1, 1);
  SpatialGaussian g{{u(gen), u(gen), u(gen)}, {1.5 + u(gen) * 0.3, 1.5 + u(gen) * 0.3, 1.5 + u(gen) * 0.3}, 1.0};
  VelocityPolynomial h;
  for (int t = 0; t < 3; ++t) {
    std::array<int, 3> m{int(std::lround(2 * u(gen))), int(std::lround(2 * u(gen))), int(std::lround(u(gen)))};
    const cplx c{u(gen), real ? 0.0 : u(gen)};
    h.modes.push_back({m, c});
    if (real) h.modes.push_back({{-m[0], -m[1], -m[2]}, std::conj(c)});
  }
  if (!real) g.amplitude = {u(gen), u(gen)};
  return TestObservable(g, h);
}

// sum_{y,z} conj(g(eta (y+z)/2)) conj(c_{y-z}) conj(phi(y)) psi(z), no periodization
cplx position_double_sum(const TestObservable& J, const WaveFunction& phi, const WaveFunction& psi, double eta) {
  cplx s = 0;
  const auto& box = psi.box;
  for (std::size_t a = 0; a < phi.values.size(); ++a) {
    if (phi.values[a] == cplx(0)) continue;
    const auto y = site_coordinate(box, a);
    for (std::size_t b = 0; b < psi.values.size(); ++b) {
      if (psi.values[b] == cplx(0)) continue;
      const auto z = site_coordinate(box, b);
      const cplx c = J.velocity().coefficient({y[0] - z[0], y[1] - z[1], y[2] - z[2]});
      if (c == cplx(0)) continue;
      const Vec3 X{eta * (y[0] + z[0]) / 2.0, eta * (y[1] + z[1]) / 2.0, eta * (y[2] + z[2]) / 2.0};
      s += std::conj(J.spatial()(X)) * std::conj(c) * std::conj(phi.values[a]) * psi.values[b];
    }
  }
  return s;
}

VelocityPolynomial one_plus_cos_v1() {
  return VelocityPolynomial{{{{0, 0, 0}, 1.0}, {{1, 0, 0}, 0.5}, {{-1, 0, 0}, 0.5}}};
}

}  // namespace

TEST_CASE("observable constants", "[wigner]") {
  SpatialGaussian g{{0.1, 0, -0.2}, {0.5, 1.0, 2.0}, 3.0};
  TestObservable J(g, one_plus_cos_v1());
  REQUIRE(J.bound_constant() == Approx(6.0).epsilon(1e-8));

  TestObservable K(g, VelocityPolynomial{{{{1, 0, 0}, 1.0}, {{0, 1, 0}, 0.5}}});
  REQUIRE(K.bound_constant() == Approx(4.5).epsilon(1e-8));

  SECTION("Fourier transform matches quadrature") {
    const Vec3 zeta{0.13, -0.05, 0.02};
    // 1D factors by Simpson on a wide interval
    cplx prod = g.amplitude;
    for (int j = 0; j < 3; ++j) {
      const int n = 4000;
      const double a = g.center[j] - 12 * g.widths[j], b = g.center[j] + 12 * g.widths[j], h = (b - a) / n;
      cplx s = 0;
      for (int i = 0; i <= n; ++i) {
        const double x = a + i * h;
        const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        s += w * std::exp(-(x - g.center[j]) * (x - g.center[j]) / (2 * g.widths[j] * g.widths[j])) *
             std::polar(1.0, -two_pi * zeta[j] * x);
      }
      prod *= s * h / 3.0;
    }
    REQUIRE(std::abs(g.fourier(zeta) - prod) < 1e-10 * std::abs(prod));
  }
}

TEST_CASE("pairing a delta state", "[wigner]") {
  const BoxSpec box(32);
  WaveFunction d(box, Domain::position);
  d.values[site_index(32, 16, 16, 16)] = 1.0;
  SpatialGaussian g{{0.2, -0.1, 0.3}, {1.0, 1.0, 1.0}, 1.7};
  const TestObservable J(g, one_plus_cos_v1());
  const auto w = pair_wigner(J, d, 0.25);
  const cplx expect = std::conj(g({0, 0, 0})) * 1.0;
  REQUIRE(std::abs(w.value - expect) < 1e-6);
}

TEST_CASE("pairing agrees with the position-space double sum", "[wigner]") {
  const BoxSpec box(16);
  std::mt19937_64 gen(5);
  for (unsigned s = 0; s < 3; ++s) {
    const auto phi = localized_state(box, 5, 100 + s), psi = localized_state(box, 5, 200 + s);
    const auto J = random_observable(gen, s % 2 == 0);
    for (double eta : {1.0, 0.5}) {
      SpatialGaussian g = J.spatial();
      for (auto& w : g.widths) w *= eta;
      for (auto& c : g.center) c *= eta;
      const TestObservable Je(g, J.velocity());
      const cplx oracle = position_double_sum(Je, phi, psi, eta);
      const auto fast = pair_wigner_bilinear(Je, phi, psi, eta);
      REQUIRE(std::abs(fast.value - oracle) < 1e-9 * (1 + std::abs(oracle)));
      const auto self = pair_wigner(Je, psi, eta);
      REQUIRE(std::abs(self.value - position_double_sum(Je, psi, psi, eta)) < 1e-9);
    }
  }
}

TEST_CASE("fast and literal pair sums coincide", "[wigner]") {
  const BoxSpec box(8);
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 4; ++trial) {
    const auto phi = random_state(box, gen), psi = random_state(box, gen);
    const auto J = random_observable(gen, trial % 2 == 0);
    const auto a = pair_wigner_bilinear(J, phi, psi, 1.0);
    const auto b = pair_wigner_direct(J, phi, psi, 1.0);
    REQUIRE(std::abs(a.value - b.value) < 1e-10 * (1 + std::abs(a.value)));
  }
}

TEST_CASE("bilinear pairing algebra", "[wigner]") {
  const BoxSpec box(8);
  std::mt19937_64 gen(13);
  const auto J = random_observable(gen, true);
  REQUIRE(J.is_real());
  const auto phi = random_state(box, gen), psi = random_state(box, gen), chi = random_state(box, gen);

  SECTION("diagonal is the quadratic pairing") {
    REQUIRE(pair_wigner_bilinear(J, psi, psi, 1.0).value == pair_wigner(J, psi, 1.0).value);
  }
  SECTION("swap symmetry for real observables") {
    const cplx a = pair_wigner_bilinear(J, phi, psi, 1.0).value;
    const cplx b = pair_wigner_bilinear(J, psi, phi, 1.0).value;
    REQUIRE(std::abs(a - std::conj(b)) < 1e-10 * std::abs(a));
  }
  SECTION("self pairing of a real observable is real") {
    const auto w = pair_wigner(J, psi, 1.0);
    REQUIRE(std::abs(w.value.imag()) <= 1e-10 * std::abs(w.value));
  }
  SECTION("conjugate-linear in the first slot, linear in the second") {
    const cplx alpha{0.3, -1.1}, beta{-0.7, 0.4};
    WaveFunction mix(box, Domain::position), mix2(box, Domain::position);
    for (std::size_t i = 0; i < mix.values.size(); ++i) {
      mix.values[i] = alpha * phi.values[i] + beta * chi.values[i];
      mix2.values[i] = alpha * psi.values[i] + beta * chi.values[i];
    }
    const cplx l = pair_wigner_bilinear(J, mix, psi, 1.0).value;
    const cplx r = std::conj(alpha) * pair_wigner_bilinear(J, phi, psi, 1.0).value +
                   std::conj(beta) * pair_wigner_bilinear(J, chi, psi, 1.0).value;
    REQUIRE(std::abs(l - r) < 1e-10 * std::abs(l));
    const cplx l2 = pair_wigner_bilinear(J, phi, mix2, 1.0).value;
    const cplx r2 = alpha * pair_wigner_bilinear(J, phi, psi, 1.0).value +
                    beta * pair_wigner_bilinear(J, phi, chi, 1.0).value;
    REQUIRE(std::abs(l2 - r2) < 1e-10 * std::abs(l2));
  }
  SECTION("linear in the observable") {
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 5; ++t) {
      const auto A = random_observable(gen, true);
      const auto B = random_observable(gen, true);
      // same spatial factor so that the sum stays in the separable family
      VelocityPolynomial hs = A.velocity();
      const double a = u(gen), b = u(gen);
      for (auto& m : hs.modes) m.coeff *= a;
      for (auto m : B.velocity().modes) hs.modes.push_back({m.m, b * m.coeff});
      const TestObservable Bs(A.spatial(), B.velocity());
      const TestObservable sum(A.spatial(), hs);
      const cplx lhs = pair_wigner(sum, psi, 1.0).value;
      const cplx rhs = a * pair_wigner(A, psi, 1.0).value + b * pair_wigner(Bs, psi, 1.0).value;
      REQUIRE(std::abs(lhs - rhs) < 1e-10 * (std::abs(lhs) + 1));
    }
  }
}

TEST_CASE("bound |<J,W[phi,psi]>| <= C_J |phi| |psi|", "[wigner]") {
  const BoxSpec box(8);
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto phi = random_state(box, gen), psi = random_state(box, gen);
    const auto J = random_observable(gen, trial % 3 == 0);
    const auto w = pair_wigner_bilinear(J, phi, psi, 1.0);
    REQUIRE(std::abs(w.value) <= J.bound_constant() * phi.norm() * psi.norm() * (1 + 1e-12));
  }
}

TEST_CASE("mass identity for a wide observable", "[wigner]") {
  WkbSpec spec;
  spec.envelope = {{0, 0, 0}, 0.3};
  spec.phase.linear = {two_pi * 0.2, 0, two_pi * 0.1};
  const double eta = 0.1;
  const auto psi = wkb_state(spec, eta, BoxSpec(128));
  const TestObservable J(SpatialGaussian{{0, 0, 0}, {2.5, 2.5, 2.5}, 1.0}, VelocityPolynomial{{{{0, 0, 0}, 1.0}}});
  const auto w = pair_wigner(J, psi, eta);
  REQUIRE(std::abs(w.value.real() / psi.norm_squared() - 1) < 0.02);
  REQUIRE(w.truncation_error < 1e-9);
}

TEST_CASE("coarse xi grid is refused", "[wigner]") {
  const BoxSpec box(16);
  WaveFunction d(box, Domain::position);
  d.values[0] = 1;
  const TestObservable J(SpatialGaussian{{0, 0, 0}, {2, 2, 2}, 1.0}, VelocityPolynomial{{{{0, 0, 0}, 1.0}}});
  REQUIRE_THROWS_AS(pair_wigner(J, d, 0.05), ResolutionTooCoarse);
}

TEST_CASE("WKB limit measure sampler", "[wigner]") {
  WkbSpec spec;
  spec.envelope = {{0.3, -0.2, 0.1}, 0.4};
  const auto sampler = wkb_limit_sampler(spec);
  CounterRng rng(42, 0);
  const int n = 20000;
  Vec3 mean{};
  for (int i = 0; i < n; ++i) {
    const auto p = sampler(rng);
    REQUIRE(p.V == Vec3{0, 0, 0});
    for (int j = 0; j < 3; ++j) mean[j] += p.X[j] / n;
  }
  const double sd = spec.envelope.density_sd();
  for (int j = 0; j < 3; ++j) REQUIRE(std::abs(mean[j] - spec.envelope.center[j]) < 4 * sd / std::sqrt(double(n)));
}

TEST_CASE("limit measure matches the small-eta pairing", "[wigner][slow]") {
  WkbSpec spec;
  spec.envelope = {{0, 0, 0}, 0.15};
  spec.phase.linear = {two_pi * 0.25, 0, 0};
  spec.phase.modes.push_back({{0, 1.0, 0}, 0.0, 0.01});
  const double eta = 0.02;
  const auto psi = wkb_state(spec, eta, BoxSpec(80));
  const TestObservable J(SpatialGaussian{{0.05, 0.02, 0}, {0.15, 0.15, 0.15}, 1.0}, one_plus_cos_v1());
  const auto w = pair_wigner(J, psi, eta);

  const auto sampler = wkb_limit_sampler(spec);
  const int n = 100000;
  std::vector<double> re(n);
  for (int i = 0; i < n; ++i) {
    CounterRng rng(7, std::uint64_t(i));
    const auto p = sampler(rng);
    re[i] = std::conj(J(p.X, p.V)).real();
  }
  const auto st = ordered_stats(re);
  const double err = 3 * st.stderr_mean() + w.truncation_error;
  INFO("quantum " << w.value.real() << " limit " << st.mean << " +- " << st.stderr_mean());
  REQUIRE(std::abs(w.value.real() - st.mean) <= err);
}
