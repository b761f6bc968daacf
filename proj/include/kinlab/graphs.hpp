#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kinlab/dynamics.hpp"
#include "kinlab/errors.hpp"

namespace kinlab {

/// Scattering vertex: line 1 or 2, position 1..nbar along the line.
struct Vertex {
  int line = 1;
  int index = 1;
  auto operator<=>(const Vertex&) const = default;
};

struct Contraction {
  Vertex first, second;  ///< first < second
  bool is_transfer() const { return first.line != second.line; }
};

/// Perfect matching of the 2 nbar vertices of two lines; the observable sits between
/// positions n1 and n1+1 on each line.
class Pairing {
 public:
  Pairing(int n1, int n2, std::vector<Contraction> pairs) : n1_(n1), n2_(n2), pairs_(std::move(pairs)) {
    for (auto& c : pairs_)
      if (c.second < c.first) std::swap(c.first, c.second);
    std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (!is_perfect()) throw std::invalid_argument("pairing is not a perfect matching of the vertices");
  }

  /// Build from (line, index, line, index) quadruples.
  static Pairing from_list(int n1, int n2, const std::vector<std::array<int, 4>>& quads) {
    std::vector<Contraction> cs;
    for (const auto& q : quads) cs.push_back({{q[0], q[1]}, {q[2], q[3]}});
    return Pairing(n1, n2, cs);
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int nbar() const { return n1_ + n2_; }
  const std::vector<Contraction>& pairs() const { return pairs_; }

  bool is_connected() const {
    return std::any_of(pairs_.begin(), pairs_.end(), [](const auto& c) { return c.is_transfer(); });
  }

  /// Transfers as (line-1 position, line-2 position), sorted by the line-1 end.
  std::vector<std::pair<int, int>> transfers() const {
    std::vector<std::pair<int, int>> t;
    for (const auto& c : pairs_)
      if (c.is_transfer()) t.emplace_back(c.first.index, c.second.index);
    std::sort(t.begin(), t.end());
    return t;
  }

  std::vector<std::pair<int, int>> internals(int line) const {
    std::vector<std::pair<int, int>> out;
    for (const auto& c : pairs_)
      if (!c.is_transfer() && c.first.line == line) out.emplace_back(c.first.index, c.second.index);
    return out;
  }

  /// Positions on a line that are ends of transfer contractions.
  std::vector<int> transfer_ends(int line) const {
    std::vector<int> out;
    for (const auto& [a, b] : transfers()) out.push_back(line == 1 ? a : b);
    std::sort(out.begin(), out.end());
    return out;
  }

  Pairing swapped_lines() const {
    std::vector<Contraction> cs;
    for (auto c : pairs_) {
      c.first.line = 3 - c.first.line;
      c.second.line = 3 - c.second.line;
      cs.push_back(c);
    }
    return Pairing(n1_, n2_, cs);
  }

 private:
  bool is_perfect() const {
    const int n = nbar();
    std::vector<int> seen(2 * n, 0);
    for (const auto& c : pairs_)
      for (const auto& v : {c.first, c.second}) {
        if (v.line < 1 || v.line > 2 || v.index < 1 || v.index > n) return false;
        ++seen[(v.line - 1) * n + v.index - 1];
      }
    return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
  }

  int n1_, n2_;
  std::vector<Contraction> pairs_;
};

inline constexpr int max_enumerated_nbar = 6;

/// Every perfect matching of the 2 nbar vertices, connected or not.
inline std::vector<Pairing> enumerate_all(int n1, int n2) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("vertex counts must be >= 0");
  const int n = n1 + n2;
  if (n > max_enumerated_nbar) throw TooLarge("nbar=" + std::to_string(n) + " exceeds " + std::to_string(max_enumerated_nbar));
  std::vector<Vertex> verts;
  for (int line = 1; line <= 2; ++line)
    for (int i = 1; i <= n; ++i) verts.push_back({line, i});
  std::vector<Pairing> out;
  std::vector<bool> used(verts.size(), false);
  std::vector<Contraction> cur;
  auto rec = [&](auto&& self) -> void {
    std::size_t first = 0;
    while (first < verts.size() && used[first]) ++first;
    if (first == verts.size()) {
      out.emplace_back(n1, n2, cur);
      return;
    }
    used[first] = true;
    for (std::size_t j = first + 1; j < verts.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      cur.push_back({verts[first], verts[j]});
      self(self);
      cur.pop_back();
      used[j] = false;
    }
    used[first] = false;
  };
  rec(rec);
  return out;
}

inline std::vector<Pairing> enumerate_connected(int n1, int n2) {
  auto all = enumerate_all(n1, n2);
  std::vector<Pairing> out;
  for (auto& p : all)
    if (p.is_connected()) out.push_back(std::move(p));
  return out;
}

/// n!! with (-1)!! = 0!! = 1.
inline std::uint64_t double_factorial(int n) {
  std::uint64_t r = 1;
  for (int k = n; k > 1; k -= 2) r *= std::uint64_t(k);
  return r;
}

/// (2 nbar - 1)!! minus the matchings that stay on their own line.
inline std::uint64_t connected_count(int nbar) {
  const std::uint64_t own = nbar % 2 == 0 ? double_factorial(nbar - 1) : 0;
  return double_factorial(2 * nbar - 1) - own * own;
}

/// Interleaving l1 < i1 < l2 on one line; i2 > l2 closes a second internal pair,
/// i2 == 0 means i1 is the end of a transfer.
struct Crossing {
  int l1 = 0, i1 = 0, l2 = 0, i2 = 0;
  bool via_transfer() const { return i2 == 0; }
  int interval_length() const { return l2 - i1; }
  /// {i1..l2} strictly inside ours
  bool strictly_contains(const Crossing& o) const {
    return i1 <= o.i1 && o.l2 <= l2 && interval_length() > o.interval_length();
  }
};

inline std::vector<Crossing> generalized_crossings(const Pairing& p, int line) {
  std::vector<Crossing> out;
  const auto in = p.internals(line);
  for (const auto& [l1, l2] : in) {
    for (const auto& [i1, i2] : in)
      if (l1 < i1 && i1 < l2 && l2 < i2) out.push_back({l1, i1, l2, i2});
    for (int e : p.transfer_ends(line))
      if (l1 < e && e < l2) out.push_back({l1, e, l2, 0});
  }
  return out;
}

enum class PairingKind { generalized_crossing, transfer, crossing_transfer };

struct PairingClass {
  PairingKind kind = PairingKind::transfer;
  unsigned crossing_lines = 0;  ///< bit 0: line 1, bit 1: line 2
  bool parallel = false;
  bool antiparallel = false;
  int transfer_count = 0;

  bool crosses_on(int line) const { return (crossing_lines >> (line - 1)) & 1u; }

  std::string label() const {
    switch (kind) {
      case PairingKind::generalized_crossing:
        return crossing_lines == 3 ? "generalized_crossing(1,2)"
                                   : "generalized_crossing(" + std::to_string(crosses_on(1) ? 1 : 2) + ")";
      case PairingKind::crossing_transfer:
        return "crossing_transfer";
      default:
        return parallel && antiparallel ? "parallel+antiparallel" : parallel ? "parallel" : "antiparallel";
    }
  }
};

inline PairingClass classify(const Pairing& p) {
  if (!p.is_connected()) throw NotConnected("pairing has no transfer contraction");
  PairingClass c;
  const auto tr = p.transfers();
  c.transfer_count = int(tr.size());
  for (int line = 1; line <= 2; ++line)
    if (!generalized_crossings(p, line).empty()) c.crossing_lines |= 1u << (line - 1);
  if (c.crossing_lines) {
    c.kind = PairingKind::generalized_crossing;
    return c;
  }
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < tr.size(); ++i) {
    inc = inc && tr[i].second > tr[i - 1].second;
    dec = dec && tr[i].second < tr[i - 1].second;
  }
  c.parallel = inc;
  c.antiparallel = dec;
  c.kind = (inc || dec) ? PairingKind::transfer : PairingKind::crossing_transfer;
  return c;
}

/// A crossing whose interval {i1..l2} holds no other crossing's interval as a proper subset.
inline Crossing minimal_generalized_crossing(const Pairing& p, int line) {
  const auto all = generalized_crossings(p, line);
  if (all.empty()) throw NoCrossing("no generalized crossing on line " + std::to_string(line));
  return *std::min_element(all.begin(), all.end(),
                           [](const auto& a, const auto& b) { return a.interval_length() < b.interval_length(); });
}

// ---- amplitude and variance bounds ----

struct BoundParams {
  double lambda = 0.1;
  double epsilon = 0.1;
  double t = 1;
  int nbar = 1;
  int m = 1;  ///< transfer count, informational
  double a = 2.0 / 85;
  double b = 100;
  double delta = 0;
  double c = 1;  ///< observable-dependent constant
  double phi0_norm = 1;

  void validate() const {
    if (!(epsilon > 0 && epsilon <= 1.0 / 3 + 1e-12)) throw std::invalid_argument("bounds need 0 < eps <= 1/3");
    if (!(lambda >= 0) || !(t >= 0) || nbar < 0) throw std::invalid_argument("bounds need lambda, t, nbar >= 0");
  }
};

/// e^{4 eps t} lambda^{2 nbar} eps^{-nbar} |c log eps|^{nbar+4} ||phi0||^4
inline double basic_amplitude_bound(const BoundParams& p) {
  p.validate();
  using ld = long double;
  const ld lg = std::fabs(ld(p.c) * std::log(ld(p.epsilon)));
  return double(std::exp(ld(4) * p.epsilon * p.t) * std::pow(ld(p.lambda), 2 * p.nbar) *
                std::pow(ld(p.epsilon), -p.nbar) * std::pow(lg, p.nbar + 4) * std::pow(ld(p.phi0_norm), 4));
}

/// Basic bound times eps^{1/5} |c log eps|.
inline double improved_amplitude_bound(const BoundParams& p) {
  p.validate();
  using ld = long double;
  const ld lg = std::fabs(ld(p.c) * std::log(ld(p.epsilon)));
  return double(std::exp(ld(4) * p.epsilon * p.t) * std::pow(ld(p.lambda), 2 * p.nbar) *
                std::pow(ld(p.epsilon), ld(0.2) - p.nbar) * std::pow(lg, p.nbar + 5) * std::pow(ld(p.phi0_norm), 4));
}

/// Every connected class carries the improved factor.
inline double amplitude_bound(const PairingClass&, const BoundParams& p) { return improved_amplitude_bound(p); }

struct Schedule {
  double t = 0;
  double epsilon = 0;
  int N = 0;
  double kappa = 0;
  double a = 2.0 / 85;
  double b = 100;
};

/// eps = 1/(3+t), N = floor(a|log eps| / |log|log eps||), kappa = ceil(|log eps|^b), t = T / lambda^2.
inline Schedule make_schedule(double T, double lambda, double a = 2.0 / 85, double b = 100) {
  if (!(T > 0) || !(lambda > 0)) throw std::invalid_argument("schedule needs T > 0 and lambda > 0");
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("schedule needs a, b > 0");
  Schedule s;
  s.a = a;
  s.b = b;
  s.t = T / (lambda * lambda);
  s.epsilon = 1.0 / (3.0 + s.t);
  const double lg = std::abs(std::log(s.epsilon));
  s.N = int(std::floor(a * lg / std::abs(std::log(lg))));
  s.kappa = std::ceil(std::pow(lg, b));
  return s;
}

struct VarianceBound {
  Schedule schedule;
  double main_variance = 0;     ///< (N+1)^2 sum_{n1,n2<=N} 2^nbar nbar! improved(nbar)
  double remainder_bound = 0;   ///< bound on E||R||^2
  double first_moment = 0;      ///< assembled bound on E|<J,W> - E<J,W>|
  double envelope_exponent = 1.0 / 90;
  double envelope = 0;          ///< lambda^{1/90}, constant set to 1
  double main_rate_exponent = 0;  ///< eps power 1/5 - 4a - delta of the main variance
};

inline VarianceBound variance_bound(double T, double lambda, double a = 2.0 / 85, double b = 100, double delta = 0,
                                    double c_J = 1, double C = 1, double phi0_norm = 1) {
  if (lambda > 0.5) throw HypothesisViolated("lambda=" + std::to_string(lambda) + " exceeds 1/2");
  VarianceBound v;
  v.schedule = make_schedule(T, lambda, a, b);
  const auto& s = v.schedule;
  long double main = 0;
  for (int n1 = 0; n1 <= s.N; ++n1)
    for (int n2 = 0; n2 <= s.N; ++n2) {
      const int nb = n1 + n2;
      BoundParams bp{lambda, s.epsilon, s.t, nb, 0, a, b, delta, c_J, phi0_norm};
      main += std::pow(2.0L, nb) * std::tgamma((long double)nb + 1) * improved_amplitude_bound(bp);
    }
  main *= (long double)(s.N + 1) * (s.N + 1);
  v.main_variance = double(main);
  v.remainder_bound =
      remainder_bound(RemainderBoundParams{s.N, s.kappa, s.epsilon, lambda, s.t, C, phi0_norm});
  const double r2 = v.remainder_bound, r = std::sqrt(r2);
  v.first_moment = c_J * (2 * r2 + 4 * std::sqrt((1 + r) * (1 + r) * r2)) + std::sqrt(v.main_variance);
  v.envelope = std::pow(lambda, v.envelope_exponent);
  v.main_rate_exponent = 0.2 - 4 * a - delta;
  return v;
}

}  // namespace kinlab
