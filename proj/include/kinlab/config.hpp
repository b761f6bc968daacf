#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kinlab/errors.hpp"
#include "kinlab/lattice.hpp"
#include "kinlab/wigner.hpp"

namespace kinlab {

// INI grammar: [section] headers, key = value lines, ';' or '#' comments.
// Lists are comma separated; mode tables are ';' separated rows of blank separated numbers.

namespace cfgparse {

inline std::vector<double> numbers(const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t used = 0;
    const std::string tok = item.substr(b, e - b + 1);
    double v;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + tok + "'");
    }
    if (used != tok.size()) throw ConfigError("not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

inline Vec3 vec3(const std::string& text) {
  const auto v = numbers(text);
  if (v.size() != 3) throw ConfigError("expected three components, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

inline std::vector<std::vector<double>> rows(const std::string& text, std::size_t width) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    if (row.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream rs(row);
    std::vector<double> r;
    std::string tok;
    while (rs >> tok) r.push_back(numbers(tok).at(0));
    if (r.size() != width)
      throw ConfigError("row '" + row + "' needs " + std::to_string(width) + " numbers");
    out.push_back(r);
  }
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os.str();
}

}  // namespace cfgparse

struct ObservableSpec {
  Vec3 center{};
  Vec3 widths{1, 1, 1};
  double amplitude = 1;
  std::vector<TrigMode> modes{{{0, 0, 0}, 1.0}};

  TestObservable build() const {
    return TestObservable(SpatialGaussian{center, widths, amplitude}, VelocityPolynomial{modes});
  }
};

struct BoltzmannSettings {
  std::size_t particles = 100'000;
  double shell_half_width = 1e-3;
  std::uint64_t dos_samples = 10'000'000;
  bool collisions = true;
};

struct ResolventSettings {
  std::vector<double> eps1{1.0 / 3, 0.1, 0.03, 0.01};
  double gamma1 = 3;
  std::vector<double> eps2{0.1, 0.05, 0.02, 0.01};
  Vec3 p2{0.5, 0, 0};
  double gamma2a = 3, gamma2b = 3;
  std::vector<double> eps3{0.1, 0.05, 0.02};
  Vec3 k3{0.25, 0.25, 0.25};
  double gamma3a = 3, gamma3b = 3, gamma3c = 3;
  int grid3 = 400;
};

struct GraphSettings {
  int max_nbar = 5;
  double schedule_T = 1;
  std::vector<double> schedule_lambdas{0.5, 0.3, 0.1, 0.01};
  double a = 2.0 / 85;
  double b = 100;
  double delta = 0;
  double c_J = 1;
};

struct DuhamelSettings {
  int box = 16;
  double lambda = 0.3;
  double t = 2;
  double dt = 1e-3;
  int max_order = 4;
  double width = 0.15;
  double eta = 0.09;
  Vec3 velocity{0.25, 0, 0};
};

struct ExperimentConfig {
  std::vector<double> lambdas{0.6, 0.45, 0.3};
  double T = 0.5;
  int tau_points = 6;
  int box = 64;
  double dt = 0.05;
  std::size_t realizations = 64;
  std::uint64_t seed = 1;
  std::optional<double> coupling_override;  ///< evolve with this coupling while keeping eta = lambda^2
  std::size_t bootstrap = 2000;
  WkbSpec wkb;
  ObservableSpec observable;
  BoltzmannSettings boltzmann;
  ResolventSettings resolvent;
  GraphSettings graphs;
  DuhamelSettings duhamel;
  std::string output = "out";
  bool reproducible = false;

  ExperimentConfig() {
    wkb.envelope = {{0, 0, 0}, 0.39};
    wkb.phase.linear = {two_pi * 0.25, 0, 0};
  }

  /// Per-axis support radius of the initial datum in lattice units at scale eta.
  double support_radius(double eta) const {
    double c = 0;
    for (double x : wkb.envelope.center) c = std::max(c, std::abs(x));
    return (c + 6 * wkb.envelope.width) / eta;
  }

  /// Box side needed at coupling lambda: travel T/eta at per-axis speed <= 1 plus the support, both ways.
  int required_box(double lambda) const {
    const double eta = lambda * lambda;
    return int(std::ceil(2 * (T / eta + support_radius(eta)) - 1e-9));
  }

  void validate() const {
    if (lambdas.empty()) throw ConfigError("experiment.lambdas is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(lambdas[i] > 0 && lambdas[i] <= 1)) throw ConfigError("lambdas must lie in (0,1]");
      if (i && !(lambdas[i] < lambdas[i - 1])) throw ConfigError("lambdas must be strictly descending");
    }
    if (!(T >= 0)) throw ConfigError("experiment.T must be >= 0");
    if (!(dt > 0)) throw ConfigError("experiment.dt must be > 0");
    if (box < 2 || box % 2) throw ConfigError("experiment.box must be even and >= 2");
    if (realizations == 0) throw ConfigError("experiment.realizations must be >= 1");
    if (tau_points < 1) throw ConfigError("experiment.tau_points must be >= 1");
    if (!(wkb.envelope.width > 0)) throw ConfigError("wkb.width must be > 0");
    for (double lam : lambdas)
      if (box < required_box(lam))
        throw ConfigError("box " + std::to_string(box) + " < 2 (T/eta + 6 sigma/eta) = " +
                          std::to_string(required_box(lam)) + " at lambda=" + std::to_string(lam));
    if (coupling_override && !(*coupling_override >= 0)) throw ConfigError("coupling_override must be >= 0");
    if (!(boltzmann.shell_half_width > 0 && boltzmann.shell_half_width <= 0.1))
      throw ConfigError("boltzmann.shell_half_width must lie in (0, 0.1]");
    if (boltzmann.particles == 0 || boltzmann.dos_samples == 0) throw ConfigError("boltzmann counts must be >= 1");
    if (graphs.max_nbar < 1 || graphs.max_nbar > 6) throw ConfigError("graphs.max_nbar must lie in 1..6");
    if (duhamel.box < 2 || duhamel.max_order < 1) throw ConfigError("duhamel.box >= 2 and max_order >= 1");
  }
};

namespace detail {

template <class T>
T get_or(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  // the defaulted overload swallows malformed values, so only use it for absent keys
  if (!pt.get_child_optional(key)) return fallback;
  try {
    return pt.get<T>(key);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

inline std::optional<std::string> text(const boost::property_tree::ptree& pt, const std::string& key) {
  auto v = pt.get_optional<std::string>(key);
  if (!v || v->find_first_not_of(" \t") == std::string::npos) return std::nullopt;
  return *v;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "run.seed", "run.output", "run.reproducible", "run.bootstrap",
      "experiment.lambdas", "experiment.T", "experiment.tau_points", "experiment.box", "experiment.dt",
      "experiment.realizations", "experiment.coupling_override",
      "wkb.center", "wkb.width", "wkb.velocity", "wkb.modes",
      "observable.center", "observable.widths", "observable.amplitude", "observable.modes",
      "boltzmann.particles", "boltzmann.shell_half_width", "boltzmann.dos_samples", "boltzmann.collisions",
      "resolvent.eps1", "resolvent.gamma1", "resolvent.eps2", "resolvent.p2", "resolvent.gamma2",
      "resolvent.eps3", "resolvent.k3", "resolvent.gamma3", "resolvent.grid3",
      "graphs.max_nbar", "graphs.schedule_T", "graphs.schedule_lambdas", "graphs.a", "graphs.b", "graphs.delta",
      "graphs.c_J",
      "duhamel.box", "duhamel.lambda", "duhamel.t", "duhamel.dt", "duhamel.max_order", "duhamel.width",
      "duhamel.eta", "duhamel.velocity"};
  return keys;
}

}  // namespace detail

inline ExperimentConfig config_from_tree(const boost::property_tree::ptree& pt) {
  using detail::get_or;
  using detail::text;
  namespace cp = cfgparse;
  for (const auto& [section, body] : pt) {
    for (const auto& [key, _] : body) {
      const std::string full = section + "." + key;
      const auto& known = detail::known_keys();
      if (std::find(known.begin(), known.end(), full) == known.end()) throw ConfigError("unknown key " + full);
    }
  }
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(pt, "run.seed", c.seed);
  c.output = get_or<std::string>(pt, "run.output", c.output);
  c.reproducible = get_or<bool>(pt, "run.reproducible", c.reproducible);
  c.bootstrap = get_or<std::size_t>(pt, "run.bootstrap", c.bootstrap);

  if (auto s = text(pt, "experiment.lambdas")) c.lambdas = cp::numbers(*s);
  c.T = get_or(pt, "experiment.T", c.T);
  c.tau_points = get_or(pt, "experiment.tau_points", c.tau_points);
  c.box = get_or(pt, "experiment.box", c.box);
  c.dt = get_or(pt, "experiment.dt", c.dt);
  c.realizations = get_or<std::size_t>(pt, "experiment.realizations", c.realizations);
  if (auto s = text(pt, "experiment.coupling_override")) c.coupling_override = cp::numbers(*s).at(0);

  if (auto s = text(pt, "wkb.center")) c.wkb.envelope.center = cp::vec3(*s);
  c.wkb.envelope.width = get_or(pt, "wkb.width", c.wkb.envelope.width);
  if (auto s = text(pt, "wkb.velocity")) {
    const auto v = cp::vec3(*s);
    c.wkb.phase.linear = {two_pi * v[0], two_pi * v[1], two_pi * v[2]};
  }
  if (auto s = text(pt, "wkb.modes"))
    for (const auto& r : cp::rows(*s, 5)) c.wkb.phase.modes.push_back({{r[0], r[1], r[2]}, r[3], r[4]});

  if (auto s = text(pt, "observable.center")) c.observable.center = cp::vec3(*s);
  if (auto s = text(pt, "observable.widths")) c.observable.widths = cp::vec3(*s);
  c.observable.amplitude = get_or(pt, "observable.amplitude", c.observable.amplitude);
  if (auto s = text(pt, "observable.modes")) {
    c.observable.modes.clear();
    for (const auto& r : cp::rows(*s, 5)) {
      for (int j = 0; j < 3; ++j)
        if (r[j] != std::round(r[j])) throw ConfigError("observable mode indices must be integers");
      c.observable.modes.push_back({{int(r[0]), int(r[1]), int(r[2])}, cplx(r[3], r[4])});
    }
  }

  c.boltzmann.particles = get_or<std::size_t>(pt, "boltzmann.particles", c.boltzmann.particles);
  c.boltzmann.shell_half_width = get_or(pt, "boltzmann.shell_half_width", c.boltzmann.shell_half_width);
  c.boltzmann.dos_samples = get_or<std::uint64_t>(pt, "boltzmann.dos_samples", c.boltzmann.dos_samples);
  c.boltzmann.collisions = get_or(pt, "boltzmann.collisions", c.boltzmann.collisions);

  auto& r = c.resolvent;
  if (auto s = text(pt, "resolvent.eps1")) r.eps1 = cp::numbers(*s);
  r.gamma1 = get_or(pt, "resolvent.gamma1", r.gamma1);
  if (auto s = text(pt, "resolvent.eps2")) r.eps2 = cp::numbers(*s);
  if (auto s = text(pt, "resolvent.p2")) r.p2 = cp::vec3(*s);
  if (auto s = text(pt, "resolvent.gamma2")) {
    const auto g = cp::numbers(*s);
    if (g.size() != 2) throw ConfigError("resolvent.gamma2 needs two values");
    r.gamma2a = g[0];
    r.gamma2b = g[1];
  }
  if (auto s = text(pt, "resolvent.eps3")) r.eps3 = cp::numbers(*s);
  if (auto s = text(pt, "resolvent.k3")) r.k3 = cp::vec3(*s);
  if (auto s = text(pt, "resolvent.gamma3")) {
    const auto g = cp::vec3(*s);
    r.gamma3a = g[0];
    r.gamma3b = g[1];
    r.gamma3c = g[2];
  }
  r.grid3 = get_or(pt, "resolvent.grid3", r.grid3);

  auto& g = c.graphs;
  g.max_nbar = get_or(pt, "graphs.max_nbar", g.max_nbar);
  g.schedule_T = get_or(pt, "graphs.schedule_T", g.schedule_T);
  if (auto s = text(pt, "graphs.schedule_lambdas")) g.schedule_lambdas = cp::numbers(*s);
  g.a = get_or(pt, "graphs.a", g.a);
  g.b = get_or(pt, "graphs.b", g.b);
  g.delta = get_or(pt, "graphs.delta", g.delta);
  g.c_J = get_or(pt, "graphs.c_J", g.c_J);

  auto& d = c.duhamel;
  d.box = get_or(pt, "duhamel.box", d.box);
  d.lambda = get_or(pt, "duhamel.lambda", d.lambda);
  d.t = get_or(pt, "duhamel.t", d.t);
  d.dt = get_or(pt, "duhamel.dt", d.dt);
  d.max_order = get_or(pt, "duhamel.max_order", d.max_order);
  d.width = get_or(pt, "duhamel.width", d.width);
  d.eta = get_or(pt, "duhamel.eta", d.eta);
  if (auto s = text(pt, "duhamel.velocity")) d.velocity = cp::vec3(*s);

  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return config_from_tree(pt);
}

inline ExperimentConfig parse_config(const std::string& ini_text) {
  boost::property_tree::ptree pt;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  return config_from_tree(pt);
}

/// Every field, fully spelled out in a fixed order; the digest is taken over this text.
inline std::string canonical_text(const ExperimentConfig& c) {
  namespace cp = cfgparse;
  std::ostringstream os;
  os.precision(17);
  auto v3 = [](const Vec3& v) { return cp::join({v[0], v[1], v[2]}); };
  os << "[run]\nseed = " << c.seed << "\nbootstrap = " << c.bootstrap << "\n";
  os << "[experiment]\nlambdas = " << cp::join(c.lambdas) << "\nT = " << c.T << "\ntau_points = " << c.tau_points
     << "\nbox = " << c.box << "\ndt = " << c.dt << "\nrealizations = " << c.realizations
     << "\ncoupling_override = " << (c.coupling_override ? cp::join({*c.coupling_override}) : "") << "\n";
  os << "[wkb]\ncenter = " << v3(c.wkb.envelope.center) << "\nwidth = " << c.wkb.envelope.width
     << "\nlinear_phase = " << v3(c.wkb.phase.linear) << "\nmodes = ";
  for (const auto& m : c.wkb.phase.modes)
    os << cp::join({m.wavevector[0], m.wavevector[1], m.wavevector[2], m.cos_coeff, m.sin_coeff}) << "; ";
  os << "\n[observable]\ncenter = " << v3(c.observable.center) << "\nwidths = " << v3(c.observable.widths)
     << "\namplitude = " << c.observable.amplitude << "\nmodes = ";
  for (const auto& m : c.observable.modes)
    os << m.m[0] << " " << m.m[1] << " " << m.m[2] << " " << cp::join({m.coeff.real(), m.coeff.imag()}) << "; ";
  const auto& b = c.boltzmann;
  os << "\n[boltzmann]\nparticles = " << b.particles << "\nshell_half_width = " << b.shell_half_width
     << "\ndos_samples = " << b.dos_samples << "\ncollisions = " << b.collisions << "\n";
  const auto& r = c.resolvent;
  os << "[resolvent]\neps1 = " << cp::join(r.eps1) << "\ngamma1 = " << r.gamma1 << "\neps2 = " << cp::join(r.eps2)
     << "\np2 = " << v3(r.p2) << "\ngamma2 = " << cp::join({r.gamma2a, r.gamma2b}) << "\neps3 = " << cp::join(r.eps3)
     << "\nk3 = " << v3(r.k3) << "\ngamma3 = " << cp::join({r.gamma3a, r.gamma3b, r.gamma3c})
     << "\ngrid3 = " << r.grid3 << "\n";
  const auto& g = c.graphs;
  os << "[graphs]\nmax_nbar = " << g.max_nbar << "\nschedule_T = " << g.schedule_T
     << "\nschedule_lambdas = " << cp::join(g.schedule_lambdas) << "\na = " << g.a << "\nb = " << g.b
     << "\ndelta = " << g.delta << "\nc_J = " << g.c_J << "\n";
  const auto& d = c.duhamel;
  os << "[duhamel]\nbox = " << d.box << "\nlambda = " << d.lambda << "\nt = " << d.t << "\ndt = " << d.dt
     << "\nmax_order = " << d.max_order << "\nwidth = " << d.width << "\neta = " << d.eta
     << "\nvelocity = " << v3(d.velocity) << "\n";
  return os.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_digest(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(c))));
  return buf;
}

}  // namespace kinlab
