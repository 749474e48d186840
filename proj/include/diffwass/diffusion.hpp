#pragma once

// Sample paths of the diffusion generated by Delta (+ V' d/dx on the circle).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "diffwass/circle_potential.hpp"
#include "diffwass/errors.hpp"
#include "diffwass/rng.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

struct SimulationSpec {
  int dim = 1;
  std::optional<CirclePotential> potential;  // d = 1 only
  double t_end = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 0;
  std::optional<TorusPoint> init;  // absent: stationary draw
};

/// Uniform time grid 0 = s_0 < ... < s_K = t_end with spacing dt; the final
/// step is shorter when dt does not divide t_end.
struct TimeGrid {
  double t_end = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;  // K

  static TimeGrid make(double t_end, double dt) {
    if (!(dt > 0.0)) throw ArgumentError("time grid: dt must be positive");
    if (!(t_end >= dt * (1.0 - 1e-12))) throw ArgumentError("time grid: t_end must be >= dt");
    TimeGrid g{t_end, dt, 0};
    g.steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    if (g.steps == 0) g.steps = 1;
    return g;
  }
  double time(std::size_t k) const noexcept {
    return k >= steps ? t_end : dt * static_cast<double>(k);
  }
  double step(std::size_t k) const noexcept {  // length of [s_{k-1}, s_k], k >= 1
    return time(k) - time(k - 1);
  }
  /// Trapezoid weight of node k for integrals over [0, t_end].
  double trapezoid_weight(std::size_t k) const noexcept {
    double w = 0.0;
    if (k > 0) w += 0.5 * step(k);
    if (k < steps) w += 0.5 * step(k + 1);
    return w;
  }
};

namespace detail {

inline double sample_stationary_circle(const CirclePotential& v, Gaussian& rng) {
  constexpr std::size_t kProbe = 4096;
  double vmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kProbe; ++i) vmax = std::max(vmax, v.value(kTwoPi * static_cast<double>(i) / kProbe));
  vmax += 1e-3;  // covers the sampling gap for smooth V
  for (;;) {
    const double x = kTwoPi * rng.uniform();
    if (rng.uniform() <= std::exp(v.value(x) - vmax)) return x;
  }
}

}  // namespace detail

/// Runs the diffusion and calls visit(k, s_k, coords) for every node k = 0..K.
/// Without a potential the increments are exact Brownian increments with
/// variance 2 * step per coordinate; with a potential (d = 1) the scheme is
/// Euler-Maruyama with drift V'(X).
template <class Visitor>
TimeGrid simulate_stream(const SimulationSpec& spec, Visitor&& visit) {
  check_dimension(spec.dim);
  if (spec.potential && spec.dim != 1) throw ArgumentError("simulate: a potential is supported only for d = 1");
  if (spec.init && spec.init->dim() != spec.dim) throw ArgumentError("simulate: initial point has wrong dimension");
  const TimeGrid grid = TimeGrid::make(spec.t_end, spec.dt);
  Gaussian rng(spec.seed);
  std::array<double, kMaxDim> x{};
  const auto d = static_cast<std::size_t>(spec.dim);
  if (spec.init) {
    for (std::size_t j = 0; j < d; ++j) x[j] = (*spec.init)[static_cast<int>(j)];
  } else if (spec.potential) {
    x[0] = detail::sample_stationary_circle(*spec.potential, rng);
  } else {
    for (std::size_t j = 0; j < d; ++j) x[j] = wrap_angle(kTwoPi * rng.uniform());
  }
  visit(std::size_t{0}, 0.0, std::span<const double>(x.data(), d));
  const double full_sigma = std::sqrt(2.0 * grid.dt);
  for (std::size_t k = 1; k <= grid.steps; ++k) {
    const double h = grid.step(k);
    const double sigma = (k < grid.steps) ? full_sigma : std::sqrt(2.0 * h);
    if (spec.potential) {
      x[0] = wrap_angle(x[0] + spec.potential->derivative(x[0]) * h + sigma * rng());
    } else {
      for (std::size_t j = 0; j < d; ++j) x[j] = wrap_angle(x[j] + sigma * rng());
    }
    visit(k, grid.time(k), std::span<const double>(x.data(), d));
  }
  return grid;
}

/// One recorded trajectory. Points are stored row-major, `dim` per node.
struct SamplePath {
  int dim = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<double> points;

  std::size_t size() const noexcept { return times.size(); }
  double horizon() const noexcept { return times.empty() ? 0.0 : times.back(); }
  std::span<const double> point(std::size_t k) const noexcept {
    return {points.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  TorusPoint torus_point(std::size_t k) const { return TorusPoint(point(k)); }
  TimeGrid grid() const { return TimeGrid::make(horizon(), dt); }

  /// A path that sits at x for [0, t_end] (test and degenerate-case helper).
  static SamplePath constant(const TorusPoint& x, double t_end, double dt) {
    const TimeGrid g = TimeGrid::make(t_end, dt);
    SamplePath p;
    p.dim = x.dim();
    p.dt = dt;
    for (std::size_t k = 0; k <= g.steps; ++k) {
      p.times.push_back(g.time(k));
      for (double c : x.coords()) p.points.push_back(c);
    }
    return p;
  }
};

inline SamplePath simulate_path(const SimulationSpec& spec) {
  SamplePath path;
  path.dim = spec.dim;
  path.dt = spec.dt;
  path.seed = spec.seed;
  const TimeGrid g = TimeGrid::make(spec.t_end, spec.dt);
  path.times.reserve(g.steps + 1);
  path.points.reserve((g.steps + 1) * static_cast<std::size_t>(spec.dim));
  simulate_stream(spec, [&](std::size_t, double s, std::span<const double> x) {
    path.times.push_back(s);
    path.points.insert(path.points.end(), x.begin(), x.end());
  });
  return path;
}

/// CSV with columns s, x_1..x_d.
inline void write_path_csv(std::ostream& os, const SamplePath& path) {
  os << "s";
  for (int j = 1; j <= path.dim; ++j) os << ",x_" << j;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < path.size(); ++k) {
    os << path.times[k];
    for (double c : path.point(k)) os << ',' << c;
    os << '\n';
  }
}

}  // namespace diffwass
