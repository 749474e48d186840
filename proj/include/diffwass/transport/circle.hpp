#pragma once

// Exact transport between grid measures on the circle T^1.
//
// Lifting to the line, every optimal W2 plan is a quantile coupling
// u -> (F_A^{-1}(u), F_B^{-1}(u + theta)) with F_B^{-1} extended by
// F_B^{-1}(v + 1) = F_B^{-1}(v) + 2 pi. The cost is convex and piecewise
// linear in theta, so a bracketing search on [-1, 1] finds the minimizer
// to machine precision.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/transport/result.hpp"

namespace diffwass {

namespace detail {

struct CircleAtoms {
  std::vector<double> x;     // positions in [0, 2 pi)
  std::vector<double> cdf;   // cdf[0] = 0, cdf.back() = 1
  std::vector<std::size_t> cell;
};

inline CircleAtoms circle_atoms(const DiscreteMeasure& m, double mass) {
  CircleAtoms a;
  a.cdf.push_back(0.0);
  const double h = m.spacing();
  CompensatedSum run;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double w = m.weights[i];
    if (w < 0.0) throw ArgumentError("circle transport: negative weight");
    if (w == 0.0) continue;
    run += w / mass;
    a.x.push_back((static_cast<double>(i) + 0.5) * h);
    a.cdf.push_back(run.value());
    a.cell.push_back(i);
  }
  if (a.x.empty()) throw ArgumentError("circle transport: empty measure");
  a.cdf.back() = 1.0;
  return a;
}

inline double checked_mass(const DiscreteMeasure& a, const DiscreteMeasure& b, const char* who) {
  if (a.dim != 1 || b.dim != 1) throw ArgumentError(std::string(who) + ": measures must live on T^1");
  require_same_grid(a, b, who);
  const double ma = a.total_mass();
  const double mb = b.total_mass();
  if (std::abs(ma - mb) > 1e-9) {
    throw ArgumentError(std::string(who) + ": mass mismatch " + std::to_string(ma) + " vs " + std::to_string(mb));
  }
  return ma;
}

struct CouplingSegment {
  std::size_t i;   // atom of A
  std::size_t j;   // atom of B
  int lift;        // B atom sits at x_j + 2 pi lift
  double mass;
};

/// Visits the segments of the shifted quantile coupling in u order.
template <class Visit>
void walk_coupling(const CircleAtoms& A, const CircleAtoms& B, double theta, Visit&& visit) {
  const std::size_t m = A.x.size();
  const std::size_t n = B.x.size();
  int k = static_cast<int>(std::floor(theta));
  const double frac = theta - k;
  auto it = std::upper_bound(B.cdf.begin(), B.cdf.end(), frac);
  std::size_t j = static_cast<std::size_t>(it - B.cdf.begin()) - 1;
  if (j >= n) { j = 0; ++k; }
  std::size_t i = 0;
  double u = 0.0;
  while (i < m) {
    const double end_a = A.cdf[i + 1];
    const double end_b = B.cdf[j + 1] + k - theta;
    const double end = std::min(end_a, end_b);
    if (end > u) visit(CouplingSegment{i, j, k, end - u});
    u = std::max(u, end);
    if (end_a <= end_b) ++i;
    if (end_b <= end_a) {
      if (++j == n) { j = 0; ++k; }
    }
  }
}

inline double lifted_gap(const CircleAtoms& A, const CircleAtoms& B, const CouplingSegment& s) {
  return A.x[s.i] - (B.x[s.j] + kTwoPi * s.lift);
}

inline double coupling_cost(const CircleAtoms& A, const CircleAtoms& B, double theta) {
  CompensatedSum c;
  walk_coupling(A, B, theta, [&](const CouplingSegment& s) {
    const double g = lifted_gap(A, B, s);
    c += s.mass * g * g;
  });
  return c.value();
}

/// Minimizer of the convex coupling cost over theta in [-1, 1].
inline double optimal_shift(const CircleAtoms& A, const CircleAtoms& B, std::size_t* evaluations = nullptr) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -1.0, hi = 1.0;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = coupling_cost(A, B, x1), f2 = coupling_cost(A, B, x2);
  std::size_t evals = 2;
  while (hi - lo > 1e-15) {
    if (f1 <= f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = coupling_cost(A, B, x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = coupling_cost(A, B, x2);
    }
    ++evals;
  }
  if (evaluations) *evaluations = evals;
  return f1 <= f2 ? x1 : x2;
}

}  // namespace detail

/// Exact W2 between two measures on the same T^1 grid (atoms at cell centers).
/// `value` is the distance; `iterations` counts cost evaluations.
inline TransportResult w2_circle_exact(const DiscreteMeasure& A, const DiscreteMeasure& B) {
  const double mass = detail::checked_mass(A, B, "w2_circle_exact");
  const auto a = detail::circle_atoms(A, mass);
  const auto b = detail::circle_atoms(B, mass);
  std::size_t evals = 0;
  const double theta = detail::optimal_shift(a, b, &evals);
  const double cost = mass * detail::coupling_cost(a, b, theta);
  TransportResult r;
  r.value = std::sqrt(std::max(0.0, cost));
  r.method = "circle_exact";
  r.iterations = evals;
  return r;
}

/// Grid function phi on the reference side (same grid as mu_ref) built from
/// the optimal coupling of mu_ref to nu: the staircase potentials of nu are
/// c-transformed onto every cell, so phi is finite everywhere and
/// dual_lower_bound_w2(nu, mu_ref, phi) is close to W2(nu, mu_ref)^2.
inline std::vector<double> circle_kantorovich_potential(const DiscreteMeasure& nu, const DiscreteMeasure& mu_ref) {
  const double mass = detail::checked_mass(nu, mu_ref, "circle_kantorovich_potential");
  const auto a = detail::circle_atoms(mu_ref, mass);
  const auto b = detail::circle_atoms(nu, mass);
  const double theta = detail::optimal_shift(a, b);

  // a_i + b_j = gap^2 / 2 along the staircase.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> pa(a.x.size(), nan), pb(b.x.size(), nan);
  bool first = true;
  detail::CouplingSegment prev{};
  auto cost = [&](std::size_t i, std::size_t j, int lift) {
    const double g = detail::lifted_gap(a, b, {i, j, lift, 0.0});
    return 0.5 * g * g;
  };
  detail::walk_coupling(a, b, theta, [&](const detail::CouplingSegment& s) {
    const double c = cost(s.i, s.j, s.lift);
    if (first) {
      pa[s.i] = 0.0;
      pb[s.j] = c;
      first = false;
    } else if (!std::isnan(pa[s.i]) && std::isnan(pb[s.j])) {
      pb[s.j] = c - pa[s.i];
    } else if (std::isnan(pa[s.i]) && !std::isnan(pb[s.j])) {
      pa[s.i] = c - pb[s.j];
    } else if (std::isnan(pa[s.i])) {
      // Both indices advanced together: link through the zero-mass cell
      // (new A atom, previous B atom).
      pa[s.i] = cost(s.i, prev.j, prev.lift) - pb[prev.j];
      pb[s.j] = c - pa[s.i];
    }
    prev = s;
  });

  // phi = -(pb)^c on the full reference grid, with the geodesic cost.
  const std::size_t n = mu_ref.grid_n;
  const double h = mu_ref.spacing();
  std::vector<double> phi(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double px = (static_cast<double>(x) + 0.5) * h;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.x.size(); ++j) {
      if (std::isnan(pb[j])) continue;
      const double d = std::abs(wrap_difference(px - b.x[j]));
      best = std::min(best, 0.5 * d * d - pb[j]);
    }
    phi[x] = -best;
  }
  return phi;
}

/// Exact W1 on T^1: with D the cumulative mass difference, W1 = h * sum |D - median D|.
inline TransportResult w1_circle_exact(const DiscreteMeasure& A, const DiscreteMeasure& B) {
  detail::checked_mass(A, B, "w1_circle_exact");
  const std::size_t n = A.grid_n;
  std::vector<double> D(n);
  CompensatedSum run;
  for (std::size_t i = 0; i < n; ++i) {
    run += A.weights[i] - B.weights[i];
    D[i] = run.value();
  }
  std::vector<double> sorted = D;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
  const double med = sorted[n / 2];
  CompensatedSum s;
  for (double v : D) s += std::abs(v - med);
  TransportResult r;
  r.value = A.spacing() * s.value();
  r.method = "circle_w1_exact";
  return r;
}

}  // namespace diffwass
