#pragma once

// Hopf-Lax semigroup Q_t phi(y) = min_x { phi(x) + rho(x, y)^2 / (2 t) } on a
// periodic grid, and the Kantorovich lower bound built from it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/summation.hpp"

namespace diffwass {

/// Exact discrete inf-convolution over the grid (values may be +inf).
/// The squared periodic distance is a sum over axes, so each axis is one pass
/// of direct minimization over wrapped offsets.
inline std::vector<double> hopf_lax(std::span<const double> phi, int dim, std::size_t grid_n, double t) {
  check_dimension(dim);
  if (!(t > 0.0)) throw ArgumentError("hopf_lax: t must be positive");
  if (phi.size() != DiscreteMeasure::cell_count(dim, grid_n)) throw ArgumentError("hopf_lax: grid function has wrong size");
  const std::size_t n = grid_n;
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> pen(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = static_cast<double>(std::min(k, n - k)) * h;
    pen[k] = d * d / (2.0 * t);
  }
  std::vector<double> out(phi.begin(), phi.end());
  std::vector<double> line(n), res(n);
  std::size_t stride = 1;
  for (int axis = dim - 1; axis >= 0; --axis) {
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < out.size(); base += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        for (std::size_t i = 0; i < n; ++i) line[i] = out[base + inner + i * stride];
        for (std::size_t y = 0; y < n; ++y) {
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t x = 0; x < n; ++x) {
            const std::size_t k = x > y ? x - y : y - x;
            best = std::min(best, line[x] + pen[k]);
          }
          res[y] = best;
        }
        for (std::size_t i = 0; i < n; ++i) out[base + inner + i * stride] = res[i];
      }
    }
    stride *= n;
  }
  return out;
}

inline std::vector<double> hopf_lax(std::span<const double> phi, const DiscreteMeasure& grid, double t) {
  return hopf_lax(phi, grid.dim, grid.grid_n, t);
}

/// 2 (nu(Q_1 phi) - mu_ref(phi)), a lower bound for W2(nu, mu_ref)^2 between
/// the grid measures.
inline double dual_lower_bound_w2(const DiscreteMeasure& nu, const DiscreteMeasure& mu_ref, std::span<const double> phi) {
  require_same_grid(nu, mu_ref, "dual_lower_bound_w2");
  if (phi.size() != nu.size()) throw ArgumentError("dual_lower_bound_w2: grid function has wrong size");
  const auto q = hopf_lax(phi, nu, 1.0);
  CompensatedSum s;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu.weights[i] > 0.0) s += nu.weights[i] * q[i];
    if (mu_ref.weights[i] > 0.0) s += -mu_ref.weights[i] * phi[i];
  }
  return 2.0 * s.value();
}

/// Best dual bound over a family of candidate potentials.
inline double best_dual_lower_bound(const DiscreteMeasure& nu, const DiscreteMeasure& mu_ref,
                                    const std::vector<std::vector<double>>& candidates) {
  double best = 0.0;  // phi = 0 is always admissible
  for (const auto& phi : candidates) best = std::max(best, dual_lower_bound_w2(nu, mu_ref, phi));
  return best;
}

/// Low-frequency trigonometric candidates a * cos(<m, x>) and a * sin(<m, x>)
/// for |m_j| <= 1, evaluated at cell centers, with amplitudes in `amps`.
inline std::vector<std::vector<double>> trig_potential_family(int dim, std::size_t grid_n, std::span<const double> amps) {
  const auto cells = DiscreteMeasure::cell_count(dim, grid_n);
  const auto probe = DiscreteMeasure::zeros(dim, grid_n);
  std::vector<std::vector<double>> out;
  std::size_t combos = 1;
  for (int j = 0; j < dim; ++j) combos *= 3;
  for (std::size_t code = 1; code < combos; ++code) {
    std::array<int, kMaxDim> m{};
    std::size_t c = code;
    for (int j = 0; j < dim; ++j) { m[static_cast<std::size_t>(j)] = static_cast<int>(c % 3) - 1; c /= 3; }
    int lead = 0;
    for (int j = 0; j < dim; ++j) if (m[static_cast<std::size_t>(j)] != 0) { lead = m[static_cast<std::size_t>(j)]; break; }
    if (lead < 0) continue;
    std::vector<double> ph(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const auto x = probe.center(cell);
      double p = 0.0;
      for (int j = 0; j < dim; ++j) p += m[static_cast<std::size_t>(j)] * x[j];
      ph[cell] = p;
    }
    for (double a : amps) {
      std::vector<double> vc(cells), vs(cells);
      for (std::size_t cell = 0; cell < cells; ++cell) { vc[cell] = a * std::cos(ph[cell]); vs[cell] = a * std::sin(ph[cell]); }
      out.push_back(std::move(vc));
      out.push_back(std::move(vs));
    }
  }
  return out;
}

}  // namespace diffwass
