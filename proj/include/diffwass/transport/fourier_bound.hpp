#pragma once

// Upper bound for W2(f mu, mu)^2 from the Fourier coefficients of f - 1:
// the integral of |grad L^{-1}(f - 1)|^2 / M(1, f) with M the logarithmic
// mean, applied to the floored density (1 - eps) f + eps.

#include <cmath>
#include <span>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/spectrum.hpp"
#include "diffwass/summation.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

inline constexpr double kDefaultDensityFloor = 1e-3;

/// Logarithmic mean (a - b) / (log a - log b), with M(a, a) = a.
inline double logarithmic_mean(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("logarithmic_mean: arguments must be positive", std::min(a, b));
  const double x = b / a - 1.0;
  if (std::abs(x) < 1e-6) return a * (1.0 + x / 2.0 - x * x / 12.0);
  return (a - b) / (std::log(a) - std::log(b));
}

struct FourierBound {
  double value = 0.0;    // bound on W2((1 - eps) f mu + eps mu, mu)^2
  double epsilon = 0.0;
};

/// Quadrature of |grad L^{-1}(f_eps - 1)|^2 / M(1, f_eps) over the cell centers
/// of a density_grid^d grid, f_eps = (1 - eps) f + eps, f = 1 + sum c_i phi_i.
inline FourierBound w2_upper_bound_fourier(std::span<const double> coeffs, const ModeList& modes,
                                           std::size_t density_grid, double eps = kDefaultDensityFloor) {
  if (coeffs.size() != modes.size()) throw ArgumentError("w2_upper_bound_fourier: misaligned coefficients");
  if (!(eps > 0.0 && eps < 1.0)) throw ArgumentError("w2_upper_bound_fourier: eps must lie in (0, 1)");
  if (density_grid < 4) throw ArgumentError("w2_upper_bound_fourier: density grid too coarse");
  FourierBound out;
  out.epsilon = eps;
  if (modes.empty()) return out;
  const int d = modes.front().dim;
  const std::size_t cells = DiscreteMeasure::cell_count(d, density_grid);
  const double h = kTwoPi / static_cast<double>(density_grid);
  FourierEvaluator eval(modes);
  std::array<double, kMaxDim> x{};
  std::array<double, kMaxDim> grad{};
  CompensatedSum total;
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rem = c;
    for (int j = d - 1; j >= 0; --j) {
      x[static_cast<std::size_t>(j)] = (static_cast<double>(rem % density_grid) + 0.5) * h;
      rem /= density_grid;
    }
    eval.evaluate({x.data(), static_cast<std::size_t>(d)});
    double f = 1.0;
    grad.fill(0.0);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      f += coeffs[i] * eval.mode_value(i);
      const double s = coeffs[i] / modes[i].eigenvalue * eval.mode_slope(i);
      for (int j = 0; j < d; ++j) grad[static_cast<std::size_t>(j)] += s * modes[i].freq[static_cast<std::size_t>(j)];
    }
    if (std::isnan(f)) throw NumericError("w2_upper_bound_fourier: density grid contains NaN", f);
    const double fe = (1.0 - eps) * f + eps;
    if (!(fe > 0.0)) throw NumericError("w2_upper_bound_fourier: floored density is not positive", fe);
    double g2 = 0.0;
    for (int j = 0; j < d; ++j) g2 += grad[static_cast<std::size_t>(j)] * grad[static_cast<std::size_t>(j)];
    if (std::isnan(g2)) throw NumericError("w2_upper_bound_fourier: gradient contains NaN", g2);
    total += (1.0 - eps) * (1.0 - eps) * g2 / logarithmic_mean(1.0, fe);
  }
  out.value = total.value() / static_cast<double>(cells);
  return out;
}

/// (1 - eps) nu + eps * uniform on the same grid.
inline DiscreteMeasure mix_with_uniform(const DiscreteMeasure& nu, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw ArgumentError("mix_with_uniform: eps must lie in [0, 1]");
  DiscreteMeasure out = nu;
  if (eps == 0.0) return out;
  const double mass = nu.total_mass();
  const double u = eps * mass / static_cast<double>(nu.size());
  for (double& w : out.weights) w = (1.0 - eps) * w + u;
  return out;
}

/// Rigorous additive slack for comparing the Fourier bound U (a bound for the
/// continuous smoothed measure mixed at eps) with the grid W2^2: removes the
/// mixing via W2(nu_eps, nu) <= sqrt(eps) W2(nu, mu), then moves every atom to
/// its cell center (h per axis at most, diagonal sqrt(d) h) and the reference
/// uniform measure to grid centers (h sqrt(d / 12)).
inline double fourier_grid_slack(double upper, double eps, int dim, std::size_t grid_n) {
  const double h = kTwoPi / static_cast<double>(grid_n);
  const double sd = std::sqrt(static_cast<double>(dim));
  const double w = std::sqrt(std::max(0.0, upper)) / (1.0 - std::sqrt(eps)) + sd * h + sd * h / std::sqrt(12.0);
  return w * w - upper;
}

}  // namespace diffwass
