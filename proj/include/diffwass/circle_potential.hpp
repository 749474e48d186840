#pragma once

// Spectrum of -L, L = d^2/dx^2 + V' d/dx, on the circle with invariant
// measure proportional to e^V dx.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

/// A smooth potential V on the circle together with its derivative.
struct CirclePotential {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string description;

  static CirclePotential cosine(double amplitude) {
    return {[amplitude](double x) { return amplitude * std::cos(x); },
            [amplitude](double x) { return -amplitude * std::sin(x); },
            "cosine(" + std::to_string(amplitude) + ")"};
  }
  static CirclePotential constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; }, "constant(" + std::to_string(c) + ")"};
  }

  std::vector<double> sample(std::size_t grid_n) const {
    std::vector<double> v(grid_n);
    const double h = kTwoPi / static_cast<double>(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) v[i] = value(h * static_cast<double>(i));
    return v;
  }
};

struct CirclePotentialSpectrum {
  std::size_t grid_n = 0;
  std::vector<double> potential;       // V on the grid x_g = 2 pi g / n
  std::vector<double> measure;         // e^{V_g} / sum e^V
  double ground_eigenvalue = 0.0;      // constant mode, ~0
  std::vector<double> eigenvalues;     // nontrivial, increasing
  std::vector<std::vector<double>> eigenfunctions;  // phi_i on the grid, unit norm in `measure`
  double max_residual = 0.0;
};

/// Second-order finite differences, conjugated by e^{V/2}: the off-diagonals
/// become -1/h^2 and the diagonal is (e^{(V_{g+1}-V_g)/2} + e^{(V_{g-1}-V_g)/2})/h^2,
/// with periodic corners. The symmetric matrix is diagonalized densely.
inline CirclePotentialSpectrum circle_potential_eigensolve(std::span<const double> potential,
                                                           std::size_t n_modes,
                                                           bool compute_eigenfunctions = true) {
  const std::size_t n = potential.size();
  if (n_modes == 0) throw ArgumentError("circle_potential_eigensolve: n_modes must be positive");
  if (n < 8 * n_modes) {
    throw ArgumentError("circle_potential_eigensolve: grid size " + std::to_string(n) +
                        " must be at least 8 * n_modes");
  }
  for (double v : potential) {
    if (!std::isfinite(v)) throw ArgumentError("circle_potential_eigensolve: non-finite potential sample");
  }
  const double h = kTwoPi / static_cast<double>(n);
  const double inv_h2 = 1.0 / (h * h);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t g = 0; g < n; ++g) {
    const std::size_t up = (g + 1) % n;
    const std::size_t dn = (g + n - 1) % n;
    const auto gi = static_cast<Eigen::Index>(g);
    s(gi, gi) = (std::exp(0.5 * (potential[up] - potential[g])) +
                 std::exp(0.5 * (potential[dn] - potential[g]))) * inv_h2;
    s(gi, static_cast<Eigen::Index>(up)) -= inv_h2;
    s(gi, static_cast<Eigen::Index>(dn)) -= inv_h2;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      s, compute_eigenfunctions ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("circle_potential_eigensolve: eigensolver did not converge",
                       std::numeric_limits<double>::infinity());
  }

  CirclePotentialSpectrum out;
  out.grid_n = n;
  out.potential.assign(potential.begin(), potential.end());
  const double vmax = *std::max_element(potential.begin(), potential.end());
  out.measure.resize(n);
  double z = 0.0;
  for (std::size_t g = 0; g < n; ++g) z += (out.measure[g] = std::exp(potential[g] - vmax));
  for (double& m : out.measure) m /= z;

  const auto& evals = solver.eigenvalues();
  out.ground_eigenvalue = evals(0);
  for (std::size_t i = 1; i <= n_modes; ++i) out.eigenvalues.push_back(evals(static_cast<Eigen::Index>(i)));

  if (compute_eigenfunctions) {
    const auto& evecs = solver.eigenvectors();
    for (std::size_t i = 0; i <= n_modes; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd w = evecs.col(col);
      const double res = (s * w - evals(col) * w).norm();
      out.max_residual = std::max(out.max_residual, res / std::max(1.0, std::abs(evals(col))));
      if (i == 0) continue;
      // phi = e^{-V/2} w, normalized in the grid measure.
      std::vector<double> phi(n);
      double norm2 = 0.0;
      for (std::size_t g = 0; g < n; ++g) {
        phi[g] = w(static_cast<Eigen::Index>(g)) * std::exp(-0.5 * (potential[g] - vmax));
        norm2 += phi[g] * phi[g] * out.measure[g];
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& p : phi) p *= inv;
      out.eigenfunctions.push_back(std::move(phi));
    }
    if (out.max_residual > 1e-6) {
      throw NumericError("circle_potential_eigensolve: eigenpair residual too large", out.max_residual);
    }
  }
  return out;
}

}  // namespace diffwass
