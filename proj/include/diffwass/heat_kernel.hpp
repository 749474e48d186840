#pragma once

// Heat kernel of the generator Delta on T^d, as a density with respect to the
// normalized volume measure. The kernel factorizes over axes; each axis uses
// the Fourier series for t >= kHeatKernelSwitch and the wrapped Gaussian
// (Poisson summation) form below it.

#include <cmath>
#include <numbers>
#include <string>

#include "diffwass/errors.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

inline constexpr double kHeatKernelSwitch = 0.5;
inline constexpr int kHeatKernelImages = 5;

/// 1 + 2 sum_{k>=1} e^{-k^2 t} cos(k theta), summed until terms drop below
/// 1e-18 relative to the leading 1.
inline double heat_kernel_1d_fourier(double theta, double t) {
  if (!(t > 0.0)) throw ArgumentError("heat kernel: t must be positive");
  double s = 0.0;
  for (int k = 1;; ++k) {
    const double w = std::exp(-static_cast<double>(k) * k * t);
    if (w < 1e-18) break;
    s += w * std::cos(k * theta);
  }
  return 1.0 + 2.0 * s;
}

/// sqrt(pi/t) sum_n exp(-(theta + 2 pi n)^2 / (4t)) over the images n closest
/// to the principal representative of theta.
inline double heat_kernel_1d_gaussian(double theta, double t, int images = kHeatKernelImages) {
  if (!(t > 0.0)) throw ArgumentError("heat kernel: t must be positive");
  const double th = wrap_difference(theta);
  const int half = images / 2;
  double s = 0.0;
  for (int n = -half; n <= images - 1 - half; ++n) {
    const double z = th + kTwoPi * n;
    s += std::exp(-z * z / (4.0 * t));
  }
  return std::sqrt(std::numbers::pi / t) * s;
}

inline double heat_kernel_1d(double theta, double t) {
  if (!(t > 0.0)) throw ArgumentError("heat kernel: t must be positive, got " + std::to_string(t));
  return t >= kHeatKernelSwitch ? heat_kernel_1d_fourier(theta, t) : heat_kernel_1d_gaussian(theta, t);
}

/// p_t(x, y) = 1 + sum_i e^{-lambda_i t} phi_i(x) phi_i(y).
inline double heat_kernel(const TorusPoint& x, const TorusPoint& y, double t) {
  if (x.dim() != y.dim()) throw ArgumentError("heat_kernel: dimension mismatch");
  if (!(t > 0.0)) throw ArgumentError("heat_kernel: t must be positive");
  double p = 1.0;
  for (int j = 0; j < x.dim(); ++j) p *= heat_kernel_1d(x[j] - y[j], t);
  return p;
}

}  // namespace diffwass
