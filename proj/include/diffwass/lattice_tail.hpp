#pragma once

// Certified brackets for tails sum_{lambda_i > Lambda} g(lambda_i) over the
// spectrum of T^d, for decreasing g. With N(s) the number of modes with
// lambda <= s, summation by parts gives
//   tail = -g(Lambda) N(Lambda) + int_Lambda^inf N(s) (-g'(s)) ds,
// and N is sandwiched by the lattice-point bounds
//   V_d (sqrt(s) - sqrt(d)/2)^d - 1 <= N(s) <= V_d (sqrt(s) + sqrt(d)/2)^d - 1.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "diffwass/torus.hpp"

namespace diffwass {

struct TailBracket {
  double lower = 0.0;
  double upper = 0.0;
  double midpoint() const noexcept { return 0.5 * (lower + upper); }
  double half_width() const noexcept { return 0.5 * (upper - lower); }
};

inline double mode_count_upper(int d, double s) {
  return unit_ball_volume(d) * std::pow(std::sqrt(s) + 0.5 * std::sqrt(static_cast<double>(d)), d) - 1.0;
}

inline double mode_count_lower(int d, double s) {
  const double r = std::max(0.0, std::sqrt(s) - 0.5 * std::sqrt(static_cast<double>(d)));
  return std::max(0.0, unit_ball_volume(d) * std::pow(r, d) - 1.0);
}

/// Bracket of the tail beyond Lambda. `count_at_lambda` is the exact N(Lambda);
/// g must be decreasing on [Lambda, inf) and dg is its derivative.
inline TailBracket lattice_tail_bracket(int d, double lambda, double count_at_lambda,
                                        const std::function<double(double)>& g,
                                        const std::function<double(double)>& dg) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const double tol = 1e-13;
  auto upper_integrand = [&](double s) { return mode_count_upper(d, s) * -dg(s); };
  auto lower_integrand = [&](double s) {
    return std::max(count_at_lambda, mode_count_lower(d, s)) * -dg(s);
  };
  const double boundary = -g(lambda) * count_at_lambda;
  TailBracket b;
  b.upper = boundary + integrator.integrate(upper_integrand, lambda, std::numeric_limits<double>::infinity(), tol);
  b.lower = boundary + integrator.integrate(lower_integrand, lambda, std::numeric_limits<double>::infinity(), tol);
  b.lower = std::max(0.0, b.lower);
  b.upper = std::max(b.lower, b.upper);
  return b;
}

}  // namespace diffwass
