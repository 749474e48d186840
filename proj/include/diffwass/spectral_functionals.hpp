#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffwass/errors.hpp"
#include "diffwass/lattice_tail.hpp"
#include "diffwass/spectrum.hpp"
#include "diffwass/summation.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

/// A truncated spectral series: `value` plus a bound on what truncation may
/// have changed.
struct SpectralEstimate {
  double value = 0.0;
  std::size_t truncation_count = 0;
  double tail_bound = 0.0;
  double r = 0.0;
  double t = std::numeric_limits<double>::infinity();
};

inline void to_json(nlohmann::json& j, const SpectralEstimate& e) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"value", e.value},
                     {"tail_bound", num(e.tail_bound)},
                     {"truncation_count", e.truncation_count},
                     {"r", e.r},
                     {"t", num(e.t)}};
}

namespace detail {

/// True when `modes` holds exactly every mode with lambda <= its largest
/// eigenvalue, so the omitted tail starts strictly above it.
inline bool is_complete_shell_list(const ModeList& modes) {
  if (modes.empty()) return true;
  const int d = modes.front().dim;
  const double lam = modes.back().eigenvalue;
  return count_modes(d, lam) == modes.size();
}

inline double largest_eigenvalue(const ModeList& modes) {
  double m = 0.0;
  for (const auto& mode : modes) m = std::max(m, mode.eigenvalue);
  return m;
}

}  // namespace detail

/// Xi_r(t) = sum_i psi_i(t)^2 / (lambda_i e^{2 lambda_i r}) over the supplied
/// modes. The tail bound uses |psi_i| <= sqrt(2t) and the lattice count; it is
/// infinite when r = 0 and d >= 2, or when the list is not a union of full
/// eigenvalue shells.
inline SpectralEstimate xi_r(const EmpiricalSpectrum& spectrum, const ModeList& modes, double r) {
  if (r < 0.0) throw ArgumentError("xi_r: r must be >= 0");
  if (spectrum.psi.size() != modes.size()) throw ArgumentError("xi_r: spectrum and mode list have different lengths");
  std::vector<double> terms(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double lam = modes[i].eigenvalue;
    terms[i] = spectrum.psi[i] * spectrum.psi[i] / (lam * std::exp(2.0 * lam * r));
  }
  SpectralEstimate e;
  e.value = sum_descending_magnitude(std::move(terms));
  e.truncation_count = modes.size();
  e.r = r;
  e.t = spectrum.horizon;
  if (modes.empty()) {
    e.tail_bound = std::numeric_limits<double>::infinity();
    return e;
  }
  const int d = modes.front().dim;
  if ((r == 0.0 && d >= 2) || !detail::is_complete_shell_list(modes)) {
    e.tail_bound = std::numeric_limits<double>::infinity();
    return e;
  }
  const double lam = detail::largest_eigenvalue(modes);
  const double two_t = 2.0 * spectrum.horizon;
  auto g = [=](double s) { return two_t * std::exp(-2.0 * r * s) / s; };
  auto dg = [=](double s) { return -two_t * std::exp(-2.0 * r * s) * (1.0 / (s * s) + 2.0 * r / s); };
  e.tail_bound = lattice_tail_bracket(d, lam, static_cast<double>(modes.size()), g, dg).upper;
  return e;
}

/// sum over the supplied modes of 2 / (lambda^2 e^{2 r lambda}); the tail
/// bound brackets the omitted remainder from above.
inline SpectralEstimate limit_series(const ModeList& modes, double r) {
  if (r < 0.0) throw ArgumentError("limit_series: r must be >= 0");
  std::vector<double> terms(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double lam = modes[i].eigenvalue;
    terms[i] = 2.0 / (lam * lam * std::exp(2.0 * r * lam));
  }
  SpectralEstimate e;
  e.value = sum_descending_magnitude(std::move(terms));
  e.truncation_count = modes.size();
  e.r = r;
  if (modes.empty()) {
    e.tail_bound = std::numeric_limits<double>::infinity();
    return e;
  }
  const int d = modes.front().dim;
  if ((r == 0.0 && d >= 4) || !detail::is_complete_shell_list(modes)) {
    e.tail_bound = std::numeric_limits<double>::infinity();
    return e;
  }
  const double lam = detail::largest_eigenvalue(modes);
  auto g = [=](double s) { return 2.0 * std::exp(-2.0 * r * s) / (s * s); };
  auto dg = [=](double s) { return -2.0 * std::exp(-2.0 * r * s) * (2.0 / (s * s * s) + 2.0 * r / (s * s)); };
  e.tail_bound = lattice_tail_bracket(d, lam, static_cast<double>(modes.size()), g, dg).upper;
  return e;
}

/// Shell-by-shell partial sum up to eigenvalue `lambda_max` plus the midpoint
/// of the certified tail bracket; `tail_bound` is the bracket half-width.
inline SpectralEstimate limit_series_at(int d, double r, std::size_t lambda_max) {
  check_dimension(d);
  if (r < 0.0) throw ArgumentError("limit_series: r must be >= 0");
  if (r == 0.0 && d >= 4) {
    throw DivergenceError("limit_series: sum 2/lambda_i^2 diverges for d >= 4 (W2 decays slower than 1/t)");
  }
  const auto shells = lattice_shell_counts(d, lambda_max);
  std::vector<double> terms;
  terms.reserve(lambda_max);
  std::uint64_t count = 0;
  for (std::size_t n = 1; n <= lambda_max; ++n) {
    if (shells[n] == 0) continue;
    const double lam = static_cast<double>(n);
    terms.push_back(static_cast<double>(shells[n]) * 2.0 / (lam * lam * std::exp(2.0 * r * lam)));
    count += shells[n];
  }
  const double partial = sum_descending_magnitude(std::move(terms));
  auto g = [=](double s) { return 2.0 * std::exp(-2.0 * r * s) / (s * s); };
  auto dg = [=](double s) { return -2.0 * std::exp(-2.0 * r * s) * (2.0 / (s * s * s) + 2.0 * r / (s * s)); };
  const auto br = lattice_tail_bracket(d, static_cast<double>(lambda_max), static_cast<double>(count), g, dg);
  SpectralEstimate e;
  e.value = partial + br.midpoint();
  e.tail_bound = br.half_width();
  e.truncation_count = static_cast<std::size_t>(count);
  e.r = r;
  return e;
}

/// sum_i 2 / (lambda_i^2 e^{2 r lambda_i}) over all of T^d to within `tol`,
/// doubling the truncation until the certified bracket is narrow enough.
inline SpectralEstimate limit_series(int d, double r, double tol) {
  check_dimension(d);
  if (r < 0.0) throw ArgumentError("limit_series: r must be >= 0");
  if (r == 0.0 && d >= 4) {
    throw DivergenceError("limit_series: sum 2/lambda_i^2 diverges for d >= 4 (W2 decays slower than 1/t)");
  }
  if (!(tol > 0.0)) throw ArgumentError("limit_series: tol must be positive");
  // Work grows like d * Lambda^{3/2}; beyond this the tolerance is refused.
  const std::size_t cap = std::size_t{1} << 20;
  SpectralEstimate e;
  for (std::size_t lam = 64;; lam *= 2) {
    e = limit_series_at(d, r, lam);
    if (e.tail_bound <= tol) return e;
    if (lam >= cap) {
      throw NumericError("limit_series: tolerance not reachable within the truncation budget", e.tail_bound);
    }
  }
}

/// E^mu Xi_r(t) for a stationary start, over the supplied modes:
/// sum_i 2/(lambda_i^2 e^{2 r lambda_i}) (1 - (1 - e^{-lambda_i t})/(lambda_i t)).
inline double expected_xi_stationary(const ModeList& modes, double t, double r) {
  if (!(t > 0.0)) throw ArgumentError("expected_xi_stationary: t must be positive");
  if (r < 0.0) throw ArgumentError("expected_xi_stationary: r must be >= 0");
  std::vector<double> terms(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double lam = modes[i].eigenvalue;
    const double x = lam * t;
    // 1 - (1 - e^{-x})/x, written to stay accurate as x -> 0.
    const double bracket = 1.0 + std::expm1(-x) / x;
    terms[i] = 2.0 / (lam * lam * std::exp(2.0 * r * lam)) * bracket;
  }
  return sum_descending_magnitude(std::move(terms));
}

/// E^mu |psi_i(t)|^2 = (2/lambda)(1 - (1 - e^{-lambda t})/(lambda t)).
inline double expected_psi_squared_stationary(double lambda, double t) {
  const double x = lambda * t;
  return 2.0 / lambda * (1.0 + std::expm1(-x) / x);
}

/// int e^{-2 r s} mu_sp(ds) = sum_i lambda_i^{-2} e^{-2 r lambda_i} over the
/// supplied modes, with the same tail bound convention as limit_series.
inline SpectralEstimate laplace_transform_spectral(const ModeList& modes, double r) {
  if (!(r > 0.0)) throw ArgumentError("laplace_transform_spectral: r must be positive");
  std::vector<double> terms(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double lam = modes[i].eigenvalue;
    terms[i] = 1.0 / (lam * lam * std::exp(2.0 * r * lam));
  }
  SpectralEstimate e;
  e.value = sum_descending_magnitude(std::move(terms));
  e.truncation_count = modes.size();
  e.r = r;
  if (modes.empty() || !detail::is_complete_shell_list(modes)) {
    e.tail_bound = std::numeric_limits<double>::infinity();
    return e;
  }
  const int d = modes.front().dim;
  const double lam = detail::largest_eigenvalue(modes);
  auto g = [=](double s) { return std::exp(-2.0 * r * s) / (s * s); };
  auto dg = [=](double s) { return -std::exp(-2.0 * r * s) * (2.0 / (s * s * s) + 2.0 * r / (s * s)); };
  e.tail_bound = lattice_tail_bracket(d, lam, static_cast<double>(modes.size()), g, dg).upper;
  return e;
}

struct Lambda1Estimate {
  double lambda1 = 0.0;
  double multiplicity = 0.0;
  double residual = 0.0;  // RMS of the log-linear fit
};

/// Fits log v(r) = log(mult / lambda_1^2) - 2 lambda_1 r by least squares to
/// Laplace-transform samples (r, v) taken where the first eigenvalue dominates.
inline Lambda1Estimate estimate_lambda1(std::vector<std::pair<double, double>> samples) {
  std::sort(samples.begin(), samples.end());
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i == 0 || samples[i].first != samples[i - 1].first) ++distinct;
  }
  if (distinct < 3) throw ArgumentError("estimate_lambda1: need at least 3 distinct r values");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].second > 0.0)) throw NumericError("estimate_lambda1: nonpositive transform value", samples[i].second);
    if (i > 0 && samples[i].first > samples[i - 1].first && !(samples[i].second < samples[i - 1].second)) {
      throw NumericError("estimate_lambda1: transform values are not decreasing in r", samples[i].second);
    }
  }
  const double n = static_cast<double>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [r, v] : samples) {
    const double y = std::log(v);
    sx += r; sy += y; sxx += r * r; sxy += r * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss = 0.0;
  for (const auto& [r, v] : samples) {
    const double e = std::log(v) - (intercept + slope * r);
    ss += e * e;
  }
  Lambda1Estimate out;
  out.lambda1 = -0.5 * slope;
  out.multiplicity = std::exp(intercept) * out.lambda1 * out.lambda1;
  out.residual = std::sqrt(ss / n);
  return out;
}

/// Smallest r at which the second eigenvalue's share of the transform falls
/// below `fraction` of the first's.
inline double first_eigenvalue_dominance_r(double lambda1, double mult1, double lambda2, double mult2,
                                           double fraction = 0.01) {
  const double ratio = (mult2 * lambda1 * lambda1) / (fraction * mult1 * lambda2 * lambda2);
  return std::max(0.0, std::log(ratio) / (2.0 * (lambda2 - lambda1)));
}

/// int |grad L^{-1} g|^2 dmu = sum_i c_i^2 / lambda_i for g = sum_i c_i phi_i.
inline double sobolev_energy(std::span<const double> coeffs, const ModeList& modes) {
  if (coeffs.size() != modes.size()) throw ArgumentError("sobolev_energy: misaligned coefficients");
  std::vector<double> terms(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) terms[i] = coeffs[i] * coeffs[i] / modes[i].eigenvalue;
  return sum_descending_magnitude(std::move(terms));
}

}  // namespace diffwass
