#pragma once

// Flat tori T^d = [0, 2pi)^d: points, geodesic distance, and the real
// Fourier eigenbasis of -Laplacian.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "diffwass/errors.hpp"

namespace diffwass {

inline constexpr int kMaxDim = 5;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce an angle into [0, 2pi).
inline double wrap_angle(double x) noexcept {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  // fmod of a tiny negative can round up to exactly 2pi.
  if (y >= kTwoPi) y = 0.0;
  return y;
}

/// Shortest signed representative of an angle difference, in [-pi, pi).
inline double wrap_difference(double dx) noexcept {
  double y = wrap_angle(dx + std::numbers::pi) - std::numbers::pi;
  return y;
}

inline void check_dimension(int d) {
  if (d < 1 || d > kMaxDim) {
    throw ArgumentError("torus dimension must lie in [1, 5], got " + std::to_string(d));
  }
}

/// A point of T^d. Coordinates are kept normalized to [0, 2pi).
class TorusPoint {
 public:
  TorusPoint() = default;
  explicit TorusPoint(int d) : dim_(d) { check_dimension(d); }
  TorusPoint(std::initializer_list<double> coords) : dim_(static_cast<int>(coords.size())) {
    check_dimension(dim_);
    std::size_t j = 0;
    for (double c : coords) coords_[j++] = wrap_angle(c);
  }
  explicit TorusPoint(std::span<const double> coords) : dim_(static_cast<int>(coords.size())) {
    check_dimension(dim_);
    for (std::size_t j = 0; j < coords.size(); ++j) coords_[j] = wrap_angle(coords[j]);
  }

  int dim() const noexcept { return dim_; }
  double operator[](int j) const noexcept { return coords_[static_cast<std::size_t>(j)]; }
  void set(int j, double value) noexcept { coords_[static_cast<std::size_t>(j)] = wrap_angle(value); }
  std::span<const double> coords() const noexcept {
    return {coords_.data(), static_cast<std::size_t>(dim_)};
  }

  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

 private:
  int dim_ = 0;
  std::array<double, kMaxDim> coords_{};
};

/// Riemannian distance on the flat torus.
inline double geodesic_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim()) {
    throw ArgumentError("geodesic_distance: dimension mismatch");
  }
  double s = 0.0;
  for (int j = 0; j < x.dim(); ++j) {
    const double a = std::abs(x[j] - y[j]);
    const double m = std::min(a, kTwoPi - a);
    s += m * m;
  }
  return std::sqrt(s);
}

enum class Parity : std::uint8_t { Cos = 0, Sin = 1 };

inline const char* to_string(Parity p) { return p == Parity::Cos ? "cos" : "sin"; }

/// One real eigenfunction sqrt(2) cos<m,x> or sqrt(2) sin<m,x> of -Delta with
/// eigenvalue |m|^2. `freq` is the canonical representative (first nonzero
/// component positive).
struct SpectralMode {
  int dim = 0;
  std::array<int, kMaxDim> freq{};
  Parity parity = Parity::Cos;
  double eigenvalue = 0.0;
  std::size_t index = 0;

  std::span<const int> frequency() const noexcept {
    return {freq.data(), static_cast<std::size_t>(dim)};
  }
};

using ModeList = std::vector<SpectralMode>;

inline bool is_canonical(std::span<const int> m) noexcept {
  for (int c : m) {
    if (c != 0) return c > 0;
  }
  return false;
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

/// r_d(n) = #{m in Z^d : |m|^2 = n} for n = 0..max_norm, by convolving the
/// one-dimensional indicator of perfect squares d times.
inline std::vector<std::uint64_t> lattice_shell_counts(int d, std::size_t max_norm) {
  check_dimension(d);
  std::vector<std::uint64_t> one(max_norm + 1, 0);
  for (std::size_t k = 0; k * k <= max_norm; ++k) one[k * k] += (k == 0 ? 1 : 2);
  std::vector<std::uint64_t> acc = one;
  for (int j = 1; j < d; ++j) {
    std::vector<std::uint64_t> next(max_norm + 1, 0);
    for (std::size_t k = 0; k * k <= max_norm; ++k) {
      const std::uint64_t w = (k == 0 ? 1 : 2);
      for (std::size_t n = k * k; n <= max_norm; ++n) next[n] += w * acc[n - k * k];
    }
    acc = std::move(next);
  }
  return acc;
}

/// Number of nonconstant eigenfunctions with eigenvalue <= lambda_max; equals
/// the number of nonzero lattice points in the ball of radius sqrt(lambda_max).
inline std::size_t count_modes(int d, double lambda_max) {
  const auto n = static_cast<std::size_t>(std::floor(lambda_max + 1e-9));
  const auto shells = lattice_shell_counts(d, n);
  std::uint64_t total = 0;
  for (std::size_t k = 1; k < shells.size(); ++k) total += shells[k];
  return static_cast<std::size_t>(total);
}

inline constexpr std::size_t kDefaultModeBudget = 20'000'000;

namespace detail {

template <class F>
void for_each_lattice_point(int d, int radius_sq, std::array<int, kMaxDim>& m, int axis,
                            int used, F&& visit) {
  if (axis == d) {
    visit(m, used);
    return;
  }
  const int remaining = radius_sq - used;
  const int kmax = static_cast<int>(std::floor(std::sqrt(static_cast<double>(remaining)) + 1e-9));
  for (int k = -kmax; k <= kmax; ++k) {
    if (used + k * k > radius_sq) continue;
    m[static_cast<std::size_t>(axis)] = k;
    for_each_lattice_point(d, radius_sq, m, axis + 1, used + k * k, visit);
  }
  m[static_cast<std::size_t>(axis)] = 0;
}

}  // namespace detail

/// All real eigenfunctions with 0 < lambda <= lambda_max, sorted by
/// (lambda, canonical frequency lexicographically, cos before sin), with
/// `index` set to the 1-based rank in that order.
inline ModeList enumerate_modes(int d, double lambda_max,
                                std::size_t budget = kDefaultModeBudget) {
  check_dimension(d);
  if (!(lambda_max >= 1.0)) throw ArgumentError("enumerate_modes: lambda_max must be >= 1");
  const double ball = unit_ball_volume(d) * std::pow(std::sqrt(lambda_max) + 0.5 * std::sqrt(d), d);
  if (ball > 4.0 * static_cast<double>(budget)) {
    throw CapacityError("enumerate_modes: estimated mode count exceeds budget",
                        static_cast<std::size_t>(unit_ball_volume(d) * std::pow(lambda_max, 0.5 * d)));
  }
  const std::size_t count = count_modes(d, lambda_max);
  if (count > budget) {
    throw CapacityError("enumerate_modes: " + std::to_string(count) + " modes exceed budget " +
                            std::to_string(budget),
                        count);
  }
  const int radius_sq = static_cast<int>(std::floor(lambda_max + 1e-9));
  ModeList modes;
  modes.reserve(count);
  std::array<int, kMaxDim> m{};
  detail::for_each_lattice_point(d, radius_sq, m, 0, 0, [&](const std::array<int, kMaxDim>& v, int norm) {
    if (norm == 0) return;
    if (!is_canonical({v.data(), static_cast<std::size_t>(d)})) return;
    for (Parity p : {Parity::Cos, Parity::Sin}) {
      SpectralMode mode;
      mode.dim = d;
      mode.freq = v;
      mode.parity = p;
      mode.eigenvalue = static_cast<double>(norm);
      modes.push_back(mode);
    }
  });
  std::sort(modes.begin(), modes.end(), [d](const SpectralMode& a, const SpectralMode& b) {
    if (a.eigenvalue != b.eigenvalue) return a.eigenvalue < b.eigenvalue;
    for (int j = 0; j < d; ++j) {
      if (a.freq[static_cast<std::size_t>(j)] != b.freq[static_cast<std::size_t>(j)]) {
        return a.freq[static_cast<std::size_t>(j)] < b.freq[static_cast<std::size_t>(j)];
      }
    }
    return a.parity < b.parity;
  });
  for (std::size_t i = 0; i < modes.size(); ++i) modes[i].index = i + 1;
  return modes;
}

inline double phase(const SpectralMode& mode, std::span<const double> x) noexcept {
  double s = 0.0;
  for (int j = 0; j < mode.dim; ++j) s += mode.freq[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
  return s;
}

/// Value of the unit-norm eigenfunction at x.
inline double eigenfunction_eval(const SpectralMode& mode, const TorusPoint& x) {
  if (mode.dim != x.dim()) throw ArgumentError("eigenfunction_eval: dimension mismatch");
  const double ph = phase(mode, x.coords());
  return std::numbers::sqrt2 * (mode.parity == Parity::Cos ? std::cos(ph) : std::sin(ph));
}

/// Gradient of the eigenfunction at x, written into `grad` (length dim).
inline void eigenfunction_gradient(const SpectralMode& mode, std::span<const double> x,
                                   std::span<double> grad) noexcept {
  const double ph = phase(mode, x);
  const double g = std::numbers::sqrt2 * (mode.parity == Parity::Cos ? -std::sin(ph) : std::cos(ph));
  for (int j = 0; j < mode.dim; ++j) grad[static_cast<std::size_t>(j)] = g * mode.freq[static_cast<std::size_t>(j)];
}

/// Largest violation of kappa^{-1} i^{2/d} <= lambda_i <= kappa i^{2/d} over
/// the list: max_i max(lambda_i / i^{2/d}, i^{2/d} / lambda_i).
inline double weyl_bound_estimate(const ModeList& modes) {
  if (modes.empty()) throw ArgumentError("weyl_bound_estimate: empty mode list");
  if (modes.size() < 100) throw ArgumentError("weyl_bound_estimate: need at least 100 modes");
  const int d = modes.front().dim;
  double kappa = 1.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i > 0 && modes[i].eigenvalue < modes[i - 1].eigenvalue) {
      throw ArgumentError("weyl_bound_estimate: eigenvalues are not sorted increasingly");
    }
    const double growth = std::pow(static_cast<double>(i + 1), 2.0 / d);
    const double lam = modes[i].eigenvalue;
    if (!(lam > 0.0)) throw ArgumentError("weyl_bound_estimate: nonpositive eigenvalue");
    kappa = std::max({kappa, lam / growth, growth / lam});
  }
  return kappa;
}

/// CSV with columns index, freq_1..freq_d, parity, lambda.
inline void write_modes_csv(std::ostream& os, const ModeList& modes) {
  const int d = modes.empty() ? 0 : modes.front().dim;
  os << "index";
  for (int j = 1; j <= d; ++j) os << ",freq_" << j;
  os << ",parity,lambda\n";
  for (const auto& m : modes) {
    os << m.index;
    for (int j = 0; j < d; ++j) os << ',' << m.freq[static_cast<std::size_t>(j)];
    os << ',' << to_string(m.parity) << ',' << m.eigenvalue << '\n';
  }
}

}  // namespace diffwass
