#pragma once

// Probability measures on the regular periodic grid of T^d: cell (i_1..i_d)
// covers prod [i_j h, (i_j + 1) h) with h = 2 pi / grid_n and its atom sits at
// the cell center. Storage is row-major (last axis fastest).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "diffwass/diffusion.hpp"
#include "diffwass/errors.hpp"
#include "diffwass/heat_kernel.hpp"
#include "diffwass/summation.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

struct DiscreteMeasure {
  int dim = 1;
  std::size_t grid_n = 0;
  std::vector<double> weights;

  static std::size_t cell_count(int d, std::size_t n) {
    std::size_t c = 1;
    for (int j = 0; j < d; ++j) c *= n;
    return c;
  }
  static DiscreteMeasure zeros(int d, std::size_t n) {
    check_dimension(d);
    if (n == 0) throw ArgumentError("DiscreteMeasure: grid_n must be positive");
    return {d, n, std::vector<double>(cell_count(d, n), 0.0)};
  }
  static DiscreteMeasure uniform(int d, std::size_t n) {
    auto m = zeros(d, n);
    std::fill(m.weights.begin(), m.weights.end(), 1.0 / static_cast<double>(m.weights.size()));
    return m;
  }

  double spacing() const noexcept { return kTwoPi / static_cast<double>(grid_n); }
  std::size_t size() const noexcept { return weights.size(); }
  double total_mass() const { return compensated_sum(weights); }

  std::size_t cell_of(std::span<const double> x) const noexcept {
    const double inv_h = static_cast<double>(grid_n) / kTwoPi;
    std::size_t idx = 0;
    for (int j = 0; j < dim; ++j) {
      auto i = static_cast<std::size_t>(x[static_cast<std::size_t>(j)] * inv_h);
      if (i >= grid_n) i = grid_n - 1;
      idx = idx * grid_n + i;
    }
    return idx;
  }
  /// Multi-index of a flat cell index.
  std::array<std::size_t, kMaxDim> unravel(std::size_t cell) const noexcept {
    std::array<std::size_t, kMaxDim> out{};
    for (int j = dim - 1; j >= 0; --j) {
      out[static_cast<std::size_t>(j)] = cell % grid_n;
      cell /= grid_n;
    }
    return out;
  }
  TorusPoint center(std::size_t cell) const {
    const auto idx = unravel(cell);
    std::array<double, kMaxDim> c{};
    for (int j = 0; j < dim; ++j) c[static_cast<std::size_t>(j)] = (static_cast<double>(idx[static_cast<std::size_t>(j)]) + 0.5) * spacing();
    return TorusPoint(std::span<const double>(c.data(), static_cast<std::size_t>(dim)));
  }

  void normalize() {
    const double m = total_mass();
    if (!(m > 0.0)) throw ArgumentError("DiscreteMeasure: cannot normalize zero mass");
    for (double& w : weights) w /= m;
  }
};

inline void require_same_grid(const DiscreteMeasure& a, const DiscreteMeasure& b, const char* who) {
  if (a.dim != b.dim || a.grid_n != b.grid_n) {
    throw ArgumentError(std::string(who) + ": measures live on different grids");
  }
}

/// Grid samples of the one-dimensional heat kernel p_r(k h) for k = 0..n-1,
/// normalized to total weight one.
inline std::vector<double> sampled_heat_kernel(std::size_t n, double r) {
  std::vector<double> k(n);
  const double h = kTwoPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = heat_kernel_1d(h * static_cast<double>(i), r);
  const double s = compensated_sum(k);
  for (double& v : k) v /= s;
  return k;
}

/// Circular convolution of every axis line with a symmetric 1-D kernel
/// (kernel[k] is the weight of offset +-k). Offsets whose weight is below
/// 1e-18 of the central weight are skipped.
inline void convolve_axes(DiscreteMeasure& m, std::span<const double> kernel) {
  const std::size_t n = m.grid_n;
  std::size_t support = n / 2;
  while (support > 0 && kernel[support] < 1e-18 * kernel[0]) --support;
  // Offset n/2 is its own mirror image when n is even.
  const bool self_mirror = (n % 2 == 0) && support == n / 2;
  std::vector<double> padded(n + 2 * support), out(n);
  std::size_t stride = 1;
  for (int axis = m.dim - 1; axis >= 0; --axis) {
    const std::size_t block = stride * n;
    for (std::size_t base = 0; base < m.weights.size(); base += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        for (std::size_t i = 0; i < n + 2 * support; ++i) {
          const std::size_t src = (i + n * (support / n + 1) - support) % n;
          padded[i] = m.weights[base + inner + src * stride];
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double* c = padded.data() + i + support;
          double s = kernel[0] * c[0];
          const std::size_t last = self_mirror ? support - 1 : support;
          for (std::size_t k = 1; k <= last; ++k) s += kernel[k] * (c[k] + c[-static_cast<std::ptrdiff_t>(k)]);
          if (self_mirror) s += kernel[support] * c[support];
          out[i] = s;
        }
        for (std::size_t i = 0; i < n; ++i) m.weights[base + inner + i * stride] = out[i];
      }
    }
    stride *= n;
  }
}

/// Applies the grid version of P_r: separable circular convolution with the
/// sampled heat kernel. Mass is preserved.
inline void apply_heat_semigroup(DiscreteMeasure& m, double r) {
  if (r <= 0.0) return;
  const auto kernel = sampled_heat_kernel(m.grid_n, r);
  convolve_axes(m, kernel);
}

/// Accumulates trapezoid-weighted path nodes into grid cells.
class OccupationBinner {
 public:
  OccupationBinner(int d, std::size_t grid_n, const TimeGrid& grid)
      : measure_(DiscreteMeasure::zeros(d, grid_n)), grid_(grid) {}
  void operator()(std::size_t k, double, std::span<const double> x) {
    measure_.weights[measure_.cell_of(x)] += grid_.trapezoid_weight(k);
  }
  /// mu_t (r = 0) or mu_t P_r on the grid.
  DiscreteMeasure finish(double r = 0.0) const {
    DiscreteMeasure m = measure_;
    for (double& w : m.weights) w /= grid_.t_end;
    m.normalize();
    apply_heat_semigroup(m, r);
    return m;
  }

 private:
  DiscreteMeasure measure_;
  TimeGrid grid_;
};

/// mu_t (r = 0) or mu_{t,r} = mu_t P_r discretized on the grid.
inline DiscreteMeasure empirical_measure_grid(const SamplePath& path, std::size_t grid_n, double r) {
  if (grid_n < 4) throw ArgumentError("empirical_measure_grid: grid_n must be >= 4");
  if (r < 0.0) throw ArgumentError("empirical_measure_grid: r must be >= 0");
  if (path.size() < 2) throw ArgumentError("empirical_measure_grid: path needs at least two nodes");
  const TimeGrid g = path.grid();
  OccupationBinner binner(path.dim, grid_n, g);
  for (std::size_t k = 0; k < path.size(); ++k) binner(k, path.times[k], path.point(k));
  return binner.finish(r);
}

/// mu_N = (1/N) sum_i delta_{X(t_i)}, t_i = (i-1) t / N, each t_i snapped to
/// the nearest node of the path grid.
inline DiscreteMeasure time_sampled_measure(const SamplePath& path, std::size_t n_samples,
                                            std::size_t grid_n) {
  if (n_samples == 0) throw ArgumentError("time_sampled_measure: N must be >= 1");
  if (path.size() < 2) throw ArgumentError("time_sampled_measure: path needs at least two nodes");
  const std::size_t steps = path.size() - 1;
  if (n_samples > steps) {
    throw ArgumentError("time_sampled_measure: N = " + std::to_string(n_samples) +
                        " exceeds the path resolution (" + std::to_string(steps) + " steps)");
  }
  const double t = path.horizon();
  auto m = DiscreteMeasure::zeros(path.dim, grid_n);
  const double w = 1.0 / static_cast<double>(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double ti = t * static_cast<double>(i) / static_cast<double>(n_samples);
    auto k = static_cast<std::size_t>(std::llround(ti / path.dt));
    k = std::min(k, steps);
    m.weights[m.cell_of(path.point(k))] += w;
  }
  return m;
}

/// CSV with columns i_1..i_d, weight.
inline void write_measure_csv(std::ostream& os, const DiscreteMeasure& m) {
  for (int j = 1; j <= m.dim; ++j) os << "i_" << j << ',';
  os << "weight\n";
  os.precision(17);
  for (std::size_t c = 0; c < m.size(); ++c) {
    const auto idx = m.unravel(c);
    for (int j = 0; j < m.dim; ++j) os << idx[static_cast<std::size_t>(j)] << ',';
    os << m.weights[c] << '\n';
  }
}

/// Flat binary layout: uint32 d, uint32 grid_n (little endian), then
/// n^d float64 weights row-major.
inline void write_measure_binary(std::ostream& os, const DiscreteMeasure& m) {
  const auto d = static_cast<std::uint32_t>(m.dim);
  const auto n = static_cast<std::uint32_t>(m.grid_n);
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(m.weights.data()),
           static_cast<std::streamsize>(m.weights.size() * sizeof(double)));
  if (!os) throw IoError("write_measure_binary: write failed");
}

inline DiscreteMeasure read_measure_binary(std::istream& is) {
  std::uint32_t d = 0, n = 0;
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!is) throw IoError("read_measure_binary: truncated header");
  auto m = DiscreteMeasure::zeros(static_cast<int>(d), n);
  is.read(reinterpret_cast<char*>(m.weights.data()), static_cast<std::streamsize>(m.weights.size() * sizeof(double)));
  if (!is) throw IoError("read_measure_binary: truncated payload");
  return m;
}

}  // namespace diffwass
