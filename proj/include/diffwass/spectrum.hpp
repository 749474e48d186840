#pragma once

// Path functionals psi_i(t) = t^{-1/2} int_0^t phi_i(X_s) ds and the Fourier
// description of the smoothed empirical density f_{t,r}.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "diffwass/diffusion.hpp"
#include "diffwass/errors.hpp"
#include "diffwass/summation.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

struct EmpiricalSpectrum {
  std::vector<double> psi;
  double horizon = 0.0;
  std::shared_ptr<const ModeList> modes;

  std::size_t size() const noexcept { return psi.size(); }
};

/// Evaluates exp(i <m, x>) for every distinct canonical frequency of a mode
/// list at one point, from per-axis power tables.
class FourierEvaluator {
 public:
  explicit FourierEvaluator(const ModeList& modes) {
    dim_ = modes.empty() ? 1 : modes.front().dim;
    std::map<std::array<int, kMaxDim>, std::size_t> seen;
    slot_.reserve(modes.size());
    for (const auto& m : modes) {
      if (m.dim != dim_) throw ArgumentError("FourierEvaluator: mixed dimensions in mode list");
      auto [it, inserted] = seen.try_emplace(m.freq, freqs_.size());
      if (inserted) freqs_.push_back(m.freq);
      slot_.push_back(it->second);
      is_sin_.push_back(m.parity == Parity::Sin);
      for (int j = 0; j < dim_; ++j) max_freq_ = std::max(max_freq_, std::abs(m.freq[static_cast<std::size_t>(j)]));
    }
    values_.resize(freqs_.size());
    table_.resize(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(max_freq_ + 1));
  }

  int dim() const noexcept { return dim_; }
  std::size_t mode_count() const noexcept { return slot_.size(); }

  /// Computes exp(i <m,x>) for all distinct frequencies.
  void evaluate(std::span<const double> x) {
    const auto stride = static_cast<std::size_t>(max_freq_ + 1);
    for (int j = 0; j < dim_; ++j) {
      std::complex<double>* row = table_.data() + static_cast<std::size_t>(j) * stride;
      const std::complex<double> e(std::cos(x[static_cast<std::size_t>(j)]), std::sin(x[static_cast<std::size_t>(j)]));
      row[0] = 1.0;
      // Recurrence with periodic re-anchoring keeps the phase error at ~1e-15.
      for (std::size_t k = 1; k < stride; ++k) {
        row[k] = (k % 32 == 0) ? std::polar(1.0, static_cast<double>(k) * x[static_cast<std::size_t>(j)]) : row[k - 1] * e;
      }
    }
    for (std::size_t f = 0; f < freqs_.size(); ++f) {
      std::complex<double> z = 1.0;
      for (int j = 0; j < dim_; ++j) {
        const int mj = freqs_[f][static_cast<std::size_t>(j)];
        const std::complex<double> t = table_[static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(std::abs(mj))];
        z *= (mj >= 0) ? t : std::conj(t);
      }
      values_[f] = z;
    }
  }

  /// phi_i at the last evaluated point.
  double mode_value(std::size_t i) const noexcept {
    const auto& z = values_[slot_[i]];
    return std::numbers::sqrt2 * (is_sin_[i] ? z.imag() : z.real());
  }
  /// s with grad phi_i = s * m_i at the last evaluated point.
  double mode_slope(std::size_t i) const noexcept {
    const auto& z = values_[slot_[i]];
    return std::numbers::sqrt2 * (is_sin_[i] ? z.real() : -z.imag());
  }

 private:
  int dim_ = 1;
  int max_freq_ = 0;
  std::vector<std::array<int, kMaxDim>> freqs_;
  std::vector<std::size_t> slot_;
  std::vector<bool> is_sin_;
  std::vector<std::complex<double>> values_;
  std::vector<std::complex<double>> table_;
};

/// Streaming trapezoid quadrature of int_0^t phi_i(X_s) ds for a mode list.
class PsiAccumulator {
 public:
  PsiAccumulator(std::shared_ptr<const ModeList> modes, const TimeGrid& grid)
      : modes_(std::move(modes)), eval_(*modes_), grid_(grid), sums_(modes_->size()) {}

  void operator()(std::size_t k, double, std::span<const double> x) {
    if (modes_->empty()) return;
    const double w = grid_.trapezoid_weight(k);
    eval_.evaluate(x);
    for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += w * eval_.mode_value(i);
  }

  EmpiricalSpectrum finish() const {
    EmpiricalSpectrum s;
    s.horizon = grid_.t_end;
    s.modes = modes_;
    s.psi.resize(sums_.size());
    const double inv = 1.0 / std::sqrt(grid_.t_end);
    for (std::size_t i = 0; i < sums_.size(); ++i) s.psi[i] = sums_[i].value() * inv;
    return s;
  }

 private:
  std::shared_ptr<const ModeList> modes_;
  FourierEvaluator eval_;
  TimeGrid grid_;
  std::vector<CompensatedSum> sums_;
};

inline EmpiricalSpectrum psi_functionals(const SamplePath& path, std::shared_ptr<const ModeList> modes) {
  if (path.size() < 2) throw ArgumentError("psi_functionals: path needs at least two nodes");
  PsiAccumulator acc(std::move(modes), path.grid());
  for (std::size_t k = 0; k < path.size(); ++k) acc(k, path.times[k], path.point(k));
  return acc.finish();
}

inline EmpiricalSpectrum psi_functionals(const SamplePath& path, const ModeList& modes) {
  return psi_functionals(path, std::make_shared<const ModeList>(modes));
}

/// Fourier coefficients of f_{t,r} - 1 on the spectrum's modes:
/// e^{-lambda_i r} psi_i(t) / sqrt(t).
inline std::vector<double> smoothed_density_coeffs(const EmpiricalSpectrum& spectrum, double r) {
  if (r < 0.0) throw ArgumentError("smoothed_density_coeffs: r must be >= 0");
  if (!spectrum.modes || spectrum.modes->size() != spectrum.psi.size()) {
    throw ArgumentError("smoothed_density_coeffs: spectrum is not aligned with its modes");
  }
  std::vector<double> c(spectrum.psi.size());
  const double inv = 1.0 / std::sqrt(spectrum.horizon);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = std::exp(-(*spectrum.modes)[i].eigenvalue * r) * spectrum.psi[i] * inv;
  }
  return c;
}

/// Values of sum_i c_i phi_i at the points x_g = (g_1..g_d) * 2 pi / n + offset
/// of a regular grid, row-major. offset = 0.5 h puts the points at cell centers.
inline std::vector<double> evaluate_series_on_grid(std::span<const double> coeffs, const ModeList& modes,
                                                   std::size_t n, double offset_fraction = 0.0) {
  if (coeffs.size() != modes.size()) throw ArgumentError("evaluate_series_on_grid: misaligned coefficients");
  const int d = modes.empty() ? 1 : modes.front().dim;
  const std::size_t cells = [&] { std::size_t c = 1; for (int j = 0; j < d; ++j) c *= n; return c; }();
  std::vector<double> out(cells, 0.0);
  if (modes.empty()) return out;
  FourierEvaluator eval(modes);
  const double h = kTwoPi / static_cast<double>(n);
  std::array<double, kMaxDim> x{};
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rem = c;
    for (int j = d - 1; j >= 0; --j) {
      x[static_cast<std::size_t>(j)] = (static_cast<double>(rem % n) + offset_fraction) * h;
      rem /= n;
    }
    eval.evaluate({x.data(), static_cast<std::size_t>(d)});
    double s = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i) s += coeffs[i] * eval.mode_value(i);
    out[c] = s;
  }
  return out;
}

/// max over a probe grid of |f_{t,r} - 1|, a lower estimate of the sup norm.
inline double sup_deviation(std::span<const double> coeffs, const ModeList& modes, std::size_t probe_n) {
  const int d = modes.empty() ? 1 : modes.front().dim;
  if (d <= 2 && probe_n < 64) throw ArgumentError("sup_deviation: probe grid needs >= 64 points per axis for d <= 2");
  const auto vals = evaluate_series_on_grid(coeffs, modes, probe_n);
  double m = 0.0;
  for (double v : vals) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace diffwass
