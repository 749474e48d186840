#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/lattice_tail.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/parallel.hpp"
#include "diffwass/rng.hpp"
#include "diffwass/spectral_functionals.hpp"
#include "diffwass/summation.hpp"
#include "diffwass/torus.hpp"
#include "diffwass/transport/circle.hpp"

namespace diffwass {

// ---------------------------------------------------------------------------
// Sampling the limit law  Xi_r = sum_k 2 xi_k^2 / (lambda_k^2 e^{2 lambda_k r})

struct LimitSample {
  int dim = 1;
  double r = 0.0;
  std::uint64_t seed = 0;
  std::size_t truncation_count = 0;  // K, number of modes drawn explicitly
  std::size_t lambda_cut = 0;        // every mode with lambda <= lambda_cut is drawn
  double tail_mean = 0.0;
  double tail_mean_error = 0.0;      // certified bound on |tail_mean - exact tail|
  double tail_variance_bound = 0.0;  // certified bound on the variance left out
  double series_mean = 0.0;          // analytic mean of the drawn part plus tail_mean
  double series_variance = 0.0;      // analytic variance of the drawn part
  std::vector<double> values;

  double sample_mean() const { return compensated_sum(values) / static_cast<double>(values.size()); }
  double sample_variance() const {
    const double m = sample_mean();
    CompensatedSum s;
    for (double v : values) s += (v - m) * (v - m);
    return s.value() / static_cast<double>(values.size() - 1);
  }
};

struct LimitSampleOptions {
  double tol = 1e-2;         // tail standard deviation allowed
  std::size_t threads = 1;
  bool zero_noise = false;   // every xi_k = 0, so every draw equals tail_mean
};

inline void to_json(nlohmann::json& j, const LimitSample& s) {
  j = nlohmann::json{{"dim", s.dim},
                     {"r", s.r},
                     {"K", s.truncation_count},
                     {"lambda_cut", s.lambda_cut},
                     {"tail_mean", s.tail_mean},
                     {"tail_mean_error", s.tail_mean_error},
                     {"tail_variance_bound", s.tail_variance_bound},
                     {"series_mean", s.series_mean},
                     {"series_variance", s.series_variance},
                     {"seed", s.seed},
                     {"n", s.values.size()},
                     {"format", "float64-le"}};
}

namespace detail {

inline constexpr std::size_t kLimitShard = std::size_t{1} << 14;

/// Smallest power-of-two shell cut whose omitted modes carry variance < tol^2.
inline std::pair<std::size_t, double> variance_cut(int d, double r, double tol) {
  auto g = [=](double s) { return 8.0 * std::exp(-4.0 * r * s) / std::pow(s, 4); };
  auto dg = [=](double s) { return -8.0 * std::exp(-4.0 * r * s) * (4.0 / std::pow(s, 5) + 4.0 * r / std::pow(s, 4)); };
  for (std::size_t lam = 4; lam <= (std::size_t{1} << 16); lam *= 2) {
    const double count = static_cast<double>(count_modes(d, static_cast<double>(lam)));
    const double v = lattice_tail_bracket(d, static_cast<double>(lam), count, g, dg).upper;
    if (v < tol * tol) return {lam, v};
  }
  throw NumericError("sample_limit_law: tail variance tolerance not reachable", tol);
}

}  // namespace detail

/// n_samples i.i.d. draws of Xi_r on T^d. Modes are grouped by shell, so a
/// shell of multiplicity M contributes c * chi^2_M with c = 2/(lambda^2 e^{2 r lambda}).
/// Shards of fixed size get seeds derive_seed(seed, shard), which makes the
/// output independent of the thread count.
inline LimitSample sample_limit_law(int d, double r, std::size_t n_samples, std::uint64_t seed,
                                    const LimitSampleOptions& opt = {}) {
  check_dimension(d);
  if (r < 0.0) throw ArgumentError("sample_limit_law: r must be >= 0");
  if (r == 0.0 && d >= 4) throw DivergenceError("sample_limit_law: Xi_0 is infinite for d >= 4");
  if (n_samples == 0) throw ArgumentError("sample_limit_law: n_samples must be positive");
  if (!(opt.tol > 0.0)) throw ArgumentError("sample_limit_law: tol must be positive");

  LimitSample out;
  out.dim = d;
  out.r = r;
  out.seed = seed;
  const auto [cut, var_tail] = detail::variance_cut(d, r, opt.tol);
  out.lambda_cut = cut;
  out.tail_variance_bound = var_tail;

  const auto shells = lattice_shell_counts(d, cut);
  std::vector<double> coef;
  std::vector<double> mult;
  std::vector<double> mean_terms, var_terms;
  for (std::size_t n = 1; n <= cut; ++n) {
    if (shells[n] == 0) continue;
    const double lam = static_cast<double>(n);
    const double c = 2.0 / (lam * lam * std::exp(2.0 * r * lam));
    const auto m = static_cast<double>(shells[n]);
    coef.push_back(c);
    mult.push_back(m);
    mean_terms.push_back(m * c);
    var_terms.push_back(2.0 * m * c * c);
    out.truncation_count += shells[n];
  }
  const double partial = sum_descending_magnitude(mean_terms);
  const auto full = limit_series(d, r, 1e-5 * std::max(1.0, partial));
  out.tail_mean = std::max(0.0, full.value - partial);
  out.tail_mean_error = full.tail_bound;
  out.series_mean = partial + out.tail_mean;
  out.series_variance = sum_descending_magnitude(var_terms);

  out.values.assign(n_samples, out.tail_mean);
  if (opt.zero_noise) return out;

  const std::size_t shards = (n_samples + detail::kLimitShard - 1) / detail::kLimitShard;
  parallel_for_index(shards, opt.threads, [&](std::size_t s) {
    Engine eng(derive_seed(seed, s));
    std::vector<std::gamma_distribution<double>> chi2;
    chi2.reserve(mult.size());
    for (double m : mult) chi2.emplace_back(0.5 * m, 2.0);
    const std::size_t lo = s * detail::kLimitShard;
    const std::size_t hi = std::min(n_samples, lo + detail::kLimitShard);
    for (std::size_t i = lo; i < hi; ++i) {
      // Largest coefficients last keeps the running sum accurate.
      double v = 0.0;
      for (std::size_t k = coef.size(); k-- > 0;) v += coef[k] * chi2[k](eng);
      out.values[i] = v + out.tail_mean;
    }
  });
  return out;
}

/// Writes the draws to `path` as raw float64 and the metadata to `path`.json.
inline void write_limit_sample(const std::filesystem::path& path, const LimitSample& s) {
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("write_limit_sample: cannot open " + path.string());
    os.write(reinterpret_cast<const char*>(s.values.data()), static_cast<std::streamsize>(s.values.size() * sizeof(double)));
    if (!os) throw IoError("write_limit_sample: write failed for " + path.string());
  }
  std::ofstream js(path.string() + ".json", std::ios::trunc);
  if (!js) throw IoError("write_limit_sample: cannot open sidecar for " + path.string());
  js << nlohmann::json(s).dump(2) << '\n';
}

inline LimitSample read_limit_sample(const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("read_limit_sample: missing sidecar for " + path.string());
  nlohmann::json j;
  try {
    js >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("read_limit_sample: bad sidecar: ") + e.what());
  }
  LimitSample s;
  s.dim = j.at("dim").get<int>();
  s.r = j.at("r").get<double>();
  s.truncation_count = j.at("K").get<std::size_t>();
  s.lambda_cut = j.at("lambda_cut").get<std::size_t>();
  s.tail_mean = j.at("tail_mean").get<double>();
  s.tail_mean_error = j.at("tail_mean_error").get<double>();
  s.tail_variance_bound = j.at("tail_variance_bound").get<double>();
  s.series_mean = j.at("series_mean").get<double>();
  s.series_variance = j.at("series_variance").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto n = j.at("n").get<std::size_t>();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_limit_sample: cannot open " + path.string());
  s.values.resize(n);
  is.read(reinterpret_cast<char*>(s.values.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw IoError("read_limit_sample: truncated payload in " + path.string());
  return s;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Two-sample statistic sup_x |F_A(x) - F_B(x)|.
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_distance: samples must be nonempty");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return std::min(1.0, best);
}

/// Asymptotic critical value of the two-sample statistic at level alpha.
inline double ks_critical_value(std::size_t na, std::size_t nb, double alpha) {
  if (na == 0 || nb == 0 || !(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("ks_critical_value: bad arguments");
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double a = static_cast<double>(na), b = static_cast<double>(nb);
  return c * std::sqrt((a + b) / (a * b));
}

// ---------------------------------------------------------------------------
// Rate fits

enum class RateModel { PurePower, PowerLog };

inline const char* to_string(RateModel m) { return m == RateModel::PurePower ? "pure_power" : "power_log"; }

/// Pure power: log v = intercept + slope log t by least squares.
/// Power-log: log(v t / log t) = intercept with slope fixed at -1.
/// `residual` is the RMS of the log residuals, `max_deviation` the largest.
struct RateFit {
  RateModel model = RateModel::PurePower;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  double max_deviation = 0.0;
  std::size_t n_points = 0;
};

inline void to_json(nlohmann::json& j, const RateFit& f) {
  j = nlohmann::json{{"model", to_string(f.model)},
                     {"slope", f.slope},
                     {"intercept", f.intercept},
                     {"residual", f.residual},
                     {"max_deviation", f.max_deviation},
                     {"n_points", f.n_points}};
}

inline RateFit rate_fit(std::span<const std::pair<double, double>> points, RateModel model) {
  std::vector<double> ts;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0)) throw ArgumentError("rate_fit: times must be positive");
    if (!(v > 0.0)) throw ArgumentError("rate_fit: values must be positive");
    if (model == RateModel::PowerLog && !(t > 1.0)) throw ArgumentError("rate_fit: power-log model needs t > 1");
    ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  if (std::unique(ts.begin(), ts.end()) - ts.begin() < 3) throw ArgumentError("rate_fit: need at least 3 distinct t");

  const auto n = static_cast<double>(points.size());
  RateFit fit;
  fit.model = model;
  fit.n_points = points.size();
  std::vector<double> res;
  if (model == RateModel::PurePower) {
    double sx = 0, sy = 0;
    for (const auto& [t, v] : points) { sx += std::log(t); sy += std::log(v); }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [t, v] : points) {
      sxx += (std::log(t) - mx) * (std::log(t) - mx);
      sxy += (std::log(t) - mx) * (std::log(v) - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (const auto& [t, v] : points) res.push_back(std::log(v) - fit.intercept - fit.slope * std::log(t));
  } else {
    fit.slope = -1.0;
    double s = 0;
    for (const auto& [t, v] : points) s += std::log(v * t / std::log(t));
    fit.intercept = s / n;
    for (const auto& [t, v] : points) res.push_back(std::log(v * t / std::log(t)) - fit.intercept);
  }
  double ss = 0;
  for (double e : res) {
    ss += e * e;
    fit.max_deviation = std::max(fit.max_deviation, std::abs(e));
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

// ---------------------------------------------------------------------------
// Rate function on the circle:  I(r) = inf { mu(|grad sqrt f|^2) : W2(f mu, mu)^2 >= r }

/// mu(|grad sqrt f|^2) for a density f (mean 1) sampled at the n cell centers.
inline double fisher_information_grid(std::span<const double> f) {
  const std::size_t n = f.size();
  if (n < 4) throw ArgumentError("fisher_information_grid: need at least 4 cells");
  const double h = kTwoPi / static_cast<double>(n);
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::sqrt(std::max(0.0, f[(i + 1) % n])) - std::sqrt(std::max(0.0, f[i]));
    s += d * d;
  }
  return s.value() / (h * h * static_cast<double>(n));
}

/// W2(f mu, mu)^2 on the n-cell grid, f a density with mean 1.
inline double w2_squared_to_uniform(std::span<const double> f) {
  auto nu = DiscreteMeasure::zeros(1, f.size());
  std::copy(f.begin(), f.end(), nu.weights.begin());
  nu.normalize();
  const double w = w2_circle_exact(nu, DiscreteMeasure::uniform(1, f.size())).value;
  return w * w;
}

/// Largest attainable W2(nu, mu)^2 on the grid: a point mass in one cell.
inline double rate_function_r0(std::size_t grid_n) {
  std::vector<double> f(grid_n, 0.0);
  f[0] = static_cast<double>(grid_n);
  return w2_squared_to_uniform(f);
}

struct RateSolverOptions {
  std::size_t max_outer = 60;
  std::size_t max_inner = 300;
  double tolerance = 1e-7;  // allowed |W2^2 - r_target| at convergence
  double penalty = 50.0;
};

struct RateFunctionResult {
  double r_target = 0.0;
  double value = 0.0;     // discrete Fisher information of the returned density
  double achieved = 0.0;  // W2(f mu, mu)^2 of the returned density
  double residual = 0.0;  // |achieved - r_target|
  double multiplier = 0.0;
  std::size_t iterations = 0;
  std::vector<double> density;  // mean 1 over the grid
};

inline void to_json(nlohmann::json& j, const RateFunctionResult& r) {
  j = nlohmann::json{{"r_target", r.r_target}, {"value", r.value},           {"achieved", r.achieved},
                     {"residual", r.residual}, {"multiplier", r.multiplier}, {"iterations", r.iterations},
                     {"grid_n", r.density.size()}};
}

/// Solver gave up; best() is the feasible-most iterate seen.
class RateSolverError : public NumericError {
 public:
  RateSolverError(const std::string& what, RateFunctionResult best)
      : NumericError(what, best.residual), best_(std::move(best)) {}
  const RateFunctionResult& best() const noexcept { return best_; }

 private:
  RateFunctionResult best_;
};

namespace detail {

/// Von Mises density e^{k cos(x - x0)} / Z at the cell centers, mean 1,
/// centered on cell 0.
inline std::vector<double> von_mises_density(std::size_t n, double kappa) {
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> f(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = std::exp(kappa * (std::cos(static_cast<double>(i) * h) - 1.0));
    s += f[i];
  }
  for (double& v : f) v *= static_cast<double>(n) / s;
  return f;
}

class RateProblem {
 public:
  RateProblem(std::size_t n, double r) : n_(n), h_(kTwoPi / static_cast<double>(n)), r_(r),
                                         uniform_(DiscreteMeasure::uniform(1, n)) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const double c = 1.0 / (h_ * h_);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<Eigen::Index>(i);
      P(a, a) += 2.0 * c;
      P(a, static_cast<Eigen::Index>((i + 1) % n)) -= c;
      P(a, static_cast<Eigen::Index>((i + n - 1) % n)) -= c;
    }
    precond_.compute((2.0 / static_cast<double>(n)) * P);
  }

  double fisher(const Eigen::VectorXd& g) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = g[idx((i + 1) % n_)] - g[idx(i)];
      s += d * d;
    }
    return s / (h_ * h_ * static_cast<double>(n_));
  }

  Eigen::VectorXd fisher_gradient(const Eigen::VectorXd& g) const {
    Eigen::VectorXd out(g.size());
    const double c = 2.0 / (h_ * h_ * static_cast<double>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      out[idx(i)] = c * (2.0 * g[idx(i)] - g[idx((i + 1) % n_)] - g[idx((i + n_ - 1) % n_)]);
    }
    return out;
  }

  DiscreteMeasure measure(const Eigen::VectorXd& g) const {
    auto nu = DiscreteMeasure::zeros(1, n_);
    for (std::size_t i = 0; i < n_; ++i) nu.weights[i] = g[idx(i)] * g[idx(i)];
    nu.normalize();
    return nu;
  }

  double w2sq(const Eigen::VectorXd& g) const {
    const double w = w2_circle_exact(measure(g), uniform_).value;
    return w * w;
  }

  /// Gradient of W2^2 in g through the Kantorovich potential on the f side.
  Eigen::VectorXd w2sq_gradient(const Eigen::VectorXd& g) const {
    const auto nu = measure(g);
    const auto phi = circle_kantorovich_potential(uniform_, nu);
    double mean_phi = 0.0;
    for (std::size_t i = 0; i < n_; ++i) mean_phi += nu.weights[i] * phi[i];
    const double total = g.squaredNorm();
    Eigen::VectorXd out(g.size());
    for (std::size_t i = 0; i < n_; ++i) out[idx(i)] = -4.0 * (phi[i] - mean_phi) * g[idx(i)] / total;
    return out;
  }

  double lagrangian(const Eigen::VectorXd& g, double eta, double c, double* w = nullptr) const {
    const double ws = w2sq(g);
    if (w) *w = ws;
    const double gap = r_ - ws;
    return fisher(g) + eta * gap + 0.5 * c * gap * gap;
  }

  Eigen::VectorXd precondition(const Eigen::VectorXd& v) const { return precond_.solve(v); }

  void normalize(Eigen::VectorXd& g) const {
    g *= std::sqrt(static_cast<double>(n_) / g.squaredNorm());
  }

  Eigen::VectorXd tangent(const Eigen::VectorXd& v, const Eigen::VectorXd& g) const {
    return v - (v.dot(g) / g.squaredNorm()) * g;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  std::size_t n_;
  double h_;
  double r_;
  DiscreteMeasure uniform_;
  Eigen::LLT<Eigen::MatrixXd> precond_;
};

}  // namespace detail

/// Minimizes the discrete Fisher information over grid densities subject to
/// W2(f mu, mu)^2 = r_target, with g = sqrt f on the sphere mean(g^2) = 1.
/// Augmented Lagrangian outer loop (penalty doubles when the constraint
/// stalls), preconditioned projected gradient inside. The start is the von
/// Mises density that meets the constraint exactly.
inline RateFunctionResult rate_function_circle(double r_target, std::size_t grid_n = 256,
                                               const RateSolverOptions& opt = {}) {
  if (grid_n < 16) throw ArgumentError("rate_function_circle: grid_n must be >= 16");
  if (!(r_target >= 0.0)) throw ArgumentError("rate_function_circle: r_target must be >= 0");
  const double r0 = rate_function_r0(grid_n);
  if (!(r_target < r0)) {
    throw ArgumentError("rate_function_circle: r_target must be below r0 = " + std::to_string(r0));
  }
  RateFunctionResult res;
  res.r_target = r_target;
  if (r_target == 0.0) {
    res.density.assign(grid_n, 1.0);
    return res;
  }

  // Bisection on kappa for the starting density.
  double lo = 0.0, hi = 1.0;
  while (w2_squared_to_uniform(detail::von_mises_density(grid_n, hi)) < r_target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NumericError("rate_function_circle: no von Mises start reaches r_target", r_target);
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (w2_squared_to_uniform(detail::von_mises_density(grid_n, mid)) < r_target ? lo : hi) = mid;
  }
  const double kappa = hi;

  detail::RateProblem P(grid_n, r_target);
  auto to_vec = [&](const std::vector<double>& f) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(grid_n));
    for (std::size_t i = 0; i < grid_n; ++i) g[static_cast<Eigen::Index>(i)] = std::sqrt(f[i]);
    P.normalize(g);
    return g;
  };
  Eigen::VectorXd g = to_vec(detail::von_mises_density(grid_n, kappa));

  // Multiplier guess: dI/dr along the von Mises family.
  const double dk = 1e-3 * std::max(1.0, kappa);
  const Eigen::VectorXd g2 = to_vec(detail::von_mises_density(grid_n, kappa + dk));
  const double dw = P.w2sq(g2) - P.w2sq(g);
  double eta = dw > 0.0 ? (P.fisher(g2) - P.fisher(g)) / dw : 0.25;
  double c = opt.penalty;

  auto snapshot = [&](const Eigen::VectorXd& v, double ws) {
    RateFunctionResult out;
    out.r_target = r_target;
    out.value = P.fisher(v);
    out.achieved = ws;
    out.residual = std::abs(ws - r_target);
    out.multiplier = eta;
    out.iterations = res.iterations;
    out.density.resize(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) out.density[i] = v[static_cast<Eigen::Index>(i)] * v[static_cast<Eigen::Index>(i)];
    return out;
  };
  RateFunctionResult best = snapshot(g, P.w2sq(g));
  double prev_gap = std::abs(best.achieved - r_target);

  for (std::size_t outer = 0; outer < opt.max_outer; ++outer) {
    double ws = 0.0;
    double L = P.lagrangian(g, eta, c, &ws);
    for (std::size_t inner = 0; inner < opt.max_inner; ++inner) {
      ++res.iterations;
      const double mult = eta + c * (r_target - ws);
      Eigen::VectorXd grad = P.fisher_gradient(g) - mult * P.w2sq_gradient(g);
      grad = P.tangent(grad, g);
      Eigen::VectorXd dir = P.tangent(-P.precondition(grad), g);
      const double slope = grad.dot(dir);
      if (!(slope < 0.0) || std::abs(slope) < 1e-18) break;
      double step = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
        Eigen::VectorXd trial = g + step * dir;
        P.normalize(trial);
        double wt = 0.0;
        const double Lt = P.lagrangian(trial, eta, c, &wt);
        if (Lt <= L + 1e-4 * step * slope) {
          const double gain = L - Lt;
          g = std::move(trial);
          L = Lt;
          ws = wt;
          moved = true;
          if (gain <= 1e-14 * (1.0 + std::abs(L))) inner = opt.max_inner;
          break;
        }
      }
      if (!moved) break;
    }
    const double gap = r_target - ws;
    const auto cur = snapshot(g, ws);
    const bool cur_ok = cur.residual <= opt.tolerance, best_ok = best.residual <= opt.tolerance;
    if (cur_ok != best_ok ? cur_ok : (cur_ok ? cur.value < best.value : cur.residual < best.residual)) best = cur;
    if (std::abs(gap) <= opt.tolerance && outer > 0) break;
    eta += c * gap;
    if (std::abs(gap) > 0.25 * prev_gap) c *= 2.0;
    prev_gap = std::abs(gap);
  }
  best.multiplier = eta;
  best.iterations = res.iterations;
  if (best.residual > 1e-4) {
    throw RateSolverError("rate_function_circle: constraint not met", std::move(best));
  }
  return best;
}

}  // namespace diffwass
