#pragma once

// run_experiment: seeded, parallel replication of the E1..E7 pipelines.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffwass/circle_potential.hpp"
#include "diffwass/diffusion.hpp"
#include "diffwass/errors.hpp"
#include "diffwass/experiments/config.hpp"
#include "diffwass/experiments/record.hpp"
#include "diffwass/limit_laws.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/parallel.hpp"
#include "diffwass/rng.hpp"
#include "diffwass/spectral_functionals.hpp"
#include "diffwass/spectrum.hpp"
#include "diffwass/torus.hpp"
#include "diffwass/transport.hpp"
#include "diffwass/version.hpp"

namespace diffwass {

struct RunOptions {
  std::size_t threads = 1;  // 0: hardware concurrency
  /// Called after each replica with (finished, total); may run on any worker
  /// but never concurrently with itself.
  std::function<void(std::size_t, std::size_t)> progress;
};

namespace detail {

using Rows = std::vector<std::vector<double>>;

/// Runs fn(i) for every task on the pool. A task that throws is recorded as a
/// failure and contributes no rows; rows are concatenated in task order.
template <class Fn>
void run_tasks(const ExperimentConfig& cfg, std::size_t count, const RunOptions& opt, RunRecord& rec, Fn&& fn) {
  std::vector<Rows> out(count);
  std::vector<std::optional<std::string>> err(count);
  std::mutex progress_mutex;
  std::size_t finished = 0;
  parallel_for_index(count, opt.threads, [&](std::size_t i) {
    try {
      if (std::find(cfg.fault_injection.begin(), cfg.fault_injection.end(), i) != cfg.fault_injection.end()) {
        throw NumericError("injected failure", 0.0);
      }
      out[i] = fn(i);
    } catch (const std::exception& e) {
      err[i] = e.what();
      out[i].clear();
    }
    if (opt.progress) {
      std::lock_guard lock(progress_mutex);
      opt.progress(++finished, count);
    }
  });
  rec.n_attempted = count;
  for (std::size_t i = 0; i < count; ++i) {
    if (err[i]) {
      rec.failures.push_back({i, *err[i]});
      continue;
    }
    for (auto& row : out[i]) rec.rows.push_back(std::move(row));
  }
}

inline std::uint64_t stream_seed(const ExperimentConfig& cfg, std::size_t replica, std::size_t horizon) {
  return derive_seed(derive_seed(cfg.seed, replica), horizon);
}

inline SimulationSpec simulation_spec(const ExperimentConfig& cfg, double t, std::uint64_t seed) {
  SimulationSpec s;
  s.dim = cfg.dim;
  s.t_end = t;
  s.dt = cfg.dt;
  s.seed = seed;
  if (cfg.potential.cosine) s.potential = CirclePotential::cosine(cfg.potential.amplitude);
  if (cfg.start != StartKind::Uniform) {
    const double c = cfg.start == StartKind::Corner ? 0.0 : std::numbers::pi;
    s.init = TorusPoint(std::vector<double>(static_cast<std::size_t>(cfg.dim), c));
  }
  return s;
}

/// One simulated horizon: the binned occupation measure and, when modes are
/// given, the path functionals.
struct HorizonData {
  std::optional<OccupationBinner> binner;
  std::optional<EmpiricalSpectrum> spectrum;
};

inline HorizonData simulate_horizon(const ExperimentConfig& cfg, double t, std::uint64_t seed, bool bin,
                                    const std::shared_ptr<const ModeList>& modes) {
  const TimeGrid g = TimeGrid::make(t, cfg.dt);
  HorizonData h;
  if (bin) h.binner.emplace(cfg.dim, cfg.grid_n, g);
  std::optional<PsiAccumulator> acc;
  if (modes && !modes->empty()) acc.emplace(modes, g);
  simulate_stream(simulation_spec(cfg, t, seed), [&](std::size_t k, double s, std::span<const double> x) {
    if (h.binner) (*h.binner)(k, s, x);
    if (acc) (*acc)(k, s, x);
  });
  if (acc) h.spectrum = acc->finish();
  return h;
}

inline SinkhornSchedule sinkhorn_schedule(const ExperimentConfig& cfg) {
  SinkhornSchedule s;
  s.tolerance = cfg.solver.sinkhorn_tolerance;
  s.relaxation = cfg.solver.relaxation;
  return s;
}

/// Reference measure on cell centers: uniform, or e^V / Z for a potential.
inline DiscreteMeasure reference_measure(const ExperimentConfig& cfg) {
  if (!cfg.potential.cosine) return DiscreteMeasure::uniform(cfg.dim, cfg.grid_n);
  const auto v = CirclePotential::cosine(cfg.potential.amplitude);
  auto m = DiscreteMeasure::zeros(1, cfg.grid_n);
  for (std::size_t i = 0; i < m.size(); ++i) m.weights[i] = std::exp(v.value(m.center(i)[0]));
  m.normalize();
  return m;
}

/// sum 2 / lambda_i^2 for the circle with a cosine potential: the first 200
/// finite-difference eigenvalues plus the flat-circle tail beyond them.
inline double potential_limit_target(double amplitude) {
  const std::size_t n_modes = 200;
  const auto v = CirclePotential::cosine(amplitude).sample(2048);
  const auto spec = circle_potential_eigensolve(v, n_modes, false);
  CompensatedSum s;
  for (double lam : spec.eigenvalues) s += 2.0 / (lam * lam);
  for (std::size_t k = n_modes / 2 + 1; k < 100'000; ++k) s += 4.0 / std::pow(static_cast<double>(k), 4);
  return s.value();
}

/// Least-squares fit, or nullopt when the points do not support one.
inline std::optional<RateFit> try_rate_fit(const std::vector<std::pair<double, double>>& pts, RateModel m) {
  try {
    return rate_fit(pts, m);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline double last_horizon(const ExperimentConfig& cfg) { return cfg.horizons.back(); }

inline void set_headline(RunRecord& rec, const std::string& quantity, double t, double r = kMissing) {
  rec.headline = quantity;
  if (const auto* a = rec.find(quantity, t, r)) {
    rec.estimate = a->value;
    rec.std_error = a->std_error;
    rec.target = a->target;
  }
}

// E1 / E2 -------------------------------------------------------------------

inline void run_limit_mean(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  const int d = cfg.dim;
  const bool potential = cfg.potential.cosine;
  const bool e1 = cfg.experiment == ExperimentId::E1;
  const bool sandwich = e1 && d == 1 && !potential && cfg.solver.sandwich;
  double lam_psi = cfg.lambda_max;
  if (sandwich) lam_psi = std::max(lam_psi, cfg.solver.sandwich_lambda_max);
  std::shared_ptr<const ModeList> modes;
  if (!potential) modes = std::make_shared<const ModeList>(enumerate_modes(d, lam_psi));
  const DiscreteMeasure ref = reference_measure(cfg);
  std::optional<SinkhornReference> sref;
  if (d >= 2) sref = SinkhornReference::make(ref, resolved_epsilon(cfg), sinkhorn_schedule(cfg), cfg.solver.max_iter);

  double target = kMissing;
  if (potential) {
    target = potential_limit_target(cfg.potential.amplitude);
    rec.target_provenance = "sum of 2/lambda_i^2 over the finite-difference spectrum of the generator with potential";
  } else {
    target = limit_series(d, 0.0, cfg.solver.target_tol).value;
    rec.target_provenance = "lattice sum over nonzero m of 2/|m|^4";
  }

  rec.columns = {"replica", "t", "w2_sq", "t_w2_sq", "w1", "xi", "xi_tail_bound", "r_t", "sinkhorn_gap",
                 "sandwich_w2_sq", "dual_lower", "fourier_upper", "grid_slack", "sandwich_ok"};
  const double rs = cfg.solver.sandwich_r;
  run_tasks(cfg, cfg.replicas, opt, rec, [&](std::size_t i) {
    Rows rows;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      const double t = cfg.horizons[h];
      auto data = simulate_horizon(cfg, t, stream_seed(cfg, i, h), true, modes);
      const DiscreteMeasure nu = data.binner->finish(0.0);
      std::vector<double> row(rec.columns.size(), kMissing);
      row[0] = static_cast<double>(i);
      row[1] = t;
      if (d == 1) {
        row[2] = std::pow(w2_circle_exact(nu, ref).value, 2);
        row[4] = w1_circle_exact(nu, ref).value;
      } else {
        const auto res = sinkhorn_w2(nu, *sref);
        row[2] = res.value;
        row[8] = *res.gap;
      }
      row[3] = t * row[2];
      if (data.spectrum) {
        const double rt = std::pow(t, -1.5);
        const auto xe = xi_r(*data.spectrum, *modes, rt);
        row[5] = xe.value;
        row[6] = xe.tail_bound;
        row[7] = rt;
      }
      if (sandwich) {
        const DiscreteMeasure nus = data.binner->finish(rs);
        const double exact = std::pow(w2_circle_exact(nus, ref).value, 2);
        const auto ub = w2_upper_bound_fourier(smoothed_density_coeffs(*data.spectrum, rs), *modes, cfg.grid_n);
        const double slack = fourier_grid_slack(ub.value, ub.epsilon, 1, cfg.grid_n);
        const double dual = dual_lower_bound_w2(nus, ref, circle_kantorovich_potential(nus, ref));
        const double tol = 1e-12 * std::max(1.0, exact);
        row[9] = exact;
        row[10] = dual;
        row[11] = ub.value;
        row[12] = slack;
        row[13] = (dual <= exact + tol && exact <= ub.value + slack + tol) ? 1.0 : 0.0;
      }
      rows.push_back(std::move(row));
    }
    return rows;
  });

  std::vector<double> ks_reference;
  if (!e1) {
    LimitSampleOptions lo;
    lo.tol = cfg.solver.limit_tol;
    lo.threads = opt.threads;
    ks_reference = sample_limit_law(d, 0.0, cfg.solver.ks_reference_draws, derive_seed(cfg.seed, 0xE2E2E2E2ULL), lo).values;
  }
  for (double t : cfg.horizons) {
    const auto tw = rec.values("t_w2_sq", t);
    rec.aggregates.push_back(summarize("t_w2_sq", tw, t, kMissing, target));
    if (modes) {
      const double rt = std::pow(t, -1.5);
      rec.aggregates.push_back(summarize("xi", rec.values("xi", t), t, kMissing, limit_series(*modes, rt).value));
    }
    if (d == 1) rec.aggregates.push_back(summarize("w1", rec.values("w1", t), t, kMissing, kMissing));
    if (!e1 && !tw.empty()) {
      Aggregate ks;
      ks.quantity = "ks_t_w2_sq";
      ks.t = t;
      ks.n = tw.size();
      ks.value = ks_distance(tw, ks_reference);
      ks.target = 0.0;
      rec.aggregates.push_back(ks);
      if (modes) {
        ks.quantity = "ks_xi";
        ks.value = ks_distance(rec.values("xi", t), ks_reference);
        rec.aggregates.push_back(ks);
      }
    }
  }
  if (d >= 2) rec.extra["epsilon"] = resolved_epsilon(cfg);
  if (modes) rec.extra["psi_modes"] = modes->size();
  if (sandwich) {
    std::size_t checked = 0, violations = 0;
    for (double t : cfg.horizons) {
      for (double v : rec.values("sandwich_ok", t)) {
        ++checked;
        if (v != 1.0) ++violations;
      }
    }
    rec.extra["sandwich_checked"] = checked;
    rec.extra["sandwich_violations"] = violations;
    rec.extra["sandwich_r"] = rs;
  }
  if (e1) {
    set_headline(rec, "t_w2_sq", last_horizon(cfg));
  } else {
    set_headline(rec, "ks_t_w2_sq", last_horizon(cfg));
    rec.target_provenance = "two-sample KS distance to draws of the limit law nu_0 (ideal 0)";
    rec.extra["ks_threshold"] = 0.15;
    rec.extra["ks_reference_draws"] = ks_reference.size();
    rec.extra["limit_mean_target"] = target;
    if (rec.n_replicas() > 0) rec.extra["ks_critical_value_5pct"] = ks_critical_value(rec.n_replicas(), ks_reference.size(), 0.05);
  }
}

// E3 ------------------------------------------------------------------------

inline void run_rates(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  const int d = cfg.dim;
  const auto sref = SinkhornReference::make(DiscreteMeasure::uniform(d, cfg.grid_n), resolved_epsilon(cfg),
                                            sinkhorn_schedule(cfg), cfg.solver.max_iter);
  rec.columns = {"replica", "t", "w2_sq", "t_w2_sq", "sinkhorn_gap"};
  run_tasks(cfg, cfg.replicas, opt, rec, [&](std::size_t i) {
    Rows rows;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      const double t = cfg.horizons[h];
      auto data = simulate_horizon(cfg, t, stream_seed(cfg, i, h), true, nullptr);
      const auto res = sinkhorn_w2(data.binner->finish(0.0), sref);
      rows.push_back({static_cast<double>(i), t, res.value, t * res.value, *res.gap});
    }
    return rows;
  });
  std::vector<std::pair<double, double>> pts;
  for (double t : cfg.horizons) {
    const auto a = summarize("w2_sq", rec.values("w2_sq", t), t, kMissing, kMissing);
    rec.aggregates.push_back(a);
    if (a.value > 0.0) pts.emplace_back(t, a.value);
  }
  const double target_slope = d == 4 ? -1.0 : -2.0 / (d - 2);
  rec.headline = "slope_pure_power";
  rec.target = target_slope;
  rec.target_provenance = d == 4 ? "t^{-1} log t decay (pure-power slope approaches -1)" : "t^{-2/(d-2)} decay";
  rec.extra["epsilon"] = resolved_epsilon(cfg);
  const auto pure = try_rate_fit(pts, RateModel::PurePower);
  const auto plog = try_rate_fit(pts, RateModel::PowerLog);
  if (pure) {
    rec.estimate = pure->slope;
    rec.extra["fit_pure_power"] = *pure;
  }
  if (plog) rec.extra["fit_power_log"] = *plog;
  if (pure && plog) rec.extra["power_log_preferred"] = plog->residual < pure->residual;
}

// E4 ------------------------------------------------------------------------

/// First two nonzero eigenvalues of T^d with their multiplicities.
inline std::pair<std::pair<double, double>, std::pair<double, double>> first_two_shells(int d) {
  const auto shells = lattice_shell_counts(d, 8);
  std::vector<std::pair<double, double>> found;
  for (std::size_t n = 1; n < shells.size() && found.size() < 2; ++n) {
    if (shells[n] > 0) found.emplace_back(static_cast<double>(n), static_cast<double>(shells[n]));
  }
  return {found[0], found[1]};
}

inline void run_laplace(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  const int d = cfg.dim;
  const auto modes = std::make_shared<const ModeList>(enumerate_modes(d, cfg.lambda_max));
  rec.columns = {"replica", "t", "r", "xi"};
  run_tasks(cfg, cfg.replicas, opt, rec, [&](std::size_t i) {
    Rows rows;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      const double t = cfg.horizons[h];
      const auto data = simulate_horizon(cfg, t, stream_seed(cfg, i, h), false, modes);
      for (double r : cfg.r) rows.push_back({static_cast<double>(i), t, r, xi_r(*data.spectrum, *modes, r).value});
    }
    return rows;
  });
  const auto [s1, s2] = first_two_shells(d);
  const double r_dom = first_eigenvalue_dominance_r(s1.first, s1.second, s2.first, s2.second);
  nlohmann::json laplace = nlohmann::json::array();
  for (double r : cfg.r) {
    try {
      const auto full = limit_series(d, r, 1e-9);
      laplace.push_back({{"r", r}, {"value", full.value}, {"tail_bound", full.tail_bound}});
    } catch (const NumericError& e) {
      laplace.push_back({{"r", r}, {"value", nullptr}, {"error", e.what()}});
    }
  }
  rec.extra["laplace_target"] = laplace;
  rec.extra["dominance_r"] = r_dom;
  rec.extra["multiplicity_target"] = s1.second;
  rec.headline = "lambda1";
  rec.target = s1.first;
  rec.target_provenance = "first nonzero eigenvalue of the flat torus";
  nlohmann::json fits = nlohmann::json::array();
  for (double t : cfg.horizons) {
    std::vector<std::pair<double, double>> samples;
    for (double r : cfg.r) {
      const auto a = summarize("xi", rec.values("xi", t, r), t, r, expected_xi_stationary(*modes, t, r));
      rec.aggregates.push_back(a);
      if (r >= r_dom && a.value > 0.0) samples.emplace_back(r, 0.5 * a.value);
    }
    nlohmann::json f{{"t", t}, {"r_used", nlohmann::json::array()}};
    for (const auto& s : samples) f["r_used"].push_back(s.first);
    try {
      const auto est = estimate_lambda1(samples);
      f["lambda1"] = est.lambda1;
      f["multiplicity"] = est.multiplicity;
      f["residual"] = est.residual;
      if (t == last_horizon(cfg)) {
        rec.estimate = est.lambda1;
        rec.extra["multiplicity"] = est.multiplicity;
      }
    } catch (const std::exception& e) {
      f["error"] = e.what();
    }
    fits.push_back(std::move(f));
  }
  rec.extra["lambda1_fits"] = fits;
}

// E5 ------------------------------------------------------------------------

inline void run_smoothing_bias(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  rec.columns = {"replica", "t", "r", "w2_sq"};
  run_tasks(cfg, cfg.replicas, opt, rec, [&](std::size_t i) {
    Rows rows;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      const double t = cfg.horizons[h];
      const auto data = simulate_horizon(cfg, t, stream_seed(cfg, i, h), true, nullptr);
      const auto mu_t = data.binner->finish(0.0);
      for (double r : cfg.r) {
        const double w = std::pow(w2_circle_exact(mu_t, data.binner->finish(r)).value, 2);
        rows.push_back({static_cast<double>(i), t, r, w});
      }
    }
    return rows;
  });
  rec.headline = "slope_in_r";
  rec.target = 1.0;
  rec.target_provenance = "smoothing bias bound W2(mu_t, mu_t P_r)^2 <= c r";
  nlohmann::json fits = nlohmann::json::array();
  for (double t : cfg.horizons) {
    std::vector<std::pair<double, double>> pts;
    for (double r : cfg.r) {
      const auto a = summarize("w2_sq", rec.values("w2_sq", t, r), t, r, kMissing);
      rec.aggregates.push_back(a);
      if (r > 0.0 && a.value > 0.0) pts.emplace_back(r, a.value);
    }
    if (const auto fit = try_rate_fit(pts, RateModel::PurePower)) {
      fits.push_back({{"t", t}, {"fit", *fit}});
      if (t == last_horizon(cfg)) rec.estimate = fit->slope;
    }
  }
  rec.extra["fits"] = fits;
}

// E6 ------------------------------------------------------------------------

inline void run_rate_function(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  rec.columns = {"replica", "t", "r", "value", "residual", "iterations"};
  const std::size_t n = cfg.solver.rate_grid_n;
  run_tasks(cfg, cfg.r.size(), opt, rec, [&](std::size_t i) {
    const auto res = rate_function_circle(cfg.r[i], n);
    return Rows{{static_cast<double>(i), kMissing, cfg.r[i], res.value, res.residual, static_cast<double>(res.iterations)}};
  });
  std::vector<std::pair<double, double>> curve;
  const std::size_t cr = rec.column("r"), cv = rec.column("value");
  for (const auto& row : rec.rows) {
    curve.emplace_back(row[cr], row[cv]);
    Aggregate a;
    a.quantity = "rate_function";
    a.r = row[cr];
    a.n = 1;
    a.value = row[cv];
    rec.aggregates.push_back(a);
  }
  std::sort(curve.begin(), curve.end());
  bool monotone = true;
  for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i].second >= curve[i - 1].second;
  rec.extra["monotone"] = monotone;
  rec.extra["r0"] = rate_function_r0(n);
  rec.headline = "rate_over_r_at_smallest_r";
  rec.target = 0.25;
  rec.target_provenance = "small-r limit lambda_1^2 / 4 of the linearized problem";
  for (const auto& [r, v] : curve) {
    if (r > 0.0) {
      rec.estimate = v / r;
      break;
    }
  }
}

// E7 ------------------------------------------------------------------------

/// E^x |psi(t)|^2 for one mode; a uniform start gives the stationary value.
inline double expected_psi_squared(const SpectralMode& mode, double t, StartKind start) {
  const double lam = mode.eigenvalue;
  double e = expected_psi_squared_stationary(lam, t);
  if (start == StartKind::Uniform) return e;
  const double x = start == StartKind::Corner ? 0.0 : std::numbers::pi;
  double ph = 0.0;
  for (int j = 0; j < mode.dim; ++j) ph += 2.0 * mode.freq[static_cast<std::size_t>(j)] * x;
  const double c = (mode.parity == Parity::Cos ? 1.0 : -1.0) * std::cos(ph);
  const double a = -std::expm1(-4.0 * lam * t) / (4.0 * lam);
  const double b = std::exp(-lam * t) * -std::expm1(-3.0 * lam * t) / (3.0 * lam);
  return e + 2.0 * c / (lam * t) * (a - b);
}

inline void run_psi_variance(const ExperimentConfig& cfg, const RunOptions& opt, RunRecord& rec) {
  const auto all = enumerate_modes(cfg.dim, cfg.lambda_max);
  if (cfg.solver.mode_index >= all.size()) {
    throw ValidationError({"solver.mode_index must be < " + std::to_string(all.size()) + " for lambda_max " +
                           format_number(cfg.lambda_max)});
  }
  const SpectralMode mode = all[cfg.solver.mode_index];
  const auto modes = std::make_shared<const ModeList>(ModeList{mode});
  rec.columns = {"replica", "t", "psi_sq"};
  run_tasks(cfg, cfg.replicas, opt, rec, [&](std::size_t i) {
    Rows rows;
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
      const double t = cfg.horizons[h];
      const auto data = simulate_horizon(cfg, t, stream_seed(cfg, i, h), false, modes);
      const double p = data.spectrum->psi[0];
      rows.push_back({static_cast<double>(i), t, p * p});
    }
    return rows;
  });
  for (double t : cfg.horizons) {
    rec.aggregates.push_back(summarize("psi_sq", rec.values("psi_sq", t), t, kMissing, expected_psi_squared(mode, t, cfg.start)));
  }
  rec.extra["mode_eigenvalue"] = mode.eigenvalue;
  rec.extra["mode_parity"] = to_string(mode.parity);
  rec.target_provenance = cfg.start == StartKind::Uniform ? "closed form (2/lambda)(1 - (1 - e^{-lambda t})/(lambda t))"
                                                          : "closed form for a fixed start point";
  set_headline(rec, "psi_sq", last_horizon(cfg));
}

}  // namespace detail

/// Runs every replica of `cfg` and reduces in replica order, so the record's
/// statistics depend only on the configuration, never on `threads`.
inline RunRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.experiment = to_string(cfg.experiment);
  rec.config = to_json_value(cfg);
  rec.config_hash = config_hash(cfg);
  rec.code_version = kVersion;
  switch (cfg.experiment) {
    case ExperimentId::E1:
    case ExperimentId::E2:
      rec.series = "t_w2_sq";
      detail::run_limit_mean(cfg, opt, rec);
      break;
    case ExperimentId::E3:
      rec.series = "w2_sq";
      detail::run_rates(cfg, opt, rec);
      break;
    case ExperimentId::E4:
      rec.series = "xi";
      detail::run_laplace(cfg, opt, rec);
      break;
    case ExperimentId::E5:
      rec.series = "w2_sq";
      detail::run_smoothing_bias(cfg, opt, rec);
      break;
    case ExperimentId::E6:
      rec.series = "rate_function";
      detail::run_rate_function(cfg, opt, rec);
      break;
    case ExperimentId::E7:
      rec.series = "psi_sq";
      detail::run_psi_variance(cfg, opt, rec);
      break;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace diffwass
