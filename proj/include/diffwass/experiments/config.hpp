#pragma once

// Experiment configuration: JSON schema, validation and a stable hash.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffwass/errors.hpp"
#include "diffwass/torus.hpp"

namespace diffwass {

enum class ExperimentId { E1 = 1, E2, E3, E4, E5, E6, E7 };

inline std::string to_string(ExperimentId id) { return "E" + std::to_string(static_cast<int>(id)); }

inline std::optional<ExperimentId> parse_experiment_id(const std::string& s) {
  if (s.size() == 2 && s[0] == 'E' && s[1] >= '1' && s[1] <= '7') return static_cast<ExperimentId>(s[1] - '0');
  return std::nullopt;
}

enum class StartKind { Uniform, Corner, Center };

inline std::string to_string(StartKind s) {
  switch (s) {
    case StartKind::Corner: return "corner";
    case StartKind::Center: return "center";
    default: return "uniform";
  }
}

struct PotentialSpec {
  bool cosine = false;
  double amplitude = 0.0;
};

struct SolverOverrides {
  std::optional<double> epsilon;       // Sinkhorn epsilon; absent: per-experiment default
  double epsilon_scale = 0.5;          // E1/E2 default epsilon = scale * h^2
  double sinkhorn_tolerance = 1e-6;
  double relaxation = 1.8;
  std::size_t max_iter = 20'000;
  std::size_t ks_reference_draws = 1'000'000;
  double limit_tol = 1e-2;             // limit-law sampler tail tolerance
  bool sandwich = true;                // E1, d = 1: dual / Fourier bound check
  double sandwich_r = 0.01;
  double sandwich_lambda_max = 4096.0;
  std::size_t rate_grid_n = 256;
  std::size_t mode_index = 0;          // E7
  double target_tol = 1e-3;
};

struct ExperimentConfig {
  int schema_version = 1;
  ExperimentId experiment = ExperimentId::E1;
  int dim = 1;
  PotentialSpec potential;
  std::vector<double> horizons;
  std::vector<double> r;
  std::size_t replicas = 1;
  std::size_t grid_n = 0;  // 0: default for the experiment and dimension
  double lambda_max = 16.0;
  std::uint64_t seed = 0;
  double dt = 1e-3;
  StartKind start = StartKind::Uniform;
  SolverOverrides solver;
  std::vector<std::size_t> fault_injection;  // replicas forced to fail (testing hook)
};

inline constexpr int kConfigSchemaVersion = 1;

inline std::size_t default_grid_n(ExperimentId id, int d) {
  switch (id) {
    case ExperimentId::E1:
    case ExperimentId::E2: return d == 1 ? 4096 : d == 2 ? 64 : 32;
    case ExperimentId::E3: return d == 4 ? 16 : 8;
    case ExperimentId::E5: return 4096;
    default: return 256;
  }
}

/// Sinkhorn epsilon used by E1/E2 (d >= 2) and E3.
inline double resolved_epsilon(const ExperimentConfig& c) {
  if (c.solver.epsilon) return *c.solver.epsilon;
  if (c.experiment == ExperimentId::E3) return 0.05 * std::numbers::pi * std::numbers::pi * c.dim;
  const double h = kTwoPi / static_cast<double>(c.grid_n);
  return c.solver.epsilon_scale * h * h;
}

/// Semantic checks; throws ValidationError listing every violation.
inline void validate(const ExperimentConfig& c) {
  std::vector<std::string> v;
  const auto id = c.experiment;
  const bool sinkhorn = (id == ExperimentId::E1 || id == ExperimentId::E2) ? c.dim >= 2 : id == ExperimentId::E3;
  if (c.schema_version != kConfigSchemaVersion) v.push_back("schema_version must be " + std::to_string(kConfigSchemaVersion));
  if (c.dim < 1 || c.dim > kMaxDim) v.push_back("dim must be in 1..5");
  if (c.replicas < 1) v.push_back("replicas must be >= 1");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) v.push_back("dt must be positive");
  if (c.horizons.empty()) v.push_back("horizons must not be empty");
  for (std::size_t i = 0; i < c.horizons.size(); ++i) {
    const double t = c.horizons[i];
    if (!std::isfinite(t) || !(t >= c.dt * (1.0 - 1e-12))) v.push_back("horizons[" + std::to_string(i) + "] must be finite and >= dt");
    if (i > 0 && !(t > c.horizons[i - 1])) v.push_back("horizons must be strictly increasing");
  }
  for (std::size_t i = 0; i < c.r.size(); ++i) {
    if (!std::isfinite(c.r[i]) || c.r[i] < 0.0) v.push_back("r[" + std::to_string(i) + "] must be finite and >= 0");
  }
  if (!(c.lambda_max >= 4.0) || !std::isfinite(c.lambda_max)) v.push_back("lambda_max must be >= 4");
  if (c.grid_n < 4) v.push_back("grid_n must be >= 4");
  switch (id) {
    case ExperimentId::E1:
    case ExperimentId::E2:
      if (c.dim > 3) v.push_back(to_string(id) + " requires dim <= 3");
      break;
    case ExperimentId::E3:
      if (c.dim != 4 && c.dim != 5) v.push_back("E3 requires dim 4 or 5");
      break;
    case ExperimentId::E4:
      if (c.r.empty()) v.push_back("E4 requires a non-empty r list");
      for (double r : c.r) {
        if (!(r > 0.0)) { v.push_back("E4 requires every r > 0"); break; }
      }
      break;
    case ExperimentId::E5:
    case ExperimentId::E6:
      if (c.dim != 1) v.push_back(to_string(id) + " requires dim 1");
      if (c.r.empty()) v.push_back(to_string(id) + " requires a non-empty r list");
      break;
    case ExperimentId::E7:
      break;
  }
  if (c.potential.cosine) {
    if (c.dim != 1) v.push_back("a potential requires dim 1");
    if (id != ExperimentId::E1) v.push_back("a potential is supported only by E1");
    if (!std::isfinite(c.potential.amplitude)) v.push_back("potential.amplitude must be finite");
  }
  const auto& s = c.solver;
  if (s.epsilon && !(*s.epsilon > 0.0)) v.push_back("solver.epsilon must be positive");
  if (!(s.epsilon_scale > 0.0)) v.push_back("solver.epsilon_scale must be positive");
  if (!(s.sinkhorn_tolerance > 0.0)) v.push_back("solver.sinkhorn_tolerance must be positive");
  if (!(s.relaxation >= 1.0 && s.relaxation < 2.0)) v.push_back("solver.relaxation must lie in [1, 2)");
  if (s.max_iter < 1) v.push_back("solver.max_iter must be >= 1");
  if (s.ks_reference_draws < 1) v.push_back("solver.ks_reference_draws must be >= 1");
  if (!(s.limit_tol > 0.0)) v.push_back("solver.limit_tol must be positive");
  if (!(s.sandwich_r > 0.0)) v.push_back("solver.sandwich_r must be positive");
  if (!(s.sandwich_lambda_max >= 4.0)) v.push_back("solver.sandwich_lambda_max must be >= 4");
  if (s.rate_grid_n < 16) v.push_back("solver.rate_grid_n must be >= 16");
  if (!(s.target_tol > 0.0)) v.push_back("solver.target_tol must be positive");
  if (sinkhorn && c.dim >= 1 && c.dim <= kMaxDim && c.grid_n >= 4) {
    double cells = 1.0;
    for (int j = 0; j < c.dim; ++j) cells *= static_cast<double>(c.grid_n);
    if (cells > 4e6) v.push_back("grid_n^dim exceeds the Sinkhorn budget of 4e6 cells");
  }
  for (std::size_t i : c.fault_injection) {
    if (i >= c.replicas) { v.push_back("fault_injection entries must be < replicas"); break; }
  }
  if (!v.empty()) throw ValidationError(std::move(v));
}

namespace detail {

/// Reads typed fields from one JSON object, recording problems instead of
/// throwing and flagging keys that were never consumed.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string prefix, std::vector<std::string>& out)
      : j_(j), prefix_(std::move(prefix)), out_(out) {
    if (!j_.is_object()) out_.push_back(name("") + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
  }
  template <class T>
  void number(const std::string& key, T& dst, bool required = false) {
    if (!has(key)) {
      if (required) out_.push_back(name(key) + " is required");
      return;
    }
    const auto& x = j_.at(key);
    if constexpr (std::is_integral_v<T>) {
      if (!x.is_number_integer()) return bad(key, "an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (x.is_number_unsigned() || x.get<std::int64_t>() >= 0) dst = x.get<T>();
        else out_.push_back(name(key) + " must be non-negative");
      } else {
        dst = x.get<T>();
      }
    } else {
      if (!x.is_number()) return bad(key, "a number");
      dst = x.get<T>();
    }
  }
  void optional_number(const std::string& key, std::optional<double>& dst) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) return bad(key, "a number or null");
    dst = j_.at(key).get<double>();
  }
  void boolean(const std::string& key, bool& dst) {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) return bad(key, "a boolean");
    dst = j_.at(key).get<bool>();
  }
  template <class T>
  void list(const std::string& key, std::vector<T>& dst, bool required = false) {
    if (!has(key)) {
      if (required) out_.push_back(name(key) + " is required");
      return;
    }
    const auto& x = j_.at(key);
    const bool ok = x.is_array() && std::all_of(x.begin(), x.end(), [](const nlohmann::json& e) {
      if constexpr (std::is_integral_v<T>) return e.is_number_unsigned() || (e.is_number_integer() && e.get<std::int64_t>() >= 0);
      else return e.is_number();
    });
    if (!ok) return bad(key, std::is_integral_v<T> ? "an array of non-negative integers" : "an array of numbers");
    dst = x.get<std::vector<T>>();
  }
  const nlohmann::json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }
  std::optional<std::string> string(const std::string& key, bool required = false) {
    if (!has(key)) {
      if (required) out_.push_back(name(key) + " is required");
      return std::nullopt;
    }
    if (!j_.at(key).is_string()) {
      bad(key, "a string");
      return std::nullopt;
    }
    return j_.at(key).get<std::string>();
  }
  void reject_unknown() {
    if (!j_.is_object()) return;
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) out_.push_back("unknown key " + name(k));
    }
  }
  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? "config" : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  void bad(const std::string& key, const char* what) { out_.push_back(name(key) + " must be " + what); }

  const nlohmann::json& j_;
  std::string prefix_;
  std::vector<std::string>& out_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses and validates a configuration. Unknown keys, type errors and
/// semantic violations are all reported together in one ValidationError.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  std::vector<std::string> v;
  ExperimentConfig c;
  detail::FieldReader top(j, "", v);
  top.number("schema_version", c.schema_version, true);
  if (auto id = top.string("experiment", true)) {
    if (auto e = parse_experiment_id(*id)) c.experiment = *e;
    else v.push_back("experiment must be one of E1..E7");
  }
  top.number("dim", c.dim, true);
  top.list("horizons", c.horizons, true);
  top.list("r", c.r);
  top.number("replicas", c.replicas, true);
  top.number("grid_n", c.grid_n);
  top.number("lambda_max", c.lambda_max);
  top.number("seed", c.seed, true);
  top.number("dt", c.dt);
  if (auto s = top.string("start")) {
    if (*s == "uniform") c.start = StartKind::Uniform;
    else if (*s == "corner") c.start = StartKind::Corner;
    else if (*s == "center") c.start = StartKind::Center;
    else v.push_back("start must be one of uniform, corner, center");
  }
  if (const auto* p = top.object("potential")) {
    detail::FieldReader pr(*p, "potential", v);
    if (auto kind = pr.string("kind", true)) {
      if (*kind == "cosine") {
        c.potential.cosine = true;
        pr.number("amplitude", c.potential.amplitude, true);
      } else if (*kind != "none") {
        v.push_back("potential.kind must be none or cosine");
      }
    }
    pr.reject_unknown();
  }
  if (const auto* s = top.object("solver")) {
    detail::FieldReader sr(*s, "solver", v);
    auto& o = c.solver;
    sr.optional_number("epsilon", o.epsilon);
    sr.number("epsilon_scale", o.epsilon_scale);
    sr.number("sinkhorn_tolerance", o.sinkhorn_tolerance);
    sr.number("relaxation", o.relaxation);
    sr.number("max_iter", o.max_iter);
    sr.number("ks_reference_draws", o.ks_reference_draws);
    sr.number("limit_tol", o.limit_tol);
    sr.boolean("sandwich", o.sandwich);
    sr.number("sandwich_r", o.sandwich_r);
    sr.number("sandwich_lambda_max", o.sandwich_lambda_max);
    sr.number("rate_grid_n", o.rate_grid_n);
    sr.number("mode_index", o.mode_index);
    sr.number("target_tol", o.target_tol);
    sr.reject_unknown();
  }
  top.list("fault_injection", c.fault_injection);
  top.reject_unknown();
  if (c.grid_n == 0 && c.dim >= 1 && c.dim <= kMaxDim) c.grid_n = default_grid_n(c.experiment, c.dim);
  try {
    validate(c);
  } catch (const ValidationError& e) {
    for (const auto& s : e.violations()) v.push_back(s);
  }
  if (!v.empty()) throw ValidationError(std::move(v));
  return c;
}

/// Canonical JSON form: every field explicit, keys sorted.
inline nlohmann::json to_json_value(const ExperimentConfig& c) {
  nlohmann::json pot = c.potential.cosine ? nlohmann::json{{"kind", "cosine"}, {"amplitude", c.potential.amplitude}}
                                          : nlohmann::json{{"kind", "none"}};
  const auto& s = c.solver;
  nlohmann::json solver{{"epsilon", s.epsilon ? nlohmann::json(*s.epsilon) : nlohmann::json(nullptr)},
                        {"epsilon_scale", s.epsilon_scale},
                        {"sinkhorn_tolerance", s.sinkhorn_tolerance},
                        {"relaxation", s.relaxation},
                        {"max_iter", s.max_iter},
                        {"ks_reference_draws", s.ks_reference_draws},
                        {"limit_tol", s.limit_tol},
                        {"sandwich", s.sandwich},
                        {"sandwich_r", s.sandwich_r},
                        {"sandwich_lambda_max", s.sandwich_lambda_max},
                        {"rate_grid_n", s.rate_grid_n},
                        {"mode_index", s.mode_index},
                        {"target_tol", s.target_tol}};
  return nlohmann::json{{"schema_version", c.schema_version},
                        {"experiment", to_string(c.experiment)},
                        {"dim", c.dim},
                        {"potential", pot},
                        {"horizons", c.horizons},
                        {"r", c.r},
                        {"replicas", c.replicas},
                        {"grid_n", c.grid_n},
                        {"lambda_max", c.lambda_max},
                        {"seed", c.seed},
                        {"dt", c.dt},
                        {"start", to_string(c.start)},
                        {"solver", solver},
                        {"fault_injection", c.fault_injection}};
}

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits. Key order and
/// omitted defaults do not change it.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string s = to_json_value(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({std::string("malformed JSON: ") + e.what()});
  }
  return parse_config(j);
}

}  // namespace diffwass
