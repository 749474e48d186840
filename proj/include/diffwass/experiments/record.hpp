#pragma once

// Results of one experiment run and their serialized forms.

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diffwass/errors.hpp"
#include "diffwass/summation.hpp"

namespace diffwass {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// Mean and standard error of one group of replica values.
struct Aggregate {
  std::string quantity;
  double t = kMissing;
  double r = kMissing;
  std::size_t n = 0;
  double value = kMissing;
  double std_error = kMissing;  // sample std / sqrt(n); missing when n < 2
  double target = kMissing;
};

struct ReplicaFailure {
  std::size_t replica = 0;
  std::string message;
};

struct RunRecord {
  std::string experiment;
  std::string config_hash;
  nlohmann::json config;
  std::string code_version;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // one per (replica, horizon) or (replica, horizon, r)
  std::size_t n_attempted = 0;
  std::vector<ReplicaFailure> failures;
  std::vector<Aggregate> aggregates;
  std::string series;    // aggregate quantity written to the plot CSV
  std::string headline;  // what `estimate` measures
  double estimate = kMissing;
  double std_error = kMissing;
  double target = kMissing;
  std::string target_provenance;
  nlohmann::json extra = nlohmann::json::object();
  double wall_seconds = 0.0;

  std::size_t n_failed() const noexcept { return failures.size(); }
  std::size_t n_replicas() const noexcept { return n_attempted - failures.size(); }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw ArgumentError("RunRecord: no column " + name);
  }
  /// Values of `name` in rows whose t (and r, when given) match.
  std::vector<double> values(const std::string& name, double t, double r = kMissing) const {
    const std::size_t c = column(name);
    const std::size_t ct = column("t");
    const bool by_r = !std::isnan(r);
    const std::size_t cr = by_r ? column("r") : 0;
    std::vector<double> out;
    for (const auto& row : rows) {
      if (row[ct] != t) continue;
      if (by_r && row[cr] != r) continue;
      out.push_back(row[c]);
    }
    return out;
  }
  const Aggregate* find(const std::string& quantity, double t, double r = kMissing) const {
    for (const auto& a : aggregates) {
      if (a.quantity != quantity) continue;
      if (a.t != t && !(std::isnan(a.t) && std::isnan(t))) continue;
      if (a.r != r && !(std::isnan(a.r) && std::isnan(r))) continue;
      return &a;
    }
    return nullptr;
  }
};

/// Mean with sample-std / sqrt(n) standard error.
inline Aggregate summarize(std::string quantity, std::span<const double> xs, double t, double r, double target) {
  Aggregate a;
  a.quantity = std::move(quantity);
  a.t = t;
  a.r = r;
  a.n = xs.size();
  a.target = target;
  if (xs.empty()) return a;
  a.value = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    CompensatedSum ss;
    for (double x : xs) ss += (x - a.value) * (x - a.value);
    a.std_error = std::sqrt(ss.value() / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return a;
}

namespace detail {

inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline double num_from(const nlohmann::json& j) {
  return j.is_null() ? kMissing : j.get<double>();
}

}  // namespace detail

/// Shortest round-trip text for a double; NaN prints empty, infinities as inf.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void to_json(nlohmann::json& j, const Aggregate& a) {
  j = nlohmann::json{{"quantity", a.quantity},   {"t", detail::num(a.t)},
                     {"r", detail::num(a.r)},    {"n", a.n},
                     {"value", detail::num(a.value)}, {"stderr", detail::num(a.std_error)},
                     {"target", detail::num(a.target)}};
}

inline void from_json(const nlohmann::json& j, Aggregate& a) {
  a.quantity = j.at("quantity").get<std::string>();
  a.t = detail::num_from(j.at("t"));
  a.r = detail::num_from(j.at("r"));
  a.n = j.at("n").get<std::size_t>();
  a.value = detail::num_from(j.at("value"));
  a.std_error = detail::num_from(j.at("stderr"));
  a.target = detail::num_from(j.at("target"));
}

/// The summary fields carried by report JSON.
inline nlohmann::json summary_json(const RunRecord& r) {
  nlohmann::json aggs = nlohmann::json::array();
  for (const auto& a : r.aggregates) aggs.push_back(a);
  return nlohmann::json{{"experiment", r.experiment},
                        {"config_hash", r.config_hash},
                        {"n_replicas", r.n_replicas()},
                        {"n_failed", r.n_failed()},
                        {"series", r.series},
                        {"headline", r.headline},
                        {"estimate", detail::num(r.estimate)},
                        {"stderr", detail::num(r.std_error)},
                        {"target", detail::num(r.target)},
                        {"target_provenance", r.target_provenance},
                        {"aggregates", aggs},
                        {"extra", r.extra},
                        {"code_version", r.code_version},
                        {"wall_seconds", r.wall_seconds}};
}

/// Full record, including per-replica rows; non-finite cells become null.
inline void to_json(nlohmann::json& j, const RunRecord& r) {
  j = summary_json(r);
  j["config"] = r.config;
  j["columns"] = r.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr = nlohmann::json::array();
    for (double x : row) jr.push_back(std::isinf(x) ? nlohmann::json(x > 0 ? "inf" : "-inf") : detail::num(x));
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : r.failures) fails.push_back({{"replica", f.replica}, {"message", f.message}});
  j["failures"] = std::move(fails);
  j["n_attempted"] = r.n_attempted;
}

inline void from_json(const nlohmann::json& j, RunRecord& r) {
  r.experiment = j.at("experiment").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.config = j.at("config");
  r.code_version = j.at("code_version").get<std::string>();
  r.columns = j.at("columns").get<std::vector<std::string>>();
  r.rows.clear();
  for (const auto& jr : j.at("rows")) {
    std::vector<double> row;
    for (const auto& x : jr) {
      if (x.is_string()) row.push_back(x.get<std::string>() == "inf" ? std::numeric_limits<double>::infinity()
                                                                     : -std::numeric_limits<double>::infinity());
      else row.push_back(detail::num_from(x));
    }
    r.rows.push_back(std::move(row));
  }
  r.n_attempted = j.at("n_attempted").get<std::size_t>();
  r.failures.clear();
  for (const auto& f : j.at("failures")) r.failures.push_back({f.at("replica").get<std::size_t>(), f.at("message").get<std::string>()});
  r.aggregates = j.at("aggregates").get<std::vector<Aggregate>>();
  r.series = j.at("series").get<std::string>();
  r.headline = j.at("headline").get<std::string>();
  r.estimate = detail::num_from(j.at("estimate"));
  r.std_error = detail::num_from(j.at("stderr"));
  r.target = detail::num_from(j.at("target"));
  r.target_provenance = j.at("target_provenance").get<std::string>();
  r.extra = j.at("extra");
  r.wall_seconds = j.at("wall_seconds").get<double>();
}

/// Per-replica rows as CSV with the record's columns.
inline void write_rows_csv(std::ostream& os, const RunRecord& r) {
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
}

}  // namespace diffwass
