#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace diffwass {

/// Outcome of a transport solve. `value` is a distance for the exact solvers
/// and a squared distance for the entropic one; `squared` says which.
struct TransportResult {
  double value = 0.0;
  std::string method;
  std::size_t iterations = 0;
  std::optional<double> gap;
  std::optional<double> epsilon;
  bool squared = false;

  double distance() const { return squared ? std::sqrt(std::max(0.0, value)) : value; }
  double squared_distance() const { return squared ? value : value * value; }
};

inline void to_json(nlohmann::json& j, const TransportResult& r) {
  j = nlohmann::json{{"value", r.value},
                     {"method", r.method},
                     {"iterations", r.iterations},
                     {"gap", r.gap ? nlohmann::json(*r.gap) : nlohmann::json(nullptr)},
                     {"epsilon", r.epsilon ? nlohmann::json(*r.epsilon) : nlohmann::json(nullptr)}};
}

}  // namespace diffwass
