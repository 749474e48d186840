#pragma once

// Transportation simplex (MODI) on the complete bipartite graph between the
// supports of two grid measures. Exact up to floating point for small
// supports; also serves as the brute-force oracle for the faster solvers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "diffwass/errors.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/transport/result.hpp"

namespace diffwass {

inline constexpr std::size_t kLpSupportLimit = 4096;

struct TransportPlan {
  double cost = 0.0;
  std::size_t pivots = 0;
  std::vector<std::size_t> row, col;  // basic cells
  std::vector<double> flow;
};

/// Minimum of sum C_ij P_ij over couplings of supply and demand (equal totals).
/// `cost(i, j)` is evaluated once per cell.
inline TransportPlan solve_transportation(const std::vector<double>& supply, const std::vector<double>& demand,
                                          const std::function<double(std::size_t, std::size_t)>& cost,
                                          std::size_t max_pivots = 1'000'000) {
  const std::size_t m = supply.size(), n = demand.size();
  if (m == 0 || n == 0) throw ArgumentError("solve_transportation: empty side");
  std::vector<double> C(m * n);
  double cmax = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      C[i * n + j] = cost(i, j);
      cmax = std::max(cmax, std::abs(C[i * n + j]));
    }
  }

  // Northwest corner start: m + n - 1 basic cells, zeros kept as degenerate.
  std::vector<std::size_t> brow, bcol;
  std::vector<double> flow;
  {
    std::vector<double> s = supply, d = demand;
    std::size_t i = 0, j = 0;
    while (i < m && j < n) {
      const double q = std::min(s[i], d[j]);
      brow.push_back(i); bcol.push_back(j); flow.push_back(q);
      s[i] -= q; d[j] -= q;
      if (i == m - 1) { ++j; continue; }
      if (j == n - 1) { ++i; continue; }
      if (s[i] <= d[j]) ++i; else ++j;
    }
  }
  const std::size_t nb = brow.size();  // = m + n - 1

  std::vector<double> u(m), v(n);
  std::vector<std::vector<std::size_t>> adj(m + n);  // node -> basic cell ids
  std::vector<std::size_t> parent_cell(m + n);
  std::vector<std::size_t> parent_node(m + n);
  std::vector<char> seen(m + n);
  std::vector<std::size_t> queue;
  queue.reserve(m + n);
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  const double tol = 1e-12 * std::max(1.0, cmax);

  auto rebuild = [&] {
    for (auto& a : adj) a.clear();
    for (std::size_t c = 0; c < nb; ++c) {
      adj[brow[c]].push_back(c);
      adj[m + bcol[c]].push_back(c);
    }
  };
  // BFS over the basis tree from source node 0; fills potentials and parents.
  auto traverse = [&] {
    std::fill(seen.begin(), seen.end(), 0);
    queue.clear();
    queue.push_back(0);
    seen[0] = 1;
    u[0] = 0.0;
    parent_node[0] = none;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t node = queue[q];
      for (std::size_t c : adj[node]) {
        const std::size_t other = node < m ? m + bcol[c] : brow[c];
        if (seen[other]) continue;
        seen[other] = 1;
        parent_node[other] = node;
        parent_cell[other] = c;
        if (other >= m) v[other - m] = C[brow[c] * n + bcol[c]] - u[brow[c]];
        else u[other] = C[brow[c] * n + bcol[c]] - v[bcol[c]];
        queue.push_back(other);
      }
    }
    if (queue.size() != m + n) throw NumericError("solve_transportation: basis is not a spanning tree", 0.0);
  };
  std::vector<std::size_t> depth(m + n);
  auto compute_depth = [&] {
    for (std::size_t node : queue) depth[node] = parent_node[node] == none ? 0 : depth[parent_node[node]] + 1;
  };

  rebuild();
  std::size_t pivots = 0;
  for (;; ++pivots) {
    traverse();
    std::size_t ei = 0, ej = 0;
    double best = -tol;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double rc = C[i * n + j] - u[i] - v[j];
        if (rc < best) { best = rc; ei = i; ej = j; }
      }
    }
    if (best == -tol) break;
    if (pivots >= max_pivots) throw NumericError("solve_transportation: pivot limit reached", -best);
    compute_depth();
    // Tree path between source ei and sink ej, as basic cells. Cells on the
    // source side alternate starting with '-' next to the entering cell.
    std::vector<std::size_t> from_i, from_j;
    std::size_t a = ei, b = m + ej;
    while (depth[a] > depth[b]) { from_i.push_back(parent_cell[a]); a = parent_node[a]; }
    while (depth[b] > depth[a]) { from_j.push_back(parent_cell[b]); b = parent_node[b]; }
    while (a != b) {
      from_i.push_back(parent_cell[a]); a = parent_node[a];
      from_j.push_back(parent_cell[b]); b = parent_node[b];
    }
    // Cycle: entering(+), then from_i in order, then from_j reversed; signs alternate.
    std::vector<std::size_t> cycle = from_i;
    cycle.insert(cycle.end(), from_j.rbegin(), from_j.rend());
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = none;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      if (flow[cycle[k]] < theta) { theta = flow[cycle[k]]; leave = cycle[k]; }
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) flow[cycle[k]] += (k % 2 == 0) ? -theta : theta;
    brow[leave] = ei; bcol[leave] = ej; flow[leave] = theta;
    rebuild();
  }

  TransportPlan plan;
  plan.pivots = pivots;
  CompensatedSum total;
  for (std::size_t c = 0; c < nb; ++c) total += flow[c] * C[brow[c] * n + bcol[c]];
  plan.cost = total.value();
  plan.row = std::move(brow);
  plan.col = std::move(bcol);
  plan.flow = std::move(flow);
  return plan;
}

namespace detail {

struct Support {
  std::vector<std::size_t> cells;
  std::vector<double> mass;
};

inline Support support_of(const DiscreteMeasure& m) {
  Support s;
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (m.weights[c] > 0.0) { s.cells.push_back(c); s.mass.push_back(m.weights[c]); }
  }
  return s;
}

inline TransportPlan lp_between(const DiscreteMeasure& A, const DiscreteMeasure& B, int power, const char* who) {
  require_same_grid(A, B, who);
  auto sa = support_of(A), sb = support_of(B);
  if (sa.cells.size() + sb.cells.size() > kLpSupportLimit) {
    throw CapacityError(std::string(who) + ": total support " + std::to_string(sa.cells.size() + sb.cells.size()) +
                            " exceeds " + std::to_string(kLpSupportLimit),
                        sa.cells.size() + sb.cells.size());
  }
  const double ma = compensated_sum(sa.mass), mb = compensated_sum(sb.mass);
  if (std::abs(ma - mb) > 1e-9) throw ArgumentError(std::string(who) + ": mass mismatch");
  if (sa.cells.empty()) throw ArgumentError(std::string(who) + ": empty measure");
  // Exact balance: absorb the rounding difference in the last demand.
  sb.mass.back() += ma - mb;
  std::vector<TorusPoint> pa, pb;
  for (auto c : sa.cells) pa.push_back(A.center(c));
  for (auto c : sb.cells) pb.push_back(B.center(c));
  return solve_transportation(sa.mass, sb.mass, [&](std::size_t i, std::size_t j) {
    const double d = geodesic_distance(pa[i], pb[j]);
    return power == 1 ? d : d * d;
  });
}

}  // namespace detail

/// Exact W1 by linear programming; total support must not exceed 4096 atoms.
inline TransportResult w1_lp_small(const DiscreteMeasure& A, const DiscreteMeasure& B) {
  const auto plan = detail::lp_between(A, B, 1, "w1_lp_small");
  TransportResult r;
  r.value = std::max(0.0, plan.cost);
  r.method = "lp_w1";
  r.iterations = plan.pivots;
  return r;
}

/// Exact W2 by linear programming with squared geodesic cost (small supports).
inline TransportResult w2_lp_small(const DiscreteMeasure& A, const DiscreteMeasure& B) {
  const auto plan = detail::lp_between(A, B, 2, "w2_lp_small");
  TransportResult r;
  r.value = std::sqrt(std::max(0.0, plan.cost));
  r.method = "lp_w2";
  r.iterations = plan.pivots;
  return r;
}

}  // namespace diffwass
