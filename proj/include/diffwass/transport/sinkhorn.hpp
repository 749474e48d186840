#pragma once

// Debiased entropic transport on T^d grids with squared geodesic cost.
// The Gibbs kernel exp(-rho^2/eps) factorizes over axes, so every
// log-sum-exp over the grid is d successive 1-D periodic passes; each pass is
// stabilized by its line maximum and done as one matrix product.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#if defined(__SSE2__) || defined(__x86_64__)
#include <xmmintrin.h>
#define DIFFWASS_HAVE_MXCSR 1
#endif

#include "diffwass/errors.hpp"
#include "diffwass/measure.hpp"
#include "diffwass/transport/result.hpp"

namespace diffwass {

namespace detail {

/// Flush-to-zero and denormals-are-zero for the current scope. Kernel
/// entries and products far below the line maximum are otherwise denormal,
/// which slows the matrix products by an order of magnitude.
class FlushDenormalsScope {
 public:
#ifdef DIFFWASS_HAVE_MXCSR
  FlushDenormalsScope() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
  ~FlushDenormalsScope() { _mm_setcsr(saved_); }

 private:
  unsigned saved_;
#endif
};

}  // namespace detail

struct SinkhornSchedule {
  double eps_start = 1.0;
  double factor = 0.7;
  double tolerance = 1e-7;       // marginal L1 violation, final stage
  double stage_tolerance = 1e-3;  // intermediate stages
  double relaxation = 1.0;        // over-relaxation of the asymmetric updates, in [1, 2)
};

/// out_i = log sum_j exp(in_j - rho(x_i, x_j)^2 / eps) on a d-dimensional grid.
class LogGibbsOperator {
 public:
  LogGibbsOperator(int dim, std::size_t grid_n, double eps) : dim_(dim), n_(grid_n), eps_(eps) {
    const double h = kTwoPi / static_cast<double>(n_);
    cost_.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const std::size_t k = i > j ? i - j : j - i;
        const double d = static_cast<double>(std::min(k, n_ - k)) * h;
        cost_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d * d / eps_;
      }
    }
    kernel_ = (-cost_.array()).exp().matrix();
    kernel_ = (kernel_.array() < std::numeric_limits<double>::min()).select(0.0, kernel_);
  }

  double epsilon() const noexcept { return eps_; }

  void apply(std::vector<double>& data) const {
    detail::FlushDenormalsScope ftz;
    std::size_t stride = 1;
    for (int axis = dim_ - 1; axis >= 0; --axis) {
      pass(data, stride);
      stride *= n_;
    }
  }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Lines along one axis: element t of line (block, inner) sits at
  // block * n * stride + t * stride + inner. Each block of lines is an
  // n x stride row-major matrix (or blocks x n when stride == 1).
  void pass(std::vector<double>& data, std::size_t stride) const {
    const std::size_t n = n_;
    const auto N = static_cast<Eigen::Index>(n);
    if (stride == 1) {
      const auto rows = static_cast<Eigen::Index>(data.size() / n);
      Eigen::Map<RowMatrix> X(data.data(), rows, N);
      Eigen::VectorXd mx = X.rowwise().maxCoeff();
      const Eigen::VectorXd shift = mx.unaryExpr([](double m) { return std::isfinite(m) ? m : 0.0; });
      const RowMatrix E = (X.colwise() - shift).array().exp().matrix();
      sums_ = E * kernel_;  // kernel is symmetric
      out_ = (sums_.array().log().colwise() + shift.array()).matrix();
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < N; ++c) {
          if (!std::isfinite(mx(r)) || !(sums_(r, c) > 1e-290 && std::isfinite(sums_(r, c)))) {
            out_(r, c) = exact_entry(&X(r, 0), 1, static_cast<std::size_t>(c));
          }
        }
      }
      X = out_;
    } else {
      const auto W = static_cast<Eigen::Index>(stride);
      const std::size_t block = n * stride;
      for (std::size_t b = 0; b < data.size() / block; ++b) {
        Eigen::Map<RowMatrix> X(data.data() + b * block, N, W);
        Eigen::RowVectorXd mx = X.colwise().maxCoeff();
        const Eigen::RowVectorXd shift = mx.unaryExpr([](double m) { return std::isfinite(m) ? m : 0.0; });
        const RowMatrix E = (X.rowwise() - shift).array().exp().matrix();
        sums_ = kernel_ * E;
        out_ = (sums_.array().log().rowwise() + shift.array()).matrix();
        for (Eigen::Index r = 0; r < N; ++r) {
          for (Eigen::Index c = 0; c < W; ++c) {
            if (!std::isfinite(mx(c)) || !(sums_(r, c) > 1e-290 && std::isfinite(sums_(r, c)))) {
              out_(r, c) = exact_entry(&X(0, c), stride, static_cast<std::size_t>(r));
            }
          }
        }
        X = out_;
      }
    }
  }

  // log sum_j exp(line_j - C_ij) with a per-entry maximum, for entries whose
  // stabilized sum underflowed.
  double exact_entry(const double* line, std::size_t stride, std::size_t i) const {
    const auto I = static_cast<Eigen::Index>(i);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n_; ++j) m = std::max(m, line[j * stride] - cost_(I, static_cast<Eigen::Index>(j)));
    if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) acc += std::exp(line[j * stride] - cost_(I, static_cast<Eigen::Index>(j)) - m);
    return m + std::log(acc);
  }

  int dim_;
  std::size_t n_;
  double eps_;
  Eigen::MatrixXd cost_;
  Eigen::MatrixXd kernel_;
  mutable RowMatrix sums_, out_;
};

/// Entropic transport potentials and value for one (A, B) pair.
struct EntropicSolution {
  double value = 0.0;  // <f, a> + <g, b>
  std::vector<double> f, g;
  std::size_t iterations = 0;
  double violation = 0.0;
  double epsilon = 0.0;
};

namespace detail {

inline std::vector<double> log_weights(const DiscreteMeasure& m) {
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out[i] = m.weights[i] > 0.0 ? std::log(m.weights[i]) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

// c-transform step: out = -eps * log sum_j b_j exp((pot_j - C_ij) / eps).
inline void soft_transform(const LogGibbsOperator& op, const std::vector<double>& log_b, const std::vector<double>& pot,
                           std::vector<double>& out) {
  const double eps = op.epsilon();
  out.resize(pot.size());
  for (std::size_t j = 0; j < pot.size(); ++j) out[j] = log_b[j] + pot[j] / eps;
  op.apply(out);
  for (double& v : out) v *= -eps;
}

inline double marginal_violation(const std::vector<double>& w, const std::vector<double>& old_pot,
                                 const std::vector<double>& new_pot, double eps) {
  CompensatedSum s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) s += w[i] * std::abs(std::expm1((old_pot[i] - new_pot[i]) / eps));
  }
  return s.value();
}

inline double pairing(const std::vector<double>& w, const std::vector<double>& pot) {
  CompensatedSum s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) s += w[i] * pot[i];
  }
  return s.value();
}

// pot <- pot + omega (next - pot); omega = 1 is the plain update. Entries
// that are -inf on either side (zero-mass cells) take the plain update.
inline void relax(std::vector<double>& pot, std::vector<double>& next, double omega) {
  if (omega == 1.0) {
    pot.swap(next);
    return;
  }
  for (std::size_t i = 0; i < pot.size(); ++i) {
    pot[i] = std::isfinite(pot[i]) && std::isfinite(next[i]) ? pot[i] + omega * (next[i] - pot[i]) : next[i];
  }
}

inline std::vector<double> eps_stages(double target, const SinkhornSchedule& sched) {
  std::vector<double> out;
  for (double e = sched.eps_start; e > target; e *= sched.factor) out.push_back(e);
  out.push_back(target);
  return out;
}

}  // namespace detail

/// Entropic OT_eps(A, B) with eps-scaling; potentials are warm-started across
/// stages. Symmetric inputs (same object) use averaged self-updates.
inline EntropicSolution entropic_transport(const DiscreteMeasure& A, const DiscreteMeasure& B, double eps,
                                           const SinkhornSchedule& sched = {}, std::size_t max_iter = 10'000) {
  require_same_grid(A, B, "entropic_transport");
  if (!(eps > 0.0)) throw ArgumentError("entropic_transport: epsilon must be positive");
  if (!(sched.relaxation >= 1.0 && sched.relaxation < 2.0)) {
    throw ArgumentError("entropic_transport: relaxation must lie in [1, 2)");
  }
  const bool symmetric = (&A == &B);
  const auto log_a = detail::log_weights(A);
  const auto log_b = detail::log_weights(B);
  const std::size_t N = A.size();
  std::vector<double> f(N, 0.0), g(N, 0.0), nf, ng;
  EntropicSolution sol;
  sol.epsilon = eps;
  std::size_t iters = 0;
  double violation = std::numeric_limits<double>::infinity();
  const auto stages = detail::eps_stages(eps, sched);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const bool last = s + 1 == stages.size();
    const double e = stages[s];
    const double tol = last ? sched.tolerance : std::max(sched.tolerance, sched.stage_tolerance);
    LogGibbsOperator op(A.dim, A.grid_n, e);
    // Over-relax only once warm: early stages are far from the fixed point.
    const double omega = last ? sched.relaxation : 1.0;
    for (;;) {
      if (iters >= max_iter) {
        throw NumericError("sinkhorn: no convergence within " + std::to_string(max_iter) +
                               " iterations (marginal violation " + std::to_string(violation) + ")",
                           violation);
      }
      ++iters;
      if (symmetric) {
        detail::soft_transform(op, log_a, f, nf);
        violation = detail::marginal_violation(A.weights, f, nf, e);
        for (std::size_t i = 0; i < N; ++i) f[i] = 0.5 * (f[i] + nf[i]);
        if (violation < tol) break;
      } else {
        detail::soft_transform(op, log_b, g, nf);
        const double v_row = detail::marginal_violation(A.weights, f, nf, e);
        detail::relax(f, nf, omega);
        detail::soft_transform(op, log_a, f, ng);
        const double v_col = detail::marginal_violation(B.weights, g, ng, e);
        detail::relax(g, ng, omega);
        violation = std::max(v_row, v_col);
        if (violation < tol) break;
      }
    }
  }
  if (symmetric) g = f;
  sol.value = detail::pairing(A.weights, f) + detail::pairing(B.weights, g);
  sol.f = std::move(f);
  sol.g = std::move(g);
  sol.iterations = iters;
  sol.violation = violation;
  return sol;
}

/// Debiased divergence S_eps(A,B) = OT_eps(A,B) - OT_eps(A,A)/2 - OT_eps(B,B)/2,
/// an estimate of W2(A,B)^2. `gap` is the largest final marginal violation.
inline TransportResult sinkhorn_w2(const DiscreteMeasure& A, const DiscreteMeasure& B, double eps,
                                   const SinkhornSchedule& sched = {}, std::size_t max_iter = 10'000) {
  require_same_grid(A, B, "sinkhorn_w2");
  if (A.dim > kMaxDim) throw ArgumentError("sinkhorn_w2: d must be <= 5");
  if (!(eps > 0.0)) throw ArgumentError("sinkhorn_w2: epsilon must be positive");
  if (std::abs(A.total_mass() - B.total_mass()) > 1e-9) throw ArgumentError("sinkhorn_w2: mass mismatch");
  // Solve in a canonical order so that S(A,B) and S(B,A) are bitwise equal.
  const bool swap = std::lexicographical_compare(B.weights.begin(), B.weights.end(), A.weights.begin(), A.weights.end());
  const DiscreteMeasure& P = swap ? B : A;
  const DiscreteMeasure& Q = swap ? A : B;
  const auto pq = entropic_transport(P, Q, eps, sched, max_iter);
  const auto pp = entropic_transport(P, P, eps, sched, max_iter);
  const auto qq = entropic_transport(Q, Q, eps, sched, max_iter);
  TransportResult r;
  r.value = std::max(0.0, pq.value - 0.5 * pp.value - 0.5 * qq.value);
  r.method = "sinkhorn_debiased";
  r.iterations = pq.iterations + pp.iterations + qq.iterations;
  r.gap = std::max({pq.violation, pp.violation, qq.violation});
  r.epsilon = eps;
  r.squared = true;
  return r;
}

/// A fixed second argument for repeated debiased solves: its self-transport
/// term is computed once.
struct SinkhornReference {
  DiscreteMeasure measure;
  double epsilon = 0.0;
  SinkhornSchedule schedule;
  std::size_t max_iter = 10'000;
  EntropicSolution self;

  static SinkhornReference make(DiscreteMeasure ref, double eps, const SinkhornSchedule& sched = {},
                                std::size_t max_iter = 10'000) {
    if (!(eps > 0.0)) throw ArgumentError("sinkhorn_w2: epsilon must be positive");
    SinkhornReference out{std::move(ref), eps, sched, max_iter, {}};
    out.self = entropic_transport(out.measure, out.measure, eps, sched, max_iter);
    return out;
  }
};

/// Same value as sinkhorn_w2(A, ref.measure, ref.epsilon, ...), bit for bit.
inline TransportResult sinkhorn_w2(const DiscreteMeasure& A, const SinkhornReference& ref) {
  const DiscreteMeasure& B = ref.measure;
  require_same_grid(A, B, "sinkhorn_w2");
  if (std::abs(A.total_mass() - B.total_mass()) > 1e-9) throw ArgumentError("sinkhorn_w2: mass mismatch");
  const bool swap = std::lexicographical_compare(B.weights.begin(), B.weights.end(), A.weights.begin(), A.weights.end());
  const auto pq = swap ? entropic_transport(B, A, ref.epsilon, ref.schedule, ref.max_iter)
                       : entropic_transport(A, B, ref.epsilon, ref.schedule, ref.max_iter);
  const auto aa = entropic_transport(A, A, ref.epsilon, ref.schedule, ref.max_iter);
  const double pp = swap ? ref.self.value : aa.value;
  const double qq = swap ? aa.value : ref.self.value;
  TransportResult r;
  r.value = std::max(0.0, pq.value - 0.5 * pp - 0.5 * qq);
  r.method = "sinkhorn_debiased";
  r.iterations = pq.iterations + aa.iterations + ref.self.iterations;
  r.gap = std::max({pq.violation, aa.violation, ref.self.violation});
  r.epsilon = ref.epsilon;
  r.squared = true;
  return r;
}

}  // namespace diffwass
