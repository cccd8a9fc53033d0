#pragma once

// Reduced costs by min-plus dynamic programming and transport through a
// chain of n intermediate measures.

#include <optional>
#include <vector>

#include "vecot/lp.hpp"
#include "vecot/measures.hpp"
#include "vecot/scalar_ot.hpp"

namespace vecot {

/// c_{f,n} together with the argmin tables of each DP step.
struct ReducedCost {
  Mat value;
  std::vector<Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>> via;  // via[k](x,y): last stop of step k+1

  /// Intermediate stops z_1..z_n of an optimal chain from x to y.
  std::vector<Index> path(Index x, Index y) const {
    std::vector<Index> stops(via.size());
    Index cur = y;
    for (std::size_t k = via.size(); k-- > 0;) {
      cur = via[k](x, cur);
      stops[k] = cur;
    }
    return stops;
  }
};

/// c_{f,0} = c, c_{f,k}(x,y) = min_z c_{f,k-1}(x,z) + c(z,y) - f(z).
/// Ties go to the smallest z.
inline ReducedCost weighted_reduced_cost_paths(const Mat& c, const Vec& f, Index n) {
  const Index m = c.rows();
  require_dims(c.cols() == m, "reduced cost: cost must be square");
  require_dims(f.size() == m, "reduced cost: f size != space size");
  require(n >= 0, "reduced cost: n must be >= 0");
  ReducedCost r;
  r.value = c;
  for (Index k = 0; k < n; ++k) {
    Mat next(m, m);
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> arg(m, m);
    for (Index x = 0; x < m; ++x)
      for (Index y = 0; y < m; ++y) {
        double best = kInf;
        Index bz = 0;
        for (Index z = 0; z < m; ++z) {
          double v = r.value(x, z) + c(z, y) - f(z);
          if (v < best) {
            best = v;
            bz = z;
          }
        }
        next(x, y) = best;
        arg(x, y) = bz;
      }
    r.value = std::move(next);
    r.via.push_back(std::move(arg));
  }
  return r;
}

inline Mat weighted_reduced_cost(const Mat& c, const Vec& f, Index n) {
  return weighted_reduced_cost_paths(c, f, n).value;
}

/// c_{0,n}: cheapest route from x to y through n intermediate stops.
inline Mat reduced_cost(const Mat& c, Index n) { return weighted_reduced_cost(c, Vec::Zero(c.rows()), n); }

/// (A (x) B)(x,y) = min_z A(x,z) + B(z,y).
inline Mat min_plus(const Mat& a, const Mat& b) {
  require_dims(a.cols() == b.rows(), "min_plus: inner dimensions differ");
  Mat out(a.rows(), b.cols());
  for (Index x = 0; x < a.rows(); ++x)
    for (Index y = 0; y < b.cols(); ++y) {
      double best = kInf;
      for (Index z = 0; z < a.cols(); ++z) best = std::min(best, a(x, z) + b(z, y));
      out(x, y) = best;
    }
  return out;
}

struct ChainProblem {
  Mat c;  // |X| x |X|
  ScalarMeasure mu, nu, lambda;
  Index n = 1;
};

struct ChainResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0;
  std::vector<Mat> plans;  // pi_0 .. pi_n
  Vec f;                   // multiplier of the sum_i rho_i = n lambda rows
  double theorem_value = 0;  // (c_{f,n})_#(mu,nu) + n int f dlambda
  std::optional<Vec> farkas;
  LpDiagnostics diag;

  bool feasible() const { return status == LpStatus::Optimal; }
};

namespace detail {

/// Chain LP. Plan i occupies columns [i m^2, (i+1) m^2), entry (x,y) at x*m+y.
/// Rows: mu (m), nu (m), continuity pi_{i-1}^2 = pi_i^1 (n m), and unless
/// free, sum_{i>=1} pi_i^1 = n lambda (m).
inline LpProblem chain_lp(const ChainProblem& p, bool free_medium) {
  const Index m = p.c.rows(), n = p.n, sq = m * m;
  const Index rows = 2 * m + n * m + (free_medium ? 0 : m);
  LpProblem lp(rows, (n + 1) * sq);
  for (Index i = 0; i <= n; ++i)
    for (Index x = 0; x < m; ++x)
      for (Index y = 0; y < m; ++y) {
        Index col = i * sq + x * m + y;
        lp.c(col) = p.c(x, y);
        if (i == 0) lp.A(x, col) = 1.0;
        if (i == n) lp.A(m + y, col) = 1.0;
        if (i >= 1) {
          lp.A(2 * m + (i - 1) * m + x, col) = -1.0;  // pi_i^1(x)
          if (!free_medium) lp.A(2 * m + n * m + x, col) = 1.0;
        }
        if (i < n) lp.A(2 * m + i * m + y, col) += 1.0;  // pi_i^2(y) feeds row i
      }
  lp.b.head(m) = p.mu.weights();
  lp.b.segment(m, m) = p.nu.weights();
  if (!free_medium) lp.b.tail(m) = static_cast<double>(n) * p.lambda.weights();
  return lp;
}

inline void check_chain(const ChainProblem& p, bool need_lambda) {
  const Index m = p.c.rows();
  require_dims(p.c.cols() == m, "chain: cost must be square");
  require(p.c.allFinite(), "chain: cost has non-finite entries");
  require_dims(p.mu.size() == m && p.nu.size() == m, "chain: measure size != space size");
  require(p.n >= 1, "chain: n must be >= 1");
  require(std::abs(p.mu.mass() - p.nu.mass()) <= tol::feasibility, "chain: masses of mu and nu differ");
  if (need_lambda) {
    require_dims(p.lambda.size() == m, "chain: lambda size != space size");
    require(std::abs(p.mu.mass() - p.lambda.mass()) <= tol::feasibility, "chain: mass of lambda differs");
  }
}

}  // namespace detail

/// min sum_i <c, pi_i> over chains mu = rho_0 -> rho_1 .. rho_n -> rho_{n+1} = nu
/// with sum_{i=1..n} rho_i = n lambda. The dual multiplier f of the lambda
/// rows is checked against (c_{f,n})_#(mu,nu) + n int f dlambda.
inline ChainResult chain_ot(const ChainProblem& p) {
  detail::check_chain(p, true);
  const Index m = p.c.rows(), sq = m * m;
  LpProblem lp = detail::chain_lp(p, false);
  LpSolution s = solve(lp);
  ChainResult r;
  r.status = s.status;
  r.diag = s.diag;
  if (s.infeasible()) {
    r.farkas = s.farkas;
    return r;
  }
  require(s.optimal(), "chain: LP unbounded");
  r.value = s.value;
  for (Index i = 0; i <= p.n; ++i) {
    Mat pi(m, m);
    for (Index x = 0; x < m; ++x)
      for (Index y = 0; y < m; ++y) pi(x, y) = std::max(0.0, s.x(i * sq + x * m + y));
    r.plans.push_back(std::move(pi));
  }
  r.f = s.y.tail(m);
  OtResult inner = solve_ot(p.mu, p.nu, weighted_reduced_cost(p.c, r.f, p.n));
  r.theorem_value = inner.value + static_cast<double>(p.n) * r.f.dot(p.lambda.weights());
  if (std::abs(r.value - r.theorem_value) > 1e-6 * (1.0 + std::abs(r.value)))
    throw NumericalBreakdown("chain: dual multiplier does not reproduce the chain value");
  return r;
}

/// Chain value minimized over the medium lambda.
inline double chain_free_medium(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c, Index n) {
  ChainProblem p{c, mu, nu, ScalarMeasure(), n};
  detail::check_chain(p, false);
  LpSolution s = solve(detail::chain_lp(p, true));
  require(s.optimal(), "chain_free_medium: LP not solved to optimality");
  return s.value;
}

}  // namespace vecot
