#pragma once

// Matrix games, moment problems, trigonometric moments and grid conjugates.

#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "vecot/lp.hpp"
#include "vecot/measures.hpp"

namespace vecot {

// ---------------------------------------------------------------------------
// Zero-sum games. The row player maximizes sigma^T F tau.

struct GameResult {
  double value = 0;
  double lower = 0;  // min_y (sigma^T F)(y)
  double upper = 0;  // max_x (F tau)(x)
  Vec row, col;
};

namespace detail {

/// max v s.t. sum_x sigma(x) G(x,y) >= v on the allowed columns, sigma a
/// probability vector. Columns: sigma then v.
inline LpSolution row_player_lp(const Mat& g, const std::vector<Index>& cols) {
  const Index nx = g.rows(), k = static_cast<Index>(cols.size());
  LpProblem p(k + 1, nx + 1, Sense::Max);
  p.c(nx) = 1.0;
  p.set_free(nx);
  for (Index j = 0; j < k; ++j) {
    p.kinds[j] = RowKind::Ge;
    for (Index x = 0; x < nx; ++x) p.A(j, x) = g(x, cols[j]);
    p.A(j, nx) = -1.0;
  }
  p.A.row(k).head(nx).setOnes();
  p.b(k) = 1.0;
  return solve(p);
}

/// min w s.t. sum_y G(x,y) tau(y) <= w for every x, tau a probability vector
/// on the allowed columns.
inline LpSolution col_player_lp(const Mat& g, const std::vector<Index>& cols) {
  const Index nx = g.rows(), k = static_cast<Index>(cols.size());
  LpProblem p(nx + 1, k + 1);
  p.c(k) = 1.0;
  p.set_free(k);
  for (Index x = 0; x < nx; ++x) {
    p.kinds[x] = RowKind::Le;
    for (Index j = 0; j < k; ++j) p.A(x, j) = g(x, cols[j]);
    p.A(x, k) = -1.0;
  }
  p.A.row(nx).head(k).setOnes();
  p.b(nx) = 1.0;
  return solve(p);
}

inline Vec clean_strategy(Vec s) {
  s = s.cwiseMax(0.0);
  return s / s.sum();
}

inline void fill_bounds(GameResult& r, const Mat& f) {
  r.lower = (r.row.transpose() * f).minCoeff();
  r.upper = (f * r.col).maxCoeff();
}

}  // namespace detail

/// Value and optimal mixed strategies from one LP and its dual. The payoff
/// is shifted to G = F - min F + 1 > 0 and the shift removed afterwards.
inline GameResult game_value(const Mat& f) {
  require_dims(f.rows() > 0 && f.cols() > 0, "game_value: empty payoff matrix");
  require(f.allFinite(), "game_value: non-finite payoff");
  const double shift = 1.0 - f.minCoeff();
  Mat g = f.array() + shift;
  std::vector<Index> cols(static_cast<std::size_t>(f.cols()));
  for (Index y = 0; y < f.cols(); ++y) cols[y] = y;
  LpSolution s = detail::row_player_lp(g, cols);
  if (!s.optimal()) throw NumericalBreakdown("game_value: LP not solved");
  GameResult r;
  r.value = s.value - shift;
  r.row = detail::clean_strategy(s.x.head(f.rows()));
  r.col = detail::clean_strategy(-s.y.head(f.cols()));
  detail::fill_bounds(r, f);
  return r;
}

struct RestrictedGameResult : GameResult {
  double maxmin = 0;  // max_sigma min_{tau << lambda}
  double minmax = 0;  // min_{tau << lambda} max_sigma
};

/// Column player restricted to strategies absolutely continuous with respect
/// to lambda, i.e. supported on {lambda > 0}. Both minimax orders are solved
/// as separate LPs.
inline RestrictedGameResult game_value_restricted(const Mat& f, const ScalarMeasure& lambda) {
  require_dims(lambda.size() == f.cols(), "game_value_restricted: lambda size != column count");
  require(f.allFinite(), "game_value_restricted: non-finite payoff");
  std::vector<Index> cols;
  for (Index y = 0; y < f.cols(); ++y)
    if (lambda(y) > 0) cols.push_back(y);
  require(!cols.empty(), "game_value_restricted: lambda has empty support");
  const double shift = 1.0 - f.minCoeff();
  Mat g = f.array() + shift;
  LpSolution a = detail::row_player_lp(g, cols);
  LpSolution b = detail::col_player_lp(g, cols);
  if (!a.optimal() || !b.optimal()) throw NumericalBreakdown("game_value_restricted: LP not solved");
  RestrictedGameResult r;
  r.maxmin = a.value - shift;
  r.minmax = b.value - shift;
  r.value = r.maxmin;
  r.row = detail::clean_strategy(a.x.head(f.rows()));
  Vec tau = Vec::Zero(f.cols());
  for (std::size_t j = 0; j < cols.size(); ++j) tau(cols[j]) = b.x(static_cast<Index>(j));
  r.col = detail::clean_strategy(tau);
  Mat fs(f.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) fs.col(static_cast<Index>(j)) = f.col(cols[j]);
  r.lower = (r.row.transpose() * fs).minCoeff();
  r.upper = (f * r.col).maxCoeff();
  return r;
}

// ---------------------------------------------------------------------------
// Moment problems

struct MomentResult {
  bool feasible = false;
  Vec weights;  // mu >= 0 with M mu = m
  Vec alpha;    // alpha^T M(x) >= 0 everywhere, alpha^T m < 0
  double residual = 0;   // feasible: max |M mu - m|
  double violation = 0;  // infeasible: alpha^T m
};

/// Either nonnegative weights with M mu = m or a separating alpha.
inline MomentResult moment_feasible(const Mat& m, const Vec& target) {
  require_dims(m.rows() == target.size(), "moment_feasible: target size != moment count");
  require(m.allFinite() && target.allFinite(), "moment_feasible: non-finite data");
  LpProblem p(m.rows(), m.cols());
  p.A = m;
  p.b = target;
  LpSolution s = solve(p);
  MomentResult r;
  if (s.optimal()) {
    r.feasible = true;
    r.weights = s.x.cwiseMax(0.0);
    r.residual = max_abs(m * r.weights - target);
    if (r.residual > tol::feasibility * (1.0 + max_abs(target)))
      throw NumericalBreakdown("moment_feasible: weights fail validation");
    return r;
  }
  r.alpha = *s.farkas;
  Vec g = m.transpose() * r.alpha;
  if (g.minCoeff() < -tol::entry * (1.0 + max_abs(m)))
    throw NumericalBreakdown("moment_feasible: certificate fails validation");
  r.violation = r.alpha.dot(target);
  return r;
}

// ---------------------------------------------------------------------------
// Trigonometric moments

using Cvec = Eigen::VectorXcd;
using Cmat = Eigen::MatrixXcd;

/// Hermitian Toeplitz matrix with first row c_0..c_n.
inline Cmat toeplitz(const Cvec& c) {
  const Index n = c.size();
  Cmat t(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) t(j, k) = k >= j ? c(k - j) : std::conj(c(j - k));
  return t;
}

struct TrigResult {
  Cmat toeplitz;
  Vec eigenvalues;  // ascending
  double min_eig = 0;
  double norm = 0;  // spectral norm
  bool psd = false;
  bool lp_feasible = false;
  Vec weights;  // on theta_j = 2 pi j / G
  std::optional<Vec> certificate;
  bool agree() const { return psd == lp_feasible; }
};

/// Is (c_k) the sequence int z^k dmu on the unit circle? Compares the
/// Toeplitz eigenvalue test with an LP over G equispaced atoms.
inline TrigResult trig_moment(const Cvec& c, Index grid) {
  require(c.size() >= 1, "trig_moment: need c_0");
  const Index n = c.size() - 1;
  require(grid >= 4 * (n + 1), "trig_moment: grid must have at least 4(n+1) points");
  TrigResult r;
  r.toeplitz = toeplitz(c);
  Eigen::SelfAdjointEigenSolver<Cmat> es(r.toeplitz);
  r.eigenvalues = es.eigenvalues();
  r.min_eig = r.eigenvalues.minCoeff();
  r.norm = r.eigenvalues.cwiseAbs().maxCoeff();
  r.psd = r.min_eig >= -1e-9 * r.norm;

  LpProblem p(2 * (n + 1), grid);
  for (Index j = 0; j < grid; ++j) {
    double th = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid);
    for (Index k = 0; k <= n; ++k) {
      p.A(2 * k, j) = std::cos(static_cast<double>(k) * th);
      p.A(2 * k + 1, j) = std::sin(static_cast<double>(k) * th);
    }
  }
  for (Index k = 0; k <= n; ++k) {
    p.b(2 * k) = c(k).real();
    p.b(2 * k + 1) = c(k).imag();
  }
  LpSolution s = solve(p);
  r.lp_feasible = s.optimal();
  if (s.optimal())
    r.weights = s.x.cwiseMax(0.0);
  else
    r.certificate = s.farkas;
  return r;
}

// ---------------------------------------------------------------------------
// Convex functions on one-dimensional grids

struct GridFunction {
  Vec grid;    // strictly increasing
  Vec values;
  double error_bound = 0;  // resolution error carried by derived functions

  GridFunction() = default;
  GridFunction(Vec g, Vec v, double err = 0) : grid(std::move(g)), values(std::move(v)), error_bound(err) {
    require_dims(grid.size() == values.size() && grid.size() >= 1, "GridFunction: grid and values differ in size");
    for (Index i = 1; i < grid.size(); ++i) require(grid(i) > grid(i - 1), "GridFunction: grid not strictly increasing");
  }

  static GridFunction sample(const Vec& g, const std::function<double(double)>& f) {
    Vec v(g.size());
    for (Index i = 0; i < g.size(); ++i) v(i) = f(g(i));
    return GridFunction(g, v);
  }

  Index size() const { return grid.size(); }

  /// Largest absolute discrete slope.
  double lipschitz() const {
    double l = 0;
    for (Index i = 1; i < size(); ++i) l = std::max(l, std::abs((values(i) - values(i - 1)) / (grid(i) - grid(i - 1))));
    return l;
  }

  /// Smallest second divided difference scaled by spacing (>= 0 when convex).
  double min_second_difference() const {
    double m = kInf;
    for (Index i = 1; i + 1 < size(); ++i) {
      double a = (values(i) - values(i - 1)) / (grid(i) - grid(i - 1));
      double b = (values(i + 1) - values(i)) / (grid(i + 1) - grid(i));
      m = std::min(m, b - a);
    }
    return m;
  }

  double spacing() const { return size() > 1 ? (grid(size() - 1) - grid(0)) / static_cast<double>(size() - 1) : 0.0; }
};

inline Vec uniform_grid(double lo, double hi, Index n) {
  require(n >= 2 && hi > lo, "uniform_grid: need n >= 2 and hi > lo");
  return Vec::LinSpaced(n, lo, hi);
}

/// f*(y) = max_i y x_i - f(x_i) on the given dual grid. The bound h/2 (|y|+L)
/// covers the gap to the sup over the whole interval for L-Lipschitz f.
inline GridFunction conjugate(const GridFunction& f, const Vec& dual) {
  Vec v(dual.size());
  for (Index j = 0; j < dual.size(); ++j) v(j) = (dual(j) * f.grid - f.values).maxCoeff();
  double h = 0;
  for (Index i = 1; i < f.size(); ++i) h = std::max(h, f.grid(i) - f.grid(i - 1));
  double ymax = dual.cwiseAbs().maxCoeff();
  return GridFunction(dual, v, 0.5 * h * (ymax + f.lipschitz()));
}

/// Dual grid spanning the discrete slopes of f, with as many points as f.
inline GridFunction conjugate(const GridFunction& f) {
  require(f.size() >= 2, "conjugate: need at least two grid points");
  double lo = kInf, hi = -kInf;
  for (Index i = 1; i < f.size(); ++i) {
    double s = (f.values(i) - f.values(i - 1)) / (f.grid(i) - f.grid(i - 1));
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  return conjugate(f, uniform_grid(lo, hi, f.size()));
}

/// (f_1 [] .. [] f_k)(x) = min over x_1 + .. + x_k = x of sum f_i(x_i), on
/// the Minkowski-sum grid. All grids must share one uniform spacing.
inline GridFunction inf_convolution(const std::vector<GridFunction>& fs) {
  require(!fs.empty(), "inf_convolution: no functions");
  const double h = fs.front().spacing();
  for (const auto& f : fs) {
    for (Index i = 1; i < f.size(); ++i)
      if (std::abs(f.grid(i) - f.grid(i - 1) - h) > 1e-9 * std::max(1.0, h))
        throw DimensionError("inf_convolution: grids do not share one uniform spacing");
    if (f.size() > 1 && std::abs(f.spacing() - h) > 1e-9 * std::max(1.0, h))
      throw DimensionError("inf_convolution: grids do not share one uniform spacing");
  }
  GridFunction acc = fs.front();
  for (std::size_t k = 1; k < fs.size(); ++k) {
    const GridFunction& g = fs[k];
    const Index n = acc.size() + g.size() - 1;
    Vec v = Vec::Constant(n, kInf);
    for (Index i = 0; i < acc.size(); ++i)
      for (Index j = 0; j < g.size(); ++j) v(i + j) = std::min(v(i + j), acc.values(i) + g.values(j));
    double lo = acc.grid(0) + g.grid(0);
    Vec grid(n);
    for (Index i = 0; i < n; ++i) grid(i) = lo + h * static_cast<double>(i);
    acc = GridFunction(grid, v);
  }
  return acc;
}

struct FenchelCheck {
  double primal = 0;  // min_x f1(x) + f2(x)
  double dual = 0;    // max_y -f1*(-y) - f2*(y)
  double gap = 0;
  double bound = 0;   // 4h(1+L)
  bool ok() const { return gap <= bound; }
};

/// Discrete Fenchel-Rockafellar check for two functions on one grid; the
/// dual variable runs over a uniform grid of spacing h on [-L, L].
inline FenchelCheck fenchel_check(const GridFunction& f1, const GridFunction& f2) {
  require_dims(f1.size() == f2.size() && (f1.grid - f2.grid).cwiseAbs().maxCoeff() <= 1e-12,
               "fenchel_check: functions must share a grid");
  FenchelCheck r;
  r.primal = (f1.values + f2.values).minCoeff();
  const double h = f1.spacing();
  const double l = std::max(f1.lipschitz(), f2.lipschitz());
  const Index ny = std::max<Index>(2, static_cast<Index>(std::ceil(2 * l / h)) + 1);
  Vec ys = l > 0 ? uniform_grid(-l, l, ny) : Vec(Vec::Zero(1));
  // ys is symmetric, so f1*(-ys(j)) sits at index ny-1-j.
  GridFunction c1 = conjugate(f1, ys), c2 = conjugate(f2, ys);
  r.dual = (-c1.values.reverse() - c2.values).maxCoeff();
  r.gap = std::abs(r.primal - r.dual);
  r.bound = 4 * h * (1 + l);
  return r;
}

}  // namespace vecot
