#pragma once

// Dense revised simplex with Bland's rule, dual extraction and Farkas
// certificates.
//
// Dual convention (both senses): y is the Lagrange multiplier of the rows,
// reduced costs are d = c - A^T y and the optimal value equals
//   b^T y + sum_j d_j * (bound of x_j selected by the sign of d_j).
// For min, ge rows have y >= 0 and le rows y <= 0; for max the signs flip.
//
// Farkas convention: y with y >= 0 on le rows, y <= 0 on ge rows, free on eq
// rows, and  y^T b - sum_j min_{l_j <= t <= u_j} (A^T y)_j t  < 0.
// With the default bounds [0, inf) this is A^T y >= 0, y^T b < 0.

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "vecot/common.hpp"

namespace vecot {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowKind { Eq, Le, Ge };
enum class Sense { Min, Max };
enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "?";
}

struct LpProblem {
  Sense sense = Sense::Min;
  Vec c;
  Mat A;
  Vec b;
  std::vector<RowKind> kinds;
  Vec lower, upper;

  LpProblem() = default;
  LpProblem(Index rows, Index cols, Sense s = Sense::Min)
      : sense(s),
        c(Vec::Zero(cols)),
        A(Mat::Zero(rows, cols)),
        b(Vec::Zero(rows)),
        kinds(static_cast<std::size_t>(rows), RowKind::Eq),
        lower(Vec::Zero(cols)),
        upper(Vec::Constant(cols, kInf)) {}

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }

  void set_free(Index j) {
    lower(j) = -kInf;
    upper(j) = kInf;
  }

  void validate() const {
    require_dims(c.size() == A.cols(), "LpProblem: objective size != column count");
    require_dims(b.size() == A.rows(), "LpProblem: rhs size != row count");
    require_dims(static_cast<Index>(kinds.size()) == A.rows(), "LpProblem: row kinds size != row count");
    require_dims(lower.size() == A.cols() && upper.size() == A.cols(),
                 "LpProblem: bound sizes != column count");
    require(c.allFinite() && A.allFinite() && b.allFinite(), "LpProblem: non-finite data");
    for (Index j = 0; j < A.cols(); ++j) {
      require(!std::isnan(lower(j)) && !std::isnan(upper(j)), "LpProblem: NaN bound");
      require(lower(j) <= upper(j), "LpProblem: lower bound exceeds upper bound");
      require(lower(j) < kInf && upper(j) > -kInf, "LpProblem: bound excludes every real");
    }
  }
};

struct LpDiagnostics {
  long pivots = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;
  double slackness = 0;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = std::numeric_limits<double>::quiet_NaN();
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  Vec x, y, reduced;
  std::optional<Vec> farkas;
  std::optional<Vec> ray;
  LpDiagnostics diag;

  bool optimal() const { return status == LpStatus::Optimal; }
  bool infeasible() const { return status == LpStatus::Infeasible; }
};

struct LpOptions {
  int verbosity = 0;  // 1: per-pivot trace, 2: also dump tableaux (small problems only)
  std::ostream* log = nullptr;
};

// ---------------------------------------------------------------------------
// Certificate and residual checks, usable on any candidate answer.

/// Farkas violation y^T b - sum_j min_{t in [l_j,u_j]} (A^T y)_j t; negative
/// means y proves infeasibility. Returns +inf when y breaks a sign rule.
inline double farkas_violation(const LpProblem& p, const Vec& y, double slack = 1e-12) {
  for (Index r = 0; r < p.rows(); ++r) {
    if (p.kinds[r] == RowKind::Le && y(r) < -slack) return kInf;
    if (p.kinds[r] == RowKind::Ge && y(r) > slack) return kInf;
  }
  Vec g = p.A.transpose() * y;
  double v = p.b.dot(y);
  double scale = 1.0 + y.cwiseAbs().maxCoeff() * (1.0 + max_abs(p.A));
  for (Index j = 0; j < p.cols(); ++j) {
    double gj = g(j);
    if (std::abs(gj) <= slack * scale) gj = 0;
    if (gj > 0) {
      if (p.lower(j) == -kInf) return kInf;
      v -= gj * p.lower(j);
    } else if (gj < 0) {
      if (p.upper(j) == kInf) return kInf;
      v -= gj * p.upper(j);
    }
  }
  return v;
}

/// Largest violation of rows and bounds by x.
inline double primal_residual(const LpProblem& p, const Vec& x) {
  Vec ax = p.A * x;
  double r = 0;
  for (Index i = 0; i < p.rows(); ++i) {
    double d = ax(i) - p.b(i);
    switch (p.kinds[i]) {
      case RowKind::Eq: r = std::max(r, std::abs(d)); break;
      case RowKind::Le: r = std::max(r, d); break;
      case RowKind::Ge: r = std::max(r, -d); break;
    }
  }
  for (Index j = 0; j < p.cols(); ++j) {
    r = std::max(r, p.lower(j) - x(j));
    r = std::max(r, x(j) - p.upper(j));
  }
  return r;
}

namespace detail {

// Bound picked by the reduced cost at a dual-feasible point.
inline double bound_for(const LpProblem& p, Index j, double d, bool& missing) {
  bool toward_lower = p.sense == Sense::Min ? d >= 0 : d <= 0;
  double bnd = toward_lower ? p.lower(j) : p.upper(j);
  missing = !std::isfinite(bnd);
  return missing ? 0.0 : bnd;
}

}  // namespace detail

/// b^T y plus bound terms; the dual objective of the given multipliers.
inline double dual_objective(const LpProblem& p, const Vec& y, double* residual = nullptr) {
  Vec d = p.c - p.A.transpose() * y;
  double v = p.b.dot(y);
  double res = 0;
  for (Index j = 0; j < p.cols(); ++j) {
    bool missing = false;
    double bnd = detail::bound_for(p, j, d(j), missing);
    if (missing) {
      res = std::max(res, std::abs(d(j)));
    } else {
      v += d(j) * bnd;
    }
  }
  const double sgn = p.sense == Sense::Min ? 1.0 : -1.0;
  for (Index r = 0; r < p.rows(); ++r) {
    if (p.kinds[r] == RowKind::Ge) res = std::max(res, -sgn * y(r));
    if (p.kinds[r] == RowKind::Le) res = std::max(res, sgn * y(r));
  }
  if (residual) *residual = res;
  return v;
}

/// Largest product of row slack with its multiplier, or of a variable's
/// distance to the bound its reduced cost points at with that reduced cost.
inline double slackness_residual(const LpProblem& p, const Vec& x, const Vec& y) {
  Vec ax = p.A * x;
  Vec d = p.c - p.A.transpose() * y;
  double r = 0;
  for (Index i = 0; i < p.rows(); ++i)
    if (p.kinds[i] != RowKind::Eq) r = std::max(r, std::abs((ax(i) - p.b(i)) * y(i)));
  for (Index j = 0; j < p.cols(); ++j) {
    bool missing = false;
    double bnd = detail::bound_for(p, j, d(j), missing);
    if (!missing) r = std::max(r, std::abs((x(j) - bnd) * d(j)));
  }
  return r;
}

namespace detail {

using SparseCol = std::vector<std::pair<Index, double>>;

// Standard form  S x' = b',  x' >= 0,  b' >= 0.
struct StandardForm {
  Index m = 0;
  std::vector<SparseCol> cols;
  Vec b;
  Vec cost;                       // phase-two costs (min orientation)
  std::vector<char> artificial;   // per column
  // Mapping of structural columns back to original variables.
  std::vector<Index> col_var;     // -1 for slacks and artificials
  std::vector<double> col_sign;
  // Rows: original rows that survived presolve, then bound rows.
  std::vector<Index> row_orig;    // -1 for bound rows
  std::vector<double> row_sign;   // -1 if the row was negated
  std::vector<Index> initial_basis;
};

class Simplex {
 public:
  Simplex(const StandardForm& sf, long pivot_limit, const LpOptions& opt)
      : sf_(sf), m_(sf.m), n_(static_cast<Index>(sf.cols.size())), limit_(pivot_limit), opt_(opt) {
    basis_ = sf.initial_basis;
    pos_.assign(static_cast<std::size_t>(n_), -1);
    for (Index i = 0; i < m_; ++i) pos_[basis_[i]] = i;
    blocked_.assign(static_cast<std::size_t>(n_), 0);
    refactor();
  }

  enum class Outcome { Optimal, Unbounded };

  Outcome run(const Vec& cost, bool phase_two) {
    cost_ = &cost;
    phase_two_ = phase_two;
    for (;;) {
      if (pivots_ >= limit_) throw NumericalBreakdown("simplex: pivot limit exceeded");
      compute_duals();
      Index enter = choose_entering();
      if (enter < 0) return Outcome::Optimal;
      Vec alpha = ftran(enter);
      Index leave = ratio_test(alpha);
      if (leave < 0) {
        ray_col_ = enter;
        ray_alpha_ = alpha;
        return Outcome::Unbounded;
      }
      trace(enter, leave);
      pivot(leave, enter, alpha);
    }
  }

  // After phase one: swap zero-valued artificials out of the basis where a
  // structural column can replace them; block all artificials from entering.
  void drive_out_artificials() {
    for (Index j = 0; j < n_; ++j)
      if (sf_.artificial[j]) blocked_[j] = 1;
    for (Index r = 0; r < m_; ++r) {
      if (!sf_.artificial[basis_[r]]) continue;
      Eigen::RowVectorXd rho = binv_.row(r);
      Index best = -1;
      double best_abs = 1e-7;
      for (Index j = 0; j < n_; ++j) {
        if (pos_[j] >= 0 || sf_.artificial[j]) continue;
        double v = 0;
        for (auto [i, a] : sf_.cols[j]) v += rho(i) * a;
        if (std::abs(v) > best_abs) {
          best_abs = std::abs(v);
          best = j;
        }
      }
      if (best >= 0) {
        Vec alpha = ftran(best);
        pivot(r, best, alpha);
      }
    }
  }

  void refactor() {
    Mat bm = Mat::Zero(m_, m_);
    for (Index i = 0; i < m_; ++i)
      for (auto [r, a] : sf_.cols[basis_[i]]) bm(r, i) = a;
    Eigen::PartialPivLU<Mat> lu(bm);
    binv_ = lu.inverse();
    xb_ = binv_ * sf_.b;
    if (!binv_.allFinite() || !xb_.allFinite()) throw NumericalBreakdown("simplex: singular basis");
    since_refactor_ = 0;
  }

  const Vec& duals() const { return y_; }
  Vec duals_for(const Vec& cost) const {
    Vec cb(m_);
    for (Index i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
    return binv_.transpose() * cb;
  }
  const std::vector<Index>& basis() const { return basis_; }
  const Vec& basic_values() const { return xb_; }
  long pivots() const { return pivots_; }
  Index ray_column() const { return ray_col_; }
  const Vec& ray_alpha() const { return ray_alpha_; }

  Vec primal() const {
    Vec x = Vec::Zero(n_);
    for (Index i = 0; i < m_; ++i) x(basis_[i]) = xb_(i);
    return x;
  }

 private:
  void compute_duals() {
    Vec cb(m_);
    for (Index i = 0; i < m_; ++i) cb(i) = (*cost_)(basis_[i]);
    y_.noalias() = binv_.transpose() * cb;
  }

  // Bland: the lowest-index improving column.
  Index choose_entering() const {
    const double tol = 1e-9 * (1.0 + cost_scale());
    for (Index j = 0; j < n_; ++j) {
      if (pos_[j] >= 0 || blocked_[j]) continue;
      double d = (*cost_)(j);
      for (auto [i, a] : sf_.cols[j]) d -= y_(i) * a;
      if (d < -tol) return j;
    }
    return -1;
  }

  double cost_scale() const {
    if (cost_scale_cache_ < 0 || cost_ptr_cache_ != cost_) {
      cost_ptr_cache_ = cost_;
      cost_scale_cache_ = cost_->size() ? cost_->cwiseAbs().maxCoeff() : 0.0;
    }
    return cost_scale_cache_;
  }

  Vec ftran(Index j) const {
    Vec alpha = Vec::Zero(m_);
    for (auto [i, a] : sf_.cols[j]) alpha.noalias() += a * binv_.col(i);
    return alpha;
  }

  // Minimum ratio; ties go to the lowest basic column index.
  Index ratio_test(const Vec& alpha) const {
    const double piv_tol = 1e-9;
    Index best = -1;
    double best_ratio = kInf;
    for (Index i = 0; i < m_; ++i) {
      double a = alpha(i);
      bool art_fixed = phase_two_ && sf_.artificial[basis_[i]];
      if (art_fixed) {
        // Basic artificials in phase two sit on redundant rows at zero and
        // must stay there.
        if (std::abs(a) <= piv_tol) continue;
      } else if (a <= piv_tol) {
        continue;
      }
      double ratio = art_fixed ? 0.0 : std::max(xb_(i), 0.0) / a;
      const double eps = 1e-12 * (1.0 + std::abs(best_ratio == kInf ? ratio : best_ratio));
      if (best < 0 || ratio < best_ratio - eps ||
          (std::abs(ratio - best_ratio) <= eps && basis_[i] < basis_[best])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }

  void pivot(Index r, Index enter, const Vec& alpha) {
    const double ar = alpha(r);
    const double theta = xb_(r) / ar;
    xb_.noalias() -= theta * alpha;
    xb_(r) = theta;
    Eigen::RowVectorXd br = binv_.row(r) / ar;
    binv_.noalias() -= alpha * br;
    binv_.row(r) = br;
    pos_[basis_[r]] = -1;
    basis_[r] = enter;
    pos_[enter] = r;
    ++pivots_;
    if (++since_refactor_ >= 100) refactor();
  }

  void trace(Index enter, Index leave) const {
    if (opt_.verbosity <= 0) return;
    std::ostream& os = opt_.log ? *opt_.log : std::clog;
    os << "pivot " << pivots_ << (phase_two_ ? " [phase 2]" : " [phase 1]") << " enter " << enter
       << " leave " << basis_[leave] << " (row " << leave << ")\n";
    if (opt_.verbosity >= 2 && m_ * n_ <= 2000) {
      os << "  tableau B^-1 [S | b]:\n";
      for (Index i = 0; i < m_; ++i) {
        os << "  x" << basis_[i] << ":";
        Eigen::RowVectorXd rho = binv_.row(i);
        for (Index j = 0; j < n_; ++j) {
          double v = 0;
          for (auto [k, a] : sf_.cols[j]) v += rho(k) * a;
          os << ' ' << std::setw(9) << std::setprecision(4) << v;
        }
        os << " | " << xb_(i) << '\n';
      }
    }
  }

  const StandardForm& sf_;
  Index m_, n_;
  long limit_;
  LpOptions opt_;
  std::vector<Index> basis_, pos_;
  std::vector<char> blocked_;
  Mat binv_;
  Vec xb_, y_;
  const Vec* cost_ = nullptr;
  mutable const Vec* cost_ptr_cache_ = nullptr;
  mutable double cost_scale_cache_ = -1;
  bool phase_two_ = false;
  long pivots_ = 0;
  int since_refactor_ = 0;
  Index ray_col_ = -1;
  Vec ray_alpha_;
};

// How each original variable is represented in standard form.
struct VarMap {
  enum Kind { Fixed, Shifted, Mirrored, Split } kind = Shifted;
  double offset = 0;  // value when the standard columns are zero
  Index col = -1;     // first standard column
};

}  // namespace detail

/// Solve the LP. Throws DimensionError / PreconditionError for malformed
/// input and NumericalBreakdown when no validated answer can be produced.
inline LpSolution solve(const LpProblem& p, const LpOptions& opt = {}) {
  using namespace detail;
  p.validate();
  const Index m0 = p.rows(), n0 = p.cols();
  const double osign = p.sense == Sense::Min ? 1.0 : -1.0;
  LpSolution sol;

  // Presolve: fixed variables and empty columns whose optimal bound is finite.
  std::vector<VarMap> vm(static_cast<std::size_t>(n0));
  Vec bshift = p.b;
  for (Index j = 0; j < n0; ++j) {
    const double l = p.lower(j), u = p.upper(j);
    bool empty = p.A.col(j).cwiseAbs().maxCoeff() == 0.0;
    if (l == u) {
      vm[j] = {VarMap::Fixed, l, -1};
    } else if (empty) {
      double cj = osign * p.c(j);
      double pick = cj > 0 ? l : (cj < 0 ? u : (std::isfinite(l) ? l : (std::isfinite(u) ? u : 0.0)));
      if (std::isfinite(pick)) vm[j] = {VarMap::Fixed, pick, -1};
    }
    if (vm[j].kind == VarMap::Fixed) bshift -= p.A.col(j) * vm[j].offset;
  }

  // Empty rows: either trivially satisfied (dropped) or a one-row certificate.
  std::vector<char> keep_row(static_cast<std::size_t>(m0), 1);
  for (Index r = 0; r < m0; ++r) {
    bool empty = true;
    for (Index j = 0; j < n0 && empty; ++j)
      if (vm[j].kind != VarMap::Fixed && p.A(r, j) != 0.0) empty = false;
    if (!empty) continue;
    keep_row[r] = 0;
    const double br = bshift(r);
    const double t = tol::feasibility * (1.0 + std::abs(p.b(r)));
    bool bad = (p.kinds[r] == RowKind::Eq && std::abs(br) > t) ||
               (p.kinds[r] == RowKind::Le && br < -t) || (p.kinds[r] == RowKind::Ge && br > t);
    if (bad) {
      Vec y = Vec::Zero(m0);
      y(r) = br > 0 ? -1.0 : 1.0;
      double v = farkas_violation(p, y);
      if (!(v < -tol::feasibility)) throw NumericalBreakdown("lp: empty-row certificate failed validation");
      sol.status = LpStatus::Infeasible;
      sol.farkas = y;
      return sol;
    }
  }

  // Standard form columns for the remaining variables.
  StandardForm sf;
  std::vector<Index> std_row_of(static_cast<std::size_t>(m0), -1);
  for (Index r = 0; r < m0; ++r)
    if (keep_row[r]) {
      std_row_of[r] = static_cast<Index>(sf.row_orig.size());
      sf.row_orig.push_back(r);
    }
  std::vector<std::pair<Index, double>> bound_rows;  // (std column, capacity)
  auto add_struct = [&](Index j, double sign) {
    SparseCol col;
    for (Index r = 0; r < m0; ++r)
      if (keep_row[r] && p.A(r, j) != 0.0) col.push_back({std_row_of[r], sign * p.A(r, j)});
    sf.cols.push_back(std::move(col));
    sf.col_var.push_back(j);
    sf.col_sign.push_back(sign);
    return static_cast<Index>(sf.cols.size() - 1);
  };
  for (Index j = 0; j < n0; ++j) {
    if (vm[j].kind == VarMap::Fixed) continue;
    const double l = p.lower(j), u = p.upper(j);
    if (std::isfinite(l)) {
      vm[j] = {VarMap::Shifted, l, add_struct(j, 1.0)};
      bshift -= p.A.col(j) * l;
      if (std::isfinite(u)) bound_rows.push_back({vm[j].col, u - l});
    } else if (std::isfinite(u)) {
      vm[j] = {VarMap::Mirrored, u, add_struct(j, -1.0)};
      bshift -= p.A.col(j) * u;
    } else {
      vm[j] = {VarMap::Split, 0.0, add_struct(j, 1.0)};
      add_struct(j, -1.0);
    }
  }
  const Index nstruct = static_cast<Index>(sf.cols.size());
  for (auto [col, cap] : bound_rows) {
    Index r = static_cast<Index>(sf.row_orig.size());
    sf.row_orig.push_back(-1);
    sf.cols[col].push_back({r, 1.0});
    (void)cap;
  }
  sf.m = static_cast<Index>(sf.row_orig.size());
  sf.b.resize(sf.m);
  std::vector<RowKind> kind(static_cast<std::size_t>(sf.m));
  for (Index r = 0; r < sf.m; ++r) {
    if (sf.row_orig[r] >= 0) {
      sf.b(r) = bshift(sf.row_orig[r]);
      kind[r] = p.kinds[sf.row_orig[r]];
    } else {
      sf.b(r) = bound_rows[static_cast<std::size_t>(r - (sf.m - static_cast<Index>(bound_rows.size())))].second;
      kind[r] = RowKind::Le;
    }
  }
  // Slacks.
  std::vector<Index> slack_of(static_cast<std::size_t>(sf.m), -1);
  for (Index r = 0; r < sf.m; ++r) {
    if (kind[r] == RowKind::Eq) continue;
    sf.cols.push_back({{r, kind[r] == RowKind::Le ? 1.0 : -1.0}});
    sf.col_var.push_back(-1);
    sf.col_sign.push_back(0);
    slack_of[r] = static_cast<Index>(sf.cols.size() - 1);
  }
  // Make b' >= 0.
  sf.row_sign.assign(static_cast<std::size_t>(sf.m), 1.0);
  for (Index r = 0; r < sf.m; ++r)
    if (sf.b(r) < 0) sf.row_sign[r] = -1.0;
  for (auto& col : sf.cols)
    for (auto& [r, a] : col) a *= sf.row_sign[r];
  for (Index r = 0; r < sf.m; ++r) sf.b(r) *= sf.row_sign[r];
  // Initial basis: a +1 slack where available, else an artificial.
  sf.initial_basis.assign(static_cast<std::size_t>(sf.m), -1);
  for (Index r = 0; r < sf.m; ++r) {
    Index s = slack_of[r];
    if (s >= 0 && sf.cols[s][0].second > 0) sf.initial_basis[r] = s;
  }
  sf.artificial.assign(sf.cols.size(), 0);
  for (Index r = 0; r < sf.m; ++r) {
    if (sf.initial_basis[r] >= 0) continue;
    sf.cols.push_back({{r, 1.0}});
    sf.col_var.push_back(-1);
    sf.col_sign.push_back(0);
    sf.artificial.push_back(1);
    sf.initial_basis[r] = static_cast<Index>(sf.cols.size() - 1);
  }
  const Index ns = static_cast<Index>(sf.cols.size());
  sf.cost = Vec::Zero(ns);
  for (Index k = 0; k < nstruct; ++k) sf.cost(k) = osign * p.c(sf.col_var[k]) * sf.col_sign[k];

  const long limit = 10L * (m0 + n0) * (m0 + n0) + 100;
  Simplex sx(sf, limit, opt);

  auto to_original_rows = [&](const Vec& ystd) {
    Vec y = Vec::Zero(m0);
    for (Index r = 0; r < sf.m; ++r)
      if (sf.row_orig[r] >= 0) y(sf.row_orig[r]) = sf.row_sign[r] * ystd(r);
    return y;
  };

  // Phase one.
  bool has_art = false;
  Vec c1 = Vec::Zero(ns);
  for (Index k = 0; k < ns; ++k)
    if (sf.artificial[k]) {
      c1(k) = 1.0;
      has_art = true;
    }
  if (has_art) {
    sx.run(c1, false);
    sx.refactor();
    double infeas = 0;
    for (Index i = 0; i < sf.m; ++i)
      if (sf.artificial[sx.basis()[i]]) infeas += std::max(sx.basic_values()(i), 0.0);
    if (infeas > tol::feasibility * (1.0 + max_abs(sf.b))) {
      Vec y = -to_original_rows(sx.duals_for(c1));
      double s = y.cwiseAbs().maxCoeff();
      if (s > 0) y /= s;
      for (Index r = 0; r < m0; ++r) {
        if (std::abs(y(r)) < 1e-14) y(r) = 0;
        if (p.kinds[r] == RowKind::Le && y(r) < 0 && y(r) > -1e-11) y(r) = 0;
        if (p.kinds[r] == RowKind::Ge && y(r) > 0 && y(r) < 1e-11) y(r) = 0;
      }
      double v = farkas_violation(p, y, 1e-10);
      // Near-feasible problems can leave a certificate with 0 > v >= -1e-9;
      // it still proves infeasibility, so only a nonnegative v is rejected.
      if (!(v < 0)) throw NumericalBreakdown("lp: Farkas certificate failed validation");
      sol.status = LpStatus::Infeasible;
      sol.farkas = y;
      sol.diag.pivots = sx.pivots();
      return sol;
    }
    sx.drive_out_artificials();
  }

  // Phase two.
  auto outcome = sx.run(sf.cost, true);
  sx.refactor();
  sol.diag.pivots = sx.pivots();

  auto std_to_original = [&](const Vec& xs, bool with_offset) {
    Vec x(n0);
    for (Index j = 0; j < n0; ++j) {
      const VarMap& v = vm[j];
      double off = with_offset ? v.offset : 0.0;
      switch (v.kind) {
        case VarMap::Fixed: x(j) = off; break;
        case VarMap::Shifted: x(j) = off + xs(v.col); break;
        case VarMap::Mirrored: x(j) = off - xs(v.col); break;
        case VarMap::Split: x(j) = xs(v.col) - xs(v.col + 1); break;
      }
    }
    return x;
  };

  if (outcome == Simplex::Outcome::Unbounded) {
    Vec dir = Vec::Zero(ns);
    dir(sx.ray_column()) = 1.0;
    for (Index i = 0; i < sf.m; ++i) dir(sx.basis()[i]) -= sx.ray_alpha()(i);
    Vec r = std_to_original(dir, false);
    double s = r.cwiseAbs().maxCoeff();
    if (s > 0) r /= s;
    // Validate: improving, recession direction of rows and bounds.
    Vec ar = p.A * r;
    bool ok = osign * p.c.dot(r) < -tol::feasibility;
    for (Index i = 0; i < m0 && ok; ++i) {
      double t = 1e-9 * (1.0 + max_abs(p.A));
      if (p.kinds[i] == RowKind::Eq) ok = std::abs(ar(i)) <= t;
      if (p.kinds[i] == RowKind::Le) ok = ar(i) <= t;
      if (p.kinds[i] == RowKind::Ge) ok = ar(i) >= -t;
    }
    for (Index j = 0; j < n0 && ok; ++j) {
      if (std::isfinite(p.upper(j)) && r(j) > 1e-12) ok = false;
      if (std::isfinite(p.lower(j)) && r(j) < -1e-12) ok = false;
    }
    if (!ok) throw NumericalBreakdown("lp: unbounded ray failed validation");
    sol.status = LpStatus::Unbounded;
    sol.ray = r;
    sol.x = std_to_original(sx.primal().cwiseMax(0.0), true);
    return sol;
  }

  Vec xs = sx.primal();
  for (Index k = 0; k < ns; ++k)
    if (xs(k) < 0 && xs(k) > -1e-9) xs(k) = 0;
  sol.status = LpStatus::Optimal;
  sol.x = std_to_original(xs, true);
  sol.y = osign * to_original_rows(sx.duals_for(sf.cost));
  sol.reduced = p.c - p.A.transpose() * sol.y;
  sol.value = p.c.dot(sol.x);
  double dres = 0;
  sol.dual_value = dual_objective(p, sol.y, &dres);
  sol.diag.primal_residual = primal_residual(p, sol.x);
  sol.diag.dual_residual = dres;
  sol.diag.gap = std::abs(sol.value - sol.dual_value);
  sol.diag.slackness = slackness_residual(p, sol.x, sol.y);

  const double pscale = 1.0 + max_abs(p.b) + max_abs(p.A) * (sol.x.size() ? sol.x.cwiseAbs().maxCoeff() : 0.0);
  const double dscale = 1.0 + max_abs(p.c);
  if (sol.diag.primal_residual > tol::feasibility * pscale ||
      sol.diag.dual_residual > tol::feasibility * dscale ||
      sol.diag.gap > tol::gap * (1.0 + std::abs(sol.value)))
    throw NumericalBreakdown("lp: optimal point failed residual validation");
  return sol;
}

/// Number of variables strictly between their bounds.
inline Index count_off_bound(const LpProblem& p, const Vec& x, double eps = 1e-12) {
  Index k = 0;
  for (Index j = 0; j < p.cols(); ++j) {
    bool at_lo = std::isfinite(p.lower(j)) && std::abs(x(j) - p.lower(j)) <= eps;
    bool at_up = std::isfinite(p.upper(j)) && std::abs(x(j) - p.upper(j)) <= eps;
    if (!at_lo && !at_up) ++k;
  }
  return k;
}

/// Solve and insist that the optimum returned is a vertex: at most
/// rows() variables lie strictly between their bounds.
inline LpSolution solve_vertex(const LpProblem& p, const LpOptions& opt = {}) {
  LpSolution s = solve(p, opt);
  if (s.optimal() && count_off_bound(p, s.x, 1e-11) > p.rows())
    throw NumericalBreakdown("lp: optimum is not a basic solution");
  return s;
}

}  // namespace vecot
