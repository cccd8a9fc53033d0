#pragma once

// Scalar Kantorovich transport and its variants, each as one LP.

#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vecot/lp.hpp"
#include "vecot/measures.hpp"

namespace vecot {

/// Infeasibility certificate. Which fields are used depends on `kind`:
///  farkas    psi (+) phi >= 0 and <psi,mu> + <phi,nu> < 0
///  kellerer  sum pibar [psi+phi]_+ - <psi,mu> - <phi,nu> < 0
///  local     psi + phi + xi (c - D) >= 0, xi >= 0, <psi,mu> + <phi,nu> < 0
///  strassen  <psi,mu> + <phi,nu> > sup over Gamma of <psi (+) phi, gamma>
/// `violation` is the left side minus the right side of the inequality the
/// certificate breaks; it is always negative.
struct Certificate {
  std::string kind;
  Vec psi, phi;
  Mat xi;
  double violation = 0;
};

struct OtResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0;       // primal objective
  double dual_value = 0;  // dual objective including variant extras
  TransportPlan plan;
  Vec psi, phi;
  double lambda = 0;  // partial transport: multiplier of the total-mass row
  Mat xi;             // capacity: [c - psi - phi]_+
  std::optional<Certificate> certificate;
  LpDiagnostics diag;

  bool feasible() const { return status == LpStatus::Optimal; }
  double gap() const { return std::abs(value - dual_value); }
};

namespace detail {

inline std::vector<Index> positive_atoms(const Vec& w) {
  std::vector<Index> out;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > 0) out.push_back(i);
  return out;
}

inline void check_cost(const Mat& c, Index nx, Index ny) {
  require_dims(c.rows() == nx && c.cols() == ny, "cost matrix shape does not match the measures");
  require(c.allFinite(), "cost matrix has non-finite entries");
}

// Plain transport LP over the kept atoms; variable (i,j) -> i*ny + j.
inline LpProblem transport_lp(const Vec& mu, const Vec& nu, const Mat& c, Sense s = Sense::Min) {
  const Index nx = mu.size(), ny = nu.size();
  LpProblem p(nx + ny, nx * ny, s);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) {
      Index j = x * ny + y;
      p.c(j) = c(x, y);
      p.A(x, j) = 1;
      p.A(nx + y, j) = 1;
    }
  p.b << mu, nu;
  return p;
}

inline Mat submatrix(const Mat& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Mat s(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
  return s;
}

inline Vec subvector(const Vec& v, const std::vector<Index>& idx) {
  Vec s(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) s(static_cast<Index>(i)) = v(idx[i]);
  return s;
}

inline Mat unpack_plan(const Vec& x, const std::vector<Index>& xs, const std::vector<Index>& ys,
                       Index nx, Index ny) {
  Mat m = Mat::Zero(nx, ny);
  const Index k = static_cast<Index>(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      m(xs[i], ys[j]) = std::max(x(static_cast<Index>(i) * k + static_cast<Index>(j)), 0.0);
  return m;
}

// Fill potentials of dropped atoms with the largest values (clipped by `cap`)
// keeping psi(x) + phi(y) <= bound(x,y) on every cell.
inline void extend_potentials(Vec& psi, Vec& phi, const std::vector<char>& kx, const std::vector<char>& ky,
                              const std::function<double(Index, Index)>& bound, double cap) {
  const Index nx = psi.size(), ny = phi.size();
  for (Index y = 0; y < ny; ++y) {
    if (ky[y]) continue;
    double v = cap;
    for (Index x = 0; x < nx; ++x)
      if (kx[x]) v = std::min(v, bound(x, y) - psi(x));
    phi(y) = std::isfinite(v) ? v : 0.0;
  }
  for (Index x = 0; x < nx; ++x) {
    if (kx[x]) continue;
    double v = cap;
    for (Index y = 0; y < ny; ++y) v = std::min(v, bound(x, y) - phi(y));
    psi(x) = std::isfinite(v) ? v : 0.0;
  }
}

inline std::vector<char> mask(const std::vector<Index>& kept, Index n) {
  std::vector<char> m(static_cast<std::size_t>(n), 0);
  for (Index i : kept) m[i] = 1;
  return m;
}

// Farkas certificate of a transport-type LP, extended to dropped atoms so
// that psi(x)+phi(y) >= 0 still holds everywhere.
inline Certificate transport_farkas(const Vec& y, const std::vector<Index>& xs, const std::vector<Index>& ys,
                                    const Vec& mu, const Vec& nu) {
  const Index nx = mu.size(), ny = nu.size();
  Certificate cert;
  cert.kind = "farkas";
  cert.psi = Vec::Zero(nx);
  cert.phi = Vec::Zero(ny);
  const Index kx = static_cast<Index>(xs.size());
  for (Index i = 0; i < kx; ++i) cert.psi(xs[i]) = y(i);
  for (std::size_t j = 0; j < ys.size(); ++j) cert.phi(ys[j]) = y(kx + static_cast<Index>(j));
  auto mx = mask(xs, nx), my = mask(ys, ny);
  double hi_psi = xs.empty() ? 0.0 : -cert.psi.maxCoeff();
  double hi_phi = ys.empty() ? 0.0 : -cert.phi.minCoeff();
  for (Index x = 0; x < nx; ++x)
    if (!mx[x]) cert.psi(x) = std::max(hi_phi, 0.0);
  for (Index j = 0; j < ny; ++j)
    if (!my[j]) cert.phi(j) = std::max(std::max(hi_psi, -cert.psi.minCoeff()), 0.0);
  cert.violation = cert.psi.dot(mu) + cert.phi.dot(nu);
  return cert;
}

inline double min_pair_sum(const Vec& psi, const Vec& phi) {
  return psi.minCoeff() + phi.minCoeff();
}

}  // namespace detail

/// Validate a plain transport certificate; returns its violation.
inline double check_transport_certificate(const Certificate& c, const Vec& mu, const Vec& nu) {
  if (detail::min_pair_sum(c.psi, c.phi) < -tol::entry) return kInf;
  return c.psi.dot(mu) + c.phi.dot(nu);
}

/// min <c, pi> over plans with marginals mu, nu.
inline OtResult solve_ot(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c) {
  using namespace detail;
  const Index nx = mu.size(), ny = nu.size();
  check_cost(c, nx, ny);
  auto xs = positive_atoms(mu.weights()), ys = positive_atoms(nu.weights());
  OtResult res;
  if (xs.empty() && ys.empty()) {
    res.status = LpStatus::Optimal;
    res.plan = TransportPlan(Mat::Zero(nx, ny));
    res.psi = Vec::Zero(nx);
    res.phi = Vec::Zero(ny);
    extend_potentials(res.psi, res.phi, mask(xs, nx), mask(ys, ny), [&](Index x, Index y) { return c(x, y); }, kInf);
    return res;
  }
  LpProblem p = transport_lp(subvector(mu.weights(), xs), subvector(nu.weights(), ys), submatrix(c, xs, ys));
  LpSolution s = solve(p);
  res.status = s.status;
  res.diag = s.diag;
  if (s.infeasible()) {
    res.certificate = transport_farkas(*s.farkas, xs, ys, mu.weights(), nu.weights());
    if (!(check_transport_certificate(*res.certificate, mu.weights(), nu.weights()) < -tol::feasibility))
      throw NumericalBreakdown("solve_ot: certificate failed validation");
    return res;
  }
  res.plan = TransportPlan(unpack_plan(s.x, xs, ys, nx, ny));
  res.psi = Vec::Zero(nx);
  res.phi = Vec::Zero(ny);
  const Index kx = static_cast<Index>(xs.size());
  for (Index i = 0; i < kx; ++i) res.psi(xs[i]) = s.y(i);
  for (std::size_t j = 0; j < ys.size(); ++j) res.phi(ys[j]) = s.y(kx + static_cast<Index>(j));
  extend_potentials(res.psi, res.phi, mask(xs, nx), mask(ys, ny), [&](Index x, Index y) { return c(x, y); }, kInf);
  res.value = (c.array() * res.plan.matrix.array()).sum();
  res.dual_value = res.psi.dot(mu.weights()) + res.phi.dot(nu.weights());
  return res;
}

/// Largest violation of psi(x) + phi(y) <= c(x,y).
inline double dual_violation(const Vec& psi, const Vec& phi, const Mat& c) {
  double v = -kInf;
  for (Index x = 0; x < c.rows(); ++x)
    for (Index y = 0; y < c.cols(); ++y) v = std::max(v, psi(x) + phi(y) - c(x, y));
  return v;
}

/// Transport exactly mass m with row sums <= mu and column sums <= nu.
/// Dual: psi, phi <= 0, lambda free, psi + phi + lambda <= c.
inline OtResult solve_partial(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c, double m) {
  using namespace detail;
  const Index nx = mu.size(), ny = nu.size();
  check_cost(c, nx, ny);
  require(m >= 0 && m <= std::min(mu.mass(), nu.mass()) + tol::feasibility,
          "solve_partial: mass outside [0, min(mu(X), nu(Y))]");
  auto xs = positive_atoms(mu.weights()), ys = positive_atoms(nu.weights());
  OtResult res;
  res.status = LpStatus::Optimal;
  res.psi = Vec::Zero(nx);
  res.phi = Vec::Zero(ny);
  res.plan = TransportPlan(Mat::Zero(nx, ny));
  if (!xs.empty() && !ys.empty()) {
    const Index kx = static_cast<Index>(xs.size()), ky = static_cast<Index>(ys.size());
    LpProblem p = transport_lp(subvector(mu.weights(), xs), subvector(nu.weights(), ys), submatrix(c, xs, ys));
    p.A.conservativeResize(kx + ky + 1, Eigen::NoChange);
    p.A.row(kx + ky).setOnes();
    p.b.conservativeResize(kx + ky + 1);
    p.b(kx + ky) = std::min(m, std::min(p.b.head(kx).sum(), p.b.segment(kx, ky).sum()));
    p.kinds.assign(static_cast<std::size_t>(kx + ky), RowKind::Le);
    p.kinds.push_back(RowKind::Eq);
    LpSolution s = solve(p);
    if (!s.optimal()) throw NumericalBreakdown("solve_partial: feasible LP not solved to optimality");
    res.diag = s.diag;
    res.plan = TransportPlan(unpack_plan(s.x, xs, ys, nx, ny));
    for (Index i = 0; i < kx; ++i) res.psi(xs[i]) = std::min(s.y(i), 0.0);
    for (Index j = 0; j < ky; ++j) res.phi(ys[j]) = std::min(s.y(kx + j), 0.0);
    res.lambda = s.y(kx + ky);
  } else {
    res.lambda = c.size() ? c.minCoeff() : 0.0;
  }
  extend_potentials(res.psi, res.phi, mask(xs, nx), mask(ys, ny),
                    [&](Index x, Index y) { return c(x, y) - res.lambda; }, 0.0);
  res.value = (c.array() * res.plan.matrix.array()).sum();
  res.dual_value = res.psi.dot(mu.weights()) + res.phi.dot(nu.weights()) + res.lambda * m;
  return res;
}

/// max <c, pi> over plans in Pi(mu, nu) with pi <= pibar entrywise.
/// Dual: inf <psi,mu> + <phi,nu> + <pibar, [c - psi - phi]_+>.
inline OtResult solve_capacity(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c, const Mat& pibar) {
  using namespace detail;
  const Index nx = mu.size(), ny = nu.size();
  check_cost(c, nx, ny);
  check_cost(pibar, nx, ny);
  require(pibar.minCoeff() >= 0, "solve_capacity: capacity has negative entries");
  auto xs = positive_atoms(mu.weights()), ys = positive_atoms(nu.weights());
  const Index kx = static_cast<Index>(xs.size()), ky = static_cast<Index>(ys.size());
  OtResult res;
  LpProblem p = transport_lp(subvector(mu.weights(), xs), subvector(nu.weights(), ys), submatrix(c, xs, ys), Sense::Max);
  Mat cap = submatrix(pibar, xs, ys);
  for (Index i = 0; i < kx; ++i)
    for (Index j = 0; j < ky; ++j) p.upper(i * ky + j) = cap(i, j);
  LpSolution s = (kx && ky) ? solve(p) : LpSolution{};
  if (!(kx && ky)) {
    s.status = (kx || ky) ? LpStatus::Infeasible : LpStatus::Optimal;
    if (s.infeasible()) {
      s.farkas = Vec::Zero(kx + ky);
      for (Index i = 0; i < kx + ky; ++i) (*s.farkas)(i) = -1.0;
    }
  }
  res.status = s.status;
  res.diag = s.diag;
  if (s.infeasible()) {
    // Farkas y gives (psi', phi'); the Kellerer pair is their negation.
    Certificate cert;
    cert.kind = "kellerer";
    cert.psi = Vec::Zero(nx);
    cert.phi = Vec::Zero(ny);
    for (Index i = 0; i < kx; ++i) cert.psi(xs[i]) = -(*s.farkas)(i);
    for (Index j = 0; j < ky; ++j) cert.phi(ys[j]) = -(*s.farkas)(kx + j);
    auto mx = mask(xs, nx), my = mask(ys, ny);
    for (Index y = 0; y < ny; ++y)
      if (!my[y]) {
        double v = kInf;
        for (Index x = 0; x < nx; ++x)
          if (mx[x]) v = std::min(v, -cert.psi(x));
        cert.phi(y) = std::isfinite(v) ? v : 0.0;
      }
    for (Index x = 0; x < nx; ++x)
      if (!mx[x]) cert.psi(x) = -cert.phi.maxCoeff();
    double v = -cert.psi.dot(mu.weights()) - cert.phi.dot(nu.weights());
    for (Index x = 0; x < nx; ++x)
      for (Index y = 0; y < ny; ++y) v += pibar(x, y) * std::max(cert.psi(x) + cert.phi(y), 0.0);
    cert.violation = v;
    if (!(v < -tol::feasibility)) throw NumericalBreakdown("solve_capacity: certificate failed validation");
    res.certificate = cert;
    return res;
  }
  res.plan = TransportPlan(kx && ky ? unpack_plan(s.x, xs, ys, nx, ny) : Mat::Zero(nx, ny));
  res.psi = Vec::Zero(nx);
  res.phi = Vec::Zero(ny);
  if (kx && ky) {
    for (Index i = 0; i < kx; ++i) res.psi(xs[i]) = s.y(i);
    for (Index j = 0; j < ky; ++j) res.phi(ys[j]) = s.y(kx + j);
  }
  auto mx = mask(xs, nx), my = mask(ys, ny);
  for (Index y = 0; y < ny; ++y)
    if (!my[y]) {
      double v = -kInf;
      for (Index x = 0; x < nx; ++x)
        if (mx[x]) v = std::max(v, c(x, y) - res.psi(x));
      res.phi(y) = std::isfinite(v) ? v : 0.0;
    }
  for (Index x = 0; x < nx; ++x)
    if (!mx[x]) res.psi(x) = (c.row(x).transpose() - res.phi).maxCoeff();
  res.xi = Mat(nx, ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) res.xi(x, y) = std::max(c(x, y) - res.psi(x) - res.phi(y), 0.0);
  res.value = (c.array() * res.plan.matrix.array()).sum();
  res.dual_value = res.psi.dot(mu.weights()) + res.phi.dot(nu.weights()) + (pibar.array() * res.xi.array()).sum();
  return res;
}

/// Minimizing form of the capacity problem: min <c, pi>, pi <= pibar.
/// Potentials and values are reported for the minimization.
inline OtResult solve_capacity_min(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c, const Mat& pibar) {
  OtResult r = solve_capacity(mu, nu, -c, pibar);
  if (r.feasible()) {
    r.value = -r.value;
    r.dual_value = -r.dual_value;
    r.psi = -r.psi;
    r.phi = -r.phi;
  }
  return r;
}

/// min <c, pi> over plans with X-marginal mu whose Y-marginal nu satisfies
/// T_# nu = nu. Dual: sup <psi, mu> over psi(x) + phi(y) - phi(T y) <= c(x,y);
/// phi carries the invariance multipliers.
inline OtResult solve_invariant(const ScalarMeasure& mu, const std::vector<Index>& T, const Mat& c) {
  using namespace detail;
  const Index nx = mu.size(), ny = static_cast<Index>(T.size());
  check_cost(c, nx, ny);
  for (Index t : T) require_dims(t >= 0 && t < ny, "solve_invariant: T maps outside Y");
  auto xs = positive_atoms(mu.weights());
  const Index kx = static_cast<Index>(xs.size());
  OtResult res;
  res.status = LpStatus::Optimal;
  res.psi = Vec::Zero(nx);
  res.phi = Vec::Zero(ny);
  res.plan = TransportPlan(Mat::Zero(nx, ny));
  if (kx > 0) {
    LpProblem p(kx + ny, kx * ny);
    for (Index i = 0; i < kx; ++i)
      for (Index y = 0; y < ny; ++y) {
        Index j = i * ny + y;
        p.c(j) = c(xs[i], y);
        p.A(i, j) = 1;
        p.A(kx + y, j) += 1;
        p.A(kx + T[y], j) -= 1;
        p.b(i) = mu(xs[i]);
      }
    LpSolution s = solve(p);
    if (!s.optimal()) throw NumericalBreakdown("solve_invariant: LP not solved to optimality");
    res.diag = s.diag;
    std::vector<Index> all(static_cast<std::size_t>(ny));
    std::iota(all.begin(), all.end(), Index{0});
    res.plan = TransportPlan(unpack_plan(s.x, xs, all, nx, ny));
    for (Index i = 0; i < kx; ++i) res.psi(xs[i]) = s.y(i);
    for (Index y = 0; y < ny; ++y) res.phi(y) = s.y(kx + y);
  }
  auto mx = mask(xs, nx);
  for (Index x = 0; x < nx; ++x)
    if (!mx[x]) {
      double v = kInf;
      for (Index y = 0; y < ny; ++y) v = std::min(v, c(x, y) - res.phi(y) + res.phi(T[y]));
      res.psi(x) = v;
    }
  res.value = (c.array() * res.plan.matrix.array()).sum();
  res.dual_value = res.psi.dot(mu.weights());
  return res;
}

/// Largest violation of psi(x) + phi(y) - phi(Ty) <= c(x,y).
inline double invariant_dual_violation(const Vec& psi, const Vec& phi, const std::vector<Index>& T, const Mat& c) {
  double v = -kInf;
  for (Index x = 0; x < c.rows(); ++x)
    for (Index y = 0; y < c.cols(); ++y) v = std::max(v, psi(x) + phi(y) - phi(T[y]) - c(x, y));
  return v;
}

// ---------------------------------------------------------------------------
// Multi-marginal transport.

struct MultiOtResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0, dual_value = 0;
  std::vector<Index> dims;
  Vec joint;                    // row-major over dims, first index slowest
  std::vector<Vec> potentials;  // one per marginal; sum_i psi_i <= c
  std::optional<std::vector<Vec>> certificate;  // sum_i psi_i >= 0, sum <psi_i,mu_i> < 0
  LpDiagnostics diag;
  bool feasible() const { return status == LpStatus::Optimal; }
};

/// Decompose a flat row-major index over dims.
inline std::vector<Index> unravel(Index flat, const std::vector<Index>& dims) {
  std::vector<Index> idx(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    idx[k] = flat % dims[k];
    flat /= dims[k];
  }
  return idx;
}

inline MultiOtResult solve_multimarginal(const std::vector<ScalarMeasure>& mus, const Vec& cost) {
  require(mus.size() >= 2, "solve_multimarginal: need at least two marginals");
  MultiOtResult res;
  double cells = 1;
  for (const auto& m : mus) {
    res.dims.push_back(m.size());
    cells *= static_cast<double>(m.size());
  }
  if (cells > 1e6) throw GuardExceeded("solve_multimarginal: product space exceeds 1e6 cells");
  const Index n = static_cast<Index>(cells);
  require_dims(cost.size() == n, "solve_multimarginal: cost size != product of marginal sizes");
  require(cost.allFinite(), "solve_multimarginal: non-finite cost");
  std::vector<Index> offset;
  Index rows = 0;
  for (auto d : res.dims) {
    offset.push_back(rows);
    rows += d;
  }
  LpProblem p(rows, n);
  p.c = cost;
  for (Index j = 0; j < n; ++j) {
    auto idx = unravel(j, res.dims);
    bool dead = false;
    for (std::size_t k = 0; k < mus.size(); ++k) {
      p.A(offset[k] + idx[k], j) = 1;
      if (mus[k](idx[k]) <= 0) dead = true;
    }
    if (dead) p.upper(j) = 0;  // zero-mass atoms: removed by presolve
  }
  for (std::size_t k = 0; k < mus.size(); ++k) p.b.segment(offset[k], res.dims[k]) = mus[k].weights();
  LpSolution s = solve(p);
  res.status = s.status;
  res.diag = s.diag;
  auto split = [&](const Vec& y) {
    std::vector<Vec> out;
    for (std::size_t k = 0; k < mus.size(); ++k) out.push_back(y.segment(offset[k], res.dims[k]));
    return out;
  };
  if (s.infeasible()) {
    auto cert = split(*s.farkas);
    // Raise zero-mass entries until every cell sum is nonnegative.
    for (std::size_t k = 0; k < mus.size(); ++k)
      for (Index a = 0; a < res.dims[k]; ++a)
        if (mus[k](a) <= 0) {
          double need = 0;
          for (std::size_t q = 0; q < mus.size(); ++q)
            if (q != k) need -= cert[q].minCoeff();
          cert[k](a) = std::max(need, cert[k](a));
        }
    double v = 0, lo = 0;
    for (std::size_t k = 0; k < mus.size(); ++k) {
      v += cert[k].dot(mus[k].weights());
      lo += cert[k].minCoeff();
    }
    if (!(v < -tol::feasibility) || lo < -1e-9) {
      // Check pointwise over cells when the cheap bound is inconclusive.
      for (Index j = 0; j < n; ++j) {
        auto idx = unravel(j, res.dims);
        double sum = 0;
        for (std::size_t k = 0; k < mus.size(); ++k) sum += cert[k](idx[k]);
        if (sum < -1e-9) throw NumericalBreakdown("solve_multimarginal: certificate failed validation");
      }
      if (!(v < -tol::feasibility)) throw NumericalBreakdown("solve_multimarginal: certificate failed validation");
    }
    res.certificate = cert;
    return res;
  }
  res.joint = s.x.cwiseMax(0.0);
  res.potentials = split(s.y);
  // Zero-mass atoms: lower their potential until every cell through them
  // satisfies sum_i psi_i <= c.
  for (std::size_t k = 0; k < mus.size(); ++k)
    for (Index a = 0; a < res.dims[k]; ++a) {
      if (mus[k](a) > 0) continue;
      double v = kInf;
      for (Index j = 0; j < n; ++j) {
        auto idx = unravel(j, res.dims);
        if (idx[k] != a) continue;
        double others = 0;
        for (std::size_t q = 0; q < mus.size(); ++q)
          if (q != k) others += res.potentials[q](idx[q]);
        v = std::min(v, cost(j) - others);
      }
      res.potentials[k](a) = v;
    }
  res.value = cost.dot(res.joint);
  res.dual_value = 0;
  for (std::size_t k = 0; k < mus.size(); ++k) res.dual_value += res.potentials[k].dot(mus[k].weights());
  return res;
}

// ---------------------------------------------------------------------------
// Gluing.

struct GlueResult {
  bool feasible = false;
  bool marginals_agree = true;  // two-measure mode: direct Y-marginal comparison
  bool lp_feasible = false;     // verdict of the LP
  Index nx = 0, ny = 0, nz = 0;
  Vec joint;  // pi(x,y,z) at (x*ny + y)*nz + z
  // Certificate: psi(x,y) + phi(y,z) + xi(x,z) >= 0 with negative total.
  Mat psi, phi, xi;
  double violation = 0;
  LpDiagnostics diag;

  double at(Index x, Index y, Index z) const { return joint((x * ny + y) * nz + z); }
};

/// Plan on X x Y x Z with XY-marginal mu and YZ-marginal nu, and with
/// XZ-marginal lambda when given.
inline GlueResult glue_feasible(const Mat& mu, const Mat& nu, const std::optional<Mat>& lambda = std::nullopt) {
  require_dims(mu.cols() == nu.rows(), "glue_feasible: Y sizes differ");
  require(mu.minCoeff() >= 0 && nu.minCoeff() >= 0, "glue_feasible: negative mass");
  GlueResult g;
  g.nx = mu.rows();
  g.ny = mu.cols();
  g.nz = nu.cols();
  if (lambda) {
    require_dims(lambda->rows() == g.nx && lambda->cols() == g.nz, "glue_feasible: lambda shape");
    require(lambda->minCoeff() >= 0, "glue_feasible: negative mass");
  }
  const Index nxy = g.nx * g.ny, nyz = g.ny * g.nz, nxz = lambda ? g.nx * g.nz : 0;
  LpProblem p(nxy + nyz + nxz, g.nx * g.ny * g.nz);
  for (Index x = 0; x < g.nx; ++x)
    for (Index y = 0; y < g.ny; ++y)
      for (Index z = 0; z < g.nz; ++z) {
        Index j = (x * g.ny + y) * g.nz + z;
        p.A(x * g.ny + y, j) = 1;
        p.A(nxy + y * g.nz + z, j) = 1;
        if (lambda) p.A(nxy + nyz + x * g.nz + z, j) = 1;
      }
  for (Index x = 0; x < g.nx; ++x)
    for (Index y = 0; y < g.ny; ++y) p.b(x * g.ny + y) = mu(x, y);
  for (Index y = 0; y < g.ny; ++y)
    for (Index z = 0; z < g.nz; ++z) p.b(nxy + y * g.nz + z) = nu(y, z);
  if (lambda)
    for (Index x = 0; x < g.nx; ++x)
      for (Index z = 0; z < g.nz; ++z) p.b(nxy + nyz + x * g.nz + z) = (*lambda)(x, z);
  LpSolution s = solve(p);
  g.diag = s.diag;
  g.lp_feasible = s.optimal();
  Vec my = mu.colwise().sum().transpose(), ny_ = nu.rowwise().sum();
  g.marginals_agree = (my - ny_).cwiseAbs().maxCoeff() <= tol::feasibility;
  g.feasible = g.lp_feasible;
  if (s.optimal()) {
    g.joint = s.x.cwiseMax(0.0);
    return g;
  }
  g.psi = Mat::Zero(g.nx, g.ny);
  g.phi = Mat::Zero(g.ny, g.nz);
  g.xi = Mat::Zero(g.nx, g.nz);
  if (!lambda && !g.marginals_agree) {
    // Explicit marginal separation: psi(x,y) = -s(y), phi(y,z) = s(y).
    for (Index y = 0; y < g.ny; ++y) {
      double d = my(y) - ny_(y);
      double sgn = d > tol::feasibility ? 1.0 : (d < -tol::feasibility ? -1.0 : 0.0);
      g.psi.col(y).setConstant(-sgn);
      g.phi.row(y).setConstant(sgn);
    }
  } else {
    const Vec& y = *s.farkas;
    for (Index x = 0; x < g.nx; ++x)
      for (Index yy = 0; yy < g.ny; ++yy) g.psi(x, yy) = y(x * g.ny + yy);
    for (Index yy = 0; yy < g.ny; ++yy)
      for (Index z = 0; z < g.nz; ++z) g.phi(yy, z) = y(nxy + yy * g.nz + z);
    if (lambda)
      for (Index x = 0; x < g.nx; ++x)
        for (Index z = 0; z < g.nz; ++z) g.xi(x, z) = y(nxy + nyz + x * g.nz + z);
  }
  double lo = kInf;
  for (Index x = 0; x < g.nx; ++x)
    for (Index yy = 0; yy < g.ny; ++yy)
      for (Index z = 0; z < g.nz; ++z) lo = std::min(lo, g.psi(x, yy) + g.phi(yy, z) + g.xi(x, z));
  g.violation = (g.psi.array() * mu.array()).sum() + (g.phi.array() * nu.array()).sum();
  if (lambda) g.violation += (g.xi.array() * lambda->array()).sum();
  if (lo < -1e-9 || !(g.violation < -tol::feasibility))
    throw NumericalBreakdown("glue_feasible: certificate failed validation");
  return g;
}

// ---------------------------------------------------------------------------
// Local constraint: support inside {c <= D}.

struct FeasibilityResult {
  bool feasible = false;
  TransportPlan plan;
  std::optional<Certificate> certificate;
  LpDiagnostics diag;
};

inline FeasibilityResult local_constraint_feasible(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& c,
                                                   double D) {
  using namespace detail;
  const Index nx = mu.size(), ny = nu.size();
  check_cost(c, nx, ny);
  require(D >= 0, "local_constraint_feasible: D must be nonnegative");
  LpProblem p = transport_lp(mu.weights(), nu.weights(), Mat::Zero(nx, ny));
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y)
      if (c(x, y) > D) p.upper(x * ny + y) = 0;
  LpSolution s = solve(p);
  FeasibilityResult r;
  r.diag = s.diag;
  if (s.optimal()) {
    r.feasible = true;
    Mat m(nx, ny);
    for (Index x = 0; x < nx; ++x)
      for (Index y = 0; y < ny; ++y) m(x, y) = std::max(s.x(x * ny + y), 0.0);
    r.plan = TransportPlan(m);
    return r;
  }
  Certificate cert;
  cert.kind = "local";
  cert.psi = s.farkas->head(nx);
  cert.phi = s.farkas->tail(ny);
  cert.xi = Mat::Zero(nx, ny);
  double lo = kInf;
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) {
      double sum = cert.psi(x) + cert.phi(y);
      if (c(x, y) > D) cert.xi(x, y) = std::max(-sum, 0.0) / (c(x, y) - D);
      lo = std::min(lo, sum + cert.xi(x, y) * (c(x, y) - D));
    }
  cert.violation = cert.psi.dot(mu.weights()) + cert.phi.dot(nu.weights());
  if (lo < -1e-9 || !(cert.violation < -tol::feasibility))
    throw NumericalBreakdown("local_constraint_feasible: certificate failed validation");
  r.certificate = cert;
  return r;
}

// ---------------------------------------------------------------------------
// Plans in Pi(mu,nu) intersected with a polyhedral set Gamma.

struct LinearConstraint {
  Mat coeffs;  // |X| x |Y|
  RowKind kind = RowKind::Le;
  double rhs = 0;
};

/// sup over gamma >= 0 satisfying Gamma of <w, gamma>; -inf if Gamma is empty
/// and +inf if unbounded.
inline double sup_over_gamma(const Mat& w, const std::vector<LinearConstraint>& gamma) {
  const Index nx = w.rows(), ny = w.cols();
  LpProblem p(static_cast<Index>(gamma.size()), nx * ny, Sense::Max);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) p.c(x * ny + y) = w(x, y);
  for (std::size_t k = 0; k < gamma.size(); ++k) {
    for (Index x = 0; x < nx; ++x)
      for (Index y = 0; y < ny; ++y) p.A(static_cast<Index>(k), x * ny + y) = gamma[k].coeffs(x, y);
    p.kinds[k] = gamma[k].kind;
    p.b(static_cast<Index>(k)) = gamma[k].rhs;
  }
  LpSolution s = solve(p);
  if (s.infeasible()) return -kInf;
  if (s.status == LpStatus::Unbounded) return kInf;
  return s.value;
}

inline FeasibilityResult strassen_feasible(const ScalarMeasure& mu, const ScalarMeasure& nu,
                                           const std::vector<LinearConstraint>& gamma) {
  using namespace detail;
  const Index nx = mu.size(), ny = nu.size();
  for (const auto& g : gamma) {
    require_dims(g.coeffs.rows() == nx && g.coeffs.cols() == ny, "strassen_feasible: constraint shape");
    require(g.coeffs.allFinite() && std::isfinite(g.rhs), "strassen_feasible: non-finite constraint");
  }
  const Index k = static_cast<Index>(gamma.size());
  LpProblem p(nx + ny + k, nx * ny);
  LpProblem base = transport_lp(mu.weights(), nu.weights(), Mat::Zero(nx, ny));
  p.A.topRows(nx + ny) = base.A;
  p.b.head(nx + ny) = base.b;
  for (Index q = 0; q < k; ++q) {
    for (Index x = 0; x < nx; ++x)
      for (Index y = 0; y < ny; ++y) p.A(nx + ny + q, x * ny + y) = gamma[q].coeffs(x, y);
    p.kinds[nx + ny + q] = gamma[q].kind;
    p.b(nx + ny + q) = gamma[q].rhs;
  }
  LpSolution s = solve(p);
  FeasibilityResult r;
  r.diag = s.diag;
  if (s.optimal()) {
    r.feasible = true;
    Mat m(nx, ny);
    for (Index x = 0; x < nx; ++x)
      for (Index y = 0; y < ny; ++y) m(x, y) = std::max(s.x(x * ny + y), 0.0);
    r.plan = TransportPlan(m);
    return r;
  }
  Certificate cert;
  cert.kind = "strassen";
  cert.psi = -s.farkas->head(nx);
  cert.phi = -s.farkas->segment(nx, ny);
  Mat w(nx, ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) w(x, y) = cert.psi(x) + cert.phi(y);
  double sup = sup_over_gamma(w, gamma);
  double lhs = cert.psi.dot(mu.weights()) + cert.phi.dot(nu.weights());
  if (sup == kInf) throw NumericalBreakdown("strassen_feasible: certificate has unbounded supremum");
  cert.violation = sup - lhs;  // -inf when Gamma is empty
  if (!(cert.violation < -tol::feasibility)) throw NumericalBreakdown("strassen_feasible: certificate failed validation");
  r.certificate = cert;
  return r;
}

}  // namespace vecot
