#pragma once

// Transport of R^d-valued measures: the plan polytope, dominance with
// certificates, Blackwell's conditions, refinement studies and extensions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "vecot/lp.hpp"
#include "vecot/measures.hpp"
#include "vecot/random.hpp"
#include "vecot/scalar_ot.hpp"

namespace vecot {

struct VectorOtProblem {
  VectorMeasure mu, nu;
  std::optional<Mat> eta;  // |X| x d; defaults to mu.density()
  Mat cost;                // |X| x |Y|; empty means zero cost

  const Mat& density() const { return eta ? *eta : mu.density(); }
};

struct DominanceCert {
  enum class Kind { Kernel, ReversedKernel, Farkas, PartitionFamily };
  Kind kind = Kind::Farkas;
  std::optional<vecot::Kernel> kernel;
  Mat psi, phi;          // farkas: |X| x d and |Y| x d
  double violation = 0;  // farkas: <psi,mu> + <phi,nu>, negative
  std::vector<std::vector<Index>> partitions;  // block of each Y atom
};

inline const char* to_string(DominanceCert::Kind k) {
  switch (k) {
    case DominanceCert::Kind::Kernel: return "kernel";
    case DominanceCert::Kind::ReversedKernel: return "reversedKernel";
    case DominanceCert::Kind::Farkas: return "farkas";
    case DominanceCert::Kind::PartitionFamily: return "partitionFamily";
  }
  return "?";
}

struct VectorOtResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0;
  double dual_value = 0;
  TransportPlan plan;  // density_tag holds eta
  Vec w;               // X-marginal of the plan, <f(x), mu(x)>
  Mat f;               // per-atom witness with <f(x), eta(x)> = 1
  Vec Psi;             // multiplier of the X rows
  Mat psi;             // Psi(x) f(x)
  Mat phi;             // |Y| x d
  std::optional<DominanceCert> certificate;
  LpDiagnostics diag;

  bool feasible() const { return status == LpStatus::Optimal; }
  double gap() const { return std::abs(value - dual_value); }
};

namespace detail {

/// f(x) = (1,..,1) where the density already sums to one, eta/|eta|^2
/// elsewhere. Atoms with eta(x) = 0 get f = 0 and must carry no mass.
inline Mat assumption_witness(const Mat& eta) {
  Mat f = Mat::Zero(eta.rows(), eta.cols());
  for (Index x = 0; x < eta.rows(); ++x) {
    double s = eta.row(x).sum();
    double n2 = eta.row(x).squaredNorm();
    if (std::abs(s - 1.0) <= tol::entry)
      f.row(x).setOnes();
    else if (n2 > 0)
      f.row(x) = eta.row(x) / n2;
  }
  return f;
}

struct VectorLp {
  LpProblem lp;
  std::vector<Index> xs, ys;  // atoms kept in the LP
  Vec w;
  Mat f;
};

/// Plan LP: one row per kept x (sum_y pi = w(x)), d rows per kept y
/// (sum_x eta_i(x) pi = nu_i(y)). Variable index i*|ys| + j.
inline VectorLp vector_plan_lp(const Mat& mu, const Mat& eta, const Mat& nu, const Mat& c) {
  const Index nx = mu.rows(), ny = nu.rows(), d = mu.cols();
  require_dims(eta.rows() == nx && eta.cols() == d, "vector OT: eta shape does not match mu");
  require_dims(nu.cols() == d, "vector OT: mu and nu have different dimensions");
  require_dims(c.rows() == nx && c.cols() == ny, "vector OT: cost shape does not match the measures");
  require(c.allFinite() && eta.allFinite(), "vector OT: non-finite cost or density");
  require(eta.minCoeff() >= -tol::entry, "vector OT: density has negative entries");

  VectorLp v;
  v.f = assumption_witness(eta);
  v.w = Vec::Zero(nx);
  for (Index x = 0; x < nx; ++x) {
    double mx = mu.row(x).cwiseAbs().maxCoeff();
    if (mx == 0) continue;
    require(eta.row(x).squaredNorm() > 0,
            "vector OT: no f with <f, eta> = 1 at atom " + std::to_string(x));
    v.w(x) = v.f.row(x).dot(mu.row(x));
    double err = (mu.row(x) - v.w(x) * eta.row(x)).cwiseAbs().maxCoeff();
    require(err <= tol::feasibility * (1.0 + mx),
            "vector OT: mu is not a multiple of eta at atom " + std::to_string(x));
    v.xs.push_back(x);
  }
  for (Index y = 0; y < ny; ++y)
    if (nu.row(y).cwiseAbs().maxCoeff() > 0) v.ys.push_back(y);

  const Index kx = static_cast<Index>(v.xs.size()), ky = static_cast<Index>(v.ys.size());
  v.lp = LpProblem(kx + ky * d, kx * ky);
  for (Index i = 0; i < kx; ++i) {
    v.lp.b(i) = v.w(v.xs[i]);
    for (Index j = 0; j < ky; ++j) {
      Index col = i * ky + j;
      v.lp.c(col) = c(v.xs[i], v.ys[j]);
      v.lp.A(i, col) = 1.0;
      for (Index k = 0; k < d; ++k) v.lp.A(kx + j * d + k, col) = eta(v.xs[i], k);
    }
  }
  for (Index j = 0; j < ky; ++j)
    for (Index k = 0; k < d; ++k) v.lp.b(kx + j * d + k) = nu(v.ys[j], k);
  return v;
}

inline double eta_sum(const Mat& eta, Index x) { return eta.row(x).sum(); }

/// Fill the Farkas pair on dropped atoms and raise Psi where the LP left a
/// round-off deficit, so <psi(x)+phi(y), eta(x)> >= 0 holds exactly.
inline DominanceCert vector_farkas(const VectorLp& v, const Vec& y, const Mat& mu, const Mat& eta,
                                   const Mat& nu) {
  const Index nx = mu.rows(), ny = nu.rows(), d = mu.cols();
  const Index kx = static_cast<Index>(v.xs.size());
  Vec Psi = Vec::Zero(nx);
  Mat phi = Mat::Zero(ny, d);
  for (Index i = 0; i < kx; ++i) Psi(v.xs[i]) = y(i);
  for (std::size_t j = 0; j < v.ys.size(); ++j)
    for (Index k = 0; k < d; ++k) phi(v.ys[j], k) = y(kx + static_cast<Index>(j) * d + k);

  std::vector<char> ky(static_cast<std::size_t>(ny), 0);
  for (Index j : v.ys) ky[j] = 1;
  double m = 0;
  for (Index x : v.xs) m = std::max(m, -Psi(x) / eta_sum(eta, x));
  for (Index j = 0; j < ny; ++j)
    if (!ky[j]) phi.row(j).setConstant(m);
  for (Index x = 0; x < nx; ++x) {
    double need = -kInf;
    for (Index j = 0; j < ny; ++j) need = std::max(need, -phi.row(j).dot(eta.row(x)));
    Psi(x) = std::max(Psi(x), need);
    if (eta.row(x).squaredNorm() == 0) Psi(x) = 0;
  }
  DominanceCert cert;
  cert.kind = DominanceCert::Kind::Farkas;
  cert.psi = v.f.array().colwise() * Psi.array();
  cert.phi = phi;
  cert.violation = (cert.psi.array() * mu.array()).sum() + (phi.array() * nu.array()).sum();
  return cert;
}

inline Mat zero_cost_if_empty(const Mat& c, Index nx, Index ny) {
  return c.size() == 0 ? Mat(Mat::Zero(nx, ny)) : c;
}

/// Plan LP on raw values. Targets may be arbitrary real matrices, so targets
/// outside the nonnegative cone come back infeasible with a certificate.
inline VectorOtResult solve_vector_values(const Mat& mu, const Mat& eta, const Mat& nu, const Mat& c,
                                          const LpOptions& opt = {}, bool vertex = false) {
  const Index nx = mu.rows(), ny = nu.rows(), d = mu.cols();
  VectorLp v = vector_plan_lp(mu, eta, nu, c);
  VectorOtResult res;
  res.w = v.w;
  res.f = v.f;
  LpSolution s = vertex ? solve_vertex(v.lp, opt) : solve(v.lp, opt);
  res.status = s.status;
  res.diag = s.diag;
  if (s.infeasible()) {
    res.certificate = vector_farkas(v, *s.farkas, mu, eta, nu);
    return res;
  }
  require(s.optimal(), "vector OT: plan LP unbounded");
  res.plan = TransportPlan(unpack_plan(s.x, v.xs, v.ys, nx, ny), eta);

  const Index kx = static_cast<Index>(v.xs.size());
  res.Psi = Vec::Zero(nx);
  res.phi = Mat::Zero(ny, d);
  for (Index i = 0; i < kx; ++i) res.Psi(v.xs[i]) = s.y(i);
  for (std::size_t j = 0; j < v.ys.size(); ++j)
    for (Index k = 0; k < d; ++k) res.phi(v.ys[j], k) = s.y(kx + static_cast<Index>(j) * d + k);

  // Dropped atoms: phi(y) = t (1,..,1) low enough, then c-transform in x.
  std::vector<char> kxm(static_cast<std::size_t>(nx), 0), kym(static_cast<std::size_t>(ny), 0);
  for (Index x : v.xs) kxm[x] = 1;
  for (Index y : v.ys) kym[y] = 1;
  for (Index y = 0; y < ny; ++y) {
    if (kym[y]) continue;
    double t = 0;
    for (Index x : v.xs) t = std::min(t, (c(x, y) - res.Psi(x)) / eta_sum(eta, x));
    res.phi.row(y).setConstant(t);
  }
  for (Index x = 0; x < nx; ++x) {
    if (kxm[x]) continue;
    double t = kInf;
    for (Index y = 0; y < ny; ++y) t = std::min(t, c(x, y) - res.phi.row(y).dot(eta.row(x)));
    res.Psi(x) = t;
  }
  res.psi = v.f.array().colwise() * res.Psi.array();
  res.value = (c.array() * res.plan.matrix.array()).sum();
  res.dual_value = res.Psi.dot(res.w) + (res.phi.array() * nu.array()).sum();
  return res;
}

}  // namespace detail

/// Pointwise check of a Farkas dominance certificate. Returns the violation
/// <psi,mu> + <phi,nu>, or +inf if <psi(x)+phi(y), eta(x)> < -1e-12 somewhere.
inline double check_dominance_certificate(const DominanceCert& c, const Mat& mu, const Mat& eta,
                                          const Mat& nu) {
  for (Index x = 0; x < eta.rows(); ++x)
    for (Index y = 0; y < c.phi.rows(); ++y)
      if ((c.psi.row(x) + c.phi.row(y)).dot(eta.row(x)) < -tol::entry) return kInf;
  return (c.psi.array() * mu.array()).sum() + (c.phi.array() * nu.array()).sum();
}

inline VectorOtResult solve_vector_ot(const VectorOtProblem& p, const LpOptions& opt = {}) {
  Mat c = detail::zero_cost_if_empty(p.cost, p.mu.size(), p.nu.size());
  return detail::solve_vector_values(p.mu.values(), p.density(), p.nu.values(), c, opt);
}

/// Kernel P(x,.) = pi(x,.)/w(x); atoms of zero mass get the uniform row.
inline Kernel plan_kernel(const VectorOtResult& r, const FiniteSpace& xs, const FiniteSpace& ys) {
  return disintegrate(r.plan, Axis::X, xs, ys).first;
}

struct DominanceResult {
  bool dominates = false;
  DominanceCert cert;
  double residual = 0;  // kernel: max |P mu - nu|; farkas: 0
};

/// mu dominates nu iff the plan polytope with eta = density of mu is nonempty.
inline DominanceResult dominates(const VectorMeasure& mu, const VectorMeasure& nu) {
  require_dims(mu.dim() == nu.dim(), "dominates: measures have different dimensions");
  VectorOtResult r = detail::solve_vector_values(mu.values(), mu.density(), nu.values(),
                                                 Mat::Zero(mu.size(), nu.size()));
  DominanceResult out;
  if (!r.feasible()) {
    out.cert = *r.certificate;
    return out;
  }
  out.dominates = true;
  out.cert.kind = DominanceCert::Kind::Kernel;
  Kernel k = plan_kernel(r, mu.space(), nu.space());
  out.residual = max_abs(kernel_apply(k, mu).values() - nu.values());
  out.cert.kernel = std::move(k);
  return out;
}

/// Condition (4) encoding: find a row-stochastic P on all of X x Y with
/// sum_x P(x,y) mu(x) = target(y). Target is a raw |Y| x d matrix.
inline std::optional<Mat> kernel_lp(const Mat& mu, const Mat& target) {
  const Index nx = mu.rows(), ny = target.rows(), d = mu.cols();
  require_dims(target.cols() == d, "kernel_lp: dimension mismatch");
  LpProblem p(nx + ny * d, nx * ny);
  for (Index x = 0; x < nx; ++x) {
    p.b(x) = 1.0;
    for (Index y = 0; y < ny; ++y) {
      Index col = x * ny + y;
      p.A(x, col) = 1.0;
      for (Index k = 0; k < d; ++k) p.A(nx + y * d + k, col) = mu(x, k);
    }
  }
  for (Index y = 0; y < ny; ++y)
    for (Index k = 0; k < d; ++k) p.b(nx + y * d + k) = target(y, k);
  LpSolution s = solve(p);
  if (!s.optimal()) return std::nullopt;
  Mat k(nx, ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) k(x, y) = std::max(0.0, s.x(x * ny + y));
  for (Index x = 0; x < nx; ++x) k.row(x) /= k.row(x).sum();
  return k;
}

// ---------------------------------------------------------------------------
// Blackwell's conditions

struct CondDens {
  bool holds = false;
  Vec s;
  double residual = kInf;
};

/// Least-squares solve of <s, eta(z)> = 1 over the atoms of both measures
/// with positive reference weight.
inline CondDens cond_dens(const VectorMeasure& mu, const VectorMeasure& nu) {
  std::vector<Eigen::RowVectorXd> rows;
  for (Index x = 0; x < mu.size(); ++x)
    if (mu.ref_weights()(x) > 0) rows.push_back(mu.density().row(x));
  for (Index y = 0; y < nu.size(); ++y)
    if (nu.ref_weights()(y) > 0) rows.push_back(nu.density().row(y));
  CondDens out;
  if (rows.empty()) return out;
  Mat e(static_cast<Index>(rows.size()), mu.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) e.row(static_cast<Index>(i)) = rows[i];
  Vec ones = Vec::Ones(e.rows());
  out.s = e.completeOrthogonalDecomposition().solve(ones);
  out.residual = (e * out.s - ones).cwiseAbs().maxCoeff();
  out.holds = out.residual <= tol::feasibility;
  return out;
}

/// Piecewise-linear convex g(z) = max_k a_k . z + b_k; rows are (a_k, b_k).
inline double eval_max_affine(const Mat& g, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  double v = -kInf;
  const Index d = z.size();
  for (Index k = 0; k < g.rows(); ++k) v = std::max(v, g.row(k).head(d).dot(z) + g(k, d));
  return v;
}

/// sum g(eta_mu)|mu| - sum g(eta_nu)|nu|; condition (2) asks for >= 0.
inline double jensen_gap(const std::function<double(const Eigen::RowVectorXd&)>& g,
                         const VectorMeasure& mu, const VectorMeasure& nu) {
  double lhs = 0, rhs = 0;
  for (Index x = 0; x < mu.size(); ++x)
    if (mu.ref_weights()(x) > 0) lhs += g(mu.density().row(x)) * mu.ref_weights()(x);
  for (Index y = 0; y < nu.size(); ++y)
    if (nu.ref_weights()(y) > 0) rhs += g(nu.density().row(y)) * nu.ref_weights()(y);
  return lhs - rhs;
}

struct BlackwellReport {
  CondDens cond;
  bool plan_feasible = false;    // condition (3)
  bool kernel_feasible = false;  // condition (4)
  bool agree() const { return plan_feasible == kernel_feasible; }
  std::optional<Kernel> kernel;
  std::optional<DominanceCert> certificate;

  // Condition (1), only when dominating and CondDens holds.
  bool reversed_checked = false;
  std::optional<Kernel> reversed;
  double forward_mass_residual = kInf;    // |P|mu| - |nu||
  double reversed_mass_residual = kInf;   // |Q|nu| - |mu||
  double density_average_residual = kInf; // |int eta_mu dQ_y - eta_nu(y)|
  bool reversed_ok() const {
    return reversed_checked && forward_mass_residual <= 1e-8 && reversed_mass_residual <= 1e-8 &&
           density_average_residual <= 1e-8;
  }

  // Condition (2) by sampling.
  int samples = 0;
  int jensen_violations = 0;
  double min_jensen_gap = kInf;
  Mat worst_g;
  std::optional<double> certificate_gap;  // Jensen gap of g(z) = max_y <-phi(y), z>

  /// Without CondDens only 1 => 2 => 3 <=> 4 is claimed.
  bool restricted() const { return !cond.holds; }

  bool passes() const {
    if (!agree()) return false;
    if (!plan_feasible) return certificate_gap && *certificate_gap < 0;
    if (restricted()) return true;
    return reversed_ok() && jensen_violations == 0;
  }
};

inline BlackwellReport blackwell_check(const VectorMeasure& mu, const VectorMeasure& nu, int samples,
                                       std::uint64_t seed) {
  require_dims(mu.dim() == nu.dim(), "blackwell_check: measures have different dimensions");
  const Index d = mu.dim();
  BlackwellReport rep;
  rep.cond = cond_dens(mu, nu);

  DominanceResult dom = dominates(mu, nu);
  rep.plan_feasible = dom.dominates;
  auto k4 = kernel_lp(mu.values(), nu.values());
  rep.kernel_feasible = k4.has_value();
  if (dom.dominates) {
    rep.kernel = dom.cert.kernel;
  } else {
    rep.certificate = dom.cert;
    const Mat& phi = dom.cert.phi;
    rep.certificate_gap = jensen_gap(
        [&](const Eigen::RowVectorXd& z) {
          double v = -kInf;
          for (Index y = 0; y < phi.rows(); ++y) v = std::max(v, -phi.row(y).dot(z));
          return v;
        },
        mu, nu);
  }

  if (dom.dominates && rep.cond.holds) {
    rep.reversed_checked = true;
    TransportPlan pi = product(*rep.kernel, mu);
    auto [q, marg] = disintegrate(pi, Axis::Y, mu.space(), nu.space());
    rep.forward_mass_residual = max_abs(marg.weights() - nu.ref_weights());
    rep.reversed_mass_residual = max_abs(q.rows().transpose() * nu.ref_weights() - mu.ref_weights());
    double dens = 0;
    for (Index y = 0; y < nu.size(); ++y) {
      if (nu.ref_weights()(y) <= 0) continue;
      Eigen::RowVectorXd avg = q.rows().row(y) * mu.density();
      dens = std::max(dens, (avg - nu.density().row(y)).cwiseAbs().maxCoeff());
    }
    rep.density_average_residual = dens;
    rep.reversed = std::move(q);
  }

  SplitMix64 rng(seed);
  rep.samples = samples;
  for (int s = 0; s < samples; ++s) {
    Index k = 2 + static_cast<Index>(rng.below(5));
    Mat g(k, d + 1);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j <= d; ++j) g(i, j) = rng.uniform(-1.0, 1.0);
    double gap = jensen_gap([&](const Eigen::RowVectorXd& z) { return eval_max_affine(g, z); }, mu, nu);
    if (gap < -1e-8) ++rep.jensen_violations;
    if (gap < rep.min_jensen_gap) {
      rep.min_jensen_gap = gap;
      rep.worst_g = g;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Finite-partition dominance

inline double bell_number(Index n) {
  std::vector<double> row{1.0};
  for (Index i = 0; i < n; ++i) {
    std::vector<double> next{row.back()};
    for (double v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

/// Calls visit(a, blocks) for every restricted growth string a of length m
/// with at most n blocks; stops early when visit returns false.
inline void for_each_partition(Index m, Index n, const std::function<bool(const std::vector<Index>&, Index)>& visit) {
  if (m == 0) return;
  std::vector<Index> a(static_cast<std::size_t>(m), 0);
  std::function<bool(Index, Index)> rec = [&](Index i, Index used) -> bool {
    if (i == m) return visit(a, used);
    for (Index b = 0; b <= std::min(used, n - 1); ++b) {
      a[i] = b;
      if (!rec(i + 1, std::max(used, b + 1))) return false;
    }
    return true;
  };
  rec(1, 1);
}

struct PartitionResult {
  bool holds = true;
  std::vector<Index> witness;  // block of each Y atom, on failure
  long checked = 0;
  std::optional<DominanceCert> cert;
};

/// mu dominates_n nu: mu dominates every image of nu under a partition of Y
/// into at most n blocks.
inline PartitionResult dominates_n(const VectorMeasure& mu, const VectorMeasure& nu, Index n) {
  require_dims(mu.dim() == nu.dim(), "dominates_n: measures have different dimensions");
  require(n >= 1 && n <= nu.size(), "dominates_n: n must lie in [1, |Y|]");
  if (bell_number(nu.size()) > 1e5)
    throw GuardExceeded("dominates_n: Bell(|Y|) exceeds 1e5");
  PartitionResult out;
  for_each_partition(nu.size(), n, [&](const std::vector<Index>& a, Index blocks) {
    ++out.checked;
    VectorMeasure img = pushforward(nu, a, FiniteSpace::indexed(blocks));
    DominanceResult r = dominates(mu, img);
    if (r.dominates) return true;
    out.holds = false;
    out.witness = a;
    out.cert = r.cert;
    out.cert->partitions = {a};
    return false;
  });
  if (out.holds) {
    out.cert = DominanceCert{};
    out.cert->kind = DominanceCert::Kind::PartitionFamily;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Semi-discrete maps

struct MapResult {
  std::vector<Index> map;         // target atom on deterministic rows, -1 otherwise
  std::vector<Index> split_rows;  // rows with two or more positive entries
  Index bound = 0;                // number of vector-marginal equality rows
  VectorOtResult ot;
};

inline MapResult extract_map(const VectorOtProblem& p, double eps = 1e-12) {
  Mat c = detail::zero_cost_if_empty(p.cost, p.mu.size(), p.nu.size());
  MapResult out;
  out.ot = detail::solve_vector_values(p.mu.values(), p.density(), p.nu.values(), c, {}, true);
  require(out.ot.feasible(), "extract_map: problem is infeasible");
  const Mat& m = out.ot.plan.matrix;
  out.map.assign(static_cast<std::size_t>(m.rows()), -1);
  for (Index x = 0; x < m.rows(); ++x) {
    Index nz = 0, last = -1;
    for (Index y = 0; y < m.cols(); ++y)
      if (m(x, y) > eps) {
        ++nz;
        last = y;
      }
    if (nz == 1) out.map[x] = last;
    if (nz > 1) out.split_rows.push_back(x);
  }
  for (Index y = 0; y < p.nu.size(); ++y)
    if (p.nu.values().row(y).cwiseAbs().maxCoeff() > 0) out.bound += p.mu.dim();
  return out;
}

// ---------------------------------------------------------------------------
// Grid refinement of the dual optimizer

struct RefinementRow {
  Index n = 0;
  double primal = 0, dual = 0, gap = 0;
  double q = 0;     // min over dual optima of max |phi_i(y) - phi_i(y0)|
  double q_lp = 0;  // the same quantity at the dual the simplex returned
  double left_mass = 0;  // plan mass on {x <= split} x {y0}
  Index split_rows = 0;
};

struct RefinementReport {
  std::vector<RefinementRow> rows;
  bool increasing = false;  // q strictly increases along the grids
  bool stable = false;      // last two q within 10%
};

/// Smallest spread of phi over all dual solutions within `slack` of the
/// optimal value.
inline double min_dual_spread(const detail::VectorLp& v, const Mat& nu, double optimum, Index y0,
                              double slack) {
  const Index kx = static_cast<Index>(v.xs.size()), ky = static_cast<Index>(v.ys.size());
  const Index d = nu.cols();
  Index j0 = -1;
  for (Index j = 0; j < ky; ++j)
    if (v.ys[j] == y0) j0 = j;
  require(j0 >= 0, "dual_refinement_study: reference atom carries no mass");
  const Index nvar = kx + ky * d + 1, t = nvar - 1;
  const Index npair = kx * ky, nspread = 2 * (ky - 1) * d;
  LpProblem p(npair + 1 + nspread, nvar);
  for (Index j = 0; j < kx + ky * d; ++j) p.set_free(j);
  p.c(t) = 1.0;
  for (Index col = 0; col < npair; ++col) {
    p.kinds[col] = RowKind::Le;
    p.b(col) = v.lp.c(col);
    for (Index r = 0; r < v.lp.rows(); ++r) p.A(col, r) = v.lp.A(r, col);
  }
  // Shifting every phi(y) by v and Psi(x) by -<v, eta(x)> changes neither the
  // dual value nor the spread, so phi(y0) = 0 loses nothing. Leaving it free
  // makes the LP degenerate enough to wreck the basis at N = 400.
  for (Index k = 0; k < d; ++k) p.lower(kx + j0 * d + k) = p.upper(kx + j0 * d + k) = 0.0;
  p.kinds[npair] = RowKind::Ge;
  p.b(npair) = optimum - slack;
  for (Index r = 0; r < v.lp.rows(); ++r) p.A(npair, r) = v.lp.b(r);
  Index row = npair + 1;
  for (Index j = 0; j < ky; ++j) {
    if (j == j0) continue;
    for (Index k = 0; k < d; ++k)
      for (double sgn : {1.0, -1.0}) {
        p.kinds[row] = RowKind::Le;
        p.A(row, kx + j * d + k) = sgn;
        p.A(row, kx + j0 * d + k) = -sgn;
        p.A(row, t) = -1.0;
        ++row;
      }
  }
  LpSolution s = solve(p);
  if (!s.optimal()) throw NumericalBreakdown("dual_refinement_study: spread LP failed");
  return s.value;
}

/// For each N: midpoint grid on [0,1] with weights 1/N and the given vector
/// density, fixed targets nu (|Y| x d) and cost c(x, y).
inline RefinementReport dual_refinement_study(const std::function<Eigen::RowVectorXd(double)>& density,
                                              const Mat& nu, const std::function<double(double, Index)>& cost,
                                              const std::vector<Index>& grids, Index y0 = 0,
                                              double split = 0.5) {
  RefinementReport rep;
  const Index ny = nu.rows(), d = nu.cols();
  for (Index n : grids) {
    require(n >= 1, "dual_refinement_study: grid size must be positive");
    Mat eta(n, d), c(n, ny);
    for (Index i = 0; i < n; ++i) {
      double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      Eigen::RowVectorXd e = density(x);
      require_dims(e.size() == d, "dual_refinement_study: density dimension != target dimension");
      eta.row(i) = e;
      for (Index y = 0; y < ny; ++y) c(i, y) = cost(x, y);
    }
    Mat mu = eta / static_cast<double>(n);
    detail::VectorLp v = detail::vector_plan_lp(mu, eta, nu, c);
    VectorOtResult r = detail::solve_vector_values(mu, eta, nu, c, {}, true);
    require(r.feasible(), "dual_refinement_study: grid problem infeasible at N = " + std::to_string(n));
    RefinementRow row;
    row.n = n;
    row.primal = r.value;
    row.dual = r.dual_value;
    row.gap = r.gap();
    for (Index y = 0; y < ny; ++y)
      row.q_lp = std::max(row.q_lp, (r.phi.row(y) - r.phi.row(y0)).cwiseAbs().maxCoeff());
    row.q = min_dual_spread(v, nu, r.value, y0, tol::feasibility * (1.0 + std::abs(r.value)));
    for (Index i = 0; i < n; ++i) {
      double x = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      if (x <= split) row.left_mass += r.plan.matrix(i, y0);
      Index nz = 0;
      for (Index y = 0; y < ny; ++y) nz += r.plan.matrix(i, y) > 1e-12;
      if (nz > 1) ++row.split_rows;
    }
    rep.rows.push_back(row);
  }
  rep.increasing = rep.rows.size() >= 2;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].q > rep.rows[i - 1].q)) rep.increasing = false;
  if (rep.rows.size() >= 2) {
    double a = rep.rows[rep.rows.size() - 2].q, b = rep.rows.back().q;
    rep.stable = std::abs(b - a) <= 0.1 * std::max(std::abs(a), std::abs(b));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Martingale formulation

struct MartingaleResult {
  LpStatus status = LpStatus::Infeasible;
  double value = 0, dual_value = 0;
  TransportPlan plan;
  Vec Psi, Phi;
  Mat zeta;  // |Y| x d
  std::optional<Vec> farkas;  // raw LP certificate: rows X, then Y, then martingale rows
  LpDiagnostics diag;

  bool feasible() const { return status == LpStatus::Optimal; }
  double gap() const { return std::abs(value - dual_value); }
};

/// Plans in Pi(|mu|,|nu|) with sum_x pi(x,y) (f(x) - g(y)) = 0 for every y.
/// Dual: Psi(x) + Phi(y) + <zeta(y), f(x) - g(y)> <= c(x,y).
inline MartingaleResult martingale_polytope(const ScalarMeasure& mu, const ScalarMeasure& nu, const Mat& f,
                                            const Mat& g, const Mat& c) {
  const Index nx = mu.size(), ny = nu.size(), d = f.cols();
  require_dims(f.rows() == nx && g.rows() == ny && g.cols() == d, "martingale_polytope: f or g has wrong shape");
  detail::check_cost(c, nx, ny);
  require(std::abs(mu.mass() - nu.mass()) <= tol::mass, "martingale_polytope: total masses differ");
  LpProblem p(nx + ny + ny * d, nx * ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) {
      Index col = x * ny + y;
      p.c(col) = c(x, y);
      p.A(x, col) = 1.0;
      p.A(nx + y, col) = 1.0;
      for (Index k = 0; k < d; ++k) p.A(nx + ny + y * d + k, col) = f(x, k) - g(y, k);
    }
  p.b.head(nx) = mu.weights();
  p.b.segment(nx, ny) = nu.weights();
  LpSolution s = solve(p);
  MartingaleResult r;
  r.status = s.status;
  r.diag = s.diag;
  if (s.infeasible()) {
    r.farkas = s.farkas;
    return r;
  }
  require(s.optimal(), "martingale_polytope: LP unbounded");
  Mat m(nx, ny);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y) m(x, y) = s.x(x * ny + y);
  r.plan = TransportPlan(m);
  r.Psi = s.y.head(nx);
  r.Phi = s.y.segment(nx, ny);
  r.zeta = Mat(ny, d);
  for (Index y = 0; y < ny; ++y)
    for (Index k = 0; k < d; ++k) r.zeta(y, k) = s.y(nx + ny + y * d + k);
  r.value = (c.array() * r.plan.matrix.array()).sum();
  r.dual_value = r.Psi.dot(mu.weights()) + r.Phi.dot(nu.weights());
  return r;
}

// ---------------------------------------------------------------------------
// Range of partitions and strong dominance

enum class RangeMode { Relaxed, AtomicExact };

struct RangeResult {
  bool member = false;
  Mat g;  // |X| x n; g(x,i) the share of atom x in part i
};

/// Is (s_1..s_n) (rows of s) equal to (int g_1 dmu, .., int g_n dmu) for some
/// g >= 0 with sum_i g_i = 1? AtomicExact restricts g to indicator functions.
inline RangeResult multi_range(const VectorMeasure& mu, const Mat& s, RangeMode mode) {
  require_dims(s.cols() == mu.dim(), "multi_range: target dimension != measure dimension");
  const Index n = s.rows(), nx = mu.size();
  require(n >= 1, "multi_range: need at least one part");
  RangeResult out;
  if (mode == RangeMode::Relaxed) {
    auto k = kernel_lp(mu.values(), s);
    if (k) {
      out.member = true;
      out.g = *k;
    }
    return out;
  }
  if (nx > 20) throw GuardExceeded("multi_range: atomicExact needs |X| <= 20");
  std::vector<Index> live;
  for (Index x = 0; x < nx; ++x)
    if (mu.values().row(x).cwiseAbs().maxCoeff() > 0) live.push_back(x);
  if (std::pow(static_cast<double>(n), static_cast<double>(live.size())) > 1e7)
    throw GuardExceeded("multi_range: n^|X| exceeds 1e7");
  std::vector<Index> assign(live.size(), 0);
  Mat sums = Mat::Zero(n, mu.dim());
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == live.size()) return (sums - s).cwiseAbs().maxCoeff() <= tol::feasibility;
    for (Index b = 0; b < n; ++b) {
      assign[i] = b;
      sums.row(b) += mu.values().row(live[i]);
      bool ok = rec(i + 1);
      sums.row(b) -= mu.values().row(live[i]);
      if (ok) return true;
    }
    return false;
  };
  if (rec(0)) {
    out.member = true;
    out.g = Mat::Zero(nx, n);
    for (Index x = 0; x < nx; ++x) out.g(x, 0) = 1.0;
    for (std::size_t i = 0; i < live.size(); ++i) {
      out.g(live[i], 0) = 0.0;
      out.g(live[i], assign[i]) = 1.0;
    }
  }
  return out;
}

struct StrongDominanceResult {
  bool strong = false;
  bool totals_equal = false;
  bool dominates = false;
  std::vector<std::pair<std::vector<Index>, std::vector<Index>>> failing;  // (A, B)
  long pairs_checked = 0;
};

inline std::vector<Index> mask_atoms(unsigned long m, Index n) {
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i)
    if (m >> i & 1UL) out.push_back(i);
  return out;
}

/// For every nonempty A and B with mu(A) = nu(B), mu|A must dominate nu|B.
/// Every failing pair is returned.
inline StrongDominanceResult strong_dominates(const VectorMeasure& mu, const VectorMeasure& nu) {
  require_dims(mu.dim() == nu.dim(), "strong_dominates: measures have different dimensions");
  const Index nx = mu.size(), ny = nu.size(), d = mu.dim();
  if (nx > 16 || ny > 16) throw GuardExceeded("strong_dominates: needs |X|, |Y| <= 16");
  StrongDominanceResult out;
  out.totals_equal = (mu.total() - nu.total()).cwiseAbs().maxCoeff() <= tol::feasibility;
  out.dominates = dominates(mu, nu).dominates;
  const unsigned long full_y = (1UL << ny) - 1;

  // Subset sums of nu, indexed by mask and sorted by first component.
  Mat ysum(full_y + 1, d);
  ysum.row(0).setZero();
  for (unsigned long m = 1; m <= full_y; ++m) {
    Index low = 0;
    while (!(m >> low & 1UL)) ++low;
    ysum.row(static_cast<Index>(m)) = ysum.row(static_cast<Index>(m & (m - 1))) + nu.values().row(low);
  }
  std::vector<unsigned long> order(full_y);
  for (unsigned long m = 1; m <= full_y; ++m) order[m - 1] = m;
  std::sort(order.begin(), order.end(), [&](unsigned long a, unsigned long b) {
    return ysum(static_cast<Index>(a), 0) < ysum(static_cast<Index>(b), 0);
  });

  const unsigned long full_x = (1UL << nx) - 1;
  Mat xsum(full_x + 1, d);
  xsum.row(0).setZero();
  for (unsigned long a = 1; a <= full_x; ++a) {
    Index low = 0;
    while (!(a >> low & 1UL)) ++low;
    xsum.row(static_cast<Index>(a)) = xsum.row(static_cast<Index>(a & (a - 1))) + mu.values().row(low);
  }
  for (unsigned long a = 1; a <= full_x; ++a) {
    Eigen::RowVectorXd ma = xsum.row(static_cast<Index>(a));
    if (ma.cwiseAbs().maxCoeff() <= tol::feasibility) continue;
    auto lo = std::lower_bound(order.begin(), order.end(), ma(0) - tol::feasibility,
                               [&](unsigned long m, double v) { return ysum(static_cast<Index>(m), 0) < v; });
    for (auto it = lo; it != order.end() && ysum(static_cast<Index>(*it), 0) <= ma(0) + tol::feasibility; ++it) {
      if ((ysum.row(static_cast<Index>(*it)) - ma).cwiseAbs().maxCoeff() > tol::feasibility) continue;
      ++out.pairs_checked;
      auto as = mask_atoms(a, nx), bs = mask_atoms(*it, ny);
      if (!dominates(mu.restrict(as), nu.restrict(bs)).dominates) out.failing.emplace_back(as, bs);
    }
  }
  std::sort(out.failing.begin(), out.failing.end());
  out.strong = out.totals_equal && out.failing.empty();
  return out;
}

}  // namespace vecot
