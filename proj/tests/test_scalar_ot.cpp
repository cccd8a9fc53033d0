#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>

#include "vecot/scalar_ot.hpp"

using namespace vecot;

namespace {

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

Vec random_weights(Index n, std::mt19937_64& rng, double total = 1.0) {
  std::uniform_real_distribution<double> u(0.05, 1);
  Vec w(n);
  for (Index i = 0; i < n; ++i) w(i) = u(rng);
  return w * (total / w.sum());
}

Mat random_cost(Index r, Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

void expect_valid_ot(const OtResult& r, const Vec& mu, const Vec& nu, const Mat& c) {
  ASSERT_TRUE(r.feasible());
  EXPECT_LE((r.plan.x_marginal() - mu).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((r.plan.y_marginal() - nu).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(dual_violation(r.psi, r.phi, c), 1e-9);
  EXPECT_LE(r.gap(), 1e-7 * (1 + std::abs(r.value)));
}

// Edmonds-Karp on the bipartite graph s -> x -> y -> t.
double max_flow(const Vec& mu, const Vec& nu, const Mat& allowed) {
  const Index nx = mu.size(), ny = nu.size(), n = nx + ny + 2, s = n - 2, t = n - 1;
  Mat cap = Mat::Zero(n, n);
  for (Index x = 0; x < nx; ++x) cap(s, x) = mu(x);
  for (Index y = 0; y < ny; ++y) cap(nx + y, t) = nu(y);
  for (Index x = 0; x < nx; ++x)
    for (Index y = 0; y < ny; ++y)
      if (allowed(x, y) > 0) cap(x, nx + y) = 1e9;
  double flow = 0;
  for (;;) {
    std::vector<Index> prev(static_cast<std::size_t>(n), -1);
    prev[s] = s;
    std::deque<Index> q{s};
    while (!q.empty() && prev[t] < 0) {
      Index u = q.front();
      q.pop_front();
      for (Index v = 0; v < n; ++v)
        if (prev[v] < 0 && cap(u, v) > 1e-15) {
          prev[v] = u;
          q.push_back(v);
        }
    }
    if (prev[t] < 0) break;
    double aug = kInf;
    for (Index v = t; v != s; v = prev[v]) aug = std::min(aug, cap(prev[v], v));
    for (Index v = t; v != s; v = prev[v]) {
      cap(prev[v], v) -= aug;
      cap(v, prev[v]) += aug;
    }
    flow += aug;
  }
  return flow;
}

}  // namespace

TEST(SolveOt, IdentityIsOptimalForZeroDiagonal) {
  Vec w(3);
  w << 0.2, 0.3, 0.5;
  Mat c(3, 3);
  c << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  auto r = solve_ot(ScalarMeasure(w), ScalarMeasure(w), c);
  expect_valid_ot(r, w, w, c);
  EXPECT_NEAR(r.value, 0, 1e-12);
  EXPECT_LE((r.plan.matrix - Mat(w.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SolveOt, ForcedTwoPointPlan) {
  Vec mu(2), nu(2);
  mu << 1, 0;
  nu << 0, 1;
  Mat c(2, 2);
  c << 0.3, 0.7, 0.1, 0.9;
  auto r = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), c);
  expect_valid_ot(r, mu, nu, c);
  EXPECT_NEAR(r.value, 0.7, 1e-12);
}

TEST(SolveOt, UniformMarginalsMatchPermutationEnumeration) {
  auto rng = rng_for(21);
  const Index n = 6;
  Vec w = Vec::Constant(n, 1.0 / n);
  for (int t = 0; t < 10; ++t) {
    Mat c = random_cost(n, n, rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
      double v = 0;
      for (Index i = 0; i < n; ++i) v += c(i, perm[i]) / n;
      best = std::min(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));
    auto r = solve_ot(ScalarMeasure(w), ScalarMeasure(w), c);
    expect_valid_ot(r, w, w, c);
    EXPECT_NEAR(r.value, best, 1e-10);
  }
}

TEST(SolveOt, MassMismatchGivesCertificate) {
  Vec mu(2), nu(2);
  mu << 0.5, 0.5;
  nu << 1, 1;
  auto r = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), Mat::Ones(2, 2));
  ASSERT_FALSE(r.feasible());
  ASSERT_TRUE(r.certificate);
  EXPECT_LT(check_transport_certificate(*r.certificate, mu, nu), -1e-9);
}

TEST(SolveOt, ZeroMassAtomsAreDroppedAndReinserted) {
  Vec mu(4), nu(3);
  mu << 0.5, 0, 0.5, 0;
  nu << 0, 0.6, 0.4;
  auto rng = rng_for(2);
  Mat c = random_cost(4, 3, rng);
  auto r = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), c);
  expect_valid_ot(r, mu, nu, c);
  EXPECT_EQ(r.plan.matrix.row(1).sum(), 0.0);
  EXPECT_EQ(r.plan.matrix.col(0).sum(), 0.0);
}

TEST(SolveOt, PotentialShiftInvariance) {
  auto rng = rng_for(23);
  for (int t = 0; t < 10; ++t) {
    Vec mu = random_weights(5, rng), nu = random_weights(4, rng);
    Mat c = random_cost(5, 4, rng);
    Vec a = random_weights(5, rng, 3.0), b = random_weights(4, rng, 2.0);
    Mat c2 = c + a * Eigen::RowVectorXd::Ones(4) + Vec::Ones(5) * b.transpose();
    auto r1 = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), c);
    auto r2 = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), c2);
    EXPECT_NEAR(r2.value - a.dot(mu) - b.dot(nu), r1.value, 1e-8);
  }
}

TEST(Partial, EndpointsAndConvexity) {
  auto rng = rng_for(31);
  Vec mu = random_weights(4, rng, 1.0), nu = random_weights(5, rng, 1.4);
  Mat c = random_cost(4, 5, rng);
  auto zero = solve_partial(ScalarMeasure(mu), ScalarMeasure(nu), c, 0.0);
  EXPECT_NEAR(zero.value, 0, 1e-12);
  EXPECT_NEAR(zero.plan.mass(), 0, 1e-12);

  Vec nu_eq = nu / nu.sum();
  auto full = solve_partial(ScalarMeasure(mu), ScalarMeasure(nu_eq), c, 1.0);
  auto ot = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu_eq), c);
  EXPECT_NEAR(full.value, ot.value, 1e-9);

  std::vector<double> vals;
  for (int k = 0; k <= 10; ++k) {
    double m = 0.1 * k;
    auto r = solve_partial(ScalarMeasure(mu), ScalarMeasure(nu), c, m);
    ASSERT_TRUE(r.feasible());
    EXPECT_NEAR(r.plan.mass(), m, 1e-9);
    EXPECT_LE((r.plan.x_marginal() - mu).maxCoeff(), 1e-9);
    EXPECT_LE((r.plan.y_marginal() - nu).maxCoeff(), 1e-9);
    EXPECT_LE(r.psi.maxCoeff(), 0.0);
    EXPECT_LE(r.phi.maxCoeff(), 0.0);
    double viol = -kInf;
    for (Index x = 0; x < 4; ++x)
      for (Index y = 0; y < 5; ++y) viol = std::max(viol, r.psi(x) + r.phi(y) + r.lambda - c(x, y));
    EXPECT_LE(viol, 1e-9);
    EXPECT_LE(r.gap(), 1e-7 * (1 + std::abs(r.value)));
    vals.push_back(r.value);
  }
  for (std::size_t k = 1; k < vals.size(); ++k) EXPECT_GE(vals[k], vals[k - 1] - 1e-12);
  for (std::size_t k = 1; k + 1 < vals.size(); ++k) EXPECT_LE(2 * vals[k], vals[k - 1] + vals[k + 1] + 1e-10);
  EXPECT_THROW(solve_partial(ScalarMeasure(mu), ScalarMeasure(nu), c, 1.5), PreconditionError);
}

TEST(Capacity, ForcedPlanAndSlackCapacity) {
  auto rng = rng_for(41);
  Vec mu = random_weights(3, rng), nu = random_weights(3, rng);
  Mat c = random_cost(3, 3, rng);
  Mat pibar = mu * nu.transpose();  // the product plan is the only plan below itself
  auto r = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), c, pibar);
  ASSERT_TRUE(r.feasible());
  EXPECT_LE((r.plan.matrix - pibar).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(r.gap(), 1e-7);

  auto huge = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), c, Mat::Constant(3, 3, 10.0));
  auto neg = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), -c);
  EXPECT_NEAR(huge.value, -neg.value, 1e-9);
  for (Index x = 0; x < 3; ++x)
    for (Index y = 0; y < 3; ++y) EXPECT_GE(r.psi(x) + r.phi(y) + r.xi(x, y), c(x, y) - 1e-9);
}

TEST(Capacity, TwoByTwoAgainstGridSearch) {
  Vec mu(2), nu(2);
  mu << 0.6, 0.4;
  nu << 0.3, 0.7;
  Mat c(2, 2);
  c << 1.0, 0.2, 0.4, 0.9;
  Mat pibar(2, 2);
  pibar << 0.25, 0.45, 0.3, 0.5;
  // One degree of freedom: t = pi(0,0).
  double best = -kInf;
  for (int k = 0; k <= 300000; ++k) {
    double t = 0.3 * k / 300000.0;
    Mat p(2, 2);
    p << t, 0.6 - t, 0.3 - t, 0.1 + t;
    if (p.minCoeff() < 0 || (p - pibar).maxCoeff() > 0) continue;
    best = std::max(best, (c.array() * p.array()).sum());
  }
  auto r = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), c, pibar);
  ASSERT_TRUE(r.feasible());
  EXPECT_NEAR(r.value, best, 1e-4);
  EXPECT_LE(r.gap(), 1e-7);
  auto rmin = solve_capacity_min(ScalarMeasure(mu), ScalarMeasure(nu), c, pibar);
  EXPECT_LE(rmin.value, r.value);
}

TEST(Capacity, InfeasibleGivesKellererPair) {
  Vec mu(2), nu(2);
  mu << 0.5, 0.5;
  nu << 0.5, 0.5;
  Mat pibar = Mat::Constant(2, 2, 0.2);
  auto r = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), Mat::Zero(2, 2), pibar);
  ASSERT_FALSE(r.feasible());
  ASSERT_TRUE(r.certificate);
  const auto& k = *r.certificate;
  double v = -k.psi.dot(mu) - k.phi.dot(nu);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y) v += pibar(x, y) * std::max(k.psi(x) + k.phi(y), 0.0);
  EXPECT_LT(v, -1e-9);
}

TEST(Capacity, MonotoneInCapacity) {
  auto rng = rng_for(43);
  Vec mu = random_weights(3, rng), nu = random_weights(4, rng);
  Mat c = random_cost(3, 4, rng);
  double prev = -kInf;
  for (double s : {0.5, 0.7, 1.0, 2.0}) {
    auto r = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), c, Mat::Constant(3, 4, s * 0.5));
    if (!r.feasible()) continue;
    EXPECT_GE(r.value, prev - 1e-12);
    prev = r.value;
  }
}

TEST(Invariant, IdentityMapReducesToNearestPoint) {
  auto rng = rng_for(51);
  Vec mu = random_weights(4, rng);
  Mat c = random_cost(4, 3, rng);
  auto r = solve_invariant(ScalarMeasure(mu), {0, 1, 2}, c);
  ASSERT_TRUE(r.feasible());
  double expect = 0;
  for (Index x = 0; x < 4; ++x) expect += mu(x) * c.row(x).minCoeff();
  EXPECT_NEAR(r.value, expect, 1e-12);
  EXPECT_LE(r.gap(), 1e-7);
}

TEST(Invariant, CycleForcesUniformMarginal) {
  auto rng = rng_for(53);
  Vec mu = random_weights(3, rng);
  Mat c = random_cost(3, 4, rng);
  std::vector<Index> cycle = {1, 2, 3, 0};
  auto r = solve_invariant(ScalarMeasure(mu), cycle, c);
  ASSERT_TRUE(r.feasible());
  EXPECT_LE((r.plan.y_marginal() - Vec::Constant(4, 0.25)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE(r.gap(), 1e-7);
  EXPECT_LE(invariant_dual_violation(r.psi, r.phi, cycle, c), 1e-9);
  // cycle-average oracle: the only invariant marginal is uniform, so the
  // value is plain transport onto it
  auto ot = solve_ot(ScalarMeasure(mu), ScalarMeasure(Vec::Constant(4, 0.25)), c);
  EXPECT_NEAR(r.value, ot.value, 1e-9);
}

TEST(Invariant, AlreadyInvariantImageCostsNothing) {
  // Y = X on a line, T swaps 0<->1 and fixes 2; mu is T-invariant.
  Vec mu(3);
  mu << 0.25, 0.25, 0.5;
  Mat c(3, 3);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j) c(i, j) = std::abs(double(i - j));
  auto r = solve_invariant(ScalarMeasure(mu), {1, 0, 2}, c);
  EXPECT_NEAR(r.value, 0, 1e-12);
  Vec ym = r.plan.y_marginal();
  EXPECT_NEAR(ym(0), ym(1), 1e-9);
}

TEST(Multimarginal, TwoMarginalsMatchSolveOt) {
  auto rng = rng_for(61);
  Vec mu = random_weights(3, rng), nu = random_weights(4, rng);
  Mat c = random_cost(3, 4, rng);
  Vec flat(12);
  for (Index x = 0; x < 3; ++x)
    for (Index y = 0; y < 4; ++y) flat(x * 4 + y) = c(x, y);
  auto m = solve_multimarginal({ScalarMeasure(mu), ScalarMeasure(nu)}, flat);
  auto o = solve_ot(ScalarMeasure(mu), ScalarMeasure(nu), c);
  EXPECT_NEAR(m.value, o.value, 1e-10);
  EXPECT_LE(std::abs(m.value - m.dual_value), 1e-7);
}

TEST(Multimarginal, PairwiseZeroDiagonalIdenticalMarginals) {
  Vec w(3);
  w << 0.2, 0.5, 0.3;
  Vec cost(27);
  for (Index j = 0; j < 27; ++j) {
    auto i = unravel(j, {3, 3, 3});
    cost(j) = std::abs(double(i[0] - i[1])) + std::abs(double(i[1] - i[2])) + std::abs(double(i[0] - i[2]));
  }
  auto r = solve_multimarginal({ScalarMeasure(w), ScalarMeasure(w), ScalarMeasure(w)}, cost);
  EXPECT_NEAR(r.value, 0, 1e-12);
}

TEST(Multimarginal, RandomAgainstBasisEnumeration) {
  // Every vertex of the 3x3x3 polytope is a basic solution of the 9 marginal
  // rows (rank 7): enumerate all 7-column supports.
  auto rng = rng_for(63);
  const std::vector<Index> dims = {3, 3, 3};
  std::vector<ScalarMeasure> mus;
  Vec b(9);
  for (int k = 0; k < 3; ++k) {
    Vec w = random_weights(3, rng);
    mus.emplace_back(w);
    b.segment(3 * k, 3) = w;
  }
  Vec cost(27);
  std::uniform_real_distribution<double> u(0, 1);
  for (Index j = 0; j < 27; ++j) cost(j) = u(rng);
  Mat A = Mat::Zero(9, 27);
  for (Index j = 0; j < 27; ++j) {
    auto i = unravel(j, dims);
    for (int k = 0; k < 3; ++k) A(3 * k + i[k], j) = 1;
  }
  double best = kInf;
  std::vector<int> sel(27, 0);
  std::fill(sel.end() - 7, sel.end(), 1);
  do {
    std::vector<Index> cols;
    for (Index j = 0; j < 27; ++j)
      if (sel[j]) cols.push_back(j);
    Mat S(9, 7);
    for (int k = 0; k < 7; ++k) S.col(k) = A.col(cols[k]);
    Eigen::FullPivLU<Mat> lu(S);
    if (lu.rank() < 7) continue;
    Vec x = lu.solve(b);
    if ((S * x - b).cwiseAbs().maxCoeff() > 1e-10 || x.minCoeff() < -1e-12) continue;
    double v = 0;
    for (int k = 0; k < 7; ++k) v += cost(cols[k]) * x(k);
    best = std::min(best, v);
  } while (std::next_permutation(sel.begin(), sel.end()));
  auto r = solve_multimarginal(mus, cost);
  ASSERT_TRUE(r.feasible());
  EXPECT_NEAR(r.value, best, 1e-9);
  EXPECT_LE(std::abs(r.value - r.dual_value), 1e-7);
  for (Index j = 0; j < 27; ++j) {
    auto i = unravel(j, dims);
    EXPECT_LE(r.potentials[0](i[0]) + r.potentials[1](i[1]) + r.potentials[2](i[2]), cost(j) + 1e-9);
  }
}

TEST(Multimarginal, MassMismatchAndGuard) {
  Vec a = Vec::Constant(2, 0.5), b = Vec::Constant(2, 1.0);
  auto r = solve_multimarginal({ScalarMeasure(a), ScalarMeasure(b)}, Vec::Zero(4));
  EXPECT_FALSE(r.feasible());
  EXPECT_TRUE(r.certificate);
  std::vector<ScalarMeasure> big(3, ScalarMeasure(Vec::Constant(101, 1.0)));
  EXPECT_THROW(solve_multimarginal(big, Vec::Zero(1)), GuardExceeded);
}

TEST(Glue, ProductOfUniformsGlues) {
  Mat u = Mat::Constant(2, 2, 0.25);
  auto g = glue_feasible(u, u);
  EXPECT_TRUE(g.feasible);
  EXPECT_TRUE(g.marginals_agree);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y) {
      double s = 0;
      for (Index z = 0; z < 2; ++z) s += g.at(x, y, z);
      EXPECT_NEAR(s, 0.25, 1e-12);
    }
}

TEST(Glue, MismatchedMiddleMarginals) {
  Mat mu(2, 2), nu(2, 2);
  mu << 0.4, 0.1, 0.3, 0.2;  // Y-marginal (0.7, 0.3)
  nu << 0.25, 0.25, 0.25, 0.25;  // Y-marginal (0.5, 0.5)
  auto g = glue_feasible(mu, nu);
  EXPECT_FALSE(g.marginals_agree);
  EXPECT_FALSE(g.lp_feasible);
  EXPECT_LT(g.violation, -1e-9);
  for (Index y = 0; y < 2; ++y) EXPECT_EQ(g.psi(0, y), -g.phi(y, 0));
}

TEST(Glue, PairwiseConsistentButJointlyInfeasible) {
  Mat diag = Mat::Zero(2, 2), anti = Mat::Zero(2, 2);
  diag(0, 0) = diag(1, 1) = 0.5;
  anti(0, 1) = anti(1, 0) = 0.5;
  // exhaustive search over 2x2x2 plans on a 1/8 lattice
  bool any = false;
  std::array<int, 8> e{};
  for (int code = 0; code < 390625 && !any; ++code) {
    int c = code;
    for (int k = 0; k < 8; ++k) {
      e[k] = c % 5;
      c /= 5;
    }
    auto at = [&](int x, int y, int z) { return e[(x * 2 + y) * 2 + z] / 8.0; };
    bool ok = true;
    for (int a = 0; a < 2 && ok; ++a)
      for (int b = 0; b < 2 && ok; ++b) {
        ok = std::abs(at(a, b, 0) + at(a, b, 1) - diag(a, b)) < 1e-12 &&
             std::abs(at(0, a, b) + at(1, a, b) - diag(a, b)) < 1e-12 &&
             std::abs(at(a, 0, b) + at(a, 1, b) - anti(a, b)) < 1e-12;
      }
    any = ok;
  }
  EXPECT_FALSE(any);
  auto g = glue_feasible(diag, diag, anti);
  EXPECT_FALSE(g.feasible);
  EXPECT_LT(g.violation, -1e-9);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y)
      for (Index z = 0; z < 2; ++z) EXPECT_GE(g.psi(x, y) + g.phi(y, z) + g.xi(x, z), -1e-9);
}

TEST(Local, LargeRadiusAlwaysFeasibleAndIsolatedAtomNot) {
  auto rng = rng_for(71);
  Vec mu = random_weights(4, rng), nu = random_weights(4, rng);
  Mat c = random_cost(4, 4, rng);
  auto r = local_constraint_feasible(ScalarMeasure(mu), ScalarMeasure(nu), c, c.maxCoeff());
  EXPECT_TRUE(r.feasible);
  c.row(2).array() += 5;  // atom 2 cannot reach anything within D
  auto bad = local_constraint_feasible(ScalarMeasure(mu), ScalarMeasure(nu), c, 1.0);
  ASSERT_FALSE(bad.feasible);
  EXPECT_LT(bad.certificate->violation, -1e-9);
}

TEST(Local, MatchesMaxFlowOracle) {
  auto rng = rng_for(73);
  int feasible = 0, infeasible = 0;
  for (int t = 0; t < 60; ++t) {
    Index nx = 2 + t % 4, ny = 2 + (t / 4) % 4;
    Vec mu = random_weights(nx, rng), nu = random_weights(ny, rng);
    Mat c = random_cost(nx, ny, rng);
    double D = 0.3 + 0.5 * (t % 5) / 4.0;
    Mat allowed = (c.array() <= D).cast<double>();
    bool oracle = max_flow(mu, nu, allowed) >= 1.0 - 1e-9;
    auto r = local_constraint_feasible(ScalarMeasure(mu), ScalarMeasure(nu), c, D);
    EXPECT_EQ(r.feasible, oracle) << "instance " << t;
    if (r.feasible) {
      for (Index x = 0; x < nx; ++x)
        for (Index y = 0; y < ny; ++y) {
          if (c(x, y) > D) {
            EXPECT_EQ(r.plan.matrix(x, y), 0.0);
          }
        }
      ++feasible;
    } else {
      ++infeasible;
    }
  }
  EXPECT_GT(feasible, 5);
  EXPECT_GT(infeasible, 5);
}

TEST(Strassen, AllPlansAndImpossibleMass) {
  auto rng = rng_for(81);
  Vec mu = random_weights(3, rng), nu = random_weights(3, rng);
  EXPECT_TRUE(strassen_feasible(ScalarMeasure(mu), ScalarMeasure(nu), {}).feasible);
  LinearConstraint g;
  g.coeffs = Mat::Zero(3, 3);
  g.coeffs(0, 0) = 1;
  g.kind = RowKind::Ge;
  g.rhs = mu.sum() + 1;
  auto r = strassen_feasible(ScalarMeasure(mu), ScalarMeasure(nu), {g});
  ASSERT_FALSE(r.feasible);
  EXPECT_LT(r.certificate->violation, -1e-9);
}

TEST(Strassen, CapacitySetAgreesWithCapacityVariant) {
  auto rng = rng_for(83);
  for (int t = 0; t < 20; ++t) {
    Vec mu = random_weights(3, rng), nu = random_weights(3, rng);
    std::uniform_real_distribution<double> u(0, 0.3);
    Mat pibar(3, 3);
    for (Index x = 0; x < 3; ++x)
      for (Index y = 0; y < 3; ++y) pibar(x, y) = u(rng);
    std::vector<LinearConstraint> gamma;
    for (Index x = 0; x < 3; ++x)
      for (Index y = 0; y < 3; ++y) {
        LinearConstraint g;
        g.coeffs = Mat::Zero(3, 3);
        g.coeffs(x, y) = 1;
        g.kind = RowKind::Le;
        g.rhs = pibar(x, y);
        gamma.push_back(g);
      }
    auto s = strassen_feasible(ScalarMeasure(mu), ScalarMeasure(nu), gamma);
    auto c = solve_capacity(ScalarMeasure(mu), ScalarMeasure(nu), Mat::Zero(3, 3), pibar);
    EXPECT_EQ(s.feasible, c.feasible()) << "instance " << t;
  }
}
