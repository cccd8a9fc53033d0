#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vecot/duality.hpp"

using namespace vecot;

namespace {

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

Mat random_matrix(Index r, Index c, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

void expect_saddle(const GameResult& g, const Mat& f) {
  EXPECT_NEAR(g.row.sum(), 1.0, 1e-12);
  EXPECT_NEAR(g.col.sum(), 1.0, 1e-12);
  EXPECT_GE(g.row.minCoeff(), 0.0);
  EXPECT_GE(g.col.minCoeff(), 0.0);
  EXPECT_NEAR(g.lower, g.value, 1e-8);
  EXPECT_NEAR(g.upper, g.value, 1e-8);
  EXPECT_NEAR(g.row.dot(f * g.col), g.value, 1e-8);
}

// Random convex function on a grid: max of affine pieces plus a quadratic.
GridFunction random_convex(const Vec& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1), a(0, 2);
  double q = a(rng);
  Mat pieces = random_matrix(3, 2, rng);
  return GridFunction::sample(grid, [&](double x) {
    double v = -kInf;
    for (Index k = 0; k < 3; ++k) v = std::max(v, pieces(k, 0) * x + pieces(k, 1));
    return v + 0.5 * q * x * x;
  });
}

}  // namespace

TEST(Game, ConstantAndPureSaddle) {
  Mat c = Mat::Constant(3, 4, 2.5);
  GameResult g = game_value(c);
  EXPECT_NEAR(g.value, 2.5, 1e-12);
  expect_saddle(g, c);

  Mat f(3, 3);
  f << 4, 5, 6, 1, 9, 0, 2, 3, 8;  // row 0 dominates in the sense of its minimum 4
  GameResult s = game_value(f);
  double maxmin = -kInf, minmax = kInf;
  for (Index x = 0; x < 3; ++x) maxmin = std::max(maxmin, f.row(x).minCoeff());
  for (Index y = 0; y < 3; ++y) minmax = std::min(minmax, f.col(y).maxCoeff());
  ASSERT_EQ(maxmin, minmax);
  EXPECT_NEAR(s.value, maxmin, 1e-10);
  expect_saddle(s, f);
}

TEST(Game, MatchingPennies) {
  Mat f(2, 2);
  f << 1, -1, -1, 1;
  GameResult g = game_value(f);
  EXPECT_NEAR(g.value, 0.0, 1e-10);
  EXPECT_NEAR(g.row(0), 0.5, 1e-10);
  EXPECT_NEAR(g.col(0), 0.5, 1e-10);
}

TEST(Game, TwoByTwoClosedForm) {
  auto rng = rng_for(1);
  int mixed = 0;
  for (int t = 0; t < 50; ++t) {
    Mat f = random_matrix(2, 2, rng);
    double a = f(0, 0), b = f(0, 1), c = f(1, 0), d = f(1, 1);
    double maxmin = std::max(std::min(a, b), std::min(c, d));
    double minmax = std::min(std::max(a, c), std::max(b, d));
    double expect = maxmin == minmax ? maxmin : (a * d - b * c) / (a + d - b - c);
    if (maxmin != minmax) ++mixed;
    EXPECT_NEAR(game_value(f).value, expect, 1e-10);
  }
  EXPECT_GT(mixed, 5);
}

TEST(Game, RandomMatricesSatisfySaddleInequalities) {
  auto rng = rng_for(2);
  for (int t = 0; t < 30; ++t) {
    Index r = 1 + static_cast<Index>(rng() % 12), c = 1 + static_cast<Index>(rng() % 12);
    Mat f = random_matrix(r, c, rng, -3, 5);
    GameResult g = game_value(f);
    expect_saddle(g, f);
    std::vector<Index> all(static_cast<std::size_t>(c));
    for (Index y = 0; y < c; ++y) all[y] = y;
    LpSolution col = detail::col_player_lp(f.array() + 10.0, all);
    EXPECT_NEAR(col.value - 10.0, g.value, 1e-8);
  }
}

TEST(Game, RestrictedColumnPlayer) {
  auto rng = rng_for(3);
  Mat f = random_matrix(5, 6, rng);
  RestrictedGameResult full = game_value_restricted(f, ScalarMeasure(Vec::Ones(6)));
  EXPECT_NEAR(full.value, game_value(f).value, 1e-8);
  Vec one = Vec::Zero(6);
  one(2) = 0.3;
  RestrictedGameResult single = game_value_restricted(f, ScalarMeasure(one));
  EXPECT_NEAR(single.value, f.col(2).maxCoeff(), 1e-10);
  EXPECT_NEAR(single.col(2), 1.0, 1e-12);
  for (int t = 0; t < 20; ++t) {
    Mat g = random_matrix(4, 7, rng);
    Vec lam = Vec::Zero(7);
    for (Index y = 0; y < 7; ++y)
      if (rng() % 2) lam(y) = 1;
    if (lam.sum() == 0) lam(0) = 1;
    RestrictedGameResult r = game_value_restricted(g, ScalarMeasure(lam));
    EXPECT_NEAR(r.maxmin, r.minmax, 1e-8);
    for (Index y = 0; y < 7; ++y) {
      if (lam(y) == 0) {
        EXPECT_EQ(r.col(y), 0.0);
      }
    }
    EXPECT_LE(r.upper, r.value + 1e-8);
    EXPECT_GE(r.lower, r.value - 1e-8);
  }
  EXPECT_THROW(game_value_restricted(f, ScalarMeasure(Vec::Zero(6))), PreconditionError);
}

TEST(Moment, SecondMomentBoundary) {
  const Index n = 101;
  Vec x = Vec::LinSpaced(n, -2, 2);
  Mat m(3, n);
  m.row(0).setOnes();
  m.row(1) = x.transpose();
  m.row(2) = x.array().square().matrix().transpose();
  const double h = 4.0 / (n - 1);
  for (double mean : {-0.8, -0.3, 0.0, 0.55}) {
    Vec below(3), above(3);
    below << 1, mean, mean * mean - 1e-3;
    above << 1, mean, mean * mean + h * h / 4 + 1e-6;
    MomentResult a = moment_feasible(m, below), b = moment_feasible(m, above);
    EXPECT_FALSE(a.feasible);
    EXPECT_LT(a.violation, -1e-9);
    EXPECT_GE((m.transpose() * a.alpha).minCoeff(), -1e-12);
    ASSERT_TRUE(b.feasible);
    EXPECT_LE(max_abs(m * b.weights - above), 1e-9);
  }
}

TEST(Moment, ZeroTargetAndRandomInstances) {
  auto rng = rng_for(4);
  Mat m = random_matrix(3, 8, rng);
  MomentResult z = moment_feasible(m, Vec::Zero(3));
  ASSERT_TRUE(z.feasible);
  EXPECT_LE(z.weights.norm(), 1e-12);
  int infeasible = 0;
  for (int t = 0; t < 30; ++t) {
    Mat a = random_matrix(4, 6, rng);
    Vec target = random_matrix(4, 1, rng, -2, 2).col(0);
    MomentResult r = moment_feasible(a, target);
    if (r.feasible) {
      EXPECT_GE(r.weights.minCoeff(), 0.0);
      EXPECT_LE(max_abs(a * r.weights - target), 1e-9);
    } else {
      ++infeasible;
      EXPECT_GE((a.transpose() * r.alpha).minCoeff(), -1e-12);
      EXPECT_LT(r.violation, 0.0);
    }
    Vec w = random_matrix(6, 1, rng, 0, 1).col(0);
    EXPECT_TRUE(moment_feasible(a, a * w).feasible);
  }
  EXPECT_GT(infeasible, 5);
}

TEST(Trig, IdentityIsFeasible) {
  Cvec c = Cvec::Zero(4);
  c(0) = 1;
  TrigResult r = trig_moment(c, 64);
  EXPECT_TRUE(r.psd);
  EXPECT_TRUE(r.lp_feasible);
  EXPECT_NEAR(r.min_eig, 1.0, 1e-12);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-9);
}

TEST(Trig, PointMassGivesRankOne) {
  const Index n = 3;
  std::complex<double> z0 = std::polar(1.0, 0.7);
  Cvec c(n + 1);
  for (Index k = 0; k <= n; ++k) c(k) = std::pow(z0, static_cast<double>(k));
  TrigResult r = trig_moment(c, 64);
  EXPECT_NEAR(r.eigenvalues(n), n + 1.0, 1e-10);
  for (Index k = 0; k < n; ++k) EXPECT_NEAR(r.eigenvalues(k), 0.0, 1e-10);
  Cvec v(n + 1);
  for (Index j = 0; j <= n; ++j) v(j) = std::pow(z0, static_cast<double>(n - j));
  EXPECT_LE((r.toeplitz * v - (n + 1.0) * v).norm(), 1e-10);
  EXPECT_TRUE(r.psd);
}

TEST(Trig, IndefiniteIsInfeasible) {
  Cvec c(3);
  c << 1.0, 0.9, 0.0;
  TrigResult r = trig_moment(c, 256);
  EXPECT_LT(r.min_eig, -0.1);
  EXPECT_FALSE(r.psd);
  EXPECT_FALSE(r.lp_feasible);
  EXPECT_TRUE(r.agree());
}

TEST(Trig, MomentsOfGridMeasuresAreFeasible) {
  auto rng = rng_for(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    const Index n = 3, g = 64;
    Cvec c = Cvec::Zero(n + 1);
    for (int a = 0; a < 5; ++a) {
      Index j = static_cast<Index>(rng() % g);
      double w = u(rng);
      for (Index k = 0; k <= n; ++k)
        c(k) += w * std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(k * j) / g);
    }
    TrigResult r = trig_moment(c, g);
    EXPECT_TRUE(r.psd);
    EXPECT_TRUE(r.lp_feasible);
  }
  EXPECT_THROW(trig_moment(Cvec::Ones(4), 15), PreconditionError);
}

TEST(Conjugate, QuadraticIsSelfConjugate) {
  GridFunction f = GridFunction::sample(Vec::LinSpaced(201, -2, 2), [](double x) { return 0.5 * x * x; });
  GridFunction g = conjugate(f);
  const double h = 0.02;
  for (Index j = 0; j < g.size(); ++j) EXPECT_NEAR(g.values(j), 0.5 * g.grid(j) * g.grid(j), h);
  EXPECT_GE(g.min_second_difference(), -1e-12);
  EXPECT_GT(g.error_bound, 0);
}

TEST(Conjugate, SinglePointIsLinear) {
  Vec grid = Vec::LinSpaced(11, -1, 1);
  GridFunction f = GridFunction::sample(grid, [](double x) { return std::abs(x - 0.4) < 1e-9 ? 0.3 : 1e6; });
  GridFunction g = conjugate(f, Vec::LinSpaced(21, -5, 5));
  for (Index j = 0; j < g.size(); ++j) EXPECT_NEAR(g.values(j), 0.4 * g.grid(j) - 0.3, 1e-9);
}

TEST(Conjugate, BiconjugateAndMonotonicity) {
  auto rng = rng_for(6);
  Vec grid = Vec::LinSpaced(129, -1, 1);
  const double h = 2.0 / 128;
  for (int t = 0; t < 10; ++t) {
    GridFunction f = random_convex(grid, rng);
    GridFunction fs = conjugate(f);
    EXPECT_GE(fs.min_second_difference(), -1e-12);
    GridFunction fss = conjugate(fs, grid);
    for (Index i = 1; i + 1 < grid.size(); ++i) EXPECT_NEAR(fss.values(i), f.values(i), 2 * h * f.lipschitz());
    GridFunction g(grid, f.values.array() + 0.1 + grid.array().square() * 0.2);
    GridFunction gs = conjugate(g, fs.grid);
    EXPECT_LE((gs.values - fs.values).maxCoeff(), 1e-12);
  }
}

TEST(InfConvolution, SingleFunctionAndParallelSum) {
  Vec grid = Vec::LinSpaced(161, -2, 2);
  GridFunction f = GridFunction::sample(grid, [](double x) { return x * x; });
  GridFunction one = inf_convolution({f});
  EXPECT_EQ(one.values, f.values);
  const double a = 1.0, b = 3.0, h = 4.0 / 160;
  GridFunction fa = GridFunction::sample(grid, [&](double x) { return 0.5 * a * x * x; });
  GridFunction fb = GridFunction::sample(grid, [&](double x) { return 0.5 * b * x * x; });
  GridFunction s = inf_convolution({fa, fb});
  EXPECT_EQ(s.size(), 321);
  for (Index i = 0; i < s.size(); ++i) {
    double x = s.grid(i);
    if (std::abs(x) > 1.5) continue;  // near the ends the split leaves the grid
    EXPECT_NEAR(s.values(i), 0.5 * a * b / (a + b) * x * x, h);
  }
  GridFunction shifted(Vec::LinSpaced(11, 0, 1), Vec::Zero(11));
  EXPECT_THROW(inf_convolution({f, shifted}), DimensionError);
}

TEST(InfConvolution, ConjugateOfConvolutionIsSumOfConjugates) {
  auto rng = rng_for(7);
  Vec grid = Vec::LinSpaced(65, -1, 1);
  GridFunction f1 = random_convex(grid, rng), f2 = random_convex(grid, rng);
  GridFunction conv = inf_convolution({f1, f2});
  Vec ys = Vec::LinSpaced(41, -2, 2);
  Vec lhs = conjugate(conv, ys).values;
  Vec rhs = conjugate(f1, ys).values + conjugate(f2, ys).values;
  EXPECT_LE(max_abs(lhs - rhs), 1e-12);
}

TEST(Fenchel, RandomConvexPairs) {
  auto rng = rng_for(8);
  Vec grid = Vec::LinSpaced(257, -1, 1);
  for (int t = 0; t < 20; ++t) {
    GridFunction f1 = random_convex(grid, rng), f2 = random_convex(grid, rng);
    FenchelCheck c = fenchel_check(f1, f2);
    EXPECT_LE(c.dual, c.primal + 1e-12);  // weak duality holds exactly on the grid
    EXPECT_TRUE(c.ok()) << c.gap << " > " << c.bound;
  }
}
