#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vecot/chain.hpp"

using namespace vecot;

namespace {

std::mt19937_64 rng_for(int seed) { return std::mt19937_64(static_cast<std::uint64_t>(seed)); }

Mat random_cost(Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat c(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) c(i, j) = u(rng);
  return c;
}

Vec random_prob(Index m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1);
  Vec w(m);
  for (Index i = 0; i < m; ++i) w(i) = u(rng);
  return w / w.sum();
}

Mat power_cost(Index m, double p) {
  Mat c(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) c(i, j) = std::pow(std::abs(static_cast<double>(i - j)), p);
  return c;
}

// Minimum over every tuple of n intermediate stops.
double brute_force(const Mat& c, const Vec& f, Index n, Index x, Index y) {
  const Index m = c.rows();
  std::vector<Index> z(static_cast<std::size_t>(n), 0);
  double best = kInf;
  for (;;) {
    // Same association as the recursion, so the comparison can be exact.
    double v = c(x, n == 0 ? y : z[0]);
    for (Index k = 0; k < n; ++k) v = v + c(z[k], k + 1 < n ? z[k + 1] : y) - f(z[k]);
    best = std::min(best, v);
    Index k = 0;
    while (k < n && ++z[k] == m) z[k++] = 0;
    if (k == n) break;
  }
  return best;
}

}  // namespace

TEST(ReducedCost, ZeroHopsAndMetricCosts) {
  auto rng = rng_for(1);
  Mat c = random_cost(5, rng);
  EXPECT_EQ(reduced_cost(c, 0), c);
  Mat metric = power_cost(8, 1.0);
  for (Index n = 1; n <= 4; ++n) EXPECT_LE(max_abs(reduced_cost(metric, n) - metric), 1e-12);
}

TEST(ReducedCost, DynamicProgramMatchesTupleEnumeration) {
  auto rng = rng_for(2);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 10; ++t) {
    Mat c = random_cost(5, rng);
    Vec f(5);
    for (Index i = 0; i < 5; ++i) f(i) = u(rng);
    for (Index n = 0; n <= 3; ++n) {
      Mat dp = weighted_reduced_cost(c, f, n);
      for (Index x = 0; x < 5; ++x)
        for (Index y = 0; y < 5; ++y) EXPECT_DOUBLE_EQ(dp(x, y), brute_force(c, f, n, x, y));
    }
  }
}

TEST(ReducedCost, SingleStopOnTwoPoints) {
  Mat c(2, 2);
  c << 0.3, 1.0, 0.2, 0.7;
  Vec f(2);
  f << 0.1, 0.4;
  Mat r = weighted_reduced_cost(c, f, 1);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y)
      EXPECT_DOUBLE_EQ(r(x, y), std::min(c(x, 0) + c(0, y) - f(0), c(x, 1) + c(1, y) - f(1)));
  EXPECT_EQ(weighted_reduced_cost(c, Vec::Zero(2), 2), reduced_cost(c, 2));
}

TEST(ReducedCost, SemigroupLaw) {
  auto rng = rng_for(3);
  Mat c = random_cost(6, rng);
  for (Index n = 0; n <= 2; ++n)
    for (Index m = 1; m <= 2; ++m)
      EXPECT_LE(max_abs(reduced_cost(c, n + m) - min_plus(reduced_cost(c, n), reduced_cost(c, m - 1))), 1e-12);
}

TEST(ReducedCost, PowerCostSplitsEvenlyOnDivisibleDistances) {
  // For p >= 1, |x-y|^p is cheapest when the n+1 hops are equal, which the
  // grid allows exactly when n+1 divides the distance.
  for (double p : {1.0, 2.0, 3.0}) {
    Mat c = power_cost(32, p);
    for (Index n = 1; n <= 4; ++n) {
      Mat r = reduced_cost(c, n);
      for (Index x = 0; x < 32; ++x)
        for (Index y = 0; y < 32; ++y)
          if (std::abs(x - y) % (n + 1) == 0) {
            EXPECT_NEAR(r(x, y), std::pow(static_cast<double>(n + 1), 1 - p) * c(x, y), 1e-12 * c.maxCoeff());
          }
    }
  }
}

TEST(ReducedCost, PathsRealizeTheValue) {
  auto rng = rng_for(4);
  Mat c = random_cost(6, rng);
  Vec f = random_prob(6, rng);
  ReducedCost r = weighted_reduced_cost_paths(c, f, 3);
  for (Index x = 0; x < 6; ++x)
    for (Index y = 0; y < 6; ++y) {
      auto z = r.path(x, y);
      ASSERT_EQ(z.size(), 3u);
      double v = 0;
      Index prev = x;
      for (Index s : z) {
        v += c(prev, s) - f(s);
        prev = s;
      }
      EXPECT_NEAR(v + c(prev, y), r.value(x, y), 1e-12);
    }
}

TEST(Chain, SingleAtom) {
  Mat c = Mat::Constant(1, 1, 0.7);
  ScalarMeasure d(Vec::Ones(1));
  for (Index n = 1; n <= 3; ++n) {
    ChainResult r = chain_ot({c, d, d, d, n});
    ASSERT_TRUE(r.feasible());
    EXPECT_NEAR(r.value, (n + 1) * 0.7, 1e-12);
  }
}

TEST(Chain, PlansFormAChainThroughTheMedium) {
  auto rng = rng_for(5);
  for (int t = 0; t < 5; ++t) {
    const Index m = 5, n = 3;
    ChainProblem p{random_cost(m, rng), ScalarMeasure(random_prob(m, rng)), ScalarMeasure(random_prob(m, rng)),
                   ScalarMeasure(random_prob(m, rng)), n};
    ChainResult r = chain_ot(p);
    ASSERT_TRUE(r.feasible());
    ASSERT_EQ(r.plans.size(), 4u);
    EXPECT_LE(max_abs(r.plans[0].rowwise().sum() - p.mu.weights()), 1e-9);
    EXPECT_LE(max_abs(r.plans[n].colwise().sum().transpose() - p.nu.weights()), 1e-9);
    Vec sum = Vec::Zero(m);
    double cost = 0;
    for (Index i = 0; i <= n; ++i) {
      cost += (p.c.array() * r.plans[i].array()).sum();
      if (i >= 1) {
        EXPECT_LE(max_abs(r.plans[i - 1].colwise().sum().transpose() - r.plans[i].rowwise().sum()), 1e-9);
        sum += r.plans[i].rowwise().sum();
      }
    }
    EXPECT_LE(max_abs(sum - n * p.lambda.weights()), 1e-9);
    EXPECT_NEAR(cost, r.value, 1e-9);
    EXPECT_NEAR(r.value, r.theorem_value, 1e-6 * (1 + std::abs(r.value)));
  }
}

TEST(Chain, EveryFineGivesALowerBound) {
  // Weak duality for the chain: (c_{g,n})_# + n int g dlambda <= value for any g.
  auto rng = rng_for(6);
  std::uniform_real_distribution<double> u(-1, 1);
  const Index m = 6, n = 2;
  ChainProblem p{random_cost(m, rng), ScalarMeasure(random_prob(m, rng)), ScalarMeasure(random_prob(m, rng)),
                 ScalarMeasure(random_prob(m, rng)), n};
  ChainResult r = chain_ot(p);
  for (int t = 0; t < 30; ++t) {
    Vec g(m);
    for (Index i = 0; i < m; ++i) g(i) = u(rng);
    double lb = solve_ot(p.mu, p.nu, weighted_reduced_cost(p.c, g, n)).value + n * g.dot(p.lambda.weights());
    EXPECT_LE(lb, r.value + 1e-9);
  }
}

TEST(Chain, FineValueIsConcave) {
  auto rng = rng_for(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const Index m = 5, n = 2;
  Mat c = random_cost(m, rng);
  ScalarMeasure mu(random_prob(m, rng)), nu(random_prob(m, rng));
  auto val = [&](const Vec& f) { return solve_ot(mu, nu, weighted_reduced_cost(c, f, n)).value; };
  for (int t = 0; t < 10; ++t) {
    Vec f(m), g(m);
    for (Index i = 0; i < m; ++i) {
      f(i) = u(rng);
      g(i) = u(rng);
    }
    for (double s : {0.25, 0.5, 0.75})
      EXPECT_GE(val(s * f + (1 - s) * g), s * val(f) + (1 - s) * val(g) - 1e-9);
  }
}

TEST(Chain, FreeMediumEqualsReducedCostTransport) {
  auto rng = rng_for(8);
  for (int t = 0; t < 5; ++t) {
    const Index m = 5;
    Mat c = random_cost(m, rng);
    ScalarMeasure mu(random_prob(m, rng)), nu(random_prob(m, rng)), la(random_prob(m, rng));
    for (Index n = 1; n <= 3; ++n) {
      double free = chain_free_medium(mu, nu, c, n);
      EXPECT_NEAR(free, solve_ot(mu, nu, reduced_cost(c, n)).value, 1e-7);
      EXPECT_LE(free, chain_ot({c, mu, nu, la, n}).value + 1e-9);
    }
  }
  Mat metric = power_cost(6, 1.0);
  ScalarMeasure mu(random_prob(6, rng)), nu(random_prob(6, rng));
  for (Index n = 1; n <= 3; ++n)
    EXPECT_NEAR(chain_free_medium(mu, nu, metric, n), solve_ot(mu, nu, metric).value, 1e-9);
}

TEST(Chain, QuadraticCostOnDivisibleSupport) {
  // Atoms two grid steps apart with one stop: every hop halves, so the
  // chain costs half of the direct quadratic transport.
  Mat c = power_cost(9, 2.0);
  Vec a = Vec::Zero(9), b = Vec::Zero(9);
  a(0) = 0.5;
  a(4) = 0.5;
  b(2) = 0.5;
  b(8) = 0.5;
  ScalarMeasure mu(a), nu(b);
  EXPECT_NEAR(chain_free_medium(mu, nu, c, 1), 0.5 * solve_ot(mu, nu, c).value, 1e-9);
}

TEST(Chain, Preconditions) {
  Mat c = Mat::Zero(2, 2);
  ScalarMeasure a(Vec::Ones(2)), b(Vec::Constant(2, 2.0));
  EXPECT_THROW(chain_ot({c, a, b, a, 1}), PreconditionError);
  EXPECT_THROW(chain_ot({c, a, a, a, 0}), PreconditionError);
  EXPECT_THROW(reduced_cost(Mat::Zero(2, 3), 1), DimensionError);
}
