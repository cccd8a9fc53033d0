#include <gtest/gtest.h>

#include <random>

#include "vecot/measures.hpp"

using namespace vecot;

namespace {

Mat random_stochastic(Index r, Index c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) m(i, j) = u(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

VectorMeasure random_measure(const FiniteSpace& s, Index d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  Mat v(s.size(), d);
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < d; ++j) v(i, j) = u(rng);
  return VectorMeasure(s, v);
}

}  // namespace

TEST(FiniteSpaceTest, RejectsDuplicatesAndBadCoords) {
  EXPECT_THROW(FiniteSpace({"a", "a"}), PreconditionError);
  EXPECT_THROW(FiniteSpace({"a", "b"}, {{0.0}}), PreconditionError);
  auto g = FiniteSpace::midpoint_grid(4);
  EXPECT_DOUBLE_EQ(g.coord(0), 0.125);
  EXPECT_DOUBLE_EQ(g.coord(3), 0.875);
}

TEST(VectorMeasureTest, DefaultReferenceIsComponentSum) {
  auto mu = VectorMeasure::from_components({Vec::Constant(1, 3.0), Vec::Constant(1, 1.0)});
  EXPECT_DOUBLE_EQ(mu.ref_weights()(0), 4.0);
  EXPECT_DOUBLE_EQ(mu.density()(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(mu.density().row(0).sum(), 1.0);
}

TEST(VectorMeasureTest, ZeroReferenceMustCarryNoMass) {
  Mat v(2, 1);
  v << 1, 1;
  Vec r(2);
  r << 1, 0;
  EXPECT_THROW(VectorMeasure(FiniteSpace::indexed(2), v, r), PreconditionError);
  Mat neg(1, 1);
  neg << -0.5;
  EXPECT_THROW(VectorMeasure(FiniteSpace::indexed(1), neg), PreconditionError);
}

TEST(Pushforward, IdentityAndConstantMap) {
  auto s = FiniteSpace::indexed(2);
  Mat v(2, 2);
  v << 1, 0, 0, 1;
  VectorMeasure mu(s, v);
  auto id = pushforward(mu, {0, 1}, s);
  EXPECT_TRUE(id.values() == mu.values());
  auto c = pushforward(mu, {0, 0}, s);
  Mat expect(2, 2);
  expect << 1, 1, 0, 0;
  EXPECT_TRUE(c.values() == expect);
}

TEST(Pushforward, FinitelySupportedToIndexSpace) {
  // sum b_j delta_{x_j} on a grid maps to (b_1, ..., b_n) on {1..n}.
  auto grid = FiniteSpace::uniform_grid(0, 1, 5);
  Vec b(5);
  b << 0.5, 0, 0.25, 0, 0.25;
  VectorMeasure mu(grid, Mat(b));
  auto idx = FiniteSpace::indexed(3);
  auto out = pushforward(mu, {0, 0, 1, 1, 2}, idx);
  EXPECT_DOUBLE_EQ(out.values()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.values()(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(out.values()(2, 0), 0.25);
}

TEST(KernelApply, DeterministicKernelEqualsPushforward) {
  std::mt19937_64 rng(3);
  auto xs = FiniteSpace::indexed(6), ys = FiniteSpace::indexed(3);
  auto mu = random_measure(xs, 2, rng);
  std::vector<Index> t = {2, 0, 1, 1, 2, 0};
  auto a = kernel_apply(Kernel::from_map(xs, ys, t), mu);
  auto b = pushforward(mu, t, ys);
  EXPECT_TRUE(a.values() == b.values());
}

TEST(KernelApply, RandomWalkStep) {
  // P_x = l delta_{x-1} + m delta_x + r delta_{x+1} on a window, reflecting
  // the mass that would leave it back onto the boundary atom.
  const double l = 0.2, m = 0.5, r = 0.3;
  const Index n = 7;
  Mat p = Mat::Zero(n, n);
  for (Index x = 0; x < n; ++x) {
    p(x, std::max<Index>(x - 1, 0)) += l;
    p(x, x) += m;
    p(x, std::min<Index>(x + 1, n - 1)) += r;
  }
  auto s = FiniteSpace::indexed(n);
  Vec w = Vec::Zero(n);
  w(3) = 1;
  auto out = kernel_apply(Kernel(s, s, p), VectorMeasure(s, Mat(w)));
  EXPECT_DOUBLE_EQ(out.values()(2, 0), l);
  EXPECT_DOUBLE_EQ(out.values()(3, 0), m);
  EXPECT_DOUBLE_EQ(out.values()(4, 0), r);
}

TEST(KernelApply, TwoByTwoStochasticMatrix) {
  const double p = 0.3, q = 0.8;
  auto s = FiniteSpace::indexed(2);
  Mat k(2, 2);
  k << p, 1 - p, q, 1 - q;
  auto mu = VectorMeasure::from_components(s, {(Vec(2) << 1, 0).finished(), (Vec(2) << 0, 1).finished()});
  auto nu = kernel_apply(Kernel(s, s, k), mu);
  // components of the image: (p, 1-p) and (q, 1-q)
  EXPECT_NEAR(nu.values()(0, 0), p, 1e-15);
  EXPECT_NEAR(nu.values()(1, 0), 1 - p, 1e-15);
  EXPECT_NEAR(nu.values()(0, 1), q, 1e-15);
  EXPECT_NEAR(nu.values()(1, 1), 1 - q, 1e-15);
}

TEST(KernelApply, PreservesComponentMass) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    auto xs = FiniteSpace::indexed(5), ys = FiniteSpace::indexed(4);
    auto mu = random_measure(xs, 3, rng);
    auto nu = kernel_apply(Kernel(xs, ys, random_stochastic(5, 4, rng)), mu);
    EXPECT_LE((nu.total() - mu.total()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(KernelCompose, MatchesSequentialApplicationAndIsAssociative) {
  std::mt19937_64 rng(5);
  auto s = FiniteSpace::indexed(3);
  for (int t = 0; t < 20; ++t) {
    Kernel p(s, s, random_stochastic(3, 3, rng)), q(s, s, random_stochastic(3, 3, rng)),
        r(s, s, random_stochastic(3, 3, rng));
    auto mu = random_measure(s, 2, rng);
    auto once = kernel_apply(kernel_compose(p, q), mu);
    auto twice = kernel_apply(q, kernel_apply(p, mu));
    EXPECT_LE((once.values() - twice.values()).cwiseAbs().maxCoeff(), 1e-12);
    auto a = kernel_compose(kernel_compose(p, q), r), b = kernel_compose(p, kernel_compose(q, r));
    EXPECT_LE((a.rows() - b.rows()).cwiseAbs().maxCoeff(), 1e-12);
  }
  auto id = Kernel::identity(s);
  Kernel p(s, s, random_stochastic(3, 3, rng));
  EXPECT_LE((kernel_compose(p, id).rows() - p.rows()).cwiseAbs().maxCoeff(), 1e-15);
  auto d = kernel_compose(Kernel::from_map(s, s, {1, 2, 0}), Kernel::from_map(s, s, {2, 2, 1}));
  EXPECT_TRUE(d.rows() == Kernel::from_map(s, s, {2, 1, 2}).rows());
  EXPECT_THROW(kernel_compose(p, Kernel::identity(FiniteSpace::indexed(2))), DimensionError);
}

TEST(Product, MarginalsAndProductMeasure) {
  std::mt19937_64 rng(9);
  auto xs = FiniteSpace::indexed(4), ys = FiniteSpace::indexed(3);
  auto mu = random_measure(xs, 2, rng);
  Kernel p(xs, ys, random_stochastic(4, 3, rng));
  auto pi = product(p, mu);
  EXPECT_LE((pi.x_marginal() - mu.ref_weights()).cwiseAbs().maxCoeff(), 1e-12);
  // (eta, P x |mu|) has Y-marginal P mu
  Mat ymarg = pi.matrix.transpose() * mu.density();
  EXPECT_LE((ymarg - kernel_apply(p, mu).values()).cwiseAbs().maxCoeff(), 1e-12);
  // rows equal to nu / nu(Y) give the product measure
  Vec nu(3);
  nu << 1, 2, 1;
  Mat rows = (nu / nu.sum()).transpose().replicate(4, 1);
  auto prod = product(Kernel(xs, ys, rows), mu);
  Mat expect = mu.ref_weights() * (nu / nu.sum()).transpose();
  EXPECT_LE((prod.matrix - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Disintegrate, ReconstructsRandomPlan) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  auto xs = FiniteSpace::indexed(4), ys = FiniteSpace::indexed(3);
  for (int t = 0; t < 20; ++t) {
    Mat m(4, 3);
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 3; ++j) m(i, j) = u(rng);
    TransportPlan pi(m);
    for (Axis a : {Axis::X, Axis::Y}) {
      auto [k, marg] = disintegrate(pi, a, xs, ys);
      Mat back = product(k, marg).matrix;
      if (a == Axis::Y) back.transposeInPlace();
      EXPECT_LE((back - m).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Disintegrate, ProductPlanAndGraphPlan) {
  auto xs = FiniteSpace::indexed(3), ys = FiniteSpace::indexed(2);
  Vec mu(3), nu(2);
  mu << 1, 2, 0;
  nu << 0.25, 0.75;
  auto [k, m] = disintegrate(TransportPlan(mu * nu.transpose()), Axis::X, xs, ys);
  EXPECT_NEAR(k(0, 1), 0.75, 1e-15);
  EXPECT_NEAR(k(1, 0), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(k(2, 0), 0.5);  // zero-mass atom gets the uniform row
  Mat g = Mat::Zero(3, 2);
  g(0, 1) = 1;
  g(1, 0) = 2;
  auto [kg, mg] = disintegrate(TransportPlan(g), Axis::X, xs, ys);
  EXPECT_EQ(kg(0, 1), 1.0);
  EXPECT_EQ(kg(1, 0), 1.0);
}

TEST(Variation, NormsAndReconstruction) {
  Mat v(1, 2);
  v << 3, 4;
  VectorMeasure mu(FiniteSpace::indexed(1), v, Vec::Ones(1));
  EXPECT_DOUBLE_EQ(variation(mu, Norm::L2)(0), 5.0);
  EXPECT_DOUBLE_EQ(variation(mu, Norm::L1)(0), 7.0);
  EXPECT_DOUBLE_EQ(variation(mu, Norm::Linf)(0), 4.0);
  VectorMeasure scalar(FiniteSpace::indexed(3), Mat(Vec::LinSpaced(3, 1, 3)));
  EXPECT_TRUE(variation(scalar).weights() == scalar.ref_weights());

  std::mt19937_64 rng(17);
  for (Norm n : {Norm::L1, Norm::L2, Norm::Linf}) {
    auto m = random_measure(FiniteSpace::indexed(6), 3, rng);
    auto r = renormalize(m, n);
    EXPECT_LE((r.values() - m.values()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reflexivity, IdentityProductHasBothMarginals) {
  std::mt19937_64 rng(19);
  auto s = FiniteSpace::indexed(5);
  auto mu = random_measure(s, 2, rng);
  auto pi = product(Kernel::identity(s), mu);
  EXPECT_LE((pi.x_marginal() - mu.ref_weights()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((pi.y_marginal() - mu.ref_weights()).cwiseAbs().maxCoeff(), 1e-15);
}
