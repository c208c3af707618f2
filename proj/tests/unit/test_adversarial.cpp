#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"
#include "srapf/errors.hpp"
#include "srapf/losses.hpp"

using namespace srapf;
using srapf::testing::Gen;

TEST(Perturb, ZeroRadiusIsIdentityForAnyT) {
  Gen g(1);
  const Matrix x = g.matrix(5, 4), w = g.matrix(4, 3);
  const Labels y = g.labels(5, 3);
  for (int t : {0, 1, 10, 50}) {
    PerturbationConfig c;
    c.iterations = t;
    c.epsilon = 0.0;
    const auto r = perturb(x, y, w, c);
    EXPECT_EQ(r.perturbed, x);
    EXPECT_TRUE(r.delta.isZero());
  }
}

TEST(Perturb, ZeroStepsIsIdentity) {
  Gen g(2);
  const Matrix x = g.matrix(3, 4), w = g.matrix(4, 2);
  PerturbationConfig c;
  c.iterations = 0;
  const auto r = perturb(x, g.labels(3, 2), w, c);
  EXPECT_EQ(r.perturbed, x);
  EXPECT_EQ(r.iterations_run, 0);
}

TEST(Perturb, OneStepTwoClassMatchesClosedForm) {
  // d = 2, K = 2. For label y, dCE/dx = p_other (w_other - w_y).
  Matrix w(2, 2);
  w << 1.0, -0.5,  //
      0.2, 0.8;
  Matrix x(2, 2);
  x << 0.3, -0.4,  //
      -0.1, 0.9;
  const Labels y{0, 1};
  PerturbationConfig c;
  c.iterations = 1;
  c.epsilon = 0.05;
  c.alpha = 0.02;
  const auto r = perturb(x, y, w, c);
  for (int i = 0; i < 2; ++i) {
    const int other = 1 - y[i];
    const double lo = x.row(i).dot(w.col(other)), ly = x.row(i).dot(w.col(y[i]));
    const double p_other = 1.0 / (1.0 + std::exp(ly - lo));
    for (int j = 0; j < 2; ++j) {
      const double gj = p_other * (w(j, other) - w(j, y[i]));
      const double s = (gj > 0) - (gj < 0);
      EXPECT_DOUBLE_EQ(r.perturbed(i, j), x(i, j) + 0.02 * s);
    }
  }
}

TEST(Perturb, DefaultsAndStepSize) {
  const PerturbationConfig c;
  EXPECT_EQ(c.iterations, 10);
  EXPECT_EQ(c.epsilon, 0.01);
  EXPECT_FALSE(c.random_start);
  EXPECT_DOUBLE_EQ(c.step_size(), 2.5 * 0.01 / 10);
  PerturbationConfig e = c;
  e.alpha = 0.3;
  EXPECT_EQ(e.step_size(), 0.3);
}

TEST(Perturb, InvalidConfigsAreRejected) {
  PerturbationConfig c;
  c.epsilon = -0.1;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.iterations = -1;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = {};
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), ArgumentError);
  EXPECT_THROW(Perturber{c}, ArgumentError);
}

TEST(Perturb, NonFiniteGradientIsNumericError) {
  Matrix x(1, 2);
  x << 1.0, std::nan("");
  PerturbationConfig c;
  EXPECT_THROW(perturb(x, {0}, Matrix::Identity(2, 2), c), NumericError);
}

TEST(PerturbProperty, DeltaStaysInsideTheBall) {
  Gen g(3);
  for (int t = 0; t < 2000; ++t) {
    const int n = g.integer(1, 5), d = g.integer(1, 8), k = g.integer(2, 5);
    PerturbationConfig c;
    c.iterations = g.integer(0, 20);
    c.epsilon = g.uniform(0, 0.2);
    if (g.coin()) c.alpha = g.uniform(1e-4, 0.5);
    c.random_start = g.integer(0, 3) == 0;
    c.seed = static_cast<std::uint64_t>(t);
    const Matrix x = g.matrix(n, d), w = g.matrix(d, k, 3.0);
    const auto r = perturb(x, g.labels(static_cast<std::size_t>(n), k), w, c);
    ASSERT_LE(r.delta.cwiseAbs().maxCoeff(), c.epsilon + 1e-7);
    ASSERT_EQ(r.perturbed, x + r.delta);
  }
}

TEST(PerturbProperty, LinearHeadLossNeverDecreases) {
  Gen g(4);
  for (int t = 0; t < 1000; ++t) {
    const int n = g.integer(1, 4), d = g.integer(1, 8), k = g.integer(2, 5);
    PerturbationConfig c;
    c.iterations = g.integer(1, 12);
    c.epsilon = g.uniform(1e-3, 0.2);
    const Matrix x = g.matrix(n, d), w = g.matrix(d, k);
    const Labels y = g.labels(static_cast<std::size_t>(n), k);
    const auto r = perturb(x, y, w, c);
    ASSERT_GE(ce_loss(r.perturbed, y, w).value, ce_loss(x, y, w).value);
  }
}

TEST(PerturbProperty, ReperturbingBoundaryDeltaStaysInBall) {
  Gen g(5);
  for (int t = 0; t < 200; ++t) {
    PerturbationConfig c;
    c.epsilon = 0.05;
    c.iterations = 30;
    c.alpha = 0.05;  // every step lands on the boundary
    const Matrix x = g.matrix(3, 4), w = g.matrix(4, 3);
    const Labels y = g.labels(3, 3);
    const auto first = perturb(x, y, w, c);
    const auto second = perturb(first.perturbed, y, w, c);
    ASSERT_LE((first.delta + second.delta).cwiseAbs().maxCoeff(), 2 * c.epsilon + 1e-12);
    ASSERT_LE(second.delta.cwiseAbs().maxCoeff(), c.epsilon + 1e-12);
  }
}

TEST(PerturbProperty, DeterministicGivenInputs) {
  Gen g(6);
  const Matrix x = g.matrix(4, 5), w = g.matrix(5, 3);
  const Labels y = g.labels(4, 3);
  PerturbationConfig c;
  c.random_start = true;
  c.seed = 17;
  EXPECT_EQ(perturb(x, y, w, c).delta, perturb(x, y, w, c).delta);
}
