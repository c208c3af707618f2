#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"
#include "oracles.hpp"
#include "srapf/errors.hpp"
#include "srapf/losses.hpp"

using namespace srapf;
using namespace srapf::testing;

TEST(CeLoss, SingleClassIsExactlyZero) {
  Gen g(1);
  EXPECT_EQ(ce_loss(g.matrix(3, 4), {0, 0, 0}, g.matrix(4, 1)).value, 0.0);
}

TEST(CeLoss, UniformLogitsGiveLogK) {
  for (int k : {2, 3, 7}) {
    const auto v = ce_loss(Matrix::Ones(2, 3), {0, k - 1}, Matrix::Zero(3, k));
    EXPECT_NEAR(v.value, std::log(static_cast<double>(k)), 1e-15);
  }
}

TEST(CeLoss, HandPickedTwoByThree) {
  Matrix x(2, 2), w(2, 3);
  x << 1, 0,  //
      0, 1;
  w << 1, 2, 0,  //
      0, 1, 3;
  // Row 0 logits (1, 2, 0), label 1; row 1 logits (0, 1, 3), label 2.
  const double l0 = -(2 - std::log(std::exp(1) + std::exp(2) + 1));
  const double l1 = -(3 - std::log(1 + std::exp(1) + std::exp(3)));
  EXPECT_NEAR(ce_loss(x, {1, 2}, w).value, (l0 + l1) / 2, 1e-15);
}

TEST(CeLoss, MatchesScalarOracleOnRandomInstances) {
  Gen g(2);
  for (int t = 0; t < 200; ++t) {
    const int n = g.integer(1, 4), k = g.integer(1, 5), d = g.integer(1, 8);
    const Matrix x = g.matrix(n, d), w = g.matrix(d, k);
    const Labels y = g.labels(static_cast<std::size_t>(n), k);
    const double v = ce_loss(x, y, w).value;
    EXPECT_NEAR(v, oracle_ce(x, y, w), 1e-9);
    EXPECT_GE(v, 0.0);
  }
}

TEST(CeLoss, GradientsMatchFiniteDifferences) {
  Gen g(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = g.matrix(3, 4), w = g.matrix(4, 3);
    const Labels y = g.labels(3, 3);
    const auto v = ce_loss(x, y, w);
    EXPECT_LT(relative_error(v.grad_features,
                             numeric_gradient([&](const Matrix& m) { return ce_loss(m, y, w).value; }, x)),
              1e-4);
    EXPECT_LT(relative_error(v.grad_classifier,
                             numeric_gradient([&](const Matrix& m) { return ce_loss(x, y, m).value; }, w)),
              1e-4);
  }
}

TEST(CeLoss, ZeroOnlyWhenTrueClassIsCertain) {
  Matrix x(1, 2), w(2, 2);
  x << 1, 0;
  w << 800, 0,  //
      0, 0;
  EXPECT_EQ(ce_loss(x, {0}, w).value, 0.0);
  EXPECT_GT(ce_loss(x, {1}, w).value, 0.0);
}

TEST(CeLoss, Errors) {
  EXPECT_THROW(ce_loss(Matrix(0, 2), {}, Matrix::Zero(2, 2)), ArgumentError);
  EXPECT_THROW(ce_loss(Matrix::Zero(1, 3), {0}, Matrix::Zero(2, 2)), ShapeError);
  EXPECT_THROW(ce_loss(Matrix::Zero(1, 2), {2}, Matrix::Zero(2, 2)), ArgumentError);
  EXPECT_THROW(ce_loss(Matrix::Zero(2, 2), {0}, Matrix::Zero(2, 2)), ArgumentError);
}

TEST(ContrastiveLoss, SinglePairIsZero) {
  Gen g(4);
  EXPECT_NEAR(contrastive_loss(g.unit_rows(1, 3), g.unit_rows(1, 3), 0.01).value, 0.0, 1e-15);
}

TEST(ContrastiveLoss, OrthogonalPairsTauOneByHand) {
  const Matrix e = Matrix::Identity(2, 2);
  // S = I: each direction is a 2-way softmax with logits (1, 0).
  const double per = -(1 - std::log(std::exp(1.0) + 1.0));
  EXPECT_NEAR(contrastive_loss(e, e, 1.0).value, 2 * per, 1e-15);
}

TEST(ContrastiveLoss, SymmetricAndMatchesOracle) {
  Gen g(5);
  for (int t = 0; t < 200; ++t) {
    const int n = g.integer(1, 4), d = g.integer(1, 8);
    const double tau = g.uniform(0.05, 2.0);
    const Matrix x = g.unit_rows(n, d), y = g.unit_rows(n, d);
    const double v = contrastive_loss(x, y, tau).value;
    EXPECT_NEAR(v, oracle_contrastive(x, y, tau), 1e-9);
    EXPECT_NEAR(v, contrastive_loss(y, x, tau).value, 1e-12);
    EXPECT_GE(v, -1e-15);
  }
}

TEST(ContrastiveLoss, GradientsMatchFiniteDifferences) {
  Gen g(6);
  for (int t = 0; t < 20; ++t) {
    const Matrix x = g.matrix(3, 4), y = g.matrix(3, 4);
    const double tau = 0.5;
    const auto v = contrastive_loss(x, y, tau);
    EXPECT_LT(relative_error(v.grad_image, numeric_gradient([&](const Matrix& m) {
                                return contrastive_loss(m, y, tau).value;
                              }, x)),
              1e-4);
    EXPECT_LT(relative_error(v.grad_text, numeric_gradient([&](const Matrix& m) {
                               return contrastive_loss(x, m, tau).value;
                             }, y)),
              1e-4);
  }
}

TEST(ContrastiveLoss, Errors) {
  EXPECT_THROW(contrastive_loss(Matrix::Zero(2, 3), Matrix::Zero(3, 3), 1.0), ArgumentError);
  EXPECT_THROW(contrastive_loss(Matrix::Zero(2, 3), Matrix::Zero(2, 3), 0.0), ArgumentError);
}

TEST(ApLoss, ZeroRadiusOrZeroStepsEqualsCe) {
  Gen g(7);
  const Matrix x = g.matrix(4, 3), w = g.matrix(3, 2);
  const Labels y = g.labels(4, 2);
  const double ce = ce_loss(x, y, w).value;
  PerturbationConfig c;
  c.epsilon = 0.0;
  EXPECT_EQ(ap_loss(x, y, w, Perturber(c)).loss.value, ce);
  c.epsilon = 0.1;
  c.iterations = 0;
  EXPECT_EQ(ap_loss(x, y, w, Perturber(c)).loss.value, ce);
}

TEST(ApLoss, OneStepNeverBelowCleanLoss) {
  Gen g(8);
  PerturbationConfig c;
  c.iterations = 1;
  c.epsilon = 0.05;
  for (int t = 0; t < 500; ++t) {
    const Matrix x = g.matrix(3, 4), w = g.matrix(4, 3);
    const Labels y = g.labels(3, 3);
    EXPECT_GE(ap_loss(x, y, w, Perturber(c)).loss.value, ce_loss(x, y, w).value);
  }
}

TEST(ApLoss, EqualsCeOnPerturbedFeatures) {
  Gen g(9);
  const Matrix x = g.matrix(4, 3), w = g.matrix(3, 2);
  const Labels y = g.labels(4, 2);
  const Perturber p(PerturbationConfig{});
  const auto ap = ap_loss(x, y, w, p);
  const auto ce = ce_loss(ap.perturbation.perturbed, y, w);
  EXPECT_EQ(ap.loss.value, ce.value);
  EXPECT_EQ(ap.loss.grad_features, ce.grad_features);
}

TEST(RaLoss, SameContractAsCe) {
  Gen g(10);
  const Matrix x = g.matrix(4, 3), w = g.matrix(3, 4);
  const Labels y{0, 3, 1, 3};
  EXPECT_EQ(ra_loss(x, y, w).value, ce_loss(x, y, w).value);
  EXPECT_NEAR(ra_loss(x, y, w).value, oracle_ce(x, y, w), 1e-12);
  EXPECT_THROW(ra_loss(Matrix(0, 3), {}, w), ArgumentError);
}

TEST(CombinedLoss, ZeroWeightsEqualCe) {
  Gen g(11);
  for (int t = 0; t < 100; ++t) {
    const Matrix x = g.matrix(4, 3), w = g.matrix(3, 3), r = g.matrix(2, 3);
    const Labels y = g.labels(4, 3), yr = g.labels(2, 3);
    LossWeights lw{0.0, 0.0, 0.01};
    const FeatureBatch id{x, y}, ret{r, yr};
    const Perturber p(PerturbationConfig{});
    const double ce = ce_loss(x, y, w).value;
    EXPECT_NEAR(combined_loss(id, nullptr, w, lw, nullptr).total, ce, 1e-12);
    EXPECT_NEAR(combined_loss(id, &ret, w, lw, &p).total, ce, 1e-12);
  }
}

TEST(CombinedLoss, IsSumOfIndependentTerms) {
  Gen g(12);
  for (int t = 0; t < 100; ++t) {
    const int n = g.integer(1, 4), m = g.integer(1, 4), k = g.integer(2, 5), d = g.integer(2, 6);
    const Matrix x = g.matrix(n, d), r = g.matrix(m, d), w = g.matrix(d, k);
    const Labels y = g.labels(static_cast<std::size_t>(n), k), yr = g.labels(static_cast<std::size_t>(m), k);
    const LossWeights lw{g.uniform(0, 2), g.uniform(0, 2), 0.01};
    PerturbationConfig pc;
    pc.epsilon = g.uniform(0, 0.1);
    const Perturber p(pc);

    Matrix both(n + m, d);
    both << x, r;
    Labels yb = y;
    yb.insert(yb.end(), yr.begin(), yr.end());
    const double expect = ce_loss(x, y, w).value + lw.lambda_ap * ap_loss(both, yb, w, p).loss.value +
                          lw.lambda_ra * ra_loss(r, yr, w).value;
    const FeatureBatch id{x, y}, ret{r, yr};
    EXPECT_NEAR(combined_loss(id, &ret, w, lw, &p).total, expect, 1e-9);

    const double expect_id = ce_loss(x, y, w).value + lw.lambda_ap * ap_loss(x, y, w, p).loss.value;
    LossWeights no_ra = lw;
    no_ra.lambda_ra = 0.0;
    EXPECT_NEAR(combined_loss(id, nullptr, w, no_ra, &p).total, expect_id, 1e-9);
  }
}

TEST(CombinedLoss, ClassifierGradientMatchesFiniteDifferencesWithDetachedDelta) {
  Gen g(13);
  const Matrix x = g.matrix(3, 4), r = g.matrix(2, 4), w = g.matrix(4, 3);
  const Labels y{0, 1, 2}, yr{2, 2};
  const LossWeights lw{0.7, 1.3, 0.01};
  PerturbationConfig pc;
  pc.epsilon = 0.02;
  const Perturber p(pc);
  const FeatureBatch id{x, y}, ret{r, yr};
  const auto c = combined_loss(id, &ret, w, lw, &p);
  // Hold delta fixed at its value for the unperturbed inputs.
  Matrix both(5, 4);
  both << x, r;
  Labels yb{0, 1, 2, 2, 2};
  const Matrix delta = p(both, yb, w).delta;
  auto fixed = [&](const Matrix& xm, const Matrix& rm, const Matrix& wm) {
    Matrix b(5, 4);
    b << xm, rm;
    return ce_loss(xm, y, wm).value + lw.lambda_ap * ce_loss(b + delta, yb, wm).value +
           lw.lambda_ra * ce_loss(rm, yr, wm).value;
  };
  EXPECT_LT(relative_error(c.grad_classifier,
                           numeric_gradient([&](const Matrix& m) { return fixed(x, r, m); }, w)),
            1e-4);
  EXPECT_LT(relative_error(c.grad_id_features,
                           numeric_gradient([&](const Matrix& m) { return fixed(m, r, w); }, x)),
            1e-4);
  EXPECT_LT(relative_error(c.grad_retrieved_features,
                           numeric_gradient([&](const Matrix& m) { return fixed(x, m, w); }, r)),
            1e-4);
}

TEST(CombinedLoss, Preconditions) {
  const FeatureBatch id{Matrix::Zero(1, 2), {0}};
  const Matrix w = Matrix::Zero(2, 2);
  EXPECT_THROW(combined_loss(id, nullptr, w, LossWeights{0.0, 1.0, 0.01}, nullptr), ArgumentError);
  EXPECT_THROW(combined_loss(id, nullptr, w, LossWeights{1.0, 0.0, 0.01}, nullptr), ArgumentError);
  EXPECT_THROW(LossWeights({-1.0, 0.0, 0.01}).validate(), ArgumentError);
  EXPECT_THROW(LossWeights({0.0, 0.0, 0.0}).validate(), ArgumentError);
}

TEST(CombinedLoss, PublishedDefaultWeights) {
  const LossWeights lw;
  EXPECT_EQ(lw.lambda_ap, 1.0);
  EXPECT_EQ(lw.lambda_ra, 1.0);
  EXPECT_EQ(lw.tau, 0.01);
  LossWeights quarter = lw;
  quarter.lambda_ap = 0.25;
  EXPECT_NO_THROW(quarter.validate());
}
