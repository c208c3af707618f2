#include "srapf/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srapf/errors.hpp"

namespace srapf {

namespace {

// dCE(x_i, y_i)/dx_i for every row: W (p_i - onehot(y_i)).
Matrix ce_feature_gradient(const Matrix& x, const Labels& labels,
                           const Matrix& classifier) {
  Matrix p = softmax_rows(x * classifier);
  for (std::size_t i = 0; i < labels.size(); ++i)
    p(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  return p * classifier.transpose();
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double PerturbationConfig::step_size() const {
  if (alpha) return *alpha;
  if (iterations == 0) return 0.0;
  return 2.5 * epsilon / static_cast<double>(iterations);
}

void PerturbationConfig::validate() const {
  if (iterations < 0) throw ArgumentError("perturbation: T must be >= 0");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw ArgumentError("perturbation: epsilon must be finite and >= 0");
  if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha)))
    throw ArgumentError("perturbation: alpha must be finite and > 0");
}

PerturbationResult perturb(const Matrix& features, const Labels& labels,
                           const Matrix& classifier,
                           const PerturbationConfig& config) {
  config.validate();
  if (features.cols() != classifier.rows())
    throw ShapeError("perturb: feature dim does not match classifier");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ShapeError("perturb: labels and features differ in length");
  for (const int y : labels)
    if (y < 0 || y >= classifier.cols())
      throw ArgumentError("perturb: label " + std::to_string(y) + " out of range");

  PerturbationResult result;
  result.delta = Matrix::Zero(features.rows(), features.cols());
  if (config.iterations == 0 || config.epsilon == 0.0) {
    result.perturbed = features;
    return result;
  }

  const double eps = config.epsilon;
  const double step = config.step_size();
  if (config.random_start) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(-eps, eps);
    for (Eigen::Index j = 0; j < result.delta.cols(); ++j)
      for (Eigen::Index i = 0; i < result.delta.rows(); ++i)
        result.delta(i, j) = u(rng);
  }

  for (int t = 0; t < config.iterations; ++t) {
    const Matrix grad =
        ce_feature_gradient(features + result.delta, labels, classifier);
    if (!grad.allFinite()) {
      std::ostringstream msg;
      msg << "perturb: non-finite gradient at iteration " << t
          << " (max |x| = " << features.cwiseAbs().maxCoeff()
          << ", max |W| = " << classifier.cwiseAbs().maxCoeff() << ")";
      throw NumericError(msg.str());
    }
    result.delta = result.delta.binaryExpr(grad, [&](double d, double g) {
      return std::clamp(d + step * sign(g), -eps, eps);
    });
    result.iterations_run = t + 1;
  }
  result.perturbed = features + result.delta;
  return result;
}

Perturber::Perturber(PerturbationConfig config) : config_(config) {
  config_.validate();
}

PerturbationResult Perturber::operator()(const Matrix& features,
                                         const Labels& labels,
                                         const Matrix& classifier) const {
  return perturb(features, labels, classifier, config_);
}

}  // namespace srapf
