#include "srapf/losses.hpp"

#include <cmath>

#include "srapf/errors.hpp"

namespace srapf {

namespace {

void check_batch(const Matrix& features, const Labels& labels,
                 const Matrix& classifier, const char* who) {
  if (features.rows() == 0)
    throw ArgumentError(std::string(who) + ": empty batch");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ArgumentError(std::string(who) + ": " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(features.rows()) +
                        " feature rows");
  if (features.cols() != classifier.rows())
    throw ShapeError(std::string(who) + ": feature dim " +
                     std::to_string(features.cols()) + " vs classifier rows " +
                     std::to_string(classifier.rows()));
  for (const int y : labels)
    if (y < 0 || y >= classifier.cols())
      throw ArgumentError(std::string(who) + ": label " + std::to_string(y) +
                          " outside [0, " + std::to_string(classifier.cols()) + ")");
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_ap >= 0.0) || !(lambda_ra >= 0.0) || !std::isfinite(lambda_ap) ||
      !std::isfinite(lambda_ra))
    throw ArgumentError("loss weights must be finite and non-negative");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ArgumentError("contrastive temperature must be positive");
}

LossValue ce_loss(const Matrix& features, const Labels& labels,
                  const Matrix& classifier) {
  check_batch(features, labels, classifier, "ce_loss");
  const Matrix logits = row_stable_product(features, classifier);
  const Vector lse = logsumexp_rows(logits);
  const auto n = static_cast<double>(features.rows());

  LossValue out;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    total += lse(r) - logits(r, labels[i]);
  }
  out.value = total / n;

  Matrix grad_logits = softmax_rows(logits);
  for (std::size_t i = 0; i < labels.size(); ++i)
    grad_logits(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  grad_logits /= n;
  out.grad_features = grad_logits * classifier.transpose();
  out.grad_classifier = features.transpose() * grad_logits;
  return out;
}

ContrastiveValue contrastive_loss(const Matrix& image_features,
                                  const Matrix& text_features, double tau) {
  if (image_features.rows() != text_features.rows())
    throw ArgumentError("contrastive_loss: " +
                        std::to_string(image_features.rows()) + " images vs " +
                        std::to_string(text_features.rows()) + " texts");
  if (image_features.rows() == 0)
    throw ArgumentError("contrastive_loss: empty batch");
  if (image_features.cols() != text_features.cols())
    throw ShapeError("contrastive_loss: embedding dims differ");
  if (!(tau > 0.0)) throw ArgumentError("contrastive_loss: tau must be > 0");

  const Matrix sim = image_features * text_features.transpose() / tau;
  const Vector row_lse = logsumexp_rows(sim);
  const Vector col_lse = logsumexp_rows(sim.transpose());
  const auto n = sim.rows();

  ContrastiveValue out;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    total += (row_lse(i) + col_lse(i)) - 2.0 * sim(i, i);
  out.value = total / static_cast<double>(n);

  // d/dS of both directional terms.
  Matrix grad_sim = softmax_rows(sim) + softmax_rows(sim.transpose()).transpose();
  grad_sim.diagonal().array() -= 2.0;
  grad_sim /= static_cast<double>(n);
  out.grad_image = grad_sim * text_features / tau;
  out.grad_text = grad_sim.transpose() * image_features / tau;
  return out;
}

ApLossValue ap_loss(const Matrix& features, const Labels& labels,
                    const Matrix& classifier, const Perturber& perturber) {
  check_batch(features, labels, classifier, "ap_loss");
  ApLossValue out;
  out.perturbation = perturber(features, labels, classifier);
  out.loss = ce_loss(out.perturbation.perturbed, labels, classifier);
  return out;
}

LossValue ra_loss(const Matrix& features, const Labels& labels,
                  const Matrix& classifier) {
  if (features.rows() == 0)
    throw ArgumentError("ra_loss: retrieved set is empty");
  return ce_loss(features, labels, classifier);
}

CombinedLoss combined_loss(const FeatureBatch& id_batch,
                           const FeatureBatch* retrieved_batch,
                           const Matrix& classifier, const LossWeights& weights,
                           const Perturber* perturber) {
  weights.validate();
  const bool has_retrieved = retrieved_batch != nullptr && retrieved_batch->size() > 0;
  if (weights.lambda_ra > 0.0 && !has_retrieved)
    throw ArgumentError("combined_loss: lambda_RA > 0 requires a retrieved batch");
  if (weights.lambda_ap > 0.0 && perturber == nullptr)
    throw ArgumentError("combined_loss: lambda_AP > 0 requires a perturber");

  CombinedLoss out;
  const LossValue ce = ce_loss(id_batch.features, id_batch.labels, classifier);
  out.ce = ce.value;
  out.grad_id_features = ce.grad_features;
  out.grad_classifier = ce.grad_classifier;

  if (has_retrieved) {
    const LossValue ra =
        ra_loss(retrieved_batch->features, retrieved_batch->labels, classifier);
    out.ra = ra.value;
    out.grad_retrieved_features = weights.lambda_ra * ra.grad_features;
    out.grad_classifier += weights.lambda_ra * ra.grad_classifier;
  }

  if (perturber != nullptr) {
    const auto n_id = id_batch.size();
    ApLossValue ap;
    if (has_retrieved) {
      Labels labels = id_batch.labels;
      labels.insert(labels.end(), retrieved_batch->labels.begin(),
                    retrieved_batch->labels.end());
      ap = ap_loss(vstack(id_batch.features, retrieved_batch->features), labels,
                   classifier, *perturber);
      out.grad_retrieved_features +=
          weights.lambda_ap *
          ap.loss.grad_features.bottomRows(retrieved_batch->size());
    } else {
      ap = ap_loss(id_batch.features, id_batch.labels, classifier, *perturber);
    }
    out.ap = ap.loss.value;
    out.grad_id_features += weights.lambda_ap * ap.loss.grad_features.topRows(n_id);
    out.grad_classifier += weights.lambda_ap * ap.loss.grad_classifier;
  }

  out.total = out.ce + weights.lambda_ap * out.ap + weights.lambda_ra * out.ra;
  return out;
}

}  // namespace srapf
