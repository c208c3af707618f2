#pragma once

#include <optional>

#include "srapf/adversarial.hpp"
#include "srapf/tensor.hpp"

namespace srapf {

// lambda_ap / lambda_ra weight the AP and RA terms; tau is the contrastive
// temperature.
struct LossWeights {
  double lambda_ap = 1.0;
  double lambda_ra = 1.0;
  double tau = 0.01;

  void validate() const;
};

// Features with aligned integer labels.
struct FeatureBatch {
  Matrix features;  // n x d
  Labels labels;    // n entries in [0, K)

  Eigen::Index size() const { return features.rows(); }
};

// A scalar loss together with its gradients w.r.t. the feature rows and the
// classifier.
struct LossValue {
  double value = 0.0;
  Matrix grad_features;
  Matrix grad_classifier;
};

// Mean over the batch of -log softmax(W^T x_i)_{y_i}.
LossValue ce_loss(const Matrix& features, const Labels& labels,
                  const Matrix& classifier);

struct ContrastiveValue {
  double value = 0.0;
  Matrix grad_image;
  Matrix grad_text;
};

// -(1/|B|) sum_i [ log softmax_j(x_i.t_j / tau)_i + log softmax_j(x_j.t_i / tau)_i ].
// Both directional terms are summed inside a single batch mean (no 1/2).
ContrastiveValue contrastive_loss(const Matrix& image_features,
                                  const Matrix& text_features, double tau);

// CE evaluated at AP(x, y; T, eps). The perturbation is a constant: the
// feature gradient is dCE/dx evaluated at the perturbed point.
struct ApLossValue {
  LossValue loss;
  PerturbationResult perturbation;
};
ApLossValue ap_loss(const Matrix& features, const Labels& labels,
                    const Matrix& classifier, const Perturber& perturber);

// CE over retrieved data. Identical contract to ce_loss, but an empty set is
// reported as a retrieval problem.
LossValue ra_loss(const Matrix& features, const Labels& labels,
                  const Matrix& classifier);

struct CombinedLoss {
  double total = 0.0;
  double ce = 0.0;
  double ap = 0.0;  // 0 when lambda_ap == 0 and no perturber is given
  double ra = 0.0;
  Matrix grad_id_features;
  Matrix grad_retrieved_features;  // empty without a retrieved batch
  Matrix grad_classifier;
};

// L = L_CE(id) + lambda_ap * L_AP + lambda_ra * L_RA(retrieved).
//
// When a retrieved batch is supplied, L_AP is the mean CE over the perturbed
// union of ID and retrieved features (one adversarial counterpart per clean
// feature). Each term keeps its own batch mean.
CombinedLoss combined_loss(const FeatureBatch& id_batch,
                           const FeatureBatch* retrieved_batch,
                           const Matrix& classifier, const LossWeights& weights,
                           const Perturber* perturber);

}  // namespace srapf
