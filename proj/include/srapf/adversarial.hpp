#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "srapf/tensor.hpp"

namespace srapf {

// PGD parameters of AP(x, y; T, eps). `alpha` is the per-step size; leave it
// unset to use 2.5 * eps / T.
struct PerturbationConfig {
  int iterations = 10;     // T
  double epsilon = 0.01;   // L-inf radius
  std::optional<double> alpha;
  bool random_start = false;
  std::uint64_t seed = 0;  // only read when random_start is set

  double step_size() const;
  void validate() const;
};

struct PerturbationResult {
  Matrix perturbed;  // original + delta
  Matrix delta;      // |delta_ij| <= epsilon
  int iterations_run = 0;
};

// Sign-gradient ascent on the CE loss of a linear head, in feature space:
//   x^t = x^{t-1} + alpha * sign(grad_x CE(x^{t-1}, y))
// with the cumulative displacement clamped to [-eps, eps] per coordinate after
// every step. The classifier is treated as fixed; no encoder is involved.
PerturbationResult perturb(const Matrix& features, const Labels& labels,
                           const Matrix& classifier,
                           const PerturbationConfig& config);

// Holds a validated configuration; ap_loss and the trainers take one of these.
class Perturber {
 public:
  explicit Perturber(PerturbationConfig config);

  const PerturbationConfig& config() const { return config_; }
  PerturbationResult operator()(const Matrix& features, const Labels& labels,
                                const Matrix& classifier) const;

 private:
  PerturbationConfig config_;
};

}  // namespace srapf
