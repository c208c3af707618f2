#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "srapf/model.hpp"

namespace srapf {

// Linear warmup from `warmup_lr` to the group's base rate over
// `warmup_iters` steps, then cosine annealing that reaches `min_lr` on the
// final step (total_steps - 1).
struct LrSchedule {
  std::size_t total_steps = 1;
  std::size_t warmup_iters = 18;
  double warmup_lr = 1e-8;
  double min_lr = 0.0;

  double at(double base_lr, std::size_t step) const;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW (decoupled weight decay) over the parameters of trainable groups only.
// Frozen groups are not part of the update set and are never written.
class AdamW {
 public:
  AdamW(const DualEncoderModel& model, const FreezePlan& plan, AdamWConfig config,
        LrSchedule schedule);

  void step(DualEncoderModel& model, const Gradients& grads);

  std::size_t steps_taken() const { return step_; }
  // Learning rate the next step will use for `group` (0 for frozen groups).
  double current_lr(std::string_view group) const;
  // Indices into model.parameters() that step() may modify.
  const std::vector<std::size_t>& update_set() const { return update_set_; }

 private:
  FreezePlan plan_;
  AdamWConfig config_;
  LrSchedule schedule_;
  std::vector<std::size_t> update_set_;
  std::vector<double> base_lr_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t step_ = 0;
};

AdamW make_optimizer(const DualEncoderModel& model, const FreezePlan& plan,
                     const AdamWConfig& config, const LrSchedule& schedule);

}  // namespace srapf
