#include "srapf/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "srapf/errors.hpp"

namespace srapf {

double LrSchedule::at(double base_lr, std::size_t step) const {
  if (step < warmup_iters) {
    const double frac = static_cast<double>(step) / static_cast<double>(warmup_iters);
    return warmup_lr + (base_lr - warmup_lr) * frac;
  }
  if (total_steps == 0 || total_steps - 1 <= warmup_iters) return base_lr;
  const double span = static_cast<double>(total_steps - 1 - warmup_iters);
  const double progress = std::min(1.0, static_cast<double>(step - warmup_iters) / span);
  return min_lr + (base_lr - min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

AdamW::AdamW(const DualEncoderModel& model, const FreezePlan& plan, AdamWConfig config,
             LrSchedule schedule)
    : plan_(plan), config_(config), schedule_(schedule) {
  validate_plan(model, plan_);
  if (!(config_.weight_decay >= 0.0)) throw ConfigurationError("weight decay must be >= 0");
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!plan_.is_trainable(params[i].group)) continue;
    update_set_.push_back(i);
    base_lr_.push_back(plan_.learning_rate(params[i].group));
    m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
    v_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
  }
}

void AdamW::step(DualEncoderModel& model, const Gradients& grads) {
  auto& params = model.parameters();
  if (grads.size() != params.size())
    throw ConfigurationError("optimizer: gradient list does not match the model");
  const double t = static_cast<double>(step_ + 1);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t u = 0; u < update_set_.size(); ++u) {
    const std::size_t i = update_set_[u];
    const double lr = schedule_.at(base_lr_[u], step_);
    Matrix& p = params[i].value;
    const Matrix& g = grads[i];
    m_[u] = config_.beta1 * m_[u] + (1.0 - config_.beta1) * g;
    v_[u] = config_.beta2 * v_[u] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p *= (1.0 - lr * config_.weight_decay);
    p.array() -= lr * (m_[u].array() / bc1) / ((v_[u].array() / bc2).sqrt() + config_.eps);
  }
  ++step_;
}

double AdamW::current_lr(std::string_view group) const {
  if (!plan_.is_trainable(group)) return 0.0;
  return schedule_.at(plan_.learning_rate(group), step_);
}

AdamW make_optimizer(const DualEncoderModel& model, const FreezePlan& plan,
                     const AdamWConfig& config, const LrSchedule& schedule) {
  return AdamW(model, plan, config, schedule);
}

}  // namespace srapf
