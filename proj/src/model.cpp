#include "srapf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "srapf/errors.hpp"
#include "srapf/text.hpp"

namespace srapf {

namespace {

constexpr double kLayerNormEps = 1e-5;

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, double stddev,
                     std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

double gelu(double a) {
  return 0.5 * a * (1.0 + std::erf(a / std::numbers::sqrt2));
}

double gelu_grad(double a) {
  const double cdf = 0.5 * (1.0 + std::erf(a / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + a * pdf;
}

struct LayerNormOut {
  Matrix normed;
  Vector inv_std;
  Matrix out;
};

LayerNormOut layer_norm(const Matrix& h, const Matrix& gain, const Matrix& bias) {
  LayerNormOut r;
  const auto n = h.rows();
  const auto w = static_cast<double>(h.cols());
  r.normed.resize(n, h.cols());
  r.inv_std.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = h.row(i).sum() / w;
    const RowVector centered = h.row(i).array() - mean;
    const double var = centered.squaredNorm() / w;
    r.inv_std(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    r.normed.row(i) = centered * r.inv_std(i);
  }
  r.out = (r.normed.array().rowwise() * gain.row(0).array()).matrix();
  r.out.rowwise() += bias.row(0);
  return r;
}

// Returns dL/dh and accumulates into the gain/bias gradients.
Matrix layer_norm_backward(const Matrix& grad_out, const Matrix& normed,
                           const Vector& inv_std, const Matrix& gain,
                           Matrix& grad_gain, Matrix& grad_bias,
                           bool accumulate_params) {
  if (accumulate_params) {
    grad_gain.row(0) += (grad_out.array() * normed.array()).colwise().sum().matrix();
    grad_bias.row(0) += grad_out.colwise().sum();
  }
  const Matrix grad_normed =
      (grad_out.array().rowwise() * gain.row(0).array()).matrix();
  const auto w = static_cast<double>(normed.cols());
  Matrix grad_h(normed.rows(), normed.cols());
  for (Eigen::Index i = 0; i < normed.rows(); ++i) {
    const double mean_g = grad_normed.row(i).sum() / w;
    const double mean_gu = grad_normed.row(i).dot(normed.row(i)) / w;
    grad_h.row(i) = inv_std(i) * (grad_normed.row(i).array() - mean_g -
                                  normed.row(i).array() * mean_gu)
                                     .matrix();
  }
  return grad_h;
}

Matrix row_param(Eigen::Index cols, double value) {
  return Matrix::Constant(1, cols, value);
}

}  // namespace

bool ModelConfig::same_architecture(const ModelConfig& o) const {
  return raw_dim == o.raw_dim && vocab_size == o.vocab_size &&
         width == o.width && mlp_hidden == o.mlp_hidden &&
         visual_blocks == o.visual_blocks && text_blocks == o.text_blocks &&
         embed_dim == o.embed_dim && num_classes == o.num_classes;
}

void ModelConfig::validate() const {
  if (raw_dim < 1 || vocab_size < 1 || width < 1 || mlp_hidden < 1 ||
      visual_blocks < 1 || text_blocks < 1 || embed_dim < 1 ||
      num_classes < 1) {
    throw ArgumentError(
        "model config: all dimensions and block counts must be >= 1");
  }
}

std::string block_group(Tower tower, int block) {
  return std::string(tower == Tower::kVisual ? "visual" : "text") + ".block." +
         std::to_string(block);
}

DualEncoderModel::DualEncoderModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  visual_ = build_tower(Tower::kVisual, 0);
  text_ = build_tower(Tower::kText, 1);
  classifier_ = add("classifier.weight", std::string(kClassifierGroup),
                    Matrix::Zero(config_.embed_dim, config_.num_classes));
}

std::size_t DualEncoderModel::add(std::string name, std::string group,
                                  Matrix value) {
  params_.push_back({std::move(name), std::move(group), std::move(value)});
  return params_.size() - 1;
}

DualEncoderModel::TowerSlots DualEncoderModel::build_tower(
    Tower tower, std::uint64_t seed_offset) {
  std::mt19937_64 rng(config_.seed * 2 + seed_offset);
  const std::string prefix = tower == Tower::kVisual ? "visual" : "text";
  const int blocks = block_count(tower);
  const int w = config_.width;
  const int hidden = config_.mlp_hidden;

  TowerSlots s;
  const std::string bottom = block_group(tower, 0);
  if (tower == Tower::kVisual) {
    s.stem_w = add(prefix + ".stem.weight", bottom,
                   random_normal(config_.raw_dim, w,
                                 1.0 / std::sqrt(config_.raw_dim), rng));
    s.stem_b = add(prefix + ".stem.bias", bottom, row_param(w, 0.0));
  } else {
    s.stem_w = add(prefix + ".token_embedding", bottom,
                   random_normal(config_.vocab_size, w, 1.0, rng));
  }
  for (int b = 0; b < blocks; ++b) {
    const std::string g = block_group(tower, b);
    const std::string p = prefix + ".blocks." + std::to_string(b);
    BlockSlots bs{};
    bs.ln_gain = add(p + ".ln.gain", g, row_param(w, 1.0));
    bs.ln_bias = add(p + ".ln.bias", g, row_param(w, 0.0));
    bs.fc1_w = add(p + ".fc1.weight", g,
                   random_normal(w, hidden, 1.0 / std::sqrt(w), rng));
    bs.fc1_b = add(p + ".fc1.bias", g, row_param(hidden, 0.0));
    bs.fc2_w = add(p + ".fc2.weight", g,
                   random_normal(hidden, w, 0.5 / std::sqrt(hidden), rng));
    bs.fc2_b = add(p + ".fc2.bias", g, row_param(w, 0.0));
    s.blocks.push_back(bs);
  }
  const std::string top = block_group(tower, blocks - 1);
  s.head_gain = add(prefix + ".head.ln.gain", top, row_param(w, 1.0));
  s.head_bias = add(prefix + ".head.ln.bias", top, row_param(w, 0.0));
  s.head_proj = add(prefix + ".head.proj", top,
                    random_normal(w, config_.embed_dim, 1.0 / std::sqrt(w), rng));
  return s;
}

int DualEncoderModel::block_count(Tower tower) const {
  return tower == Tower::kVisual ? config_.visual_blocks : config_.text_blocks;
}

const DualEncoderModel::TowerSlots& DualEncoderModel::slots(Tower tower) const {
  return tower == Tower::kVisual ? visual_ : text_;
}

std::size_t DualEncoderModel::parameter_index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw ArgumentError("unknown parameter: " + std::string(name));
}

std::vector<std::string> DualEncoderModel::groups() const {
  std::vector<std::string> out;
  for (const auto& p : params_)
    if (std::find(out.begin(), out.end(), p.group) == out.end())
      out.push_back(p.group);
  return out;
}

std::size_t DualEncoderModel::scalar_count(std::string_view group) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.group == group) n += static_cast<std::size_t>(p.value.size());
  return n;
}

std::size_t DualEncoderModel::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void DualEncoderModel::set_classifier(Matrix w) {
  if (w.rows() != config_.embed_dim || w.cols() != config_.num_classes) {
    throw ShapeError("classifier must be " + std::to_string(config_.embed_dim) +
                     "x" + std::to_string(config_.num_classes) + ", got " +
                     std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  }
  params_[classifier_].value = std::move(w);
}

void DualEncoderModel::set_class_names(std::vector<std::string> names) {
  if (!names.empty() && static_cast<int>(names.size()) != config_.num_classes) {
    throw ArgumentError("expected " + std::to_string(config_.num_classes) +
                        " class names, got " + std::to_string(names.size()));
  }
  class_names_ = std::move(names);
}

std::vector<std::size_t> DualEncoderModel::token_ids(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& tok : tokenize(text))
    ids.push_back(fnv1a64(tok) % static_cast<std::uint64_t>(config_.vocab_size));
  return ids;
}

void DualEncoderModel::run_blocks_and_head(const TowerSlots& s, Matrix h,
                                           EncoderTrace& trace) const {
  trace.blocks.reserve(s.blocks.size());
  for (const auto& b : s.blocks) {
    BlockTrace bt;
    bt.input = h;
    auto ln = layer_norm(h, params_[b.ln_gain].value, params_[b.ln_bias].value);
    bt.normed = std::move(ln.normed);
    bt.inv_std = std::move(ln.inv_std);
    bt.ln_out = std::move(ln.out);
    bt.pre_act = row_stable_product(bt.ln_out, params_[b.fc1_w].value);
    bt.pre_act.rowwise() += params_[b.fc1_b].value.row(0);
    bt.act = bt.pre_act.unaryExpr(&gelu);
    h += row_stable_product(bt.act, params_[b.fc2_w].value);
    h.rowwise() += params_[b.fc2_b].value.row(0);
    trace.blocks.push_back(std::move(bt));
  }
  trace.head_input = h;
  auto ln = layer_norm(h, params_[s.head_gain].value, params_[s.head_bias].value);
  trace.head_normed = std::move(ln.normed);
  trace.head_inv_std = std::move(ln.inv_std);
  trace.head_ln_out = std::move(ln.out);
  trace.projected = row_stable_product(trace.head_ln_out, params_[s.head_proj].value);
  trace.features = normalize_rows(trace.projected);
}

EncoderTrace DualEncoderModel::trace_image(const Matrix& raw) const {
  if (raw.cols() != config_.raw_dim) {
    throw ShapeError("image batch has " + std::to_string(raw.cols()) +
                     " columns, stem expects " + std::to_string(config_.raw_dim));
  }
  EncoderTrace trace;
  trace.tower = Tower::kVisual;
  trace.raw = raw;
  Matrix h = row_stable_product(raw, params_[visual_.stem_w].value);
  h.rowwise() += params_[*visual_.stem_b].value.row(0);
  run_blocks_and_head(visual_, std::move(h), trace);
  return trace;
}

EncoderTrace DualEncoderModel::trace_text(std::span<const std::string> prompts) const {
  if (prompts.empty()) throw ArgumentError("encode_text: empty prompt list");
  EncoderTrace trace;
  trace.tower = Tower::kText;
  const Matrix& table = params_[text_.stem_w].value;
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(prompts.size()), config_.width);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    auto ids = token_ids(prompts[i]);
    if (ids.empty()) {
      throw ArgumentError("prompt has no tokens: \"" + prompts[i] + "\"");
    }
    for (const auto id : ids)
      h.row(static_cast<Eigen::Index>(i)) += table.row(static_cast<Eigen::Index>(id));
    h.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(ids.size());
    trace.token_ids.push_back(std::move(ids));
  }
  run_blocks_and_head(text_, std::move(h), trace);
  return trace;
}

Matrix DualEncoderModel::encode_image(const Matrix& raw) const {
  return trace_image(raw).features;
}

Matrix DualEncoderModel::encode_text(std::span<const std::string> prompts) const {
  return trace_text(prompts).features;
}

Gradients DualEncoderModel::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

void DualEncoderModel::backward(const EncoderTrace& trace,
                                const Matrix& grad_features, int lowest_block,
                                Gradients& grads) const {
  const TowerSlots& s = slots(trace.tower);
  const int blocks = static_cast<int>(s.blocks.size());
  if (lowest_block >= blocks) return;
  lowest_block = std::max(lowest_block, 0);
  if (grads.size() != params_.size()) {
    throw ShapeError("gradient buffer does not match the parameter list");
  }

  // Head (shares the top block's group, which is trainable here).
  const Matrix grad_z =
      normalize_rows_backward(trace.projected, trace.features, grad_features);
  grads[s.head_proj] += trace.head_ln_out.transpose() * grad_z;
  const Matrix grad_head_ln = grad_z * params_[s.head_proj].value.transpose();
  Matrix grad_h = layer_norm_backward(
      grad_head_ln, trace.head_normed, trace.head_inv_std,
      params_[s.head_gain].value, grads[s.head_gain], grads[s.head_bias], true);

  for (int b = blocks - 1; b >= lowest_block; --b) {
    const BlockSlots& bs = s.blocks[static_cast<std::size_t>(b)];
    const BlockTrace& bt = trace.blocks[static_cast<std::size_t>(b)];
    grads[bs.fc2_w] += bt.act.transpose() * grad_h;
    grads[bs.fc2_b].row(0) += grad_h.colwise().sum();
    const Matrix grad_act = grad_h * params_[bs.fc2_w].value.transpose();
    const Matrix grad_pre =
        (grad_act.array() * bt.pre_act.unaryExpr(&gelu_grad).array()).matrix();
    grads[bs.fc1_w] += bt.ln_out.transpose() * grad_pre;
    grads[bs.fc1_b].row(0) += grad_pre.colwise().sum();
    const Matrix grad_ln = grad_pre * params_[bs.fc1_w].value.transpose();
    grad_h += layer_norm_backward(grad_ln, bt.normed, bt.inv_std,
                                  params_[bs.ln_gain].value, grads[bs.ln_gain],
                                  grads[bs.ln_bias], true);
  }

  if (lowest_block != 0) return;
  if (trace.tower == Tower::kVisual) {
    grads[s.stem_w] += trace.raw.transpose() * grad_h;
    grads[*s.stem_b].row(0) += grad_h.colwise().sum();
  } else {
    Matrix& table = grads[s.stem_w];
    for (std::size_t i = 0; i < trace.token_ids.size(); ++i) {
      const auto& ids = trace.token_ids[i];
      const double inv = 1.0 / static_cast<double>(ids.size());
      for (const auto id : ids)
        table.row(static_cast<Eigen::Index>(id)) +=
            inv * grad_h.row(static_cast<Eigen::Index>(i));
    }
  }
}

bool FreezePlan::is_trainable(std::string_view group) const {
  return trainable_groups.contains(std::string(group));
}

double FreezePlan::learning_rate(std::string_view group) const {
  if (!is_trainable(group)) return 0.0;
  const auto it = group_learning_rates.find(std::string(group));
  return it == group_learning_rates.end() ? 0.0 : it->second;
}

FreezePlan build_freeze_plan(const DualEncoderModel& model, int top_k_visual,
                             int top_k_text, double lr_backbone,
                             double lr_classifier) {
  const int bv = model.block_count(Tower::kVisual);
  const int bt = model.block_count(Tower::kText);
  if (top_k_visual < 0 || top_k_visual > bv) {
    throw ArgumentError("top_k_visual=" + std::to_string(top_k_visual) +
                        " outside [0, " + std::to_string(bv) + "]");
  }
  if (top_k_text < 0 || top_k_text > bt) {
    throw ArgumentError("top_k_text=" + std::to_string(top_k_text) +
                        " outside [0, " + std::to_string(bt) + "]");
  }
  if (!(lr_backbone >= 0.0) || !(lr_classifier >= 0.0) ||
      !std::isfinite(lr_backbone) || !std::isfinite(lr_classifier)) {
    throw ArgumentError("learning rates must be finite and non-negative");
  }
  FreezePlan plan;
  auto enable = [&](const std::string& g, double lr) {
    plan.trainable_groups.insert(g);
    plan.group_learning_rates[g] = lr;
  };
  enable(std::string(kClassifierGroup), lr_classifier);
  for (int b = bv - top_k_visual; b < bv; ++b)
    enable(block_group(Tower::kVisual, b), lr_backbone);
  for (int b = bt - top_k_text; b < bt; ++b)
    enable(block_group(Tower::kText, b), lr_backbone);
  return plan;
}

void validate_plan(const DualEncoderModel& model, const FreezePlan& plan) {
  const auto groups = model.groups();
  for (const auto& g : plan.trainable_groups) {
    if (std::find(groups.begin(), groups.end(), g) == groups.end())
      throw ConfigurationError("freeze plan names unknown group '" + g + "'");
    const auto it = plan.group_learning_rates.find(g);
    if (it == plan.group_learning_rates.end())
      throw ConfigurationError("trainable group '" + g + "' has no learning rate");
  }
}

int lowest_trainable_block(const DualEncoderModel& model, const FreezePlan& plan,
                           Tower tower) {
  const int blocks = model.block_count(tower);
  for (int b = 0; b < blocks; ++b)
    if (plan.is_trainable(block_group(tower, b))) return b;
  return blocks;
}

std::size_t trainable_scalar_count(const DualEncoderModel& model,
                                   const FreezePlan& plan) {
  std::size_t n = 0;
  for (const auto& g : plan.trainable_groups) n += model.scalar_count(g);
  return n;
}

Matrix classify(const Matrix& features, const Matrix& classifier) {
  if (features.cols() != classifier.rows()) {
    throw ShapeError("feature dim " + std::to_string(features.cols()) +
                     " does not match classifier rows " +
                     std::to_string(classifier.rows()));
  }
  return row_stable_product(features, classifier);
}

Matrix init_classifier_from_text(DualEncoderModel& model,
                                 const std::vector<std::string>& class_names,
                                 std::span<const std::string_view> templates) {
  if (templates.empty()) throw ArgumentError("at least one prompt template required");
  if (static_cast<int>(class_names.size()) != model.num_classes()) {
    throw ArgumentError("expected " + std::to_string(model.num_classes()) +
                        " class names, got " + std::to_string(class_names.size()));
  }
  Matrix w(model.embed_dim(), model.num_classes());
  for (std::size_t k = 0; k < class_names.size(); ++k) {
    std::vector<std::string> prompts;
    prompts.reserve(templates.size());
    for (const auto t : templates) prompts.push_back(render_template(t, class_names[k]));
    const Matrix emb = model.encode_text(prompts);
    const RowVector mean = emb.colwise().mean();
    w.col(static_cast<Eigen::Index>(k)) = normalize_rows(mean).row(0).transpose();
  }
  model.set_classifier(w);
  model.set_class_names(class_names);
  return w;
}

DualEncoderModel wise_ft_interpolate(const DualEncoderModel& finetuned,
                                     const DualEncoderModel& pretrained,
                                     double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ArgumentError("interpolation alpha must lie in [0, 1]");
  }
  const auto& a = finetuned.parameters();
  const auto& b = pretrained.parameters();
  if (!finetuned.config().same_architecture(pretrained.config()) ||
      a.size() != b.size()) {
    throw StructuralError("wise_ft_interpolate: architectures differ");
  }
  DualEncoderModel out = finetuned;
  auto& dst = out.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value.rows() != b[i].value.rows() ||
        a[i].value.cols() != b[i].value.cols()) {
      throw StructuralError("wise_ft_interpolate: parameter '" + a[i].name +
                            "' differs in name or shape");
    }
    dst[i].value = a[i].value.binaryExpr(b[i].value, [alpha](double x, double y) {
      return x == y ? x : alpha * x + (1.0 - alpha) * y;
    });
  }
  return out;
}

}  // namespace srapf
