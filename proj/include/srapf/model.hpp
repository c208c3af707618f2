#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srapf/tensor.hpp"

namespace srapf {

// Architecture descriptor of the desk-scale dual encoder. Two models are
// structurally compatible when every field except `seed` matches.
struct ModelConfig {
  int raw_dim = 32;        // visual input width
  int vocab_size = 1024;   // hashed token buckets of the text stem
  int width = 64;          // residual stream width of both towers
  int mlp_hidden = 128;    // inner width of each block's MLP
  int visual_blocks = 6;
  int text_blocks = 6;
  int embed_dim = 64;      // shared embedding dimension d
  int num_classes = 10;    // K
  std::uint64_t seed = 0;  // initialization seed

  bool same_architecture(const ModelConfig& other) const;
  void validate() const;
};

enum class Tower { kVisual, kText };

// One named tensor. `group` is the freezing unit the tensor belongs to.
struct Parameter {
  std::string name;
  std::string group;
  Matrix value;
};

// Aligned 1:1 with DualEncoderModel::parameters().
using Gradients = std::vector<Matrix>;

std::string block_group(Tower tower, int block);
inline constexpr std::string_view kClassifierGroup = "classifier";

// Activations cached by a forward pass so the matching backward pass can run.
struct BlockTrace {
  Matrix input;     // residual stream entering the block
  Matrix normed;    // (h - mean) * inv_std
  Vector inv_std;
  Matrix ln_out;    // normed * gain + bias
  Matrix pre_act;   // ln_out * W1 + b1
  Matrix act;       // gelu(pre_act)
};

struct EncoderTrace {
  Tower tower = Tower::kVisual;
  Matrix raw;                                // visual stem input
  std::vector<std::vector<std::size_t>> token_ids;  // text stem input
  std::vector<BlockTrace> blocks;
  Matrix head_input;
  Matrix head_normed;
  Vector head_inv_std;
  Matrix head_ln_out;
  Matrix projected;  // pre-normalization embedding z
  Matrix features;   // unit-norm embedding x
};

// Block-structured dual encoder with a linear classifier head W (d x K).
//
// Each tower is stem -> B pre-norm residual MLP blocks -> LayerNorm + linear
// projection -> L2 normalization. The stem shares the freezing group of block
// 0 and the head shares the group of block B-1; the classifier is its own
// group.
class DualEncoderModel {
 public:
  explicit DualEncoderModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  int embed_dim() const { return config_.embed_dim; }
  int num_classes() const { return config_.num_classes; }
  int block_count(Tower tower) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_index(std::string_view name) const;

  // Ordered, de-duplicated list of parameter groups.
  std::vector<std::string> groups() const;
  std::size_t scalar_count(std::string_view group) const;
  std::size_t scalar_count() const;

  const Matrix& classifier() const { return params_[classifier_].value; }
  void set_classifier(Matrix w);

  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names);

  // Unit-norm embeddings, one row per input.
  Matrix encode_image(const Matrix& raw) const;
  Matrix encode_text(std::span<const std::string> prompts) const;

  EncoderTrace trace_image(const Matrix& raw) const;
  EncoderTrace trace_text(std::span<const std::string> prompts) const;

  // Accumulates dL/dparams into `grads` for every block at or above
  // `lowest_block` (plus the stem when lowest_block == 0 and the head when
  // the top block is included). Nothing below `lowest_block` is computed;
  // lowest_block >= block_count leaves `grads` untouched.
  void backward(const EncoderTrace& trace, const Matrix& grad_features,
                int lowest_block, Gradients& grads) const;

  Gradients zero_gradients() const;

  std::vector<std::size_t> token_ids(std::string_view text) const;

 private:
  struct BlockSlots {
    std::size_t ln_gain, ln_bias, fc1_w, fc1_b, fc2_w, fc2_b;
  };
  struct TowerSlots {
    std::size_t stem_w = 0;
    std::optional<std::size_t> stem_b;
    std::vector<BlockSlots> blocks;
    std::size_t head_gain = 0, head_bias = 0, head_proj = 0;
  };

  std::size_t add(std::string name, std::string group, Matrix value);
  TowerSlots build_tower(Tower tower, std::uint64_t seed_offset);
  const TowerSlots& slots(Tower tower) const;
  void run_blocks_and_head(const TowerSlots& s, Matrix h,
                           EncoderTrace& trace) const;

  ModelConfig config_;
  std::vector<Parameter> params_;
  TowerSlots visual_;
  TowerSlots text_;
  std::size_t classifier_ = 0;
  std::vector<std::string> class_names_;
};

// Trainability and learning rate per parameter group.
struct FreezePlan {
  std::set<std::string> trainable_groups;
  std::map<std::string, double> group_learning_rates;

  bool is_trainable(std::string_view group) const;
  double learning_rate(std::string_view group) const;  // 0 when frozen
};

// Classifier always trainable at lr_classifier; the top-k blocks of each tower
// trainable at lr_backbone; everything else frozen. top_k_visual = 0 (and no
// text tuning) is linear probing, top_k_visual = B is full finetuning.
FreezePlan build_freeze_plan(const DualEncoderModel& model, int top_k_visual,
                             int top_k_text, double lr_backbone,
                             double lr_classifier);

// Throws ConfigurationError if the plan names a group the model lacks.
void validate_plan(const DualEncoderModel& model, const FreezePlan& plan);

// Index of the lowest trainable block of `tower`, or block_count when none.
int lowest_trainable_block(const DualEncoderModel& model, const FreezePlan& plan,
                           Tower tower);

std::size_t trainable_scalar_count(const DualEncoderModel& model,
                                   const FreezePlan& plan);

// logits[i][j] = w_j^T x_i.
Matrix classify(const Matrix& features, const Matrix& classifier);

// w_k = normalize(mean_t g(template_t(class_k))). Replaces the model's
// classifier and records the class names.
Matrix init_classifier_from_text(DualEncoderModel& model,
                                 const std::vector<std::string>& class_names,
                                 std::span<const std::string_view> templates);

// Parameter-space interpolation alpha * finetuned + (1 - alpha) * pretrained.
DualEncoderModel wise_ft_interpolate(const DualEncoderModel& finetuned,
                                     const DualEncoderModel& pretrained,
                                     double alpha);

}  // namespace srapf
