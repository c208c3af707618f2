#include "srapf/recipes.hpp"

#include <algorithm>
#include <cmath>

#include "srapf/errors.hpp"
#include "srapf/text.hpp"

namespace srapf {

RecipeOptions published_recipe_options() { return RecipeOptions{}; }

RecipeOptions toy_recipe_options() {
  RecipeOptions o;
  o.lr_backbone = 3e-4;
  o.lr_classifier = 1e-2;
  o.input_jitter = 0.05;
  return o;
}

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"LP",     "FFT",       "PFT",      "PCT",
                                                 "PFT+RA", "PFT+AP", "PFT+RA+AP", "SRAPF"};
  return names;
}

bool recipe_uses_retrieval(const std::string& name) {
  return name == "PFT+RA" || name == "PFT+RA+AP" || name == "SRAPF";
}

namespace {

StageConfig base_stage(const std::string& stage, int epochs, double weight_decay,
                       const RecipeOptions& o) {
  StageConfig c;
  c.stage = stage;
  c.epochs = std::max(1, static_cast<int>(std::lround(epochs * o.epoch_scale)));
  c.weight_decay = weight_decay;
  if (o.lr_backbone) c.lr_backbone = *o.lr_backbone;
  if (o.lr_classifier) c.lr_classifier = *o.lr_classifier;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.input_jitter) c.input_jitter = *o.input_jitter;
  if (o.lambda_ap) c.weights.lambda_ap = *o.lambda_ap;
  if (o.epsilon) c.perturbation.epsilon = *o.epsilon;
  if (o.ap_iterations) c.perturbation.iterations = *o.ap_iterations;
  c.top_k_visual = o.top_k;
  c.seed = o.seed;
  return c;
}

}  // namespace

std::vector<StageConfig> recipe_stages(const std::string& name, const ModelConfig& arch,
                                       const RecipeOptions& o) {
  if (name == "LP") {
    auto c = base_stage("LP", 50, 0.1, o);
    c.top_k_visual = 0;
    return {c};
  }
  if (name == "FFT") {
    auto c = base_stage("FFT", 50, 0.1, o);
    c.top_k_visual = arch.visual_blocks;
    return {c};
  }
  if (name == "PFT") return {base_stage("PFT", 50, 0.1, o)};
  if (name == "PCT") {
    auto c = base_stage("PCT", 50, 0.1, o);
    c.loss_mode = LossMode::kCL;
    c.top_k_visual = o.pct_top_k;
    c.top_k_text = o.pct_top_k;
    return {c};
  }
  if (name == "PFT+RA") {
    auto c = base_stage("PFT+RA", 10, 0.01, o);
    c.use_ra = true;
    return {c};
  }
  if (name == "PFT+AP") {
    auto c = base_stage("PFT+AP", 50, 0.1, o);
    c.use_ap = true;
    return {c};
  }
  if (name == "PFT+RA+AP") {
    auto c = base_stage("PFT+RA+AP", 10, 0.01, o);
    c.use_ra = true;
    c.use_ap = true;
    return {c};
  }
  if (name == "SRAPF") {
    auto s1 = base_stage("stage1", 10, 0.01, o);
    s1.use_ra = true;
    auto s2 = base_stage("stage2", 10, 0.01, o);
    s2.use_ap = true;
    return {s1, s2};
  }
  throw ArgumentError("unknown recipe '" + name + "'");
}

RecipeResult run_stages(const std::string& name, const DualEncoderModel& pretrained,
                        const TaskData& task, const std::vector<StageConfig>& configs) {
  if (configs.empty() || configs.size() > 2)
    throw ArgumentError("a recipe has one or two stages");
  const bool needs_corpus = std::any_of(configs.begin(), configs.end(),
                                        [](const StageConfig& c) { return c.use_ra; });
  if (needs_corpus && (task.corpus == nullptr || task.payloads == nullptr))
    throw ArgumentError("recipe '" + name + "' uses retrieval augmentation but no corpus was given");

  DualEncoderModel model = pretrained;
  init_classifier_from_text(model, task.train.class_names, default_prompt_templates());

  RecipeResult out;
  out.recipe = name;
  out.configs = configs;
  if (configs.size() == 2) {
    RetrievedDataset retrieved;
    build_retrieved_set(model, task, &retrieved);
    out.retrieved_count = retrieved.records.size();
    SrapfResult r = run_srapf(model, task, configs[0], configs[1]);
    out.stages = {std::move(r.stage1), std::move(r.stage2)};
    out.stage1_report = std::move(r.stage1_report);
    out.report = std::move(r.report);
    out.access_log = std::move(r.access_log);
    return out;
  }

  const StageConfig& c = configs.front();
  LabeledDataset retrieved;
  if (c.use_ra) {
    retrieved = build_retrieved_set(model, task);
    out.retrieved_count = retrieved.size();
  }
  out.stages.push_back(train_stage(model, {&task.train, &task.id_val, c.use_ra ? &retrieved : nullptr},
                                   c, &out.access_log));
  out.report = evaluate(out.stages.back().best.model, task.tests, c.seed, c.stage);
  return out;
}

RecipeResult run_recipe(const std::string& name, const DualEncoderModel& pretrained,
                        const TaskData& task, const RecipeOptions& options) {
  const auto configs = recipe_stages(name, pretrained.config(), options);
  return run_stages(name, pretrained, task, configs);
}

}  // namespace srapf
