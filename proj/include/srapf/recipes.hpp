#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srapf/pipeline.hpp"

namespace srapf {

// Knobs shared by every recipe. Unset optionals keep the recipe default.
struct RecipeOptions {
  double epoch_scale = 1.0;  // multiplies every epoch count (rounded, min 1)
  std::optional<double> lr_backbone;
  std::optional<double> lr_classifier;
  std::optional<int> batch_size;
  int top_k = 4;      // PFT blocks
  int pct_top_k = 3;  // PCT blocks on each tower
  std::optional<double> input_jitter;
  std::optional<double> lambda_ap;
  std::optional<double> epsilon;
  std::optional<int> ap_iterations;
  std::uint64_t seed = 0;
};

// Learning rates, batch size, epoch counts and weight decays as published.
RecipeOptions published_recipe_options();

// Settings for the toy encoder on the synthetic benchmark.
RecipeOptions toy_recipe_options();

// LP, FFT, PFT, PCT, PFT+RA, PFT+AP, PFT+RA+AP, SRAPF.
const std::vector<std::string>& recipe_names();
bool recipe_uses_retrieval(const std::string& name);

// Stage configs of a recipe; one entry, or two for SRAPF.
std::vector<StageConfig> recipe_stages(const std::string& name, const ModelConfig& arch,
                                       const RecipeOptions& options);

struct RecipeResult {
  std::string recipe;
  std::vector<StageConfig> configs;
  std::vector<StageResult> stages;
  std::optional<EvalReport> stage1_report;  // SRAPF only
  EvalReport report;
  DataAccessLog access_log;
  std::size_t retrieved_count = 0;

  const Checkpoint& final_checkpoint() const { return stages.back().best; }
};

// Initializes the classifier from class-name prompts, then trains. Throws
// ArgumentError for an unknown recipe or an RA recipe without a corpus.
RecipeResult run_recipe(const std::string& name, const DualEncoderModel& pretrained,
                        const TaskData& task, const RecipeOptions& options);

// Runs explicit stage configs (one stage, or two for SRAPF).
RecipeResult run_stages(const std::string& name, const DualEncoderModel& pretrained,
                        const TaskData& task, const std::vector<StageConfig>& configs);

}  // namespace srapf
