#pragma once

#include <filesystem>

#include <json.hpp>

#include "srapf/pipeline.hpp"

namespace srapf {

// Key-value (JSON object) form of a StageConfig. Every StageConfig field has a
// key of the same name; the loss weights and PGD settings are flattened
// (lambda_ap, lambda_ra, tau, ap_iterations, ap_epsilon, ap_alpha,
// ap_random_start).
nlohmann::json stage_config_to_json(const StageConfig& config);

// Applies the keys present in `j` on top of `base`. Unknown keys raise
// ConfigurationError.
StageConfig stage_config_from_json(const nlohmann::json& j, StageConfig base = {});

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace srapf
