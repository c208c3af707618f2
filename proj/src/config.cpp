#include "srapf/config.hpp"

#include <fstream>

#include "srapf/errors.hpp"

namespace srapf {

using json = nlohmann::json;

json stage_config_to_json(const StageConfig& c) {
  json j;
  j["stage"] = c.stage;
  j["top_k_visual"] = c.top_k_visual;
  j["top_k_text"] = c.top_k_text;
  j["loss_mode"] = to_string(c.loss_mode);
  j["use_ra"] = c.use_ra;
  j["use_ap"] = c.use_ap;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_backbone"] = c.lr_backbone;
  j["lr_classifier"] = c.lr_classifier;
  j["weight_decay"] = c.weight_decay;
  j["warmup_iters"] = c.warmup_iters;
  j["warmup_lr"] = c.warmup_lr;
  j["schedule"] = c.schedule;
  j["lambda_ap"] = c.weights.lambda_ap;
  j["lambda_ra"] = c.weights.lambda_ra;
  j["tau"] = c.weights.tau;
  j["ap_iterations"] = c.perturbation.iterations;
  j["ap_epsilon"] = c.perturbation.epsilon;
  j["ap_alpha"] = c.perturbation.alpha ? json(*c.perturbation.alpha) : json(nullptr);
  j["ap_random_start"] = c.perturbation.random_start;
  j["input_jitter"] = c.input_jitter;
  j["seed"] = c.seed;
  return j;
}

StageConfig stage_config_from_json(const json& j, StageConfig c) {
  if (!j.is_object()) throw ConfigurationError("stage config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "stage") c.stage = v;
      else if (key == "top_k_visual") c.top_k_visual = v;
      else if (key == "top_k_text") c.top_k_text = v;
      else if (key == "loss_mode") c.loss_mode = parse_loss_mode(v.get<std::string>());
      else if (key == "use_ra") c.use_ra = v;
      else if (key == "use_ap") c.use_ap = v;
      else if (key == "epochs") c.epochs = v;
      else if (key == "batch_size") c.batch_size = v;
      else if (key == "lr_backbone") c.lr_backbone = v;
      else if (key == "lr_classifier") c.lr_classifier = v;
      else if (key == "weight_decay") c.weight_decay = v;
      else if (key == "warmup_iters") c.warmup_iters = v;
      else if (key == "warmup_lr") c.warmup_lr = v;
      else if (key == "schedule") c.schedule = v;
      else if (key == "lambda_ap") c.weights.lambda_ap = v;
      else if (key == "lambda_ra") c.weights.lambda_ra = v;
      else if (key == "tau") c.weights.tau = v;
      else if (key == "ap_iterations") c.perturbation.iterations = v;
      else if (key == "ap_epsilon") c.perturbation.epsilon = v;
      else if (key == "ap_alpha")
        c.perturbation.alpha = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "ap_random_start") c.perturbation.random_start = v;
      else if (key == "input_jitter") c.input_jitter = v;
      else if (key == "seed") c.seed = v;
      else throw ConfigurationError("unknown stage config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("stage config: ") + e.what());
  }
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace srapf
