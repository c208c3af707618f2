// srapf: command-line front end.
//
//   srapf generate --out DIR [--classes K] [--shifts noise,rotation,...] [--seed N]
//   srapf pretrain --task DIR [--out PATH] [--epochs N] [--seed N]
//   srapf retrieve --corpus PATH --classes PATH --model PATH [--cap 500] --out PATH
//   srapf train    --recipe NAME --task DIR [--corpus PATH] [--seed N] --out DIR
//   srapf sweep    --task DIR --eps 0,0.005,0.01 --out PATH
//   srapf evaluate --task DIR --checkpoint PATH [--out PATH]
//   srapf report   --runs DIR... [--scatter PATH] [--summary PATH]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "srapf/config.hpp"
#include "srapf/errors.hpp"
#include "srapf/recipes.hpp"
#include "srapf/sweep.hpp"
#include "srapf/tsv.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srapf;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto field : split(text, ',')) out.push_back(parse_double(field));
  return out;
}

struct CommonRun {
  std::string task;
  std::string model;
  std::string corpus;
  std::string preset = "toy";
  std::uint64_t seed = 0;
  int shots = 16;
  std::size_t cap = 500;
  double epoch_scale = 1.0;
  int top_k = 4;

  void add_to(CLI::App* app) {
    app->add_option("--task", task, "task directory")->required();
    app->add_option("--model", model, "pretrained checkpoint (default TASK/pretrained.ckpt)");
    app->add_option("--corpus", corpus, "caption corpus for retrieval augmentation");
    app->add_option("--preset", preset, "toy or published hyperparameters")
        ->check(CLI::IsMember({"toy", "published"}));
    app->add_option("--seed", seed, "few-shot split and training seed");
    app->add_option("--shots", shots, "examples per class");
    app->add_option("--cap", cap, "retrieved examples per class");
    app->add_option("--epoch-scale", epoch_scale, "multiplier on recipe epochs");
    app->add_option("--top-k", top_k, "visual blocks to finetune");
  }

  RecipeOptions options() const {
    RecipeOptions o = preset == "toy" ? toy_recipe_options() : published_recipe_options();
    o.seed = seed;
    o.epoch_scale = epoch_scale;
    o.top_k = top_k;
    return o;
  }
};

struct LoadedTask {
  ShiftBenchmark bench;
  Corpus corpus;
  TaskData data;
  DualEncoderModel model;
};

// Heap-allocated: `data` points into `bench` and `corpus`.
std::unique_ptr<LoadedTask> load(const CommonRun& run, bool want_corpus) {
  ShiftBenchmark bench = load_task(run.task);
  const fs::path model_path =
      run.model.empty() ? fs::path(run.task) / "pretrained.ckpt" : fs::path(run.model);
  if (!fs::exists(model_path))
    throw ArgumentError("no pretrained checkpoint at " + model_path.string() +
                        " (run `srapf pretrain` first)");
  Checkpoint ckpt = load_checkpoint(model_path);
  Corpus corpus;
  if (want_corpus && !run.corpus.empty()) corpus = ingest_corpus(fs::path(run.corpus));
  auto t = std::make_unique<LoadedTask>(
      LoadedTask{std::move(bench), std::move(corpus), {}, std::move(ckpt.model)});
  t->data = make_task_data(t->bench, run.shots, run.seed, run.cap);
  t->data.corpus = run.corpus.empty() ? nullptr : &t->corpus;
  return t;
}

void write_history(std::ostream& out, const RecipeResult& r) {
  out << "stage\tepoch\ttrain_loss\tid_val_top1\n";
  for (std::size_t s = 0; s < r.stages.size(); ++s)
    for (const auto& h : r.stages[s].history)
      out << r.configs[s].stage << '\t' << h.epoch << '\t' << format_double(h.train_loss) << '\t'
          << format_double(h.id_val_top1) << '\n';
}

int cmd_generate(const std::string& out, BenchmarkConfig cfg, const std::string& shifts) {
  cfg.shifts.clear();
  for (const auto name : split(shifts, ',')) {
    const ShiftKind k = parse_shift_kind(name);
    cfg.shifts.push_back({k, default_shift_magnitude(k)});
  }
  const ShiftBenchmark bench = generate_shift_benchmark(cfg);
  write_task(out, bench);
  std::cout << "wrote " << out << ": " << bench.class_names.size() << " classes, "
            << bench.ood_tests.size() << " OOD sets, " << bench.corpus.size()
            << " corpus records\n";
  return 0;
}

int cmd_pretrain(const std::string& task, std::string out, PretrainConfig cfg, ModelConfig arch) {
  const ShiftBenchmark bench = load_task(task);
  arch.raw_dim = static_cast<int>(bench.id_train.inputs.cols());
  arch.num_classes = static_cast<int>(bench.class_names.size());
  arch.seed = cfg.seed;
  DualEncoderModel model = pretrain_contrastive(arch, bench.corpus, bench.payloads, cfg);
  if (out.empty()) out = (fs::path(task) / "pretrained.ckpt").string();
  const FreezePlan plan = build_freeze_plan(model, arch.visual_blocks, arch.text_blocks, cfg.lr, 0.0);
  save_checkpoint(out, Checkpoint{std::move(model), plan, "pretrain", cfg.epochs, 0.0, {}});
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_retrieve(const std::string& corpus_path, const std::string& classes_path,
                 const std::string& model_path, std::size_t cap, const std::string& out,
                 const std::string& histogram) {
  const Corpus corpus = ingest_corpus(fs::path(corpus_path));
  const auto classes = read_class_specs(fs::path(classes_path));
  const Checkpoint ckpt = load_checkpoint(model_path);
  const RetrievedDataset data = retrieve_all(corpus, classes, ckpt.model, cap);
  {
    auto f = open_out(out);
    write_retrieved(f, data);
  }
  if (!histogram.empty()) {
    auto f = open_out(histogram);
    write_class_histogram(f, data);
  }
  write_class_histogram(std::cout, data);
  return 0;
}

std::vector<StageConfig> apply_config_file(std::vector<StageConfig> stages,
                                           const std::string& path) {
  if (path.empty()) return stages;
  const json j = read_json_file(path);
  if (j.contains("stages")) {
    const auto& list = j.at("stages");
    if (!list.is_array() || list.size() != stages.size())
      throw ConfigurationError("config 'stages' must list " + std::to_string(stages.size()) +
                               " entries for this recipe");
    for (std::size_t i = 0; i < stages.size(); ++i)
      stages[i] = stage_config_from_json(list[i], stages[i]);
  } else {
    for (auto& s : stages) s = stage_config_from_json(j, s);
  }
  return stages;
}

int cmd_train(const CommonRun& run, const std::string& recipe, const std::string& config,
              const std::string& out_dir) {
  const auto t = load(run, recipe_uses_retrieval(recipe));
  const auto stages =
      apply_config_file(recipe_stages(recipe, t->model.config(), run.options()), config);
  const RecipeResult r = run_stages(recipe, t->model, t->data, stages);

  const fs::path dir(out_dir);
  fs::create_directories(dir / "checkpoints");
  json snapshot;
  snapshot["recipe"] = recipe;
  snapshot["task"] = run.task;
  snapshot["seed"] = run.seed;
  snapshot["shots"] = run.shots;
  snapshot["retrieval_cap"] = run.cap;
  snapshot["retrieved_count"] = r.retrieved_count;
  snapshot["params_trained"] = trainable_scalar_count(r.final_checkpoint().model,
                                                      r.final_checkpoint().plan);
  snapshot["stages"] = json::array();
  for (const auto& s : r.configs) snapshot["stages"].push_back(stage_config_to_json(s));
  write_json_file(dir / "config.json", snapshot);
  {
    auto f = open_out(dir / "history.tsv");
    write_history(f, r);
  }
  for (std::size_t s = 0; s < r.stages.size(); ++s)
    save_checkpoint(dir / "checkpoints" / (r.configs[s].stage + ".ckpt"), r.stages[s].best);
  if (r.stage1_report) {
    auto f = open_out(dir / "stage1_report.tsv");
    write_report_tsv(f, *r.stage1_report);
    write_report_json(dir / "stage1_report.json", *r.stage1_report);
  }
  {
    auto f = open_out(dir / "report.tsv");
    write_report_tsv(f, r.report);
  }
  write_report_json(dir / "report.json", r.report);
  write_report_tsv(std::cout, r.report);
  return 0;
}

int cmd_sweep(const CommonRun& run, const std::string& eps, const std::string& out) {
  const auto t = load(run, false);
  const auto rows = sweep_epsilon(t->model, t->data, parse_list(eps), run.options());
  if (!out.empty()) {
    auto f = open_out(out);
    write_sweep_tsv(f, rows);
  }
  write_sweep_tsv(std::cout, rows);
  return 0;
}

int cmd_evaluate(const std::string& task, const std::string& checkpoint, const std::string& out) {
  const ShiftBenchmark bench = load_task(task);
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  std::vector<LabeledDataset> tests{bench.id_test};
  tests.insert(tests.end(), bench.ood_tests.begin(), bench.ood_tests.end());
  const EvalReport report = evaluate(ckpt.model, tests, 0, checkpoint);
  if (!out.empty()) write_report_json(out, report);
  write_report_tsv(std::cout, report);
  return 0;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& scatter_path,
               const std::string& summary_path) {
  std::map<std::string, std::vector<EvalReport>> by_method;
  std::map<std::string, std::size_t> params;
  std::vector<std::string> order;
  for (const auto& r : runs) {
    const json cfg = read_json_file(fs::path(r) / "config.json");
    const std::string method = cfg.at("recipe");
    if (!by_method.contains(method)) order.push_back(method);
    by_method[method].push_back(read_report_json(fs::path(r) / "report.json"));
    params[method] = cfg.at("params_trained");
  }

  std::vector<EvalReport> means;
  std::vector<ScatterEntry> scatter;
  std::ostringstream summary;
  for (const auto& m : order) {
    const auto rows = summarize_seeds(by_method[m]);
    EvalReport mean = by_method[m].front();
    for (auto& d : mean.per_dataset)
      for (const auto& row : rows)
        if (row.name == d.name) d.top1 = row.mean;
    for (const auto& row : rows)
      if (row.name == "ood_mean") mean.ood_mean = row.mean;
    summary << "# " << m << "\n";
    write_summary_tsv(summary, rows);
    means.push_back(mean);
    scatter.push_back({m, params[m], mean});
  }
  write_comparison_table(std::cout, order, means);
  const auto scatter_rows = emit_scatter(scatter);
  if (!scatter_path.empty()) {
    auto f = open_out(scatter_path);
    write_scatter_tsv(f, scatter_rows);
  }
  if (!summary_path.empty()) {
    auto f = open_out(summary_path);
    f << summary.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot adaptation of dual encoders with retrieval and adversarial augmentation"};
  app.require_subcommand(1);

  std::string gen_out, shifts = "noise,rotation,mean_shift,style_mix";
  BenchmarkConfig gen_cfg;
  auto* gen = app.add_subcommand("generate", "write a synthetic distribution-shift task");
  gen->add_option("--out", gen_out, "task directory")->required();
  gen->add_option("--classes", gen_cfg.num_classes);
  gen->add_option("--raw-dim", gen_cfg.raw_dim);
  gen->add_option("--per-class", gen_cfg.n_per_class, "ID train pool per class");
  gen->add_option("--test-per-class", gen_cfg.test_per_class);
  gen->add_option("--corpus-per-class", gen_cfg.corpus_per_class);
  gen->add_option("--shifts", shifts, "comma-separated shift kinds");
  gen->add_option("--seed", gen_cfg.seed);

  std::string pre_task, pre_out;
  PretrainConfig pre_cfg;
  ModelConfig arch;
  auto* pre = app.add_subcommand("pretrain", "contrastive pretraining on the task corpus");
  pre->add_option("--task", pre_task)->required();
  pre->add_option("--out", pre_out, "checkpoint path (default TASK/pretrained.ckpt)");
  pre->add_option("--epochs", pre_cfg.epochs);
  pre->add_option("--seed", pre_cfg.seed);
  pre->add_option("--width", arch.width);
  pre->add_option("--embed-dim", arch.embed_dim);
  pre->add_option("--visual-blocks", arch.visual_blocks);
  pre->add_option("--text-blocks", arch.text_blocks);

  std::string ret_corpus, ret_classes, ret_model, ret_out, ret_hist;
  std::size_t ret_cap = 500;
  auto* ret = app.add_subcommand("retrieve", "string-match retrieval with per-class caps");
  ret->add_option("--corpus", ret_corpus)->required();
  ret->add_option("--classes", ret_classes, "name[TAB]synonym,... per line")->required();
  ret->add_option("--model", ret_model, "checkpoint whose text tower ranks captions")->required();
  ret->add_option("--cap", ret_cap);
  ret->add_option("--out", ret_out)->required();
  ret->add_option("--histogram", ret_hist, "per-class count table");

  CommonRun train_run;
  std::string recipe = "SRAPF", train_config, train_out;
  auto* train = app.add_subcommand("train", "run one adaptation recipe");
  train->add_option("--recipe", recipe)->check(CLI::IsMember(recipe_names()));
  train->add_option("--config", train_config, "JSON overrides of stage settings");
  train->add_option("--out", train_out, "run directory")->required();
  train_run.add_to(train);

  CommonRun sweep_run;
  sweep_run.top_k = 2;
  std::string eps = "0,0.005,0.01,0.02,0.05", sweep_out;
  auto* sweep = app.add_subcommand("sweep", "PFT with AP over a grid of epsilon");
  sweep->add_option("--eps", eps, "comma-separated epsilon values");
  sweep->add_option("--out", sweep_out, "TSV path");
  sweep_run.add_to(sweep);

  std::string eval_task, eval_ckpt, eval_out;
  auto* ev = app.add_subcommand("evaluate", "top-1 on the ID and OOD test sets");
  ev->add_option("--task", eval_task)->required();
  ev->add_option("--checkpoint", eval_ckpt)->required();
  ev->add_option("--out", eval_out, "report JSON path");

  std::vector<std::string> runs;
  std::string scatter_out, summary_out;
  auto* rep = app.add_subcommand("report", "comparison table over run directories");
  rep->add_option("--runs", runs)->required();
  rep->add_option("--scatter", scatter_out, "method/params/ID/OOD table");
  rep->add_option("--summary", summary_out, "per-method mean and std across seeds");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_generate(gen_out, gen_cfg, shifts);
    if (pre->parsed()) return cmd_pretrain(pre_task, pre_out, pre_cfg, arch);
    if (ret->parsed()) return cmd_retrieve(ret_corpus, ret_classes, ret_model, ret_cap, ret_out, ret_hist);
    if (train->parsed()) return cmd_train(train_run, recipe, train_config, train_out);
    if (sweep->parsed()) return cmd_sweep(sweep_run, eps, sweep_out);
    if (ev->parsed()) return cmd_evaluate(eval_task, eval_ckpt, eval_out);
    if (rep->parsed()) return cmd_report(runs, scatter_out, summary_out);
  } catch (const srapf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
