#include "srapf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "srapf/config.hpp"
#include "srapf/errors.hpp"
#include "srapf/text.hpp"

namespace srapf {

namespace {

struct StepLoss {
  double total = 0.0;
  Matrix grad_features;
  Matrix grad_classifier;
};

// CE-family objective for one mixed batch. With lambda_ra == 1 (or no RA) the
// batch is scored as one CE term; otherwise the ID and retrieved rows keep
// separate batch means.
StepLoss ce_step_loss(const Matrix& features, const Labels& labels,
                      const std::vector<char>& is_retrieved, const Matrix& classifier,
                      const StageConfig& cfg, const Perturber* perturber) {
  LossWeights w = cfg.weights;
  if (!cfg.use_ap) w.lambda_ap = 0.0;

  if (!cfg.use_ra || w.lambda_ra == 1.0) {
    w.lambda_ra = 0.0;
    const auto c = combined_loss({features, labels}, nullptr, classifier, w, perturber);
    return {c.total, c.grad_id_features, c.grad_classifier};
  }

  std::vector<std::size_t> id_rows, r_rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (is_retrieved[i] ? r_rows : id_rows).push_back(i);
  auto gather = [&](const std::vector<std::size_t>& rows) {
    FeatureBatch b{take_rows(features, rows), {}};
    for (const auto r : rows) b.labels.push_back(labels[r]);
    return b;
  };
  auto scatter = [&](Matrix& dst, const Matrix& src, const std::vector<std::size_t>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      dst.row(static_cast<Eigen::Index>(rows[i])) += src.row(static_cast<Eigen::Index>(i));
  };

  StepLoss out;
  out.grad_features = Matrix::Zero(features.rows(), features.cols());
  const FeatureBatch id = gather(id_rows);
  const FeatureBatch ret = gather(r_rows);
  if (!id_rows.empty()) {
    LossWeights wi = w;
    if (r_rows.empty()) wi.lambda_ra = 0.0;
    const auto c = combined_loss(id, r_rows.empty() ? nullptr : &ret, classifier, wi, perturber);
    out.total = c.total;
    out.grad_classifier = c.grad_classifier;
    scatter(out.grad_features, c.grad_id_features, id_rows);
    if (!r_rows.empty()) scatter(out.grad_features, c.grad_retrieved_features, r_rows);
    return out;
  }
  // Batch made only of retrieved rows: the L_CE term has no data.
  const LossValue ra = ra_loss(ret.features, ret.labels, classifier);
  out.total = w.lambda_ra * ra.value;
  out.grad_classifier = w.lambda_ra * ra.grad_classifier;
  Matrix g = w.lambda_ra * ra.grad_features;
  if (perturber != nullptr) {
    const auto ap = ap_loss(ret.features, ret.labels, classifier, *perturber);
    out.total += w.lambda_ap * ap.loss.value;
    out.grad_classifier += w.lambda_ap * ap.loss.grad_classifier;
    g += w.lambda_ap * ap.loss.grad_features;
  }
  scatter(out.grad_features, g, r_rows);
  return out;
}

void add_jitter(Matrix& x, double stddev, std::mt19937_64& rng) {
  if (stddev <= 0.0) return;
  std::normal_distribution<double> n(0.0, stddev);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) += n(rng);
}

std::vector<std::string> class_prompts(const Labels& labels,
                                       const std::vector<std::string>& class_names,
                                       std::mt19937_64& rng) {
  const auto templates = default_prompt_templates();
  std::uniform_int_distribution<std::size_t> pick(0, templates.size() - 1);
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const int y : labels)
    out.push_back(render_template(templates[pick(rng)], class_names[static_cast<std::size_t>(y)]));
  return out;
}

}  // namespace

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_(batch_size), rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
  if (batch_ == 0) throw ArgumentError("batch size must be >= 1");
}

std::vector<std::vector<std::size_t>> BatchSampler::next_epoch() {
  std::vector<std::size_t> order(n_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n_; start += batch_)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n_, start + batch_)));
  return batches;
}

std::string to_string(LossMode mode) { return mode == LossMode::kCE ? "CE" : "CL"; }

LossMode parse_loss_mode(std::string_view text) {
  if (text == "CE") return LossMode::kCE;
  if (text == "CL") return LossMode::kCL;
  throw ConfigurationError("unknown loss mode '" + std::string(text) + "' (CE or CL)");
}

void StageConfig::validate() const {
  if (epochs < 1) throw ConfigurationError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigurationError("batch_size must be >= 1");
  if (top_k_visual < 0 || top_k_text < 0) throw ConfigurationError("top_k must be >= 0");
  if (loss_mode == LossMode::kCE && top_k_text != 0)
    throw ConfigurationError("top_k_text is only used by contrastive tuning; set it to 0");
  if (loss_mode == LossMode::kCL && (use_ra || use_ap))
    throw ConfigurationError("contrastive tuning trains on ID pairs only (no RA/AP)");
  if (!(lr_backbone >= 0.0) || !(lr_classifier >= 0.0) || !(warmup_lr >= 0.0))
    throw ConfigurationError("learning rates must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigurationError("weight_decay must be >= 0");
  if (warmup_iters < 0) throw ConfigurationError("warmup_iters must be >= 0");
  if (schedule != "cosine") throw ConfigurationError("unsupported schedule '" + schedule + "'");
  if (!(input_jitter >= 0.0)) throw ConfigurationError("input_jitter must be >= 0");
  try {
    weights.validate();
    perturbation.validate();
  } catch (const ArgumentError& e) {
    throw ConfigurationError(e.what());
  }
}

std::size_t select_best_epoch(const std::vector<EpochRecord>& history) {
  if (history.empty()) throw ArgumentError("select_best_epoch: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i].id_val_top1 > history[best].id_val_top1) best = i;
  return best;
}

bool DataAccessLog::stage_read(const std::string& stage, const std::string& dataset) const {
  return std::any_of(entries.begin(), entries.end(), [&](const Entry& e) {
    return e.stage == stage && e.dataset == dataset;
  });
}

std::string config_hash(const StageConfig& config) {
  std::ostringstream s;
  s << std::hex << fnv1a64(stage_config_to_json(config).dump());
  return s.str();
}

StageResult train_stage(const DualEncoderModel& initial, const StageData& data,
                        const StageConfig& cfg, DataAccessLog* log,
                        const StepObserver& observer) {
  cfg.validate();
  if (data.id_train == nullptr || data.id_val == nullptr)
    throw ArgumentError("train_stage: ID train and validation sets are required");
  if (cfg.use_ra && (data.retrieved == nullptr || data.retrieved->size() == 0))
    throw ArgumentError("train_stage: use_ra requires a non-empty retrieved dataset");
  if (data.id_train->size() == 0) throw ArgumentError("train_stage: empty training set");
  const auto& class_names = data.id_train->class_names;
  if (static_cast<int>(class_names.size()) != initial.num_classes())
    throw ArgumentError("train_stage: dataset label space does not match the model");

  DualEncoderModel model = initial;
  if (model.class_names().empty()) model.set_class_names(class_names);
  const FreezePlan plan = build_freeze_plan(model, cfg.top_k_visual, cfg.top_k_text,
                                            cfg.lr_backbone, cfg.lr_classifier);

  LabeledDataset pool = *data.id_train;
  std::vector<char> is_retrieved(pool.size(), 0);
  if (log) log->entries.push_back({cfg.stage, data.id_train->name});
  if (cfg.use_ra) {
    pool = concat(pool, *data.retrieved, pool.name + "+" + data.retrieved->name);
    is_retrieved.resize(pool.size(), 1);
    if (log) log->entries.push_back({cfg.stage, data.retrieved->name});
  }
  if (log) log->entries.push_back({cfg.stage, data.id_val->name});

  const auto n = pool.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t steps_per_epoch = (n + bs - 1) / bs;
  LrSchedule schedule;
  schedule.total_steps = steps_per_epoch * static_cast<std::size_t>(cfg.epochs);
  schedule.warmup_iters = static_cast<std::size_t>(cfg.warmup_iters);
  schedule.warmup_lr = cfg.warmup_lr;
  AdamWConfig adam;
  adam.weight_decay = cfg.weight_decay;
  AdamW optimizer = make_optimizer(model, plan, adam, schedule);

  std::optional<Perturber> perturber;
  if (cfg.use_ap) perturber.emplace(cfg.perturbation);

  const int lowest_visual = lowest_trainable_block(model, plan, Tower::kVisual);
  const int lowest_text = lowest_trainable_block(model, plan, Tower::kText);
  const std::size_t classifier_index = model.parameter_index("classifier.weight");
  const std::string hash = config_hash(cfg);

  BatchSampler sampler(n, bs, cfg.seed);
  auto& rng = sampler.engine();

  StageResult result{Checkpoint{model, plan, cfg.stage, 0, 0.0, hash}, {}, 0};
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& rows : sampler.next_epoch()) {
      Matrix x = take_rows(pool.inputs, rows);
      add_jitter(x, cfg.input_jitter, rng);
      Labels labels;
      std::vector<char> retrieved_mask;
      for (const auto r : rows) {
        labels.push_back(pool.labels[r]);
        retrieved_mask.push_back(is_retrieved[r]);
      }

      Gradients grads = model.zero_gradients();
      const EncoderTrace image = model.trace_image(x);
      double loss = 0.0;
      if (cfg.loss_mode == LossMode::kCE) {
        const StepLoss step = ce_step_loss(image.features, labels, retrieved_mask,
                                           model.classifier(), cfg,
                                           perturber ? &*perturber : nullptr);
        loss = step.total;
        model.backward(image, step.grad_features, lowest_visual, grads);
        grads[classifier_index] = step.grad_classifier;
      } else {
        const auto prompts = class_prompts(labels, class_names, rng);
        const EncoderTrace text = model.trace_text(prompts);
        const auto cl = contrastive_loss(image.features, text.features, cfg.weights.tau);
        loss = cl.value;
        model.backward(image, cl.grad_image, lowest_visual, grads);
        model.backward(text, cl.grad_text, lowest_text, grads);
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss in stage '" + cfg.stage + "' at epoch " +
                            std::to_string(epoch) + ", step " +
                            std::to_string(optimizer.steps_taken() + 1));
      }
      loss_sum += loss;
      optimizer.step(model, grads);
      ++result.steps;
      if (observer) observer(result.steps, model);
    }

    if (cfg.loss_mode == LossMode::kCL)
      init_classifier_from_text(model, class_names, default_prompt_templates());
    const double val = top1_accuracy(model, *data.id_val);
    result.history.push_back({epoch, loss_sum / static_cast<double>(steps_per_epoch), val});
    if (epoch == 1 || val > result.best.id_val_top1)
      result.best = Checkpoint{model, plan, cfg.stage, epoch, val, hash};
  }
  return result;
}

DualEncoderModel pretrain_contrastive(const ModelConfig& config, const Corpus& corpus,
                                      const PayloadStore& payloads,
                                      const PretrainConfig& options) {
  if (corpus.empty()) throw ArgumentError("pretrain: empty corpus");
  DualEncoderModel model(config);
  const FreezePlan plan =
      build_freeze_plan(model, config.visual_blocks, config.text_blocks, options.lr, 0.0);

  const std::size_t n = corpus.size();
  Matrix images(static_cast<Eigen::Index>(n), config.raw_dim);
  for (std::size_t i = 0; i < n; ++i)
    images.row(static_cast<Eigen::Index>(i)) = payloads.get(corpus[i].payload_ref);

  const auto bs = static_cast<std::size_t>(options.batch_size);
  LrSchedule schedule;
  schedule.total_steps = ((n + bs - 1) / bs) * static_cast<std::size_t>(options.epochs);
  schedule.warmup_iters = static_cast<std::size_t>(options.warmup_iters);
  schedule.warmup_lr = 0.0;
  AdamWConfig adam;
  adam.weight_decay = options.weight_decay;
  AdamW optimizer(model, plan, adam, schedule);

  BatchSampler sampler(n, bs, options.seed ^ 0x243f6a8885a308d3ULL);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (const auto& rows : sampler.next_epoch()) {
      std::vector<std::string> captions;
      for (const auto r : rows) captions.push_back(corpus[r].caption);
      const EncoderTrace image = model.trace_image(take_rows(images, rows));
      const EncoderTrace text = model.trace_text(captions);
      const auto cl = contrastive_loss(image.features, text.features, options.tau);
      if (!std::isfinite(cl.value))
        throw TrainingError("pretraining diverged at epoch " + std::to_string(epoch + 1));
      Gradients grads = model.zero_gradients();
      model.backward(image, cl.grad_image, 0, grads);
      model.backward(text, cl.grad_text, 0, grads);
      optimizer.step(model, grads);
    }
  }
  return model;
}

TaskData make_task_data(const ShiftBenchmark& bench, int shots, std::uint64_t seed,
                        std::size_t retrieval_cap) {
  TaskData task;
  const FewShotSplit split = sample_few_shot(bench.id_train, shots, seed);
  const auto rows = split.all_indices();
  task.train = subset(bench.id_train, rows, "id_train_" + std::to_string(shots) + "shot");
  task.id_val = bench.id_val;
  task.tests.push_back(bench.id_test);
  for (const auto& o : bench.ood_tests) task.tests.push_back(o);
  task.corpus = &bench.corpus;
  task.payloads = &bench.payloads;
  task.retrieval_cap = retrieval_cap;
  return task;
}

LabeledDataset build_retrieved_set(const DualEncoderModel& model, const TaskData& task,
                                   RetrievedDataset* retrieved) {
  if (task.corpus == nullptr || task.payloads == nullptr)
    throw ArgumentError("retrieval augmentation needs a corpus and its payloads");
  std::vector<ClassSpec> classes;
  for (const auto& n : task.train.class_names) classes.push_back({n, {}});
  RetrievedDataset r = retrieve_all(*task.corpus, classes, model, task.retrieval_cap);
  LabeledDataset data = materialize_retrieved(r, *task.payloads);
  if (retrieved) *retrieved = std::move(r);
  return data;
}

SrapfResult run_srapf(const DualEncoderModel& model, const TaskData& task,
                      const StageConfig& stage1, const StageConfig& stage2) {
  if (!stage1.use_ra) throw ConfigurationError("SRAPF stage 1 must use retrieval augmentation");
  if (stage2.use_ra) throw ConfigurationError("SRAPF stage 2 trains on ID data only");
  if (!stage2.use_ap) throw ConfigurationError("SRAPF stage 2 must enable AP");

  DataAccessLog log;
  const LabeledDataset retrieved = build_retrieved_set(model, task);
  StageResult s1 = train_stage(model, {&task.train, &task.id_val, &retrieved}, stage1, &log);
  StageResult s2 = train_stage(s1.best.model, {&task.train, &task.id_val, nullptr}, stage2, &log);
  EvalReport r1 = evaluate(s1.best.model, task.tests, stage1.seed, stage1.stage);
  EvalReport r2 = evaluate(s2.best.model, task.tests, stage2.seed, stage2.stage);
  return SrapfResult{std::move(s1), std::move(s2), std::move(r1), std::move(r2), std::move(log)};
}

}  // namespace srapf
