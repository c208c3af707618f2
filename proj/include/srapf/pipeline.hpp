#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "srapf/adversarial.hpp"
#include "srapf/checkpoint.hpp"
#include "srapf/data.hpp"
#include "srapf/evaluation.hpp"
#include "srapf/losses.hpp"
#include "srapf/model.hpp"
#include "srapf/optimizer.hpp"

namespace srapf {

enum class LossMode { kCE, kCL };
std::string to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);

// Hyperparameters of one training stage.
struct StageConfig {
  std::string stage = "stage";
  int top_k_visual = 4;
  int top_k_text = 0;  // contrastive mode only
  LossMode loss_mode = LossMode::kCE;
  bool use_ra = false;
  bool use_ap = false;
  int epochs = 10;
  int batch_size = 64;
  double lr_backbone = 1e-6;
  double lr_classifier = 1e-3;
  double weight_decay = 0.01;
  int warmup_iters = 18;
  double warmup_lr = 1e-8;
  std::string schedule = "cosine";
  LossWeights weights;
  PerturbationConfig perturbation;
  double input_jitter = 0.0;  // std of Gaussian noise added to raw inputs
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double id_val_top1 = 0.0;
};

// Earliest epoch with the highest ID-val top-1. Returns an index into
// `history`; throws ArgumentError on an empty history.
std::size_t select_best_epoch(const std::vector<EpochRecord>& history);

// Seeded per-epoch shuffling shared by the trainers. The same engine drives
// input jitter and prompt sampling.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  // A fresh permutation of 0..n-1 cut into consecutive batches (the last one
  // may be short).
  std::vector<std::vector<std::size_t>> next_epoch();
  std::size_t batches_per_epoch() const { return (n_ + batch_ - 1) / batch_; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::size_t n_;
  std::size_t batch_;
  std::mt19937_64 rng_;
};

struct StageData {
  const LabeledDataset* id_train = nullptr;
  const LabeledDataset* id_val = nullptr;
  const LabeledDataset* retrieved = nullptr;  // read only when use_ra
};

// Records which datasets each stage touched.
struct DataAccessLog {
  struct Entry {
    std::string stage;
    std::string dataset;
  };
  std::vector<Entry> entries;

  bool stage_read(const std::string& stage, const std::string& dataset) const;
};

struct StageResult {
  Checkpoint best;
  std::vector<EpochRecord> history;
  std::size_t steps = 0;
};

// Called after every optimizer step with the 1-based global step count.
using StepObserver = std::function<void(std::size_t, const DualEncoderModel&)>;

// Trains `model` (a copy is taken) for config.epochs epochs and returns the
// checkpoint with the best ID-val top-1 (earliest on ties).
StageResult train_stage(const DualEncoderModel& model, const StageData& data,
                        const StageConfig& config, DataAccessLog* log = nullptr,
                        const StepObserver& observer = {});

// Contrastive pretraining of both towers on the caption corpus. Stands in for
// the pretrained vision-language model.
struct PretrainConfig {
  int epochs = 40;
  int batch_size = 128;
  double lr = 2e-3;
  double weight_decay = 0.01;
  double tau = 0.05;
  int warmup_iters = 20;
  std::uint64_t seed = 0;
};
DualEncoderModel pretrain_contrastive(const ModelConfig& config, const Corpus& corpus,
                                      const PayloadStore& payloads,
                                      const PretrainConfig& options);

// Everything an adaptation run consumes.
struct TaskData {
  LabeledDataset train;                 // few-shot ID training set
  LabeledDataset id_val;
  std::vector<LabeledDataset> tests;    // ID test first, then OOD sets
  const Corpus* corpus = nullptr;
  const PayloadStore* payloads = nullptr;
  std::size_t retrieval_cap = 500;
};

// Builds a TaskData from a benchmark: m-shot sample of id_train under `seed`.
TaskData make_task_data(const ShiftBenchmark& bench, int shots, std::uint64_t seed,
                        std::size_t retrieval_cap);

// Retrieval-augmentation dataset for the task's classes.
LabeledDataset build_retrieved_set(const DualEncoderModel& model, const TaskData& task,
                                   RetrievedDataset* retrieved = nullptr);

struct SrapfResult {
  StageResult stage1;
  StageResult stage2;
  EvalReport stage1_report;  // stage-1 best checkpoint on the test sets
  EvalReport report;         // final checkpoint on the test sets
  DataAccessLog access_log;
};

// Stage 1: PFT with RA on ID + retrieved data. Stage 2: starts from stage 1's
// best checkpoint, ID data only, AP enabled. Fresh optimizer state per stage.
SrapfResult run_srapf(const DualEncoderModel& model, const TaskData& task,
                      const StageConfig& stage1, const StageConfig& stage2);

// Hex FNV-1a of the canonical JSON form of the config.
std::string config_hash(const StageConfig& config);

}  // namespace srapf
