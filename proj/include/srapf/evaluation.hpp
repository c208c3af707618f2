#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "srapf/data.hpp"
#include "srapf/model.hpp"

namespace srapf {

struct DatasetAccuracy {
  std::string name;
  bool ood = false;
  std::size_t correct = 0;
  std::size_t total = 0;
  double top1 = 0.0;  // correct / total
};

struct EvalReport {
  std::vector<DatasetAccuracy> per_dataset;
  double ood_mean = 0.0;  // mean over OOD entries; 0 when there are none
  std::uint64_t seed = 0;
  std::string checkpoint_ref;

  const DatasetAccuracy& entry(const std::string& name) const;
  // First non-OOD entry (the ID test set by convention).
  double id_top1() const;
};

// Predicted class per row: argmax logit, ties to the lowest class index.
Labels predict(const DualEncoderModel& model, const Matrix& inputs);
std::size_t count_correct(const DualEncoderModel& model, const LabeledDataset& data);
double top1_accuracy(const DualEncoderModel& model, const LabeledDataset& data);

// Top-1 on every dataset; OOD-tagged sets feed ood_mean. All datasets must
// share the model's label space.
EvalReport evaluate(const DualEncoderModel& model, std::span<const LabeledDataset> datasets,
                    std::uint64_t seed = 0, std::string checkpoint_ref = {});

struct SummaryRow {
  std::string name;  // dataset name, or "ood_mean"
  double mean = 0.0;
  double stddev = 0.0;  // n-1 denominator; 0 for a single report
  std::size_t runs = 0;
};

// Per-dataset mean and sample std across seeds (plus an "ood_mean" row).
std::vector<SummaryRow> summarize_seeds(std::span<const EvalReport> reports);

struct ScatterEntry {
  std::string method;
  std::size_t params_trained = 0;
  EvalReport report;
};

struct ScatterRow {
  std::string method;
  std::size_t params_trained = 0;
  double id_acc = 0.0;
  double ood_mean = 0.0;
};

std::vector<ScatterRow> emit_scatter(std::span<const ScatterEntry> entries);

void write_report_tsv(std::ostream& out, const EvalReport& report);
void write_report_json(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report_json(const std::filesystem::path& path);
void write_summary_tsv(std::ostream& out, std::span<const SummaryRow> rows);
void write_scatter_tsv(std::ostream& out, std::span<const ScatterRow> rows);

// Human-readable comparison: one row per method, columns ID, OOD mean, then
// each OOD set.
void write_comparison_table(std::ostream& out, std::span<const std::string> methods,
                            std::span<const EvalReport> reports);

}  // namespace srapf
