#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "srapf/retrieval.hpp"
#include "srapf/tensor.hpp"

namespace srapf {

enum class Split { kTrain, kVal, kTest };
std::string to_string(Split split);
Split parse_split(std::string_view text);

// Items share one label space (`class_names`). `shift` is "ID", "OOD:<name>"
// or "retrieved".
struct LabeledDataset {
  std::string name;
  Matrix inputs;  // N x raw_dim
  Labels labels;
  std::vector<std::string> class_names;
  Split split = Split::kTrain;
  std::string shift = "ID";

  std::size_t size() const { return labels.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  bool is_ood() const { return shift.rfind("OOD:", 0) == 0; }
  void validate() const;
};

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows,
                      std::string name);
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b,
                      std::string name);

// Stable 64-bit hash over labels, inputs and class names.
std::uint64_t dataset_hash(const LabeledDataset& data);

struct FewShotSplit {
  int shots = 0;
  std::uint64_t seed = 0;
  std::uint64_t dataset_hash = 0;
  std::vector<std::vector<std::size_t>> indices_per_class;

  std::vector<std::size_t> all_indices() const;  // class-major order
};

// m items per class, uniformly without replacement, reproducible by seed.
FewShotSplit sample_few_shot(const LabeledDataset& data, int shots, std::uint64_t seed);

enum class ShiftKind { kNoise, kRotation, kMeanShift, kStyleMix };
std::string to_string(ShiftKind kind);
ShiftKind parse_shift_kind(std::string_view text);  // ArgumentError if unknown
double default_shift_magnitude(ShiftKind kind);

struct ShiftSpec {
  ShiftKind kind = ShiftKind::kNoise;
  double magnitude = 0.0;
};

// Raw vector payloads referenced by corpus records.
class PayloadStore {
 public:
  void add(std::string ref, const RowVector& value);
  const std::vector<std::string>& refs() const { return refs_; }
  RowVector get(const std::string& ref) const;  // ArgumentError if missing
  bool contains(const std::string& ref) const { return index_.contains(ref); }
  std::size_t size() const { return refs_.size(); }

 private:
  std::vector<std::string> refs_;
  std::vector<RowVector> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct BenchmarkConfig {
  int num_classes = 10;
  int raw_dim = 32;
  int latent_dim = 16;
  int n_per_class = 100;      // ID train pool per class
  int test_per_class = 60;    // ID test and each OOD test
  double class_spread = 1.0;  // prototype scale
  double within_class = 0.9;  // latent noise around the prototype
  double raw_noise = 0.1;
  std::vector<ShiftSpec> shifts;
  // Caption corpus.
  int corpus_per_class = 150;     // mean records per class before imbalance
  double corpus_imbalance = 0.8;  // Zipf exponent of per-class counts
  double ambiguous_fraction = 0.15;
  double distractor_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ShiftBenchmark {
  std::vector<std::string> class_names;
  LabeledDataset id_train;
  LabeledDataset id_val;
  LabeledDataset id_test;
  std::vector<LabeledDataset> ood_tests;
  Corpus corpus;
  PayloadStore payloads;
};

// Class-conditional latent Gaussians mapped to raw space; each OOD test set
// applies one raw-space transformation. The ID validation set holds 20% of
// the ID train volume.
ShiftBenchmark generate_shift_benchmark(const BenchmarkConfig& config);
ShiftBenchmark generate_shift_benchmark(int num_classes, int raw_dim, int n_per_class,
                                        const std::vector<std::string>& shift_kinds,
                                        std::uint64_t seed);

// Turns retrieved records into a labeled training set via the payload store.
LabeledDataset materialize_retrieved(const RetrievedDataset& retrieved,
                                     const PayloadStore& payloads);

// On-disk task layout:
//   DIR/classes.txt, DIR/task.json, DIR/corpus.tsv, DIR/payloads.tsv,
//   DIR/{id_train,id_val,id_test,ood_<name>}/data.tsv
void write_task(const std::filesystem::path& dir, const ShiftBenchmark& bench);
ShiftBenchmark load_task(const std::filesystem::path& dir);

void write_dataset_tsv(std::ostream& out, const LabeledDataset& data);
void write_payloads(std::ostream& out, const PayloadStore& payloads);
PayloadStore read_payloads(std::istream& in);

void write_few_shot_split(const std::filesystem::path& path, const FewShotSplit& split);
FewShotSplit read_few_shot_split(const std::filesystem::path& path);

}  // namespace srapf
