#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "srapf/tensor.hpp"

namespace srapf {

class DualEncoderModel;

struct CorpusRecord {
  std::string id;
  std::string caption;
  std::string payload_ref;
};

// Immutable, ordered image-text corpus. Captions are tokenized once at
// ingestion for whole-word matching.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<CorpusRecord> records);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const CorpusRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<CorpusRecord>& records() const { return records_; }
  const std::vector<std::string>& tokens(std::size_t i) const { return tokens_[i]; }

 private:
  std::vector<CorpusRecord> records_;
  std::vector<std::vector<std::string>> tokens_;
};

// Reads `id<TAB>caption<TAB>payload_ref` lines. Any malformed line, empty
// field or duplicate id raises IngestionError naming the 1-based line.
Corpus ingest_corpus(std::istream& in, const std::string& source_name = "<stream>");
Corpus ingest_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);

// Corpus indices whose caption contains the class name or one of the synonyms
// as a case-insensitive whole-word (contiguous token) match, in corpus order.
std::vector<std::size_t> match_class(const Corpus& corpus,
                                     const std::string& class_name,
                                     const std::vector<std::string>& synonyms = {});

inline constexpr std::size_t kNoCap = std::numeric_limits<std::size_t>::max();

struct RetrievedRecord {
  std::size_t corpus_index = 0;
  CorpusRecord record;
  int label = 0;
  double score = 0.0;
};

// Keeps the `cap` candidates most similar (cosine) to the class prompt
// embedding. `caption_embeddings` row r belongs to candidates[r]. Equal
// scores keep corpus order.
std::vector<RetrievedRecord> rank_and_cap(const Corpus& corpus,
                                          const std::vector<std::size_t>& candidates,
                                          int label, const RowVector& class_prompt_embedding,
                                          const Matrix& caption_embeddings,
                                          std::size_t cap);

struct RetrievedDataset {
  std::vector<std::string> class_names;
  std::vector<RetrievedRecord> records;     // grouped by class, score-descending
  std::vector<std::size_t> per_class_counts;  // aligned with class_names
};

struct ClassSpec {
  std::string name;
  std::vector<std::string> synonyms;
};

// Reads `name[<TAB>syn1,syn2,...]` lines.
std::vector<ClassSpec> read_class_specs(std::istream& in);
std::vector<ClassSpec> read_class_specs(const std::filesystem::path& path);

// Union over classes of rank_and_cap(match_class(...)). Captions and the
// class anchor prompt ("a photo of a <class>.") are embedded with the model's
// text tower. Classes without matches are kept with a zero count.
RetrievedDataset retrieve_all(const Corpus& corpus, const std::vector<ClassSpec>& classes,
                              const DualEncoderModel& model, std::size_t cap);

// `id<TAB>caption<TAB>payload_ref<TAB>class<TAB>score`, one record per line,
// in dataset order. Scores use the shortest round-trip decimal form.
void write_retrieved(std::ostream& out, const RetrievedDataset& data);
RetrievedDataset read_retrieved(std::istream& in,
                                const std::vector<std::string>& class_names);

// `class<TAB>count` lines, class order.
void write_class_histogram(std::ostream& out, const RetrievedDataset& data);

}  // namespace srapf
