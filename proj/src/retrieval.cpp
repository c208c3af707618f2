#include "srapf/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_set>

#include "srapf/errors.hpp"
#include "srapf/model.hpp"
#include "srapf/text.hpp"
#include "srapf/tsv.hpp"

namespace srapf {

namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool contains_sequence(const std::vector<std::string>& haystack,
                       const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

Corpus::Corpus(std::vector<CorpusRecord> records) : records_(std::move(records)) {
  tokens_.reserve(records_.size());
  for (const auto& r : records_) tokens_.push_back(tokenize(r.caption));
}

Corpus ingest_corpus(std::istream& in, const std::string& source_name) {
  std::vector<CorpusRecord> records;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto fields = split(line, '\t');
    auto fail = [&](const std::string& why) {
      throw IngestionError(source_name + ":" + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 3)
      fail("expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    if (fields[0].empty()) fail("empty id");
    if (fields[1].empty()) fail("empty caption");
    if (fields[2].empty()) fail("empty payload_ref");
    std::string id(fields[0]);
    if (!ids.insert(id).second) fail("duplicate id '" + id + "'");
    records.push_back({std::move(id), std::string(fields[1]), std::string(fields[2])});
  }
  return Corpus(std::move(records));
}

Corpus ingest_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return ingest_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& r : corpus.records())
    out << r.id << '\t' << r.caption << '\t' << r.payload_ref << '\n';
}

std::vector<std::size_t> match_class(const Corpus& corpus,
                                     const std::string& class_name,
                                     const std::vector<std::string>& synonyms) {
  std::vector<std::vector<std::string>> needles;
  needles.push_back(tokenize(class_name));
  if (needles.front().empty())
    throw ArgumentError("match_class: class name has no word characters");
  for (const auto& s : synonyms) {
    auto toks = tokenize(s);
    if (!toks.empty()) needles.push_back(std::move(toks));
  }
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& toks = corpus.tokens(i);
    const bool hit = std::any_of(needles.begin(), needles.end(),
                                 [&](const auto& n) { return contains_sequence(toks, n); });
    if (hit) hits.push_back(i);
  }
  return hits;
}

std::vector<RetrievedRecord> rank_and_cap(const Corpus& corpus,
                                          const std::vector<std::size_t>& candidates,
                                          int label,
                                          const RowVector& class_prompt_embedding,
                                          const Matrix& caption_embeddings,
                                          std::size_t cap) {
  if (cap < 1) throw ArgumentError("rank_and_cap: cap must be >= 1");
  if (static_cast<std::size_t>(caption_embeddings.rows()) != candidates.size())
    throw ArgumentError("rank_and_cap: " + std::to_string(candidates.size()) +
                        " candidates but " + std::to_string(caption_embeddings.rows()) +
                        " caption embeddings");
  if (!candidates.empty() && caption_embeddings.cols() != class_prompt_embedding.size())
    throw ShapeError("rank_and_cap: embedding dims differ");

  std::vector<RetrievedRecord> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const std::size_t idx = candidates[r];
    if (idx >= corpus.size()) throw ArgumentError("rank_and_cap: candidate out of range");
    // Contiguous copy: the score must not depend on the matrix layout.
    const RowVector embedding = caption_embeddings.row(static_cast<Eigen::Index>(r));
    const double score = embedding.dot(class_prompt_embedding);
    ranked.push_back({idx, corpus[idx], label, score});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  if (ranked.size() > cap) ranked.resize(cap);
  return ranked;
}

std::vector<ClassSpec> read_class_specs(std::istream& in) {
  std::vector<ClassSpec> specs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() > 2 || fields[0].empty())
      throw FormatError("classes line " + std::to_string(line_no) +
                        ": expected name[<TAB>synonyms]");
    ClassSpec spec{std::string(fields[0]), {}};
    if (fields.size() == 2 && !fields[1].empty())
      for (const auto s : split(fields[1], ',')) spec.synonyms.emplace_back(s);
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<ClassSpec> read_class_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class list " + path.string());
  return read_class_specs(in);
}

RetrievedDataset retrieve_all(const Corpus& corpus, const std::vector<ClassSpec>& classes,
                              const DualEncoderModel& model, std::size_t cap) {
  if (cap < 1) throw ArgumentError("retrieve_all: cap must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : classes) {
    const auto key = join_tokens(tokenize(c.name));
    if (key.empty()) throw ArgumentError("retrieve_all: empty class name");
    if (!seen.insert(key).second)
      throw ArgumentError("retrieve_all: duplicate class name '" + c.name + "'");
  }

  std::vector<std::vector<std::size_t>> matches;
  std::map<std::size_t, Eigen::Index> embedding_row;
  for (const auto& c : classes) {
    matches.push_back(match_class(corpus, c.name, c.synonyms));
    for (const auto idx : matches.back()) embedding_row.emplace(idx, 0);
  }

  Matrix caption_embeddings;
  if (!embedding_row.empty()) {
    std::vector<std::string> captions;
    captions.reserve(embedding_row.size());
    for (auto& [idx, row] : embedding_row) {
      row = static_cast<Eigen::Index>(captions.size());
      captions.push_back(corpus[idx].caption);
    }
    caption_embeddings = model.encode_text(captions);
  }

  const std::string_view anchor = default_prompt_templates().front();
  RetrievedDataset out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    out.class_names.push_back(classes[k].name);
    const std::vector<std::string> prompt{render_template(anchor, classes[k].name)};
    const RowVector query = model.encode_text(prompt).row(0);
    Matrix cand(static_cast<Eigen::Index>(matches[k].size()), model.embed_dim());
    for (std::size_t r = 0; r < matches[k].size(); ++r)
      cand.row(static_cast<Eigen::Index>(r)) =
          caption_embeddings.row(embedding_row.at(matches[k][r]));
    auto ranked = rank_and_cap(corpus, matches[k], static_cast<int>(k), query, cand, cap);
    out.per_class_counts.push_back(ranked.size());
    for (auto& r : ranked) out.records.push_back(std::move(r));
  }
  return out;
}

void write_retrieved(std::ostream& out, const RetrievedDataset& data) {
  for (const auto& r : data.records) {
    out << r.record.id << '\t' << r.record.caption << '\t' << r.record.payload_ref
        << '\t' << data.class_names.at(static_cast<std::size_t>(r.label)) << '\t'
        << format_double(r.score) << '\n';
  }
}

RetrievedDataset read_retrieved(std::istream& in,
                                const std::vector<std::string>& class_names) {
  RetrievedDataset out;
  out.class_names = class_names;
  out.per_class_counts.assign(class_names.size(), 0);
  std::map<std::string, int> index;
  for (std::size_t k = 0; k < class_names.size(); ++k)
    index[class_names[k]] = static_cast<int>(k);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    const auto f = split(line, '\t');
    if (f.size() != 5)
      throw FormatError("retrieved line " + std::to_string(line_no) +
                        ": expected 5 tab-separated fields");
    const auto it = index.find(std::string(f[3]));
    if (it == index.end())
      throw FormatError("retrieved line " + std::to_string(line_no) +
                        ": unknown class '" + std::string(f[3]) + "'");
    RetrievedRecord r;
    r.corpus_index = line_no - 1;
    r.record = {std::string(f[0]), std::string(f[1]), std::string(f[2])};
    r.label = it->second;
    r.score = parse_double(f[4]);
    ++out.per_class_counts[static_cast<std::size_t>(r.label)];
    out.records.push_back(std::move(r));
  }
  return out;
}

void write_class_histogram(std::ostream& out, const RetrievedDataset& data) {
  for (std::size_t k = 0; k < data.class_names.size(); ++k)
    out << data.class_names[k] << '\t' << data.per_class_counts[k] << '\n';
}

}  // namespace srapf
