#include "srapf/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "srapf/errors.hpp"
#include "srapf/text.hpp"
#include "srapf/tsv.hpp"

namespace srapf {

namespace {

using json = nlohmann::json;

constexpr int kTaskFormatVersion = 1;

constexpr std::array<std::string_view, 30> kClassNames = {
    "lemon", "crane", "mouse", "jaguar", "apple", "seal",   "bass",   "bat",
    "drum",  "tank",  "kite",  "palm",   "mole",  "orange", "pitcher", "boxer",
    "ruler", "bow",   "star",  "button", "cricket", "fan",  "glass",  "jet",
    "match", "nail",  "pen",   "ring",   "spring", "trunk"};

constexpr std::array<std::string_view, 16> kDistractorWords = {
    "sunset", "beach", "party",  "city",    "street",  "food",   "car",   "mountain",
    "river",  "house", "friends", "wedding", "concert", "garden", "office", "sky"};

constexpr std::array<std::string_view, 5> kAmbiguousTemplates = {
    "a {} colored umbrella", "{} yellow paint on the wall", "the {} logo on a shirt",
    "a {} print dress", "my car is a {}"};

// Caption templates per image domain: ID photos, then one list per shift kind.
const std::vector<std::string_view>& domain_templates(int domain) {
  static const std::array<std::vector<std::string_view>, 5> kTemplates = {{
      {"a photo of a {}", "my {} today", "the {} in the wild", "a {} on the table"},
      {"a grainy photo of a {}", "a blurry {} at night", "a noisy shot of the {}"},
      {"a rendition of a {}", "an artwork of the {}", "a 3d render of a {}"},
      {"a sketch of a {}", "a pencil drawing of the {}", "a doodle of a {}"},
      {"a strange {} among other things", "an unusual {}", "a confusing picture with a {}"},
  }};
  return kTemplates.at(static_cast<std::size_t>(domain));
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Fixed generative structure of one benchmark.
struct World {
  Matrix prototypes;  // K x latent
  Matrix mixing;      // latent x raw
  RowVector shift_direction;  // unit
  std::vector<int> confusion;  // class -> other class for style mixing
  const BenchmarkConfig* cfg = nullptr;

  RowVector class_raw_mean(int k) const { return prototypes.row(k) * mixing; }

  // One raw sample of class k in the ID domain.
  RowVector sample(int k, std::mt19937_64& rng) const {
    std::normal_distribution<double> n(0.0, 1.0);
    RowVector z = prototypes.row(k);
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) += cfg->within_class * n(rng);
    RowVector x = z * mixing;
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) += cfg->raw_noise * n(rng);
    return x;
  }

  RowVector apply(const ShiftSpec& s, const RowVector& x, int k, std::mt19937_64& rng) const {
    switch (s.kind) {
      case ShiftKind::kNoise: {
        std::normal_distribution<double> n(0.0, s.magnitude);
        RowVector out = x;
        if (s.magnitude > 0.0)
          for (Eigen::Index j = 0; j < out.size(); ++j) out(j) += n(rng);
        return out;
      }
      case ShiftKind::kRotation:
        return x * rotation(s.magnitude);
      case ShiftKind::kMeanShift:
        return x + s.magnitude * std::sqrt(static_cast<double>(x.size())) * 0.25 *
                       shift_direction;
      case ShiftKind::kStyleMix:
        return (1.0 - s.magnitude) * x +
               s.magnitude * class_raw_mean(confusion[static_cast<std::size_t>(k)]);
    }
    return x;
  }

  // Givens rotations in disjoint random coordinate planes; magnitude 1 is a
  // quarter turn in every plane.
  Matrix rotation(double magnitude) const {
    const auto d = static_cast<Eigen::Index>(plane_order.size());
    if (magnitude == 0.0) return Matrix::Identity(d, d);
    Matrix r = Matrix::Identity(d, d);
    const double angle = magnitude * std::numbers::pi / 2.0;
    for (Eigen::Index p = 0; p + 1 < d; p += 2) {
      const auto a = plane_order[static_cast<std::size_t>(p)];
      const auto b = plane_order[static_cast<std::size_t>(p + 1)];
      r(a, a) = std::cos(angle);
      r(a, b) = -std::sin(angle);
      r(b, a) = std::sin(angle);
      r(b, b) = std::cos(angle);
    }
    return r;
  }

  std::vector<Eigen::Index> plane_order;
};

World make_world(const BenchmarkConfig& cfg) {
  World w;
  w.cfg = &cfg;
  auto rng = stream(cfg.seed, 1);
  w.prototypes = gaussian(cfg.num_classes, cfg.latent_dim, cfg.class_spread, rng);
  w.mixing = gaussian(cfg.latent_dim, cfg.raw_dim, 1.0 / std::sqrt(cfg.latent_dim), rng);
  w.plane_order.resize(static_cast<std::size_t>(cfg.raw_dim));
  for (int j = 0; j < cfg.raw_dim; ++j) w.plane_order[static_cast<std::size_t>(j)] = j;
  std::shuffle(w.plane_order.begin(), w.plane_order.end(), rng);
  RowVector dir = gaussian(1, cfg.raw_dim, 1.0, rng);
  w.shift_direction = dir / dir.norm();
  // Derangement: class k borrows the style of class (k + offset) mod K.
  std::uniform_int_distribution<int> off(1, cfg.num_classes - 1);
  const int offset = off(rng);
  for (int k = 0; k < cfg.num_classes; ++k)
    w.confusion.push_back((k + offset) % cfg.num_classes);
  return w;
}

LabeledDataset draw_set(const World& world, const std::vector<std::string>& names,
                        int per_class, const ShiftSpec* shift, std::string name,
                        Split split, std::string shift_tag, std::mt19937_64& rng) {
  LabeledDataset d;
  d.name = std::move(name);
  d.class_names = names;
  d.split = split;
  d.shift = std::move(shift_tag);
  const int k_total = static_cast<int>(names.size());
  d.inputs.resize(static_cast<Eigen::Index>(per_class) * k_total, world.mixing.cols());
  Eigen::Index row = 0;
  for (int k = 0; k < k_total; ++k) {
    for (int i = 0; i < per_class; ++i) {
      RowVector x = world.sample(k, rng);
      if (shift) x = world.apply(*shift, x, k, rng);
      d.inputs.row(row++) = x;
      d.labels.push_back(k);
    }
  }
  return d;
}

std::vector<std::string> class_names_for(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    if (static_cast<std::size_t>(i) < kClassNames.size())
      out.emplace_back(kClassNames[static_cast<std::size_t>(i)]);
    else
      out.push_back("class" + std::to_string(i));
  }
  return out;
}

std::string pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
}

void build_corpus(const World& world, const BenchmarkConfig& cfg,
                  const std::vector<std::string>& names, ShiftBenchmark& out) {
  auto rng = stream(cfg.seed, 7);
  const int k_total = cfg.num_classes;
  std::vector<int> rank(static_cast<std::size_t>(k_total));
  for (int k = 0; k < k_total; ++k) rank[static_cast<std::size_t>(k)] = k;
  std::shuffle(rank.begin(), rank.end(), rng);

  // Zipf-like per-class volume, normalized so the mean stays corpus_per_class.
  std::vector<double> weight(static_cast<std::size_t>(k_total));
  double wsum = 0.0;
  for (int k = 0; k < k_total; ++k) {
    weight[static_cast<std::size_t>(k)] =
        std::pow(1.0 / (rank[static_cast<std::size_t>(k)] + 1.0), cfg.corpus_imbalance);
    wsum += weight[static_cast<std::size_t>(k)];
  }

  struct Pending {
    std::string caption;
    RowVector payload;
  };
  std::vector<Pending> items;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t domains = 1 + cfg.shifts.size();
  for (int k = 0; k < k_total; ++k) {
    const double share = weight[static_cast<std::size_t>(k)] / wsum * k_total;
    const int count = std::max(2, static_cast<int>(std::lround(cfg.corpus_per_class * share)));
    for (int i = 0; i < count; ++i) {
      if (unit(rng) < cfg.ambiguous_fraction && k_total > 1) {
        // Caption names class k, the image belongs to some other class.
        std::uniform_int_distribution<int> other(0, k_total - 2);
        int j = other(rng);
        if (j >= k) ++j;
        std::uniform_int_distribution<std::size_t> t(0, kAmbiguousTemplates.size() - 1);
        items.push_back({render_template(kAmbiguousTemplates[t(rng)], names[static_cast<std::size_t>(k)]),
                         world.sample(j, rng)});
        continue;
      }
      std::uniform_int_distribution<std::size_t> dom(0, domains - 1);
      const std::size_t d = dom(rng);
      RowVector x = world.sample(k, rng);
      int template_set = 0;
      if (d > 0) {
        ShiftSpec s = cfg.shifts[d - 1];
        s.magnitude *= 0.5 + unit(rng);
        x = world.apply(s, x, k, rng);
        template_set = 1 + static_cast<int>(s.kind);
      }
      const auto& tmpls = domain_templates(template_set);
      std::uniform_int_distribution<std::size_t> t(0, tmpls.size() - 1);
      items.push_back({render_template(tmpls[t(rng)], names[static_cast<std::size_t>(k)]), x});
    }
  }

  const auto class_items = items.size();
  const auto distractors = static_cast<std::size_t>(std::lround(
      static_cast<double>(class_items) * cfg.distractor_fraction /
      std::max(1e-9, 1.0 - cfg.distractor_fraction)));
  std::uniform_int_distribution<std::size_t> word(0, kDistractorWords.size() - 1);
  for (std::size_t i = 0; i < distractors; ++i) {
    const std::string caption = "a photo of the " + std::string(kDistractorWords[word(rng)]) +
                                " and the " + std::string(kDistractorWords[word(rng)]);
    RowVector z = gaussian(1, cfg.latent_dim, 1.5 * cfg.class_spread, rng);
    items.push_back({caption, z * world.mixing});
  }
  std::shuffle(items.begin(), items.end(), rng);

  std::vector<CorpusRecord> records;
  records.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string ref = "p" + pad(i, 6);
    records.push_back({"c" + pad(i, 6), items[i].caption, ref});
    out.payloads.add(ref, items[i].payload);
  }
  out.corpus = Corpus(std::move(records));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

LabeledDataset read_dataset_tsv(const std::filesystem::path& p,
                                const std::vector<std::string>& names, std::string name,
                                Split split_tag, std::string shift) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  LabeledDataset d;
  d.name = std::move(name);
  d.class_names = names;
  d.split = split_tag;
  d.shift = std::move(shift);
  std::vector<RowVector> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split(line, '\t');
    if (f.size() != 2)
      throw FormatError(p.string() + ":" + std::to_string(line_no) +
                        ": expected label<TAB>values");
    d.labels.push_back(static_cast<int>(parse_int(f[0])));
    rows.push_back(parse_row(f[1]));
  }
  if (!rows.empty()) {
    d.inputs.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size())
        throw FormatError(p.string() + ": ragged rows");
      d.inputs.row(static_cast<Eigen::Index>(i)) = rows[i];
    }
  }
  d.validate();
  return d;
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + std::string(text) + "'");
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw ShapeError("dataset '" + name + "': inputs and labels differ in length");
  for (const int y : labels)
    if (y < 0 || y >= num_classes())
      throw ArgumentError("dataset '" + name + "': label " + std::to_string(y) +
                          " outside the label space");
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows,
                      std::string name) {
  LabeledDataset out;
  out.name = std::move(name);
  out.class_names = data.class_names;
  out.split = data.split;
  out.shift = data.shift;
  out.inputs = take_rows(data.inputs, rows);
  out.labels.reserve(rows.size());
  for (const auto r : rows) out.labels.push_back(data.labels.at(r));
  return out;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b, std::string name) {
  if (a.class_names != b.class_names)
    throw ArgumentError("concat: datasets have different label spaces");
  if (a.size() > 0 && b.size() > 0 && a.inputs.cols() != b.inputs.cols())
    throw ShapeError("concat: input widths differ");
  LabeledDataset out = a;
  out.name = std::move(name);
  if (b.size() == 0) return out;
  if (a.size() == 0) {
    out.inputs = b.inputs;
  } else {
    out.inputs.resize(a.inputs.rows() + b.inputs.rows(), a.inputs.cols());
    out.inputs << a.inputs, b.inputs;
  }
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::uint64_t dataset_hash(const LabeledDataset& data) {
  std::ostringstream ss;
  for (const auto& n : data.class_names) ss << n << '\n';
  write_dataset_tsv(ss, data);
  return fnv1a64(ss.str());
}

std::vector<std::size_t> FewShotSplit::all_indices() const {
  std::vector<std::size_t> out;
  for (const auto& c : indices_per_class) out.insert(out.end(), c.begin(), c.end());
  return out;
}

FewShotSplit sample_few_shot(const LabeledDataset& data, int shots, std::uint64_t seed) {
  if (shots < 1) throw ArgumentError("sample_few_shot: shots must be >= 1");
  data.validate();
  std::vector<std::vector<std::size_t>> by_class(data.class_names.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);

  FewShotSplit split;
  split.shots = shots;
  split.seed = seed;
  split.dataset_hash = dataset_hash(data);
  auto rng = stream(seed, 0x5107);
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& pool = by_class[k];
    if (pool.size() < static_cast<std::size_t>(shots))
      throw InsufficientDataError("class '" + data.class_names[k] + "' has " +
                                  std::to_string(pool.size()) + " items, need " +
                                  std::to_string(shots));
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < static_cast<std::size_t>(shots); ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + shots);
    std::sort(chosen.begin(), chosen.end());
    split.indices_per_class.push_back(std::move(chosen));
  }
  return split;
}

std::string to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kNoise: return "noise";
    case ShiftKind::kRotation: return "rotation";
    case ShiftKind::kMeanShift: return "mean_shift";
    case ShiftKind::kStyleMix: return "style_mix";
  }
  return "noise";
}

ShiftKind parse_shift_kind(std::string_view text) {
  if (text == "noise") return ShiftKind::kNoise;
  if (text == "rotation") return ShiftKind::kRotation;
  if (text == "mean_shift") return ShiftKind::kMeanShift;
  if (text == "style_mix") return ShiftKind::kStyleMix;
  throw ArgumentError("unknown shift kind '" + std::string(text) +
                      "' (expected noise, rotation, mean_shift or style_mix)");
}

double default_shift_magnitude(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kNoise: return 0.8;
    case ShiftKind::kRotation: return 0.35;
    case ShiftKind::kMeanShift: return 1.5;
    case ShiftKind::kStyleMix: return 0.35;
  }
  return 0.0;
}

void PayloadStore::add(std::string ref, const RowVector& value) {
  if (index_.contains(ref)) throw ArgumentError("duplicate payload ref '" + ref + "'");
  index_.emplace(ref, refs_.size());
  refs_.push_back(std::move(ref));
  values_.push_back(value);
}

RowVector PayloadStore::get(const std::string& ref) const {
  const auto it = index_.find(ref);
  if (it == index_.end()) throw ArgumentError("unknown payload ref '" + ref + "'");
  return values_[it->second];
}

void BenchmarkConfig::validate() const {
  if (num_classes < 2) throw ArgumentError("benchmark: need at least 2 classes");
  if (shifts.empty()) throw ArgumentError("benchmark: need at least one shift kind");
  if (raw_dim < 2 || latent_dim < 1 || n_per_class < 1 || test_per_class < 1 ||
      corpus_per_class < 1)
    throw ArgumentError("benchmark: sizes must be positive (raw_dim >= 2)");
  if (ambiguous_fraction < 0.0 || ambiguous_fraction >= 1.0 || distractor_fraction < 0.0 ||
      distractor_fraction >= 1.0)
    throw ArgumentError("benchmark: fractions must lie in [0, 1)");
  for (const auto& s : shifts)
    if (!(s.magnitude >= 0.0)) throw ArgumentError("benchmark: negative shift magnitude");
}

ShiftBenchmark generate_shift_benchmark(const BenchmarkConfig& config) {
  config.validate();
  const World world = make_world(config);
  ShiftBenchmark out;
  out.class_names = class_names_for(config.num_classes);

  auto rng = stream(config.seed, 2);
  out.id_train = draw_set(world, out.class_names, config.n_per_class, nullptr, "id_train",
                          Split::kTrain, "ID", rng);
  const int val_per_class = std::max(1, static_cast<int>(std::lround(0.2 * config.n_per_class)));
  out.id_val = draw_set(world, out.class_names, val_per_class, nullptr, "id_val", Split::kVal,
                        "ID", rng);
  out.id_test = draw_set(world, out.class_names, config.test_per_class, nullptr, "id_test",
                         Split::kTest, "ID", rng);
  for (const auto& s : config.shifts) {
    const std::string name = to_string(s.kind);
    out.ood_tests.push_back(draw_set(world, out.class_names, config.test_per_class, &s,
                                     "ood_" + name, Split::kTest, "OOD:" + name, rng));
  }
  build_corpus(world, config, out.class_names, out);
  return out;
}

ShiftBenchmark generate_shift_benchmark(int num_classes, int raw_dim, int n_per_class,
                                        const std::vector<std::string>& shift_kinds,
                                        std::uint64_t seed) {
  BenchmarkConfig cfg;
  cfg.num_classes = num_classes;
  cfg.raw_dim = raw_dim;
  cfg.n_per_class = n_per_class;
  cfg.seed = seed;
  for (const auto& k : shift_kinds) {
    const auto kind = parse_shift_kind(k);
    cfg.shifts.push_back({kind, default_shift_magnitude(kind)});
  }
  return generate_shift_benchmark(cfg);
}

LabeledDataset materialize_retrieved(const RetrievedDataset& retrieved,
                                     const PayloadStore& payloads) {
  LabeledDataset d;
  d.name = "retrieved";
  d.class_names = retrieved.class_names;
  d.split = Split::kTrain;
  d.shift = "retrieved";
  if (retrieved.records.empty()) return d;
  const RowVector first = payloads.get(retrieved.records.front().record.payload_ref);
  d.inputs.resize(static_cast<Eigen::Index>(retrieved.records.size()), first.size());
  for (std::size_t i = 0; i < retrieved.records.size(); ++i) {
    const auto& r = retrieved.records[i];
    const RowVector v = payloads.get(r.record.payload_ref);
    if (v.size() != first.size()) throw ShapeError("payload widths differ");
    d.inputs.row(static_cast<Eigen::Index>(i)) = v;
    d.labels.push_back(r.label);
  }
  return d;
}

void write_dataset_tsv(std::ostream& out, const LabeledDataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i)
    out << data.labels[i] << '\t' << format_row(data.inputs.row(static_cast<Eigen::Index>(i)))
        << '\n';
}

void write_payloads(std::ostream& out, const PayloadStore& payloads) {
  for (const auto& ref : payloads.refs()) out << ref << '\t' << format_row(payloads.get(ref)) << '\n';
}

PayloadStore read_payloads(std::istream& in) {
  PayloadStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split(line, '\t');
    if (f.size() != 2)
      throw FormatError("payloads line " + std::to_string(line_no) + ": expected ref<TAB>values");
    store.add(std::string(f[0]), parse_row(f[1]));
  }
  return store;
}

void write_task(const std::filesystem::path& dir, const ShiftBenchmark& bench) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "classes.txt");
    for (const auto& n : bench.class_names) out << n << '\n';
  }
  json meta;
  meta["format_version"] = kTaskFormatVersion;
  meta["num_classes"] = bench.class_names.size();
  meta["raw_dim"] = bench.id_train.inputs.cols();
  std::vector<const LabeledDataset*> sets{&bench.id_train, &bench.id_val, &bench.id_test};
  for (const auto& o : bench.ood_tests) sets.push_back(&o);
  for (const auto* d : sets) {
    meta["datasets"].push_back({{"name", d->name}, {"split", to_string(d->split)}, {"shift", d->shift}});
    std::filesystem::create_directories(dir / d->name);
    auto out = open_out(dir / d->name / "data.tsv");
    write_dataset_tsv(out, *d);
  }
  {
    auto out = open_out(dir / "task.json");
    out << meta.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "corpus.tsv");
    write_corpus(out, bench.corpus);
  }
  {
    auto out = open_out(dir / "payloads.tsv");
    write_payloads(out, bench.payloads);
  }
}

ShiftBenchmark load_task(const std::filesystem::path& dir) {
  ShiftBenchmark b;
  {
    std::istringstream in(read_file(dir / "classes.txt"));
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) b.class_names.push_back(line);
  }
  const json meta = json::parse(read_file(dir / "task.json"));
  if (meta.value("format_version", 0) != kTaskFormatVersion)
    throw FormatError("unsupported task format in " + dir.string());
  for (const auto& d : meta.at("datasets")) {
    const std::string name = d.at("name");
    auto ds = read_dataset_tsv(dir / name / "data.tsv", b.class_names, name,
                               parse_split(d.at("split").get<std::string>()), d.at("shift"));
    if (name == "id_train") b.id_train = std::move(ds);
    else if (name == "id_val") b.id_val = std::move(ds);
    else if (name == "id_test") b.id_test = std::move(ds);
    else b.ood_tests.push_back(std::move(ds));
  }
  if (std::filesystem::exists(dir / "corpus.tsv")) b.corpus = ingest_corpus(dir / "corpus.tsv");
  if (std::filesystem::exists(dir / "payloads.tsv")) {
    std::ifstream in(dir / "payloads.tsv");
    b.payloads = read_payloads(in);
  }
  return b;
}

void write_few_shot_split(const std::filesystem::path& path, const FewShotSplit& split) {
  json j;
  j["shots"] = split.shots;
  j["seed"] = split.seed;
  j["dataset_hash"] = split.dataset_hash;
  j["indices_per_class"] = split.indices_per_class;
  auto out = open_out(path);
  out << j.dump() << '\n';
}

FewShotSplit read_few_shot_split(const std::filesystem::path& path) {
  const json j = json::parse(read_file(path));
  FewShotSplit s;
  s.shots = j.at("shots");
  s.seed = j.at("seed");
  s.dataset_hash = j.at("dataset_hash");
  s.indices_per_class = j.at("indices_per_class").get<std::vector<std::vector<std::size_t>>>();
  return s;
}

}  // namespace srapf
