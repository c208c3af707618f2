#include "srapf/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "srapf/errors.hpp"
#include "srapf/tsv.hpp"

namespace srapf {

const DatasetAccuracy& EvalReport::entry(const std::string& name) const {
  for (const auto& e : per_dataset)
    if (e.name == name) return e;
  throw ArgumentError("report has no dataset '" + name + "'");
}

double EvalReport::id_top1() const {
  for (const auto& e : per_dataset)
    if (!e.ood) return e.top1;
  throw ArgumentError("report has no ID entry");
}

Labels predict(const DualEncoderModel& model, const Matrix& inputs) {
  const Matrix logits = classify(model.encode_image(inputs), model.classifier());
  Labels out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::size_t count_correct(const DualEncoderModel& model, const LabeledDataset& data) {
  if (data.num_classes() != model.num_classes() ||
      (!model.class_names().empty() && model.class_names() != data.class_names))
    throw EvaluationError("dataset '" + data.name + "' does not share the model's label space");
  if (data.size() == 0) return 0;
  const Labels pred = predict(model, data.inputs);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  return correct;
}

double top1_accuracy(const DualEncoderModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw EvaluationError("dataset '" + data.name + "' is empty");
  return static_cast<double>(count_correct(model, data)) / static_cast<double>(data.size());
}

EvalReport evaluate(const DualEncoderModel& model, std::span<const LabeledDataset> datasets,
                    std::uint64_t seed, std::string checkpoint_ref) {
  EvalReport report;
  report.seed = seed;
  report.checkpoint_ref = std::move(checkpoint_ref);
  if (!datasets.empty()) {
    for (const auto& d : datasets)
      if (d.class_names != datasets.front().class_names)
        throw EvaluationError("datasets '" + datasets.front().name + "' and '" + d.name +
                              "' have different label spaces");
  }
  double ood_sum = 0.0;
  std::size_t ood_count = 0;
  for (const auto& d : datasets) {
    DatasetAccuracy acc;
    acc.name = d.name;
    acc.ood = d.is_ood();
    acc.total = d.size();
    acc.correct = count_correct(model, d);
    acc.top1 = acc.total ? static_cast<double>(acc.correct) / static_cast<double>(acc.total) : 0.0;
    if (acc.ood) {
      ood_sum += acc.top1;
      ++ood_count;
    }
    report.per_dataset.push_back(std::move(acc));
  }
  report.ood_mean = ood_count ? ood_sum / static_cast<double>(ood_count) : 0.0;
  return report;
}

std::vector<SummaryRow> summarize_seeds(std::span<const EvalReport> reports) {
  if (reports.empty()) throw AggregationError("summarize_seeds: no reports");
  const auto& ref = reports.front().per_dataset;
  for (const auto& r : reports) {
    bool aligned = r.per_dataset.size() == ref.size();
    for (std::size_t i = 0; aligned && i < ref.size(); ++i)
      aligned = r.per_dataset[i].name == ref[i].name;
    if (!aligned) throw AggregationError("summarize_seeds: reports have different dataset keys");
  }
  auto summarize = [&](std::string name, auto value_of) {
    SummaryRow row;
    row.name = std::move(name);
    row.runs = reports.size();
    double sum = 0.0;
    for (const auto& r : reports) sum += value_of(r);
    row.mean = sum / static_cast<double>(reports.size());
    if (reports.size() > 1) {
      double ss = 0.0;
      for (const auto& r : reports) ss += (value_of(r) - row.mean) * (value_of(r) - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(reports.size() - 1));
    }
    return row;
  };
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < ref.size(); ++i)
    rows.push_back(summarize(ref[i].name, [i](const EvalReport& r) { return r.per_dataset[i].top1; }));
  rows.push_back(summarize("ood_mean", [](const EvalReport& r) { return r.ood_mean; }));
  return rows;
}

std::vector<ScatterRow> emit_scatter(std::span<const ScatterEntry> entries) {
  std::vector<ScatterRow> rows;
  for (const auto& e : entries)
    rows.push_back({e.method, e.params_trained, e.report.id_top1(), e.report.ood_mean});
  return rows;
}

void write_report_tsv(std::ostream& out, const EvalReport& report) {
  out << "dataset\tshift\tcorrect\ttotal\ttop1\n";
  for (const auto& e : report.per_dataset)
    out << e.name << '\t' << (e.ood ? "OOD" : "ID") << '\t' << e.correct << '\t' << e.total
        << '\t' << format_double(e.top1) << '\n';
  out << "ood_mean\tOOD\t\t\t" << format_double(report.ood_mean) << '\n';
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  nlohmann::json j;
  j["seed"] = report.seed;
  j["checkpoint"] = report.checkpoint_ref;
  j["ood_mean"] = report.ood_mean;
  for (const auto& e : report.per_dataset)
    j["datasets"].push_back({{"name", e.name}, {"ood", e.ood}, {"correct", e.correct},
                             {"total", e.total}, {"top1", e.top1}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

EvalReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const auto j = nlohmann::json::parse(in);
  EvalReport r;
  r.seed = j.at("seed");
  r.checkpoint_ref = j.at("checkpoint");
  r.ood_mean = j.at("ood_mean");
  for (const auto& d : j.at("datasets"))
    r.per_dataset.push_back({d.at("name"), d.at("ood"), d.at("correct"), d.at("total"), d.at("top1")});
  return r;
}

void write_summary_tsv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "dataset\tmean\tstd\truns\n";
  for (const auto& r : rows)
    out << r.name << '\t' << format_double(r.mean) << '\t' << format_double(r.stddev) << '\t'
        << r.runs << '\n';
}

void write_scatter_tsv(std::ostream& out, std::span<const ScatterRow> rows) {
  out << "method\tparams_trained\tid_acc\tood_mean\n";
  for (const auto& r : rows)
    out << r.method << '\t' << r.params_trained << '\t' << format_double(r.id_acc) << '\t'
        << format_double(r.ood_mean) << '\n';
}

void write_comparison_table(std::ostream& out, std::span<const std::string> methods,
                            std::span<const EvalReport> reports) {
  if (methods.size() != reports.size())
    throw ArgumentError("comparison table: methods and reports differ in count");
  if (reports.empty()) return;
  std::vector<std::string> ood_names;
  for (const auto& e : reports.front().per_dataset)
    if (e.ood) ood_names.push_back(e.name);

  std::size_t method_w = 6;
  for (const auto& m : methods) method_w = std::max(method_w, m.size());
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * v;
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(method_w)) << "method" << "  "
      << std::right << std::setw(8) << "ID" << std::setw(10) << "OOD avg";
  for (const auto& n : ood_names) out << std::setw(std::max<int>(12, static_cast<int>(n.size()) + 2)) << n;
  out << '\n';
  for (std::size_t i = 0; i < methods.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(method_w)) << methods[i] << "  " << std::right
        << std::setw(8) << pct(reports[i].id_top1()) << std::setw(10) << pct(reports[i].ood_mean);
    for (const auto& n : ood_names)
      out << std::setw(std::max<int>(12, static_cast<int>(n.size()) + 2)) << pct(reports[i].entry(n).top1);
    out << '\n';
  }
}

}  // namespace srapf
