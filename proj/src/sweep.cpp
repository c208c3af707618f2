#include "srapf/sweep.hpp"

#include <cmath>

#include "srapf/errors.hpp"
#include "srapf/tsv.hpp"

namespace srapf {

std::vector<SweepRow> sweep_epsilon(const DualEncoderModel& pretrained, const TaskData& task,
                                    const std::vector<double>& epsilons,
                                    const RecipeOptions& options) {
  if (epsilons.empty()) throw ArgumentError("sweep: empty epsilon list");
  for (const double e : epsilons)
    if (!(e >= 0.0) || !std::isfinite(e))
      throw ArgumentError("sweep: epsilon must be finite and >= 0, got " + format_double(e));

  std::vector<SweepRow> rows;
  for (const double e : epsilons) {
    RecipeOptions o = options;
    o.epsilon = e;
    const std::string recipe = e == 0.0 ? "PFT" : "PFT+AP";
    rows.push_back({e, run_recipe(recipe, pretrained, task, o).report});
  }
  return rows;
}

void write_sweep_tsv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "epsilon\tid_top1\tood_mean_top1";
  if (!rows.empty())
    for (const auto& d : rows.front().report.per_dataset) out << '\t' << d.name;
  out << '\n';
  for (const auto& r : rows) {
    out << format_double(r.epsilon) << '\t' << format_double(r.report.id_top1()) << '\t'
        << format_double(r.report.ood_mean);
    for (const auto& d : r.report.per_dataset) out << '\t' << format_double(d.top1);
    out << '\n';
  }
}

}  // namespace srapf
