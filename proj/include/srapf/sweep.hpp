#pragma once

#include <ostream>
#include <vector>

#include "srapf/recipes.hpp"

namespace srapf {

struct SweepRow {
  double epsilon = 0.0;
  EvalReport report;
};

// One PFT+AP run per epsilon (top-k from options.top_k). The epsilon = 0 row
// is plain PFT. Throws ArgumentError on an empty list or a negative epsilon.
std::vector<SweepRow> sweep_epsilon(const DualEncoderModel& pretrained, const TaskData& task,
                                    const std::vector<double>& epsilons,
                                    const RecipeOptions& options);

// Columns: epsilon, id_top1, ood_mean_top1, then one per dataset.
void write_sweep_tsv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace srapf
