#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "gen.hpp"
#include "srapf/errors.hpp"
#include "srapf/evaluation.hpp"

using namespace srapf;
using namespace srapf::testing;

namespace {

LabeledDataset dataset(std::string name, Matrix x, Labels y, int k, std::string shift = "ID") {
  LabeledDataset d;
  d.name = std::move(name);
  d.inputs = std::move(x);
  d.labels = std::move(y);
  for (int c = 0; c < k; ++c) d.class_names.push_back("class" + std::to_string(c));
  d.shift = std::move(shift);
  return d;
}

EvalReport report(std::vector<std::pair<std::string, double>> id_ood, double ood_mean) {
  EvalReport r;
  for (const auto& [name, v] : id_ood) {
    DatasetAccuracy a;
    a.name = name;
    a.ood = name != "id_test";
    a.top1 = v;
    r.per_dataset.push_back(a);
  }
  r.ood_mean = ood_mean;
  return r;
}

}  // namespace

TEST(Evaluate, PerfectClassifierScoresOne) {
  DualEncoderModel m(tiny_config(1));
  randomize(m, 2);
  Gen g(3);
  const Matrix x = g.matrix(3, m.config().raw_dim, 1.0);
  const Matrix f = m.encode_image(x);
  m.set_classifier(f.transpose());
  const auto d = dataset("id_test", x, {0, 1, 2}, 3);
  EXPECT_EQ(top1_accuracy(m, d), 1.0);
}

TEST(Evaluate, ZeroClassifierPredictsClassZero) {
  DualEncoderModel m(tiny_config(1));
  randomize(m, 2);
  m.set_classifier(Matrix::Zero(m.embed_dim(), 3));
  Gen g(4);
  const auto d = dataset("id_test", g.matrix(8, m.config().raw_dim, 1.0), {0, 1, 0, 2, 2, 0, 1, 1}, 3);
  EXPECT_EQ(top1_accuracy(m, d), 3.0 / 8.0);
}

TEST(Evaluate, HandCountedTenItems) {
  DualEncoderModel m(tiny_config(5));
  randomize(m, 6);
  Gen g(7);
  const Matrix x = g.matrix(10, m.config().raw_dim, 1.0);
  const Labels pred = predict(m, x);
  Labels y = pred;
  for (std::size_t i : {1u, 4u, 8u}) y[i] = (y[i] + 1) % 3;
  const auto d = dataset("id_test", x, y, 3);
  EXPECT_EQ(count_correct(m, d), 7u);
  EXPECT_EQ(top1_accuracy(m, d), 0.7);
}

TEST(EvaluateProperty, ExactFractionsAndOodMean) {
  Gen g(11);
  for (int t = 0; t < 40; ++t) {
    DualEncoderModel m(tiny_config(static_cast<std::uint64_t>(t)));
    randomize(m, static_cast<std::uint64_t>(t) + 100);
    std::vector<LabeledDataset> sets;
    const int n_ood = g.integer(0, 3);
    for (int s = 0; s <= n_ood; ++s) {
      const int n = g.integer(1, 25);
      sets.push_back(dataset(s == 0 ? "id_test" : "ood_" + std::to_string(s),
                             g.matrix(n, m.config().raw_dim, 1.0), g.labels(n, 3), 3,
                             s == 0 ? "ID" : "OOD:" + std::to_string(s)));
    }
    const EvalReport r = evaluate(m, sets, 9);
    double sum = 0.0;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto& e = r.per_dataset[i];
      ASSERT_EQ(e.total, sets[i].size());
      ASSERT_EQ(e.top1, static_cast<double>(e.correct) / static_cast<double>(e.total));
      if (i > 0) sum += e.top1;
    }
    ASSERT_EQ(r.ood_mean, n_ood ? sum / n_ood : 0.0);
    ASSERT_EQ(r.id_top1(), r.per_dataset[0].top1);

    // Row order within a dataset does not matter.
    auto shuffled = sets[0];
    std::vector<std::size_t> perm(shuffled.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), g.engine());
    shuffled = subset(sets[0], perm, "id_test");
    ASSERT_EQ(count_correct(m, shuffled), r.per_dataset[0].correct);
  }
}

TEST(Evaluate, LabelSpaceMismatchIsEvaluationError) {
  DualEncoderModel m(tiny_config(1));
  Gen g(1);
  const auto four = dataset("x", g.matrix(3, m.config().raw_dim, 1.0), {0, 1, 3}, 4);
  EXPECT_THROW(count_correct(m, four), EvaluationError);
  auto a = dataset("a", g.matrix(3, m.config().raw_dim, 1.0), {0, 1, 2}, 3);
  auto b = a;
  b.class_names[2] = "other";
  const std::vector<LabeledDataset> sets{a, b};
  EXPECT_THROW(evaluate(m, sets), EvaluationError);
  m.set_class_names(a.class_names);
  EXPECT_THROW(count_correct(m, b), EvaluationError);
}

TEST(SummarizeSeeds, MeanAndSampleStd) {
  const std::vector<EvalReport> reports{report({{"id_test", 0.5}, {"ood_a", 0.2}}, 0.2),
                                        report({{"id_test", 0.7}, {"ood_a", 0.2}}, 0.2)};
  const auto rows = summarize_seeds(reports);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].name, "id_test");
  EXPECT_NEAR(rows[0].mean, 0.6, 1e-15);
  EXPECT_NEAR(rows[0].stddev, 0.14142135623730950, 1e-15);
  EXPECT_EQ(rows[1].stddev, 0.0);
  EXPECT_EQ(rows[2].name, "ood_mean");
  EXPECT_EQ(rows[2].runs, 2u);
}

TEST(SummarizeSeeds, SingleRunHasZeroStd) {
  const std::vector<EvalReport> reports{report({{"id_test", 0.9}}, 0.0)};
  const auto rows = summarize_seeds(reports);
  EXPECT_EQ(rows[0].mean, 0.9);
  EXPECT_EQ(rows[0].stddev, 0.0);
}

TEST(SummarizeSeeds, IdenticalReportsHaveZeroStd) {
  const auto r = report({{"id_test", 0.1 + 0.2}, {"ood_a", 1.0 / 3.0}}, 1.0 / 3.0);
  const std::vector<EvalReport> reports(5, r);
  for (const auto& row : summarize_seeds(reports)) EXPECT_EQ(row.stddev, 0.0) << row.name;
}

TEST(SummarizeSeeds, KeyMismatchIsAggregationError) {
  const std::vector<EvalReport> reports{report({{"id_test", 0.5}, {"ood_a", 0.2}}, 0.2),
                                        report({{"id_test", 0.5}, {"ood_b", 0.2}}, 0.2)};
  EXPECT_THROW(summarize_seeds(reports), AggregationError);
  EXPECT_THROW(summarize_seeds(std::span<const EvalReport>{}), AggregationError);
}

TEST(Scatter, ParameterCountsFollowFreezePlans) {
  const DualEncoderModel m(ModelConfig{});
  const auto& c = m.config();
  const auto count = [&](int kv) {
    return trainable_scalar_count(m, build_freeze_plan(m, kv, 0, 1e-6, 1e-3));
  };
  EXPECT_EQ(count(0), static_cast<std::size_t>(c.embed_dim * c.num_classes));
  EXPECT_EQ(count(c.visual_blocks),
            m.scalar_count() - [&] {
              std::size_t t = 0;
              for (const auto& g : m.groups())
                if (g.rfind("text.", 0) == 0) t += m.scalar_count(g);
              return t;
            }());
  std::size_t top4 = m.scalar_count("classifier");
  for (int b = c.visual_blocks - 4; b < c.visual_blocks; ++b)
    top4 += m.scalar_count(block_group(Tower::kVisual, b));
  EXPECT_EQ(count(4), top4);

  const std::vector<ScatterEntry> entries{
      {"LP", count(0), report({{"id_test", 0.8}, {"ood_a", 0.6}}, 0.6)},
      {"SRAPF", count(4), report({{"id_test", 0.9}, {"ood_a", 0.7}}, 0.7)}};
  const auto rows = emit_scatter(entries);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].method, "SRAPF");
  EXPECT_EQ(rows[1].params_trained, top4);
  EXPECT_EQ(rows[1].id_acc, 0.9);
  EXPECT_EQ(rows[1].ood_mean, 0.7);
}

TEST(Report, JsonRoundTrip) {
  EvalReport r = report({{"id_test", 0.1 + 0.2}, {"ood_a", 2.0 / 3.0}}, 2.0 / 3.0);
  r.per_dataset[0].correct = 3;
  r.per_dataset[0].total = 10;
  r.seed = 42;
  r.checkpoint_ref = "checkpoints/stage2.ckpt";
  const auto path = std::filesystem::temp_directory_path() / "srapf_report_test.json";
  write_report_json(path, r);
  const EvalReport back = read_report_json(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.per_dataset.size(), 2u);
  EXPECT_EQ(back.per_dataset[0].top1, r.per_dataset[0].top1);
  EXPECT_EQ(back.per_dataset[0].correct, 3u);
  EXPECT_EQ(back.per_dataset[1].ood, true);
  EXPECT_EQ(back.ood_mean, r.ood_mean);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.checkpoint_ref, r.checkpoint_ref);
  std::ostringstream tsv;
  write_report_tsv(tsv, r);
  EXPECT_EQ(tsv.str().substr(0, tsv.str().find('\n')), "dataset\tshift\tcorrect\ttotal\ttop1");
}
