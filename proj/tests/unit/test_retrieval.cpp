#include <gtest/gtest.h>

#include <sstream>

#include "retrieval_oracle.hpp"
#include "srapf/errors.hpp"
#include "srapf/text.hpp"

using namespace srapf;
using namespace srapf::testing;

namespace {

Corpus corpus_of(const std::vector<std::string>& captions) {
  std::vector<CorpusRecord> r;
  for (std::size_t i = 0; i < captions.size(); ++i)
    r.push_back({"id" + std::to_string(i), captions[i], "p" + std::to_string(i)});
  return Corpus(std::move(r));
}

DualEncoderModel text_model(std::uint64_t seed = 3) {
  auto c = tiny_config(seed);
  c.num_classes = 10;
  DualEncoderModel m(c);
  randomize(m, seed + 1, 0.2);
  return m;
}

}  // namespace

TEST(Ingest, EmptyAndWellFormed) {
  std::istringstream empty("");
  EXPECT_TRUE(ingest_corpus(empty).empty());
  std::istringstream three("a\tfirst caption\tp1\nb\tsecond\tp2\r\nc\tthird one\tp3\n");
  const Corpus c = ingest_corpus(three);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].caption, "second");
  EXPECT_EQ(c[1].payload_ref, "p2");
  EXPECT_EQ(c[2].id, "c");
}

TEST(Ingest, MalformedLineNamesTheLine) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"a\tok\tp\nb\tonly two\n", "src:2:"},
      {"a\tok\tp\nb\tx\tp\tq\n", "src:2:"},
      {"a\t\tp\n", "src:1:"},
      {"a\tx\tp\nb\ty\tp\na\tz\tp\n", "src:3:"},
  };
  for (const auto& [text, where] : cases) {
    std::istringstream in(text);
    try {
      ingest_corpus(in, "src");
      FAIL() << "accepted: " << text;
    } catch (const IngestionError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(where, 0), 0u) << e.what();
    }
  }
}

TEST(Ingest, WriteThenReadRoundTrips) {
  const Corpus c = toy_corpus(1);
  std::ostringstream out;
  write_corpus(out, c);
  std::istringstream in(out.str());
  const Corpus back = ingest_corpus(in);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back[i].caption, c[i].caption);
}

TEST(MatchClass, WholeWordOnly) {
  const Corpus c = corpus_of({"a photo of a dog", "lemon tree"});
  EXPECT_EQ(match_class(c, "lemon"), (std::vector<std::size_t>{1}));
  EXPECT_TRUE(match_class(corpus_of({"concatenate"}), "cat").empty());
}

TEST(MatchClass, CaseInsensitiveMultiwordAndSynonyms) {
  const Corpus c = corpus_of({"A SEA LION basking", "sea and lion", "the sea-lion!", "kitten nap",
                              "Cat"});
  EXPECT_EQ(match_class(c, "sea lion"), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(match_class(c, "cat", {"kitten"}), (std::vector<std::size_t>{3, 4}));
}

TEST(MatchClass, FiveCaptionOverlapMatchesHandEnumeration) {
  const Corpus c = corpus_of({"tiger shark near a tiger", "shark tiger", "a tiger", "sharks",
                              "the tiger shark"});
  EXPECT_EQ(match_class(c, "tiger"), (std::vector<std::size_t>{0, 1, 2, 4}));
  EXPECT_EQ(match_class(c, "shark"), (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(match_class(c, "tiger shark"), (std::vector<std::size_t>{0, 4}));
}

TEST(RankAndCap, SortsAndKeepsCorpusOrderOnTies) {
  const Corpus c = corpus_of({"a", "b", "c", "d"});
  RowVector q(2);
  q << 1, 0;
  Matrix e(3, 2);
  e << 0.5, 0.5,  //
      0.9, 0.1,   //
      0.5, 0.5;
  const auto r = rank_and_cap(c, {0, 2, 3}, 1, q, e, 5);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].corpus_index, 2u);
  EXPECT_EQ(r[1].corpus_index, 0u);
  EXPECT_EQ(r[2].corpus_index, 3u);
  EXPECT_EQ(r[0].label, 1);
  EXPECT_EQ(rank_and_cap(c, {0, 2, 3}, 1, q, e, 1).front().corpus_index, 2u);
  EXPECT_THROW(rank_and_cap(c, {0, 2, 3}, 1, q, e, 0), ArgumentError);
  EXPECT_THROW(rank_and_cap(c, {0, 2}, 1, q, e, 5), ArgumentError);
}

TEST(RetrieveAll, MatchesExhaustiveOracleOnTenCaptions) {
  const Corpus c = corpus_of({"a lemon", "crane lifting a lemon", "my apple", "CRANE", "lemonade",
                              "apple and lemon", "a photo of a crane", "nothing here",
                              "apples", "the lemon."});
  const std::vector<ClassSpec> classes{{"lemon", {}}, {"crane", {}}, {"apple", {}}};
  const auto m = text_model();
  const auto got = retrieve_all(c, classes, m, kNoCap);
  const auto want = oracle_retrieve(c, classes, m, kNoCap);
  ASSERT_EQ(got.records.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got.records[i].corpus_index, want[i].index);
    EXPECT_EQ(got.records[i].label, want[i].label);
    EXPECT_NEAR(got.records[i].score, want[i].score, 1e-12);
  }
  EXPECT_EQ(got.per_class_counts, (std::vector<std::size_t>{4, 3, 2}));
}

TEST(RetrieveAll, CapOneKeepsTheArgmax) {
  const Corpus c = toy_corpus(2);
  const auto m = text_model();
  const auto classes = toy_classes();
  const auto all = retrieve_all(c, classes, m, kNoCap);
  const auto one = retrieve_all(c, classes, m, 1);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (all.per_class_counts[k] == 0) {
      EXPECT_EQ(one.per_class_counts[k], 0u);
      continue;
    }
    EXPECT_EQ(one.per_class_counts[k], 1u);
    double best = -2;
    for (const auto& r : all.records)
      if (r.label == static_cast<int>(k)) best = std::max(best, r.score);
    EXPECT_EQ(one.records[pos++].score, best);
  }
}

TEST(RetrieveAll, ZeroMatchClassIsKeptAndDuplicatesRejected) {
  const Corpus c = corpus_of({"a lemon"});
  const auto m = text_model();
  const auto r = retrieve_all(c, {{"lemon", {}}, {"zebra", {}}}, m, 5);
  EXPECT_EQ(r.per_class_counts, (std::vector<std::size_t>{1, 0}));
  EXPECT_THROW(retrieve_all(c, {{"lemon", {}}, {"Lemon", {}}}, m, 5), ArgumentError);
}

TEST(RetrieveProperty, SoundCompleteAndPrefixClosed) {
  const auto m = text_model(7);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Corpus c = toy_corpus(100 + s);
    const auto classes = toy_classes();
    const auto all = retrieve_all(c, classes, m, kNoCap);
    for (const auto& r : all.records) {
      const auto& spec = classes[static_cast<std::size_t>(r.label)];
      bool ok = oracle_contains(r.record.caption, spec.name);
      for (const auto& syn : spec.synonyms) ok = ok || oracle_contains(r.record.caption, syn);
      ASSERT_TRUE(ok) << r.record.caption << " labelled " << spec.name;
    }
    for (std::size_t k = 0; k < classes.size(); ++k) {
      std::size_t expected = 0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        bool hit = oracle_contains(c[i].caption, classes[k].name);
        for (const auto& syn : classes[k].synonyms) hit = hit || oracle_contains(c[i].caption, syn);
        expected += hit;
      }
      ASSERT_EQ(all.per_class_counts[k], expected);
    }
    for (std::size_t cap = 1; cap < 12; ++cap) {
      const auto a = retrieve_all(c, classes, m, cap), b = retrieve_all(c, classes, m, cap + 1);
      std::size_t ia = 0, ib = 0;
      for (std::size_t k = 0; k < classes.size(); ++k) {
        for (std::size_t j = 0; j < a.per_class_counts[k]; ++j)
          ASSERT_EQ(a.records[ia + j].corpus_index, b.records[ib + j].corpus_index);
        ia += a.per_class_counts[k];
        ib += b.per_class_counts[k];
      }
    }
  }
}

TEST(Serialization, ByteStableAndReadable) {
  const Corpus c = toy_corpus(3);
  const auto classes = toy_classes();
  std::vector<std::string> names;
  for (const auto& k : classes) names.push_back(k.name);
  std::ostringstream a, b;
  write_retrieved(a, retrieve_all(c, classes, text_model(), 5));
  write_retrieved(b, retrieve_all(c, classes, text_model(), 5));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream in(a.str());
  const auto back = read_retrieved(in, names);
  std::ostringstream again;
  write_retrieved(again, back);
  EXPECT_EQ(again.str(), a.str());
  std::ostringstream hist;
  write_class_histogram(hist, back);
  EXPECT_EQ(hist.str().rfind("cat\t", 0), 0u);
}

TEST(ClassSpecs, ParseNamesAndSynonyms) {
  std::istringstream in("cat\tkitten,kitty\nsea lion\n\ndog\t\n");
  const auto specs = read_class_specs(in);
  ASSERT_EQ(specs.size(), 3u);
  EXPECT_EQ(specs[0].synonyms, (std::vector<std::string>{"kitten", "kitty"}));
  EXPECT_EQ(specs[1].name, "sea lion");
  EXPECT_TRUE(specs[2].synonyms.empty());
}
