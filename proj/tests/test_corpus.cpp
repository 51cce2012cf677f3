#include <set>

#include <gtest/gtest.h>

#include "gramsteer/corpus.hpp"
#include "gramsteer/error.hpp"
#include "helpers.hpp"

using namespace gramsteer;

namespace {
LabeledCorpus grid_corpus(std::size_t per_cell) {
  std::vector<LabeledSentence> out;
  for (auto t : all_tenses)
    for (auto a : all_aspects)
      for (std::size_t i = 0; i < per_cell; ++i)
        out.push_back({tense_aspect_name(t, a) + " sentence " + std::to_string(i) + ".", t, a,
                       Source::synthetic});
  return LabeledCorpus(out, Split::train, "grid");
}
}  // namespace

TEST(ParseCorpus, ReadsRecordsAndDefaultsSource) {
  auto c = parse_corpus(
      "{\"text\": \"She walked.\", \"tense\": \"past\", \"aspect\": \"simple\"}\n"
      "{\"text\": \"He walks.\", \"tense\": \"present\", \"aspect\": \"simple\", "
      "\"source\": \"treebank\"}\n",
      Split::test, "t");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].source, Source::benchmark);
  EXPECT_EQ(c[1].source, Source::treebank);
  EXPECT_EQ(parse_corpus("{\"text\": \"a\", \"tense\": \"past\", \"aspect\": \"simple\"}",
                         Split::train, "t")[0]
                .source,
            Source::synthetic);
}

TEST(ParseCorpus, RejectsBadRecords) {
  EXPECT_THROW(parse_corpus("{\"text\": \"a\", \"tense\": \"past\"}", Split::train, "x"),
               SchemaError);
  EXPECT_THROW(parse_corpus("{\"text\": \"\", \"tense\": \"past\", \"aspect\": \"simple\"}",
                            Split::train, "x"),
               SchemaError);
  EXPECT_THROW(parse_corpus("{\"text\": \"a\", \"tense\": \"pluperfect\", \"aspect\": \"simple\"}",
                            Split::train, "x"),
               LabelError);
  EXPECT_THROW(parse_corpus("{\"text\": \"a\", \"tense\": \"past\", \"aspect\": \"simple\"}\n"
                            "{\"text\": \"a\", \"tense\": \"past\", \"aspect\": \"simple\"}",
                            Split::train, "x"),
               SchemaError);
  EXPECT_THROW(parse_corpus("not json", Split::train, "x"), SchemaError);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl", Split::train), IoError);
}

TEST(SaveCorpus, RoundTrips) {
  auto c = grid_corpus(2);
  auto path = fixtures::scratch_dir("corpus") + "/c.jsonl";
  save_corpus(c, path);
  auto back = load_corpus(path, Split::train);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back[i].text, c[i].text);
    EXPECT_EQ(back[i].tense, c[i].tense);
    EXPECT_EQ(back[i].aspect, c[i].aspect);
  }
}

TEST(BalanceDownsample, ExactCountsAndDeterminism) {
  auto c = grid_corpus(5);  // 20 per tense, 15 per aspect
  auto a = balance_downsample(c, LabelKind::tense, 12, 3);
  auto b = balance_downsample(c, LabelKind::tense, 12, 3);
  auto counts = a.class_counts(LabelKind::tense);
  for (const auto& [k, n] : counts) EXPECT_EQ(n, 12u) << k;
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
  auto other = balance_downsample(c, LabelKind::tense, 12, 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].text != other[i].text;
  EXPECT_TRUE(differs);
}

TEST(BalanceDownsample, DeficientClassIsNamed) {
  // 18 sentences per aspect except simple, which keeps 12.
  std::vector<LabeledSentence> rows;
  auto full = grid_corpus(6);
  for (const auto& s : full.sentences()) {
    bool late = s.text.find("sentence 4") != std::string::npos ||
                s.text.find("sentence 5") != std::string::npos;
    if (s.aspect != Aspect::simple || !late) rows.push_back(s);
  }
  LabeledCorpus c(rows, Split::train, "uneven");
  ASSERT_EQ(c.class_counts(LabelKind::aspect).at("simple"), 12u);
  try {
    balance_downsample(c, LabelKind::aspect, 16, 1);
    FAIL() << "expected CapacityError";
  } catch (const CapacityError& e) {
    EXPECT_NE(std::string(e.what()).find("simple"), std::string::npos);
  }
}

TEST(SteeringTestset, ExcludesTargetClass) {
  auto c = grid_corpus(3);
  auto s = build_steering_testset(c, LabelKind::tense, "past");
  EXPECT_EQ(s.size(), c.size() - 12);
  for (const auto& x : s.sentences()) EXPECT_NE(x.tense, Tense::past);
}

TEST(FilterSingleVerb, KeepsExactlyOneMainVerb) {
  LexiconTagger tagger;
  LabeledCorpus c({{"She walked home.", Tense::past, Aspect::simple, Source::treebank},
                   {"She walked home and cooked dinner.", Tense::past, Aspect::simple,
                    Source::treebank},
                   {"The blue sky.", Tense::present, Aspect::simple, Source::treebank}},
                  Split::train, "f");
  auto f = filter_single_verb(c, tagger);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].text, "She walked home.");
}

TEST(Rng, UniformIndexStaysInRange) {
  std::uint64_t s = 99;
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    auto v = uniform_index(s, 7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}
