#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "gramsteer/error.hpp"
#include "gramsteer/evaluation.hpp"
#include "gramsteer/planted_model.hpp"

using namespace gramsteer;

TEST(Ngram, RepetitionRates) {
  EXPECT_DOUBLE_EQ(ngram_stats("a a a a").unigram_rate, 0.75);
  auto s = ngram_stats("the cat sat the cat sat");
  EXPECT_DOUBLE_EQ(s.unigram_rate, 0.5);
  EXPECT_DOUBLE_EQ(s.bigram_rate, 0.4);
  EXPECT_DOUBLE_EQ(s.trigram_rate, 0.25);
  EXPECT_DOUBLE_EQ(s.fourgram_rate, 0.0);
  EXPECT_DOUBLE_EQ(s.diversity, 0.6 * 0.75 * 1.0);
  EXPECT_EQ(ngram_words("The Cat, sat."), (std::vector<std::string>{"the", "cat", "sat"}));
  EXPECT_DOUBLE_EQ(repetition_rate({"a", "b"}, 3), 0.0);
  auto empty = ngram_stats("");
  EXPECT_DOUBLE_EQ(empty.unigram_rate, 0.0);
  EXPECT_DOUBLE_EQ(empty.diversity, 1.0);
}

TEST(Degeneration, ThresholdsAreStrict) {
  LexiconTagger tagger;
  auto v = detect_degenerate("the cat saw the dog and the bird", tagger);
  EXPECT_DOUBLE_EQ(v.stats.unigram_rate, 0.25);
  EXPECT_TRUE(v.is_degenerate);
  EXPECT_EQ(v.reasons, std::set<DegenerationReason>{DegenerationReason::unigram_rep});

  v = detect_degenerate("the cat sat on the mat the cat sat on it", tagger);
  EXPECT_NEAR(v.stats.bigram_rate, 0.3, 1e-12);
  EXPECT_EQ(v.reasons, (std::set<DegenerationReason>{DegenerationReason::unigram_rep,
                                                     DegenerationReason::bigram_rep,
                                                     DegenerationReason::low_diversity}));
}

TEST(Degeneration, CleanSentenceAndNoVerb) {
  LexiconTagger tagger;
  auto v = detect_degenerate("She has written a long letter to her friend.", tagger);
  EXPECT_FALSE(v.is_degenerate);
  v = detect_degenerate("A quiet morning by the lake.", tagger);
  EXPECT_TRUE(v.is_degenerate);
  EXPECT_EQ(v.reasons, std::set<DegenerationReason>{DegenerationReason::no_verb});
  v = detect_degenerate("", tagger);
  EXPECT_TRUE(v.reasons.count(DegenerationReason::no_verb));
}

TEST(Degeneration, RepeatingTextNeverBecomesClean) {
  LexiconTagger tagger;
  for (std::string text : {"She walked home.", "the cat saw the dog and the bird",
                           "They will have been visiting the old town hall today.",
                           "I play."}) {
    std::string doubled = text + " " + text;
    EXPECT_TRUE(detect_degenerate(doubled, tagger).is_degenerate) << doubled;
  }
}

namespace {
std::vector<EvaluationRecord> hand_records() {
  // S = {1..6}, D = {5, 6, 7}, S_F = {1, 2} over ids 1..10.
  std::vector<EvaluationRecord> out;
  for (int i = 1; i <= 10; ++i) {
    EvaluationRecord r;
    r.sample_id = std::to_string(i);
    r.in_S = i <= 6;
    r.in_D = i >= 5 && i <= 7;
    r.in_SF = i <= 2;
    out.push_back(r);
  }
  return out;
}
}  // namespace

TEST(Metrics, HandCase) {
  auto m = compute_metrics(hand_records(), 10);
  EXPECT_DOUBLE_EQ(m.steering_success, 0.6);
  EXPECT_DOUBLE_EQ(m.degenerate_rate, 0.3);
  EXPECT_DOUBLE_EQ(m.efficacy, 0.4);
  EXPECT_DOUBLE_EQ(m.selectivity, 0.2);
}

TEST(Metrics, OrderIndependentAndBounded) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvaluationRecord> rs(1 + trial % 17);
    for (auto& r : rs) {
      r.in_S = coin(rng);
      r.in_D = coin(rng);
      r.in_SF = r.in_S && coin(rng);
    }
    auto a = compute_metrics(rs, rs.size());
    std::shuffle(rs.begin(), rs.end(), rng);
    auto b = compute_metrics(rs, rs.size());
    EXPECT_DOUBLE_EQ(a.efficacy, b.efficacy);
    EXPECT_DOUBLE_EQ(a.selectivity, b.selectivity);
    EXPECT_LE(a.selectivity, a.efficacy);
    EXPECT_LE(a.efficacy, a.steering_success);
    EXPECT_GE(a.efficacy, a.steering_success - a.degenerate_rate - 1e-12);
  }
}

TEST(Metrics, Errors) {
  EXPECT_THROW(compute_metrics({}, 0), ContractError);
  EvaluationRecord bad;
  bad.in_SF = true;
  EXPECT_THROW(compute_metrics({bad}, 1), ContractError);
}

TEST(MarkRecord, SuccessAndFeatureSelectivity) {
  EvaluationRecord r;
  r.unsteered_labels = {"past", "simple"};
  r.steered_labels = {"future", "simple"};
  mark_record(r, LabelKind::tense, "future", {});
  EXPECT_TRUE(r.in_S);
  EXPECT_TRUE(r.in_SF);
  EXPECT_FALSE(r.in_D);
  r.steered_labels = {"future", "perfect"};
  mark_record(r, LabelKind::tense, "future", {});
  EXPECT_TRUE(r.in_S);
  EXPECT_FALSE(r.in_SF);
  r.steered_labels = {"past", "simple"};
  mark_record(r, LabelKind::tense, "future", {});
  EXPECT_FALSE(r.in_S);
  EXPECT_THROW(mark_record(r, LabelKind::tense_aspect, "x", {}), ContractError);
}

TEST(Perplexity, RelativeChange) {
  EXPECT_DOUBLE_EQ(relative_perplexity_change(20.0, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(relative_perplexity_change(5.0, 10.0), -0.5);
  EXPECT_THROW(relative_perplexity_change(1.0, 0.0), ContractError);
  PlantedModel model;
  EXPECT_DOUBLE_EQ(relative_perplexity_change("She walked home.", "She walked home.", model), 0.0);
}

TEST(TopicShift, MeanAndPopulationStddev) {
  ExactMatch exact;
  EXPECT_FALSE(topic_shift({}, exact));
  auto t = topic_shift({{"a", "a"}, {"a", "b"}}, exact);
  ASSERT_TRUE(t);
  EXPECT_DOUBLE_EQ(t->mean, 0.5);
  EXPECT_DOUBLE_EQ(t->stddev, 0.5);
  EXPECT_EQ(t->count, 2u);
  LexicalOverlap lex;
  EXPECT_DOUBLE_EQ(lex.score("the cat sat", "the cat sat"), 1.0);
  EXPECT_DOUBLE_EQ(lex.score("a b", "c d"), 0.0);
}

TEST(AnswerText, FirstNonEmptyLine) {
  EXPECT_EQ(answer_text("\n  She walked home. \nmore"), "She walked home.");
  EXPECT_EQ(answer_text(""), "");
}

TEST(BestCell, TieBreakOrder) {
  auto cell = [](int layer, double alpha, double eff) {
    GridCell c;
    c.layer = layer;
    c.alpha = alpha;
    c.metrics = Metrics{eff, 0.0, eff, eff};
    return c;
  };
  std::vector<GridCell> cells{cell(4, 2, 0.9), cell(2, 8, 0.9), cell(2, 4, 0.9), cell(0, 1, 0.5)};
  GridCell failed;
  failed.error = "boom";
  cells.push_back(failed);
  EXPECT_EQ(*best_cell(cells), 2u);
  EXPECT_FALSE(best_cell({failed}));
}

TEST(GridSearch, RejectsEmptyGrid) {
  PlantedModel model;
  LexiconTagger tagger;
  GridContext ctx;
  ctx.model = &model;
  ctx.tagger = &tagger;
  GridSpec spec;
  spec.target_value = "past";
  spec.alphas = {0.0};
  EXPECT_THROW(grid_search(ctx, {}, spec), Error);
}

TEST(EvaluationRecord, JsonRoundTrip) {
  EvaluationRecord r;
  r.sample_id = "7";
  r.prompt = "p \\\\";
  r.steered = "She will walk.";
  r.unsteered = "She walked.";
  r.steered_labels = {"future", "simple"};
  r.unsteered_labels = {"past", "simple"};
  r.in_S = r.in_SF = true;
  r.reasons = {"no_verb"};
  r.steered_perplexity = 3.5;
  auto text = r.to_json().dump();
  EXPECT_EQ(EvaluationRecord::from_json(nlohmann::json::parse(text)).to_json().dump(), text);
}
