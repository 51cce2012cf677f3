#include <cmath>

#include <gtest/gtest.h>

#include "gramsteer/error.hpp"
#include "gramsteer/planted_model.hpp"
#include "gramsteer/representation.hpp"
#include "helpers.hpp"

using namespace gramsteer;

namespace {
LayerActivations random_acts(std::mt19937_64& rng, int layers, Eigen::Index d, Eigen::Index n) {
  LayerActivations a;
  for (int l = 0; l < layers; ++l) a.states.push_back(fixtures::gaussian(rng, d, n, 3.0));
  a.token_texts.assign(static_cast<std::size_t>(n), "t");
  return a;
}
}  // namespace

TEST(Aggregate, SumNormSumMeanIdentities) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 1 + trial % 17;
    auto acts = random_acts(rng, 3, 12, n);
    for (int l = 0; l < 3; ++l) {
      Vector sum = aggregate(acts, l, Aggregation::sum).vector;
      Vector ns = aggregate(acts, l, Aggregation::norm_sum).vector;
      Vector mean = aggregate(acts, l, Aggregation::mean).vector;
      const double N = static_cast<double>(n);
      EXPECT_LT((sum - std::sqrt(N) * ns).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((mean - sum / N).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_EQ(aggregate(acts, l, Aggregation::final_token).vector,
                Vector(acts.states[static_cast<std::size_t>(l)].col(n - 1)));
    }
  }
}

TEST(Aggregate, SingleTokenCollapse) {
  std::mt19937_64 rng(2);
  auto acts = random_acts(rng, 2, 8, 1);
  Vector h = acts.states[1].col(0);
  for (auto s : all_aggregations) EXPECT_LT((aggregate(acts, 1, s).vector - h).norm(), 1e-12);
}

TEST(Aggregate, LayerOutOfRange) {
  std::mt19937_64 rng(3);
  auto acts = random_acts(rng, 2, 4, 3);
  EXPECT_THROW(aggregate(acts, 2, Aggregation::sum), LayerMismatchError);
  EXPECT_THROW(aggregate(acts, -1, Aggregation::sum), LayerMismatchError);
}

TEST(Centering, FitOnTrainAppliedToOthers) {
  std::mt19937_64 rng(4);
  Matrix train = fixtures::gaussian(rng, 30, 5);
  Matrix other = fixtures::gaussian(rng, 7, 5);
  auto stats = fit_centering_rows(train, 2, Aggregation::mean, "train");
  EXPECT_LT(stats.apply_rows(train).colwise().sum().norm(), 1e-9);
  Matrix c = stats.apply_rows(other);
  EXPECT_LT((c.row(3).transpose() - (other.row(3).transpose() - stats.mean)).norm(), 1e-12);
  EXPECT_EQ(stats.id(), "train@L2/mean");
}

TEST(Centering, MixedInputsRejected) {
  AggregatedRep a{Vector::Ones(3), 0, Aggregation::sum, 2};
  AggregatedRep b{Vector::Ones(3), 1, Aggregation::sum, 2};
  EXPECT_THROW(fit_centering({a, b}, "x"), ContractError);
  EXPECT_THROW(fit_centering({}, "x"), ContractError);
  auto s = fit_centering({a, a}, "x");
  EXPECT_EQ(s.mean, Vector::Ones(3));
}

TEST(ExtractFeatures, OneRowPerSentence) {
  PlantedModel model;
  auto train = planted_corpus(Split::train);
  std::vector<LabeledSentence> first(train.sentences().begin(), train.sentences().begin() + 12);
  LabeledCorpus small(first, Split::train, "fixture12");
  auto fs = extract_features(model, small, {0, 3, 6}, {Aggregation::norm_sum, Aggregation::mean});
  EXPECT_EQ(fs.matrices.size(), 6u);
  for (const auto& [key, m] : fs.matrices) {
    EXPECT_EQ(m.rows(), 12);
    EXPECT_EQ(m.cols(), model.hidden_size());
  }
  EXPECT_EQ(fs.token_counts.size(), 12u);
  EXPECT_THROW(fs.at(1, Aggregation::norm_sum), LayerMismatchError);
}

TEST(NormProfile, GrowsWithDepthOnPlantedModel) {
  PlantedModel model;
  auto test = planted_corpus(Split::test);
  auto p = norm_profile(model, test, {{"future", {{0, model.planted_direction("future")}}}});
  ASSERT_EQ(p.mean_final_norm.size(), 7u);
  for (std::size_t l = 1; l < p.mean_final_norm.size(); ++l)
    EXPECT_GT(p.mean_final_norm[l], p.mean_final_norm[l - 1]);
  EXPECT_TRUE(std::isfinite(p.mean_projection["future"][0]));
}
