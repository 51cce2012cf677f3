#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "gramsteer/error.hpp"
#include "gramsteer/persistence.hpp"
#include "gramsteer/planted_model.hpp"
#include "gramsteer/probing.hpp"
#include "helpers.hpp"

using namespace gramsteer;

namespace {
struct Clusters {
  Matrix x;
  std::vector<std::string> y;
};

Clusters clusters(std::mt19937_64& rng, int per_class, double separation) {
  const std::vector<std::string> names{"a", "b", "c"};
  const Eigen::Index d = 6;
  Clusters out;
  out.x = fixtures::gaussian(rng, 3 * per_class, d);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i) {
      out.x(c * per_class + i, c) += separation;
      out.y.push_back(names[static_cast<std::size_t>(c)]);
    }
  return out;
}

// Mean cross-entropy plus 0.5 * l2 * |W|^2, written independently of the probe code.
double objective(const Matrix& x, const std::vector<std::string>& y,
                 const std::vector<std::string>& classes, const Matrix& w, const Vector& b,
                 double l2) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Vector z = w * x.row(i).transpose() + b;
    double m = z.maxCoeff();
    double lse = m + std::log((z.array() - m).exp().sum());
    auto k = std::find(classes.begin(), classes.end(), y[static_cast<std::size_t>(i)]) -
             classes.begin();
    loss += lse - z[k];
  }
  return loss / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
}
}  // namespace

TEST(F1Report, HandComputedCase) {
  auto r = f1_report({"a", "a", "b", "b"}, {"a", "b", "b", "b"});
  EXPECT_NEAR(r.f1["a"], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.f1["b"], 0.8, 1e-12);
  EXPECT_NEAR(r.macro_f1, (2.0 / 3.0 + 0.8) / 2.0, 1e-12);
  EXPECT_EQ(r.confusion["a"]["b"], 1u);
  EXPECT_EQ(r.support["b"], 2u);
}

TEST(F1Report, PredictedOnlyClassCountsAsZero) {
  auto r = f1_report({"a", "a"}, {"a", "c"});
  ASSERT_EQ(r.classes.size(), 2u);
  EXPECT_NEAR(r.macro_f1, (2.0 / 3.0 + 0.0) / 2.0, 1e-12);
}

TEST(TrainProbe, SeparatedClustersAreClassifiedPerfectly) {
  auto data = fixtures::separated_clusters(36);
  ASSERT_GT(data.margin, 0.0);  // the fixture is linearly separable
  auto p = fit_probe_at(data.x, data.y, 0, Aggregation::mean, "train", {});
  EXPECT_DOUBLE_EQ(evaluate_probe(p, data.x, 0, Aggregation::mean, data.y).macro_f1, 1.0);
}

TEST(TrainProbe, DuplicatedDataKeepsTheDecisionFunction) {
  std::mt19937_64 rng(14);
  auto data = clusters(rng, 30, 1.5);
  Matrix doubled(2 * data.x.rows(), data.x.cols());
  doubled << data.x, data.x;
  auto labels = data.y;
  labels.insert(labels.end(), data.y.begin(), data.y.end());
  ProbeOptions opts;
  opts.tolerance = 1e-8;
  opts.max_iterations = 2000;
  auto a = train_probe(data.x, data.y, opts);
  auto b = train_probe(doubled, labels, opts);
  Matrix grid = fixtures::gaussian(rng, 400, 6, 3.0);
  EXPECT_EQ(a.predict(grid), b.predict(grid));
}

TEST(TrainProbe, StationaryPointOfTheRegularizedObjective) {
  std::mt19937_64 rng(11);
  auto data = clusters(rng, 40, 1.0);
  ProbeOptions opts;
  opts.l2 = 1e-2;
  opts.tolerance = 1e-8;
  opts.max_iterations = 2000;
  auto p = train_probe(data.x, data.y, opts);
  EXPECT_TRUE(p.converged);
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
      Matrix wp = p.weights, wm = p.weights;
      wp(r, c) += h;
      wm(r, c) -= h;
      double g = (objective(data.x, data.y, p.classes, wp, p.bias, opts.l2) -
                  objective(data.x, data.y, p.classes, wm, p.bias, opts.l2)) /
                 (2 * h);
      worst = std::max(worst, std::abs(g));
    }
  EXPECT_LT(worst, 1e-5);
}

TEST(TrainProbe, ShuffledLabelsStayNearChance) {
  std::mt19937_64 rng(12);
  auto train = clusters(rng, 167, 4.0);
  auto test = clusters(rng, 167, 4.0);
  std::shuffle(train.y.begin(), train.y.end(), rng);
  std::shuffle(test.y.begin(), test.y.end(), rng);
  auto p = fit_probe_at(train.x, train.y, 0, Aggregation::mean, "train", {});
  double f1 = evaluate_probe(p, test.x, 0, Aggregation::mean, test.y).macro_f1;
  EXPECT_NEAR(f1, 1.0 / 3.0, 0.1);
}

TEST(TrainProbe, Errors) {
  Matrix x = Matrix::Random(4, 2);
  EXPECT_THROW(train_probe(x, {"a", "a", "a", "a"}), DegenerateTargetError);
  EXPECT_THROW(train_probe(x, {"a", "b"}), ContractError);
  EXPECT_THROW(train_probe(x, {"a", "b", "a", "z"}, {}, {"a", "b"}), LabelError);
  auto p = fit_probe_at(x, {"a", "b", "a", "b"}, 3, Aggregation::sum, "t", {});
  EXPECT_THROW(evaluate_probe(p, x, 2, Aggregation::sum, {"a", "b", "a", "b"}),
               LayerMismatchError);
}

TEST(TrainProbe, PersistedProbePredictsIdentically) {
  std::mt19937_64 rng(13);
  auto data = clusters(rng, 30, 3.0);
  auto p = fit_probe_at(data.x, data.y, 1, Aggregation::norm_sum, "train", {});
  auto back = probe_from_json(nlohmann::json::parse(probe_to_json(p).dump()));
  EXPECT_EQ(back.classes, p.classes);
  EXPECT_EQ(back.weights, p.weights);
  EXPECT_EQ(back.centering.id(), p.centering.id());
  for (Eigen::Index i = 0; i < data.x.rows(); ++i)
    EXPECT_EQ(back.predict_one(data.x.row(i).transpose()), p.predict_one(data.x.row(i).transpose()));
}

TEST(LayerSweep, PlantedModelReachesCeiling) {
  PlantedModel model;
  auto train = planted_corpus(Split::train);
  auto test = planted_corpus(Split::test);
  for (auto kind : {LabelKind::tense, LabelKind::aspect}) {
    auto res = layer_sweep(model, train, &test, kind, {Aggregation::norm_sum}, {});
    EXPECT_EQ(res.cells.size(), 7u);
    EXPECT_DOUBLE_EQ(res.best_test_report.macro_f1, 1.0);
    // Ties resolve to the earliest layer.
    EXPECT_EQ(res.cells[res.best].layer, 0);
  }
}

TEST(LabelOutput, PlantedSentences) {
  PlantedModel model;
  auto train = planted_corpus(Split::train);
  auto t = layer_sweep(model, train, nullptr, LabelKind::tense, {Aggregation::norm_sum}, {});
  auto a = layer_sweep(model, train, nullptr, LabelKind::aspect, {Aggregation::norm_sum}, {});
  auto labels = label_output("Paul will have been driving her car.", t.best_probe, a.best_probe,
                             model);
  EXPECT_EQ(labels.tense, "future");
  EXPECT_EQ(labels.aspect, "perfect_progressive");
  EXPECT_TRUE(label_output("   ", t.best_probe, a.best_probe, model).tense.empty());
}
