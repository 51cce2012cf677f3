#include <random>

#include <benchmark/benchmark.h>

#include "gramsteer/evaluation.hpp"
#include "gramsteer/geometry.hpp"
#include "gramsteer/model.hpp"
#include "gramsteer/planted_model.hpp"
#include "gramsteer/probing.hpp"
#include "gramsteer/steering.hpp"

using namespace gramsteer;

namespace {

Matrix random_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
  return m;
}

void BM_class_stats_and_direction(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto d = state.range(0);
  Matrix rows = random_rows(rng, 4 * d, d);
  rows.col(0).array() += 3.0;
  for (auto _ : state) {
    auto dir = estimate_direction(class_stats(rows));
    benchmark::DoNotOptimize(dir.unit.data());
  }
}
BENCHMARK(BM_class_stats_and_direction)->Arg(48)->Arg(256)->Arg(512);

void BM_train_probe(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto n = state.range(0);
  Matrix x = random_rows(rng, n, 64);
  std::vector<std::string> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, i % 4) += 2.0;
    y.push_back(std::to_string(i % 4));
  }
  for (auto _ : state) {
    auto p = train_probe(x, y);
    benchmark::DoNotOptimize(p.weights.data());
  }
}
BENCHMARK(BM_train_probe)->Arg(500)->Arg(5000);

void BM_planted_generation(benchmark::State& state) {
  PlantedModel model;
  const std::string prompt =
      "She has written the letter. \\\\ She has written the letter.\n\n"
      "Paul has been seeing the bird. \\\\";
  for (auto _ : state) {
    auto g = generate_greedy(model, prompt, 12);
    benchmark::DoNotOptimize(g.text.data());
  }
}
BENCHMARK(BM_planted_generation);

void BM_steered_generation(benchmark::State& state) {
  PlantedModel model;
  SteeringPlan plan;
  plan.layer = 2;
  plan.alpha = 8.0;
  Vector t = model.planted_direction("future");
  plan.target = {t, t, "future", 2};
  for (auto _ : state) {
    auto out = steered_generate(model, "Write a sentence:", plan, 12);
    benchmark::DoNotOptimize(out.text.data());
  }
}
BENCHMARK(BM_steered_generation);

void BM_ngram_stats(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += "the cat number " + std::to_string(i % 37) + " sat ";
  for (auto _ : state) benchmark::DoNotOptimize(ngram_stats(text));
}
BENCHMARK(BM_ngram_stats)->Arg(16)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
