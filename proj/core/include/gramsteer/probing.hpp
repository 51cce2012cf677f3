#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gramsteer/representation.hpp"

namespace gramsteer {

struct ProbeOptions {
  double l2 = 1e-4;
  double tolerance = 1e-4;
  int max_iterations = 500;
  int memory = 10;
};

struct Probe {
  Matrix weights;  // classes x d
  Vector bias;
  std::vector<std::string> classes;
  int layer = 0;
  Aggregation strategy = Aggregation::norm_sum;
  CenteringStats centering;
  int iterations = 0;
  bool converged = false;

  // `centered` rows are samples already passed through `centering`.
  std::vector<int> predict_indices(const Matrix& centered) const;
  std::vector<std::string> predict(const Matrix& centered) const;
  std::string predict_one(const Vector& raw) const;  // applies centering
};

struct ProbeReport {
  std::vector<std::string> classes;
  std::map<std::string, double> f1;
  std::map<std::string, std::size_t> support;
  double macro_f1 = 0.0;
  // confusion[truth][prediction]
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
};

// Multinomial logistic regression with an L2 penalty on the weights, fitted
// by L-BFGS from a zero start. Deterministic.
Probe train_probe(const Matrix& centered, const std::vector<std::string>& labels,
                  const ProbeOptions& options = {}, std::vector<std::string> classes = {});

// F1 per class over the union of true and predicted labels; classes never
// predicted score 0.
ProbeReport f1_report(const std::vector<std::string>& truth,
                      const std::vector<std::string>& predicted);

ProbeReport evaluate_probe(const Probe& probe, const Matrix& raw_rows, int layer,
                           Aggregation strategy, const std::vector<std::string>& labels);

struct SweepCell {
  int layer = 0;
  Aggregation strategy = Aggregation::norm_sum;
  double holdout_macro_f1 = 0.0;
  double test_macro_f1 = -1.0;  // negative when no test split was given
};

struct SweepResult {
  LabelKind target = LabelKind::tense;
  std::vector<SweepCell> cells;
  std::size_t best = 0;
  Probe best_probe;  // refit on the full train split at the best cell
  ProbeReport best_test_report;
};

// Scores every (layer, strategy) cell by macro F1 on a seeded held-out slice
// of the train split. Ties go to the lower layer, then to the earlier
// strategy in `strategies`.
SweepResult layer_sweep(const FeatureSet& train, const std::vector<std::string>& train_labels,
                        const FeatureSet* test, const std::vector<std::string>& test_labels,
                        LabelKind target, const std::vector<int>& layers,
                        const std::vector<Aggregation>& strategies, const ProbeOptions& options,
                        double holdout_fraction = 0.2, std::uint64_t seed = 13);

SweepResult layer_sweep(const CausalModel& model, const LabeledCorpus& train,
                        const LabeledCorpus* test, LabelKind target,
                        const std::vector<Aggregation>& strategies, const ProbeOptions& options,
                        double holdout_fraction = 0.2, std::uint64_t seed = 13);

// Fits centering on all train rows and a probe on the centered rows.
Probe fit_probe_at(const Matrix& train_rows, const std::vector<std::string>& labels, int layer,
                   Aggregation strategy, const std::string& corpus_id,
                   const ProbeOptions& options, const std::vector<std::string>& classes = {});

std::string label_with(const Probe& probe, const LayerActivations& acts);

struct OutputLabels {
  std::string tense;
  std::string aspect;
};
// Labels a generated text from a fresh, unsteered forward pass. Empty text
// yields empty labels.
OutputLabels label_output(const std::string& text, const Probe& tense_probe,
                          const Probe& aspect_probe, const CausalModel& model);

}  // namespace gramsteer
