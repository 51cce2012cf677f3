#pragma once

#include <map>
#include <string>
#include <vector>

#include "gramsteer/corpus.hpp"
#include "gramsteer/model.hpp"

namespace gramsteer {

enum class Aggregation { sum, norm_sum, mean, final_token };

std::string_view to_string(Aggregation a);
std::optional<Aggregation> parse_aggregation(std::string_view s);
inline constexpr std::array<Aggregation, 4> all_aggregations{
    Aggregation::norm_sum, Aggregation::sum, Aggregation::mean, Aggregation::final_token};

struct AggregatedRep {
  Vector vector;
  int layer = 0;
  Aggregation strategy = Aggregation::norm_sum;
  std::size_t token_count = 0;
};

AggregatedRep aggregate(const LayerActivations& states, int layer, Aggregation strategy);

struct CenteringStats {
  Vector mean;
  int layer = 0;
  Aggregation strategy = Aggregation::norm_sum;
  std::string fitted_on;

  // Stable identifier: corpus id plus layer and strategy.
  std::string id() const;
  Vector apply(const Vector& v) const { return v - mean; }
  Matrix apply_rows(const Matrix& rows) const;  // rows are samples
};

CenteringStats fit_centering(const std::vector<AggregatedRep>& reps, const std::string& corpus_id);
CenteringStats fit_centering_rows(const Matrix& rows, int layer, Aggregation strategy,
                                  const std::string& corpus_id);

// Per-sentence features of one corpus, one matrix per (layer, strategy), with
// samples as rows.
struct FeatureSet {
  std::map<std::pair<int, Aggregation>, Matrix> matrices;
  std::vector<std::size_t> token_counts;
  std::string corpus_id;
  const Matrix& at(int layer, Aggregation s) const;
};

FeatureSet extract_features(const CausalModel& model, const LabeledCorpus& corpus,
                            const std::vector<int>& layers,
                            const std::vector<Aggregation>& strategies);

struct NormProfile {
  std::vector<double> mean_final_norm;                        // per layer
  std::map<std::string, std::vector<double>> mean_projection; // per direction name, per layer
};

// `directions[name][layer]` is a unit direction; layers without one are NaN.
NormProfile norm_profile(const CausalModel& model, const LabeledCorpus& corpus,
                         const std::map<std::string, std::map<int, Vector>>& directions);
NormProfile norm_profile(const std::vector<LayerActivations>& captures,
                         const std::map<std::string, std::map<int, Vector>>& directions);

}  // namespace gramsteer
