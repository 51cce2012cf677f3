#include "gramsteer/representation.hpp"

#include <cmath>
#include <limits>

#include "gramsteer/error.hpp"

namespace gramsteer {

namespace {
constexpr std::array<std::string_view, 4> kAggNames{"sum", "norm_sum", "mean", "final_token"};
}

std::string_view to_string(Aggregation a) { return kAggNames[static_cast<std::size_t>(a)]; }

std::optional<Aggregation> parse_aggregation(std::string_view s) {
  for (std::size_t i = 0; i < kAggNames.size(); ++i)
    if (kAggNames[i] == s) return static_cast<Aggregation>(i);
  return std::nullopt;
}

AggregatedRep aggregate(const LayerActivations& acts, int layer, Aggregation strategy) {
  if (layer < 0 || layer >= acts.layer_count())
    throw LayerMismatchError("layer " + std::to_string(layer) + " out of range [0, " +
                             std::to_string(acts.layer_count() - 1) + "]");
  const Matrix& m = acts.states[static_cast<std::size_t>(layer)];
  const auto n = static_cast<std::size_t>(m.cols());
  if (n == 0) throw ContractError("cannot aggregate an empty sequence");
  AggregatedRep rep;
  rep.layer = layer;
  rep.strategy = strategy;
  rep.token_count = n;
  switch (strategy) {
    case Aggregation::sum:
      rep.vector = m.rowwise().sum();
      break;
    case Aggregation::norm_sum:
      rep.vector = m.rowwise().sum() / std::sqrt(static_cast<double>(n));
      break;
    case Aggregation::mean:
      rep.vector = m.rowwise().sum() / static_cast<double>(n);
      break;
    case Aggregation::final_token:
      rep.vector = m.col(m.cols() - 1);
      break;
  }
  return rep;
}

std::string CenteringStats::id() const {
  return fitted_on + "@L" + std::to_string(layer) + "/" + std::string(to_string(strategy));
}

Matrix CenteringStats::apply_rows(const Matrix& rows) const {
  return rows.rowwise() - mean.transpose();
}

CenteringStats fit_centering(const std::vector<AggregatedRep>& reps, const std::string& corpus_id) {
  if (reps.empty()) throw ContractError("centering needs at least one representation");
  for (const auto& r : reps)
    if (r.layer != reps[0].layer || r.strategy != reps[0].strategy)
      throw ContractError("centering over mixed layers or strategies");
  Vector sum = Vector::Zero(reps[0].vector.size());
  for (const auto& r : reps) sum += r.vector;
  return CenteringStats{sum / static_cast<double>(reps.size()), reps[0].layer, reps[0].strategy,
                        corpus_id};
}

CenteringStats fit_centering_rows(const Matrix& rows, int layer, Aggregation strategy,
                                  const std::string& corpus_id) {
  if (rows.rows() == 0) throw ContractError("centering needs at least one representation");
  return CenteringStats{rows.colwise().mean().transpose(), layer, strategy, corpus_id};
}

const Matrix& FeatureSet::at(int layer, Aggregation s) const {
  auto it = matrices.find({layer, s});
  if (it == matrices.end())
    throw LayerMismatchError("no features for layer " + std::to_string(layer) + " / " +
                             std::string(to_string(s)));
  return it->second;
}

FeatureSet extract_features(const CausalModel& model, const LabeledCorpus& corpus,
                            const std::vector<int>& layers,
                            const std::vector<Aggregation>& strategies) {
  FeatureSet fs;
  fs.corpus_id = corpus.id();
  const auto n = static_cast<Eigen::Index>(corpus.size());
  for (int l : layers)
    for (auto s : strategies) fs.matrices[{l, s}] = Matrix(n, model.hidden_size());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto acts = capture(model, corpus[static_cast<std::size_t>(i)].text);
    fs.token_counts.push_back(acts.token_count());
    for (int l : layers)
      for (auto s : strategies) fs.matrices[{l, s}].row(i) = aggregate(acts, l, s).vector;
  }
  return fs;
}

NormProfile norm_profile(const std::vector<LayerActivations>& captures,
                         const std::map<std::string, std::map<int, Vector>>& directions) {
  NormProfile p;
  if (captures.empty()) return p;
  const int layers = captures[0].layer_count();
  p.mean_final_norm.assign(static_cast<std::size_t>(layers), 0.0);
  for (const auto& [name, per_layer] : directions)
    p.mean_projection[name].assign(static_cast<std::size_t>(layers),
                                   std::numeric_limits<double>::quiet_NaN());
  for (int l = 0; l < layers; ++l) {
    double norm_sum = 0.0;
    std::map<std::string, double> proj;
    for (const auto& acts : captures) {
      const Matrix& m = acts.states[static_cast<std::size_t>(l)];
      Vector last = m.col(m.cols() - 1);
      norm_sum += last.norm();
      for (const auto& [name, per_layer] : directions) {
        auto it = per_layer.find(l);
        if (it != per_layer.end()) proj[name] += std::abs(last.dot(it->second.normalized()));
      }
    }
    const double n = static_cast<double>(captures.size());
    p.mean_final_norm[static_cast<std::size_t>(l)] = norm_sum / n;
    for (const auto& [name, total] : proj) p.mean_projection[name][static_cast<std::size_t>(l)] = total / n;
  }
  return p;
}

NormProfile norm_profile(const CausalModel& model, const LabeledCorpus& corpus,
                         const std::map<std::string, std::map<int, Vector>>& directions) {
  std::vector<LayerActivations> caps;
  caps.reserve(corpus.size());
  for (const auto& s : corpus.sentences()) caps.push_back(capture(model, s.text));
  return norm_profile(caps, directions);
}

}  // namespace gramsteer
