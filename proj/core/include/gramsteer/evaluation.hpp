#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gramsteer/model.hpp"
#include "gramsteer/pos_tagger.hpp"
#include "gramsteer/probing.hpp"
#include "gramsteer/similarity.hpp"
#include "gramsteer/steering.hpp"
#include "gramsteer/tasks.hpp"

namespace gramsteer {

// Whitespace split, punctuation stripped, lowercased; empty words dropped.
std::vector<std::string> ngram_words(std::string_view text);

struct NgramStats {
  double unigram_rate = 0.0;
  double bigram_rate = 0.0;
  double trigram_rate = 0.0;
  double fourgram_rate = 0.0;
  double diversity = 1.0;  // product of (1 - rate) for n = 2, 3, 4
};

double repetition_rate(const std::vector<std::string>& words, std::size_t n);
NgramStats ngram_stats(std::string_view text);

struct DegenerationThresholds {
  double unigram = 0.25;
  double bigram = 0.3;
  double fourgram = 0.2;
  double diversity = 0.5;
};

enum class DegenerationReason { no_verb, unigram_rep, bigram_rep, fourgram_rep, low_diversity };
std::string_view to_string(DegenerationReason r);

struct DegenerationVerdict {
  bool is_degenerate = false;
  std::set<DegenerationReason> reasons;
  NgramStats stats;
};

DegenerationVerdict detect_degenerate(std::string_view text, const PosTagger& tagger,
                                      const DegenerationThresholds& thresholds = {});

struct EvaluationRecord {
  std::string sample_id;
  std::string prompt;
  std::string steered;
  std::string unsteered;
  OutputLabels steered_labels;
  OutputLabels unsteered_labels;
  bool in_S = false;
  bool in_D = false;
  bool in_SF = false;
  std::vector<std::string> reasons;
  std::optional<double> steered_perplexity;
  std::optional<double> unsteered_perplexity;
  std::optional<double> similarity;
  nlohmann::json to_json() const;
  static EvaluationRecord from_json(const nlohmann::json& j);
};

// Fills the S / D / S_F flags from the stored labels and verdict.
void mark_record(EvaluationRecord& r, LabelKind target_kind, const std::string& target_value,
                 const DegenerationVerdict& verdict);

struct Metrics {
  double steering_success = 0.0;
  double degenerate_rate = 0.0;
  double efficacy = 0.0;
  double selectivity = 0.0;
};

Metrics compute_metrics(const std::vector<EvaluationRecord>& records, std::size_t N);

double relative_perplexity_change(double steered_ppl, double unsteered_ppl);
double relative_perplexity_change(const std::string& steered, const std::string& unsteered,
                                  const CausalModel& model);

struct TopicShift {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

// Mean and population standard deviation over successfully steered pairs;
// nullopt when there are none.
std::optional<TopicShift> topic_shift(
    const std::vector<std::pair<std::string, std::string>>& steered_pairs,
    const Similarity& similarity);

// The answer a model gives to a prompt: the first non-empty line, trimmed.
std::string answer_text(std::string_view generated);

struct GridSpec {
  TaskKind task = TaskKind::random_sentence;
  LabelKind target_kind = LabelKind::tense;
  std::string target_value;
  std::optional<std::string> source_value;  // needed by TA_SS / TA_PROJ_SS
  SteeringMethod method = SteeringMethod::TA;
  ScheduleMode schedule = ScheduleMode::final_token_every_step;
  std::vector<int> layers;
  std::vector<double> alphas;
  std::size_t max_new_tokens = 24;
  bool perplexity = true;
};

struct GridCell {
  int layer = 0;
  double alpha = 0.0;
  std::optional<Metrics> metrics;
  std::optional<double> perplexity_change;  // mean over non-empty pairs
  std::optional<TopicShift> topic;
  std::vector<EvaluationRecord> records;
  std::string error;
};

struct GridResult {
  GridSpec spec;
  std::size_t N = 0;  // samples surviving validate_unsteered
  std::vector<GridCell> cells;
  std::optional<std::size_t> best;
};

// Highest efficacy; ties go to the lower layer, then the lower alpha.
std::optional<std::size_t> best_cell(const std::vector<GridCell>& cells);

struct GridContext {
  const CausalModel* model = nullptr;
  const PosTagger* tagger = nullptr;
  const Probe* tense_probe = nullptr;
  const Probe* aspect_probe = nullptr;
  const Similarity* similarity = nullptr;
  // Unit direction for (layer, feature value); may throw.
  std::function<ConceptDirection(int, const std::string&)> direction;
  // Called after every finished cell, e.g. for atomic per-cell persistence.
  std::function<void(const GridCell&)> on_cell;
};

GridResult grid_search(const GridContext& ctx, const std::vector<TaskPrompt>& prompts,
                       const GridSpec& spec);

nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json cell_to_json(const GridCell& c, bool with_records = true);
nlohmann::json grid_to_json(const GridResult& g, bool with_records = true);

}  // namespace gramsteer
