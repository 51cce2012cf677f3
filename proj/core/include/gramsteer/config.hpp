#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gramsteer {

inline constexpr const char* kCheckpointEnv = "GRAMSTEER_CHECKPOINT_DIR";

struct RunConfig {
  nlohmann::json model = {{"kind", "planted"}};
  std::string train_corpus;
  std::string test_corpus;
  std::string tagger = "lexicon";
  std::string tagger_path;
  bool filter_single_verb = false;
  // Per-class downsampling for the probe/direction training split; 0 keeps all.
  std::size_t downsample_tense = 0;
  std::size_t downsample_aspect = 0;
  std::string output_dir = "run";

  std::vector<int> layers;  // empty means every layer
  std::vector<std::string> strategies{"norm_sum"};
  std::string aggregation = "norm_sum";  // used by directions and steering

  double probe_l2 = 1e-4;
  double probe_tolerance = 1e-4;
  int probe_max_iterations = 500;
  double holdout_fraction = 0.2;

  double pinv_cutoff = 1e-6;

  std::string task = "random_sentence";
  std::string target_kind = "tense";
  std::string target = "future";
  std::optional<std::string> source;
  std::string method = "TA";
  std::string schedule = "final_token_every_step";
  std::vector<int> steer_layers;
  std::vector<double> alphas{0, 5, 7, 10, 15, 20, 25, 30, 35, 40};
  std::size_t max_new_tokens = 24;
  std::optional<nlohmann::json> mapping;  // {"label", "from", "to"}
  std::string similarity = "lexical_overlap";
  std::string similarity_arg;
  bool perplexity = true;

  std::uint64_t seed_downsample = 1;
  std::uint64_t seed_holdout = 13;
  std::uint64_t seed_few_shot = 5;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // SHA-256 of the canonical (sorted-key, compact) serialization.
  std::string hash() const;
};

RunConfig load_config(const std::string& path);

// Applies "a.b.c=value" to a JSON document; value is parsed as JSON when it
// parses, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// Resolves model["checkpoint"] against GRAMSTEER_CHECKPOINT_DIR when relative.
nlohmann::json resolve_model_spec(const nlohmann::json& model);

}  // namespace gramsteer
