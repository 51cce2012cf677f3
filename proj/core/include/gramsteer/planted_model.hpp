#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gramsteer/corpus.hpp"
#include "gramsteer/model.hpp"

namespace gramsteer {

// Toy causal model with known tense and aspect directions.
//
// Tokens are phrases: a subject ("The teacher"), a whole verb group
// ("will have been seeing"), an object ("the bird"), punctuation and the
// instruction words of the random-sentence prompts. Every verb-group token
// embeds (1 + j_t) u_tense + (1 + j_a) u_aspect plus a lemma vector in the
// lexical complement. The jitters j follow orthogonal sign patterns over
// lemmas, so within a class they are uncorrelated with lemma, with the other
// property and with each other.
//
// Each block adds the causal mean of the planted coordinates within the
// current segment (a separator "\\" or ":" starts a new one) and scales the
// residual by `growth`. Block 1 also feeds the answer segment the previous
// segment's coordinates plus the mean right-minus-left difference of earlier
// "a \\ b" lines, which is how few-shot repetition and translation work.
//
// Decoding follows a fixed grammar: subject, verb group, object, ".", end.
// The verb-group cell is read out from the last layer's planted coordinates.
struct PlantedConfig {
  int dim = 48;
  int layers = 6;
  double growth = 1.3;
  double mix = 1.0;
  double jitter = 0.1;
  double prior = 0.3;
  double sharpness = 8.0;
  double plan_bonus = 20.0;
  double off_grammar = 30.0;
  std::uint64_t seed = 7;
  std::size_t context_length = 512;
};

PlantedConfig planted_config_from_json(const nlohmann::json& spec);
nlohmann::json planted_config_to_json(const PlantedConfig& cfg);

class PlantedTokenizer : public Tokenizer {
 public:
  explicit PlantedTokenizer(std::vector<std::string> pieces);
  std::vector<Token> encode(std::string_view text) const override;
  std::vector<Token> render(const std::vector<int>& ids) const override;
  std::string piece(int id) const override { return pieces_.at(static_cast<std::size_t>(id)); }
  int vocab_size() const override { return static_cast<int>(pieces_.size()); }
  int eos_id() const override { return 0; }
  int unk_id() const { return 1; }
  int id_of(const std::string& piece) const;

 private:
  std::vector<std::string> pieces_;
  std::map<std::string, int> index_;
  std::vector<int> by_length_;
};

class PlantedModel : public CausalModel {
 public:
  explicit PlantedModel(PlantedConfig cfg = {});

  const Tokenizer& tokenizer() const override { return *tokenizer_; }
  int layer_count() const override { return cfg_.layers; }
  int hidden_size() const override { return cfg_.dim; }
  std::size_t context_length() const override { return cfg_.context_length; }
  std::string id() const override;

  Vector extend(DecodeState& state, const std::vector<int>& ids, Phase phase, std::size_t step,
                const InterventionHook* hook) const override;
  Vector initial_logits() const override;

  const PlantedConfig& config() const { return cfg_; }
  // Ground-truth direction for a tense or aspect value ("past", "perfect", ...).
  Vector planted_direction(const std::string& value) const;
  const Matrix& planted_basis() const { return basis_; }  // d x 7, tense then aspect

  static const std::vector<std::string>& train_subjects();
  static const std::vector<std::string>& test_subjects();
  static const std::vector<std::string>& lemmas();
  static std::string object_of(std::size_t lemma);
  static std::string verb_group(std::size_t lemma, Tense t, Aspect a);

 private:
  struct Cache;
  enum class Kind { special, subject, object, verb_group, instruction, unknown };
  struct PieceInfo {
    Kind kind = Kind::special;
    int lemma = -1;
    int subject = -1;
    Tense tense = Tense::present;
    Aspect aspect = Aspect::simple;
  };

  Vector logits_at(const DecodeState& state, const Cache& cache, std::size_t i) const;
  Vector grammar_logits(const std::vector<int>& ids, std::size_t line_start, std::size_t i,
                        const Vector& coords) const;
  Vector induction_offset(const DecodeState& state, const Cache& cache, std::size_t i) const;

  PlantedConfig cfg_;
  std::unique_ptr<PlantedTokenizer> tokenizer_;
  std::vector<PieceInfo> info_;
  Matrix basis_;       // d x 7
  Matrix embeddings_;  // d x V
  std::vector<int> subject_ids_;
  std::vector<int> object_ids_;
  std::vector<std::vector<int>> vg_ids_;  // [lemma][tense * 4 + aspect]
  int sep_id_ = 0;
  int colon_id_ = 0;
  int newline_id_ = 0;
  int period_id_ = 0;
};

// Full factorial corpus over the planted vocabulary: the train split uses the
// six train subjects (864 sentences), the test split the two held-out
// subjects (288 sentences).
LabeledCorpus planted_corpus(Split split);

}  // namespace gramsteer
