#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gramsteer/pos_tagger.hpp"
#include "gramsteer/types.hpp"

namespace gramsteer {

struct Token {
  int id = 0;
  std::string text;
  std::size_t begin = 0;  // byte span in the text the token was read from
  std::size_t end = 0;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<Token> encode(std::string_view text) const = 0;
  // Tokens with spans into the text they render to, i.e. the continuation
  // that would follow a prompt.
  virtual std::vector<Token> render(const std::vector<int>& ids) const = 0;
  std::string decode(const std::vector<int>& ids) const;
  virtual std::string piece(int id) const = 0;
  virtual int vocab_size() const = 0;
  virtual int eos_id() const = 0;
};

struct LayerActivations {
  // states[l] is d x n; column i is h_i^l. Layer 0 is the embedding output.
  std::vector<Matrix> states;
  std::vector<std::string> token_texts;

  int layer_count() const { return static_cast<int>(states.size()); }
  std::size_t token_count() const { return token_texts.size(); }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states[0].rows()); }
};

enum class Phase { prompt, generation };
std::string_view to_string(Phase p);

struct PositionContext {
  Phase phase = Phase::prompt;
  std::size_t index = 0;  // absolute position in the sequence
  std::size_t step = 0;   // 0 for the prompt pass, k for the k-th generated token
  std::optional<PosTag> tag;
};

struct InterventionHook {
  int layer = 0;
  std::function<bool(const PositionContext&)> predicate;
  std::function<Vector(const Vector&)> transform;
  // Optional tag per absolute position, handed to the predicate.
  std::vector<std::optional<PosTag>> tags;
};

// Applies the hook to one residual vector if its predicate fires. Throws
// ContractError when the transform changes the dimension.
void apply_hook(const InterventionHook& hook, Phase phase, std::size_t index, std::size_t step,
                Vector& h);

// Incremental decoding state: cached per-layer states of every position so
// far, so that interventions written into earlier positions persist.
struct DecodeState {
  std::vector<int> ids;
  std::vector<std::vector<Vector>> states;  // [layer][position]
  std::shared_ptr<void> cache;              // model private
};

class CausalModel {
 public:
  virtual ~CausalModel() = default;
  virtual const Tokenizer& tokenizer() const = 0;
  // Number of blocks; captures hold layer_count() + 1 states per token.
  virtual int layer_count() const = 0;
  virtual int hidden_size() const = 0;
  virtual std::size_t context_length() const = 0;
  virtual std::string id() const = 0;

  virtual DecodeState start() const;
  // Runs the model over `ids` appended to `state` and returns the logits for
  // the token after the last one. The hook rewrites the output of its layer
  // at new positions before later blocks read it.
  virtual Vector extend(DecodeState& state, const std::vector<int>& ids, Phase phase,
                        std::size_t step, const InterventionHook* hook) const = 0;
  // Next-token logits with no context (implicit beginning of sequence).
  virtual Vector initial_logits() const = 0;
};

LayerActivations capture(const CausalModel& model, std::string_view prompt);
LayerActivations activations_of(const CausalModel& model, const DecodeState& state);

struct GenerationResult {
  std::string text;  // generated continuation only
  std::vector<Token> prompt_tokens;
  std::vector<int> generated_ids;
  std::vector<Token> generated_tokens;  // spans into `text`
  LayerActivations activations;         // prompt + generated positions
};

GenerationResult generate_greedy(const CausalModel& model, std::string_view prompt,
                                 std::size_t max_new_tokens,
                                 const InterventionHook* hook = nullptr);

double sequence_perplexity(const CausalModel& model, std::string_view text);

Vector log_softmax(const Vector& logits);
int argmax(const Vector& v);

using ModelFactory = std::function<std::unique_ptr<CausalModel>(const nlohmann::json& spec)>;
// Adapters for real checkpoints are registered by the embedding program under
// a kind name; "planted" is always available.
void register_model_kind(const std::string& kind, ModelFactory factory);
std::unique_ptr<CausalModel> make_model(const nlohmann::json& spec);

}  // namespace gramsteer
