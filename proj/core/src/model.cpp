#include "gramsteer/model.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/planted_model.hpp"

namespace gramsteer {

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  auto toks = render(ids);
  std::string out;
  for (const auto& t : toks) {
    out.resize(t.begin, ' ');
    out += t.text;
  }
  return out;
}

std::string_view to_string(Phase p) { return p == Phase::prompt ? "prompt" : "generation"; }

void apply_hook(const InterventionHook& hook, Phase phase, std::size_t index, std::size_t step,
                Vector& h) {
  PositionContext ctx{phase, index, step, std::nullopt};
  if (index < hook.tags.size()) ctx.tag = hook.tags[index];
  if (!hook.predicate || !hook.predicate(ctx)) return;
  Vector out = hook.transform(h);
  if (out.size() != h.size())
    throw ContractError("hook transform returned dimension " + std::to_string(out.size()) +
                        ", expected " + std::to_string(h.size()));
  h = std::move(out);
}

DecodeState CausalModel::start() const {
  DecodeState s;
  s.states.resize(static_cast<std::size_t>(layer_count()) + 1);
  return s;
}

LayerActivations activations_of(const CausalModel& model, const DecodeState& state) {
  LayerActivations out;
  const auto n = state.ids.size();
  const int d = model.hidden_size();
  for (const auto& layer : state.states) {
    Matrix m(d, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) m.col(static_cast<Eigen::Index>(i)) = layer[i];
    out.states.push_back(std::move(m));
  }
  for (int id : state.ids) out.token_texts.push_back(model.tokenizer().piece(id));
  return out;
}

LayerActivations capture(const CausalModel& model, std::string_view prompt) {
  auto tokens = model.tokenizer().encode(prompt);
  if (tokens.empty()) throw ContractError("prompt tokenizes to zero tokens");
  if (tokens.size() > model.context_length())
    throw InputTooLongError("prompt has " + std::to_string(tokens.size()) +
                            " tokens, context length is " +
                            std::to_string(model.context_length()));
  std::vector<int> ids;
  for (const auto& t : tokens) ids.push_back(t.id);
  auto state = model.start();
  model.extend(state, ids, Phase::prompt, 0, nullptr);
  auto acts = activations_of(model, state);
  for (std::size_t i = 0; i < tokens.size(); ++i) acts.token_texts[i] = tokens[i].text;
  return acts;
}

int argmax(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Vector log_softmax(const Vector& logits) {
  double m = logits.maxCoeff();
  double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

GenerationResult generate_greedy(const CausalModel& model, std::string_view prompt,
                                 std::size_t max_new_tokens, const InterventionHook* hook) {
  if (max_new_tokens < 1) throw ContractError("max_new_tokens must be at least 1");
  const auto& tok = model.tokenizer();
  GenerationResult out;
  out.prompt_tokens = tok.encode(prompt);
  if (out.prompt_tokens.empty()) throw ContractError("prompt tokenizes to zero tokens");
  if (out.prompt_tokens.size() + max_new_tokens > model.context_length())
    throw InputTooLongError("prompt plus budget exceeds the context length");
  std::vector<int> ids;
  for (const auto& t : out.prompt_tokens) ids.push_back(t.id);
  auto state = model.start();
  Vector logits = model.extend(state, ids, Phase::prompt, 0, hook);
  for (std::size_t step = 1; step <= max_new_tokens; ++step) {
    int next = argmax(logits);
    if (next == tok.eos_id()) break;
    out.generated_ids.push_back(next);
    logits = model.extend(state, {next}, Phase::generation, step, hook);
  }
  out.generated_tokens = tok.render(out.generated_ids);
  out.text = tok.decode(out.generated_ids);
  out.activations = activations_of(model, state);
  for (std::size_t i = 0; i < out.prompt_tokens.size(); ++i)
    out.activations.token_texts[i] = out.prompt_tokens[i].text;
  return out;
}

double sequence_perplexity(const CausalModel& model, std::string_view text) {
  auto tokens = model.tokenizer().encode(text);
  if (tokens.empty()) throw ContractError("perplexity of an empty sequence");
  if (tokens.size() > model.context_length())
    throw InputTooLongError("text exceeds the context length");
  auto state = model.start();
  Vector logits = model.initial_logits();
  double nll = 0.0;
  for (const auto& t : tokens) {
    nll -= log_softmax(logits)[t.id];
    logits = model.extend(state, {t.id}, Phase::prompt, 0, nullptr);
  }
  return std::exp(nll / static_cast<double>(tokens.size()));
}

namespace {
std::map<std::string, ModelFactory>& registry() {
  static std::map<std::string, ModelFactory> r;
  return r;
}
std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void register_model_kind(const std::string& kind, ModelFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[kind] = std::move(factory);
}

std::unique_ptr<CausalModel> make_model(const nlohmann::json& spec) {
  std::string kind = spec.value("kind", "planted");
  if (kind == "planted") return std::make_unique<PlantedModel>(planted_config_from_json(spec));
  std::lock_guard lock(registry_mutex());
  auto it = registry().find(kind);
  if (it == registry().end())
    throw ConfigError("no model adapter registered for kind '" + kind +
                      "'; only 'planted' ships with the toolkit");
  return it->second(spec);
}

}  // namespace gramsteer
