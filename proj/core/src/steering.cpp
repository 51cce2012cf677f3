#include "gramsteer/steering.hpp"

#include <array>
#include <cmath>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"

namespace gramsteer {

namespace {
constexpr std::array<std::string_view, 3> kMethodNames{"TA", "TA_SS", "TA_PROJ_SS"};
constexpr std::array<std::string_view, 8> kModeNames{
    "final_token_every_step", "prompt_all_verb_tokens", "prompt_last_verb_token",
    "prompt_sentence_end",    "prompt_final_token",     "gen_token_before_verb",
    "gen_first_verb_token",   "gen_all_verb_tokens"};

bool overlaps(const Token& t, const Word& w, std::size_t offset) {
  return t.begin < w.end + offset && w.begin + offset < t.end;
}

// Indices (into `tokens`) of tokens overlapping AUX/VERB words of `text`.
// `offset` is where `text` starts within the string the tokens index.
std::vector<std::size_t> verbal_tokens(const PosTagger& tagger, std::string_view text,
                                       std::size_t offset, const std::vector<Token>& tokens) {
  std::vector<std::size_t> out;
  auto tagged = tagger.tag(text);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (const auto& tw : tagged) {
      if (is_verbal(tw.tag) && overlaps(tokens[t], tw.word, offset)) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}
}  // namespace

std::string_view to_string(SteeringMethod m) { return kMethodNames[static_cast<std::size_t>(m)]; }
std::optional<SteeringMethod> parse_method(std::string_view s) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i)
    if (kMethodNames[i] == s) return static_cast<SteeringMethod>(i);
  return std::nullopt;
}
std::string_view to_string(ScheduleMode m) { return kModeNames[static_cast<std::size_t>(m)]; }
std::optional<ScheduleMode> parse_schedule_mode(std::string_view s) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == s) return static_cast<ScheduleMode>(i);
  return std::nullopt;
}
bool is_verb_aware(ScheduleMode m) {
  return m == ScheduleMode::prompt_all_verb_tokens || m == ScheduleMode::prompt_last_verb_token ||
         m == ScheduleMode::gen_token_before_verb || m == ScheduleMode::gen_first_verb_token ||
         m == ScheduleMode::gen_all_verb_tokens;
}

void SteeringPlan::validate(int dim, int layers) const {
  if (!std::isfinite(alpha)) throw ContractError("steering factor must be finite");
  if (layer < 0 || layer > layers)
    throw LayerMismatchError("steering layer " + std::to_string(layer) + " outside [0, " +
                             std::to_string(layers) + "]");
  if (target.unit.size() != dim)
    throw ContractError("target direction has dimension " + std::to_string(target.unit.size()) +
                        ", model has " + std::to_string(dim));
  if (method == SteeringMethod::TA && source)
    throw ContractError("TA takes no source direction");
  if (method != SteeringMethod::TA) {
    if (!source) throw ContractError(std::string(to_string(method)) + " needs a source direction");
    if (source->unit.size() != dim) throw ContractError("source direction dimension mismatch");
  }
  if (is_verb_aware(schedule.mode) && !schedule.tagger)
    throw ContractError("schedule " + std::string(to_string(schedule.mode)) + " needs a tagger");
}

nlohmann::json SteeringPlan::to_json() const {
  nlohmann::json j{{"method", to_string(method)},
                   {"layer", layer},
                   {"alpha", alpha},
                   {"target", target.feature},
                   {"schedule", to_string(schedule.mode)}};
  j["source"] = source ? nlohmann::json(source->feature) : nlohmann::json(nullptr);
  return j;
}

Vector apply_TA(const Vector& h, const Vector& target_unit, double alpha) {
  return h + alpha * target_unit;
}

Vector apply_TA_SS(const Vector& h, const Vector& target_unit, const Vector& source_unit,
                   double alpha) {
  return h + alpha * target_unit - alpha * source_unit;
}

Vector apply_TA_ProjSS(const Vector& h, const Vector& target_unit, const Vector& source_unit,
                       double alpha) {
  return h + alpha * target_unit - h.dot(source_unit) * source_unit;
}

Vector apply_plan(const SteeringPlan& plan, const Vector& h) {
  Vector t = plan.target.unit.normalized();
  switch (plan.method) {
    case SteeringMethod::TA:
      return apply_TA(h, t, plan.alpha);
    case SteeringMethod::TA_SS:
      return apply_TA_SS(h, t, plan.source->unit.normalized(), plan.alpha);
    case SteeringMethod::TA_PROJ_SS:
      return apply_TA_ProjSS(h, t, plan.source->unit.normalized(), plan.alpha);
  }
  return h;
}

ResolvedSchedule resolve_schedule(const PositionSchedule& schedule, std::string_view prompt_text,
                                  const std::vector<Token>& prompt_tokens,
                                  std::string_view generated_text,
                                  const std::vector<Token>& generated_tokens) {
  ResolvedSchedule r;
  if (prompt_tokens.empty()) throw ContractError("schedule over an empty prompt");
  if (is_verb_aware(schedule.mode) && !schedule.tagger)
    throw ContractError("schedule " + std::string(to_string(schedule.mode)) + " needs a tagger");
  const std::size_t P = prompt_tokens.size();
  const std::size_t last = P - 1;

  // Query line: tokens starting after the last newline of the prompt.
  std::size_t line_offset = 0;
  if (auto nl = prompt_text.find_last_of('\n'); nl != std::string_view::npos) line_offset = nl + 1;
  std::size_t first_query_token = 0;
  while (first_query_token < P && prompt_tokens[first_query_token].begin < line_offset)
    ++first_query_token;
  std::vector<Token> query(prompt_tokens.begin() + static_cast<long>(first_query_token),
                           prompt_tokens.end());
  auto query_verbs = [&] {
    std::vector<std::size_t> out;
    for (auto t : verbal_tokens(*schedule.tagger, prompt_text.substr(line_offset), line_offset, query))
      out.push_back(first_query_token + t);
    return out;
  };
  auto gen_verbs = [&] {
    return verbal_tokens(*schedule.tagger, generated_text, 0, generated_tokens);
  };

  switch (schedule.mode) {
    case ScheduleMode::final_token_every_step:
      r.every_step_final = true;
      break;
    case ScheduleMode::prompt_final_token:
      r.prompt.insert(last);
      break;
    case ScheduleMode::prompt_all_verb_tokens:
      for (auto i : query_verbs()) r.prompt.insert(i);
      break;
    case ScheduleMode::prompt_last_verb_token: {
      auto v = query_verbs();
      if (!v.empty()) r.prompt.insert(v.back());
      break;
    }
    case ScheduleMode::prompt_sentence_end: {
      std::size_t pick = last;
      for (std::size_t i = last; i-- > first_query_token;) {
        const auto& t = prompt_tokens[i].text;
        if (t == "." || t == "!" || t == "?") {
          pick = i;
          break;
        }
      }
      r.prompt.insert(pick);
      break;
    }
    case ScheduleMode::gen_token_before_verb: {
      auto v = gen_verbs();
      if (!v.empty()) {
        if (v.front() == 0) r.prompt.insert(last);
        else r.generation.insert(P + v.front() - 1);
      }
      break;
    }
    case ScheduleMode::gen_first_verb_token: {
      auto v = gen_verbs();
      if (!v.empty()) r.generation.insert(P + v.front());
      break;
    }
    case ScheduleMode::gen_all_verb_tokens:
      for (auto i : gen_verbs()) r.generation.insert(P + i);
      break;
  }
  return r;
}

std::vector<SteerPosition> positions_for_step(const ResolvedSchedule& r, std::size_t step,
                                              std::size_t prompt_length,
                                              std::size_t sequence_length) {
  std::vector<SteerPosition> out;
  if (step == 0) {
    if (r.every_step_final) out.push_back({Phase::prompt, prompt_length - 1});
    for (auto i : r.prompt) out.push_back({Phase::prompt, i});
    return out;
  }
  const std::size_t newest = sequence_length - 1;
  if (r.every_step_final || r.generation.count(newest))
    out.push_back({Phase::generation, newest});
  return out;
}

InterventionHook make_hook(const SteeringPlan& plan, const ResolvedSchedule& resolved,
                           std::size_t prompt_length) {
  InterventionHook hook;
  hook.layer = plan.layer;
  hook.predicate = [resolved, prompt_length](const PositionContext& ctx) {
    if (ctx.phase == Phase::prompt) {
      if (resolved.every_step_final && ctx.index == prompt_length - 1) return true;
      return resolved.prompt.count(ctx.index) > 0;
    }
    return resolved.every_step_final || resolved.generation.count(ctx.index) > 0;
  };
  hook.transform = [plan](const Vector& h) { return apply_plan(plan, h); };
  return hook;
}

SteeredOutput steered_generate(const CausalModel& model, std::string_view prompt,
                               const SteeringPlan& plan, std::size_t max_new_tokens,
                               const GenerationResult* unsteered) {
  plan.validate(model.hidden_size(), model.layer_count());
  GenerationResult base;
  if (!unsteered) {
    base = generate_greedy(model, prompt, max_new_tokens);
    unsteered = &base;
  }
  auto resolved = resolve_schedule(plan.schedule, prompt, unsteered->prompt_tokens,
                                   unsteered->text, unsteered->generated_tokens);
  const std::size_t P = unsteered->prompt_tokens.size();
  auto hook = make_hook(plan, resolved, P);
  auto steered = generate_greedy(model, prompt, max_new_tokens, &hook);

  SteeredOutput out;
  out.text = steered.text;
  out.unsteered_text = unsteered->text;
  out.plan = plan.to_json();
  for (std::size_t step = 0; step <= steered.generated_ids.size(); ++step) {
    auto pos = positions_for_step(resolved, step, P, P + step);
    out.steered_positions.insert(out.steered_positions.end(), pos.begin(), pos.end());
  }
  return out;
}

}  // namespace gramsteer
