#pragma once

#include <optional>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gramsteer/geometry.hpp"
#include "gramsteer/model.hpp"
#include "gramsteer/pos_tagger.hpp"

namespace gramsteer {

enum class SteeringMethod { TA, TA_SS, TA_PROJ_SS };
std::string_view to_string(SteeringMethod m);
std::optional<SteeringMethod> parse_method(std::string_view s);

enum class ScheduleMode {
  final_token_every_step,
  prompt_all_verb_tokens,
  prompt_last_verb_token,
  prompt_sentence_end,
  prompt_final_token,
  gen_token_before_verb,
  gen_first_verb_token,
  gen_all_verb_tokens,
};
std::string_view to_string(ScheduleMode m);
std::optional<ScheduleMode> parse_schedule_mode(std::string_view s);
bool is_verb_aware(ScheduleMode m);

struct PositionSchedule {
  ScheduleMode mode = ScheduleMode::final_token_every_step;
  const PosTagger* tagger = nullptr;
};

struct SteeringPlan {
  SteeringMethod method = SteeringMethod::TA;
  int layer = 0;
  double alpha = 0.0;
  ConceptDirection target;
  std::optional<ConceptDirection> source;
  PositionSchedule schedule;

  // Throws ContractError when the plan is inconsistent or does not fit a
  // model of dimension `dim` with `layers` blocks.
  void validate(int dim, int layers) const;
  nlohmann::json to_json() const;
};

Vector apply_TA(const Vector& h, const Vector& target_unit, double alpha);
Vector apply_TA_SS(const Vector& h, const Vector& target_unit, const Vector& source_unit,
                   double alpha);
Vector apply_TA_ProjSS(const Vector& h, const Vector& target_unit, const Vector& source_unit,
                       double alpha);
// Dispatches on plan.method with unit-normalized directions.
Vector apply_plan(const SteeringPlan& plan, const Vector& h);

struct SteerPosition {
  Phase phase;
  std::size_t index;  // absolute position
  bool operator<(const SteerPosition& o) const {
    return std::tie(index, phase) < std::tie(o.index, o.phase);
  }
  bool operator==(const SteerPosition& o) const = default;
};

struct ResolvedSchedule {
  // final_token_every_step: the last prompt token in the prompt pass and the
  // newest token at every generation step.
  bool every_step_final = false;
  std::set<std::size_t> prompt;      // absolute indices steered in the prompt pass
  std::set<std::size_t> generation;  // absolute indices steered when generated
};

// Prompt modes look at the query, i.e. the last line of the prompt.
// Generation modes locate verbs in the unsteered greedy continuation.
ResolvedSchedule resolve_schedule(const PositionSchedule& schedule, std::string_view prompt_text,
                                  const std::vector<Token>& prompt_tokens,
                                  std::string_view generated_text,
                                  const std::vector<Token>& generated_tokens);

// Positions steered at one step; `sequence_length` counts the tokens present
// after that step's forward pass.
std::vector<SteerPosition> positions_for_step(const ResolvedSchedule& resolved, std::size_t step,
                                              std::size_t prompt_length,
                                              std::size_t sequence_length);

InterventionHook make_hook(const SteeringPlan& plan, const ResolvedSchedule& resolved,
                           std::size_t prompt_length);

struct SteeredOutput {
  std::string text;
  std::string unsteered_text;
  nlohmann::json plan;
  std::vector<SteerPosition> steered_positions;
};

SteeredOutput steered_generate(const CausalModel& model, std::string_view prompt,
                               const SteeringPlan& plan, std::size_t max_new_tokens,
                               const GenerationResult* unsteered = nullptr);

}  // namespace gramsteer
