#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/planted_model.hpp"
#include "gramsteer/steering.hpp"
#include "helpers.hpp"

using namespace gramsteer;

namespace {
ConceptDirection dir(const Vector& v, const std::string& name) {
  return {v.normalized(), v, name, 0};
}

const std::string kPrompt =
    "She has written the letter. \\\\ She has written the letter.\n\n"
    "Paul has been seeing the bird. \\\\";
}  // namespace

TEST(Methods, AlgebraicIdentities) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 200; ++i) {
    Vector h = fixtures::gaussian_vector(rng, 16, 4.0);
    Vector t = fixtures::gaussian_vector(rng, 16).normalized();
    Vector s = fixtures::gaussian_vector(rng, 16).normalized();
    double alpha = 0.5 + i % 9;
    EXPECT_LT((apply_TA(h, t, alpha) - h - alpha * t).norm(), 1e-9);
    EXPECT_LT((apply_TA_SS(h, t, s, alpha) - h - alpha * (t - s)).norm(), 1e-9);
    Vector p = apply_TA_ProjSS(h, t, s, alpha);
    EXPECT_NEAR(p.dot(s), alpha * t.dot(s), 1e-9);
    EXPECT_LT((apply_TA(h, t, 0.0) - h).norm(), 1e-15);
  }
}

TEST(Plan, UsesNormalizedDirections) {
  Vector t = Vector::Unit(4, 0) * 7.0;
  SteeringPlan plan;
  plan.alpha = 2.0;
  plan.target = {t, t, "future", 0};  // deliberately not unit length
  Vector h = Vector::Zero(4);
  EXPECT_NEAR(apply_plan(plan, h)[0], 2.0, 1e-12);
}

TEST(Plan, ValidationRules) {
  SteeringPlan plan;
  plan.target = dir(Vector::Unit(4, 0), "future");
  EXPECT_NO_THROW(plan.validate(4, 3));
  EXPECT_THROW(plan.validate(5, 3), ContractError);
  plan.layer = 4;
  EXPECT_THROW(plan.validate(4, 3), LayerMismatchError);
  plan.layer = 1;
  plan.source = dir(Vector::Unit(4, 1), "past");
  EXPECT_THROW(plan.validate(4, 3), ContractError);
  plan.method = SteeringMethod::TA_SS;
  EXPECT_NO_THROW(plan.validate(4, 3));
  plan.source.reset();
  EXPECT_THROW(plan.validate(4, 3), ContractError);
  plan.method = SteeringMethod::TA;
  plan.schedule.mode = ScheduleMode::gen_first_verb_token;
  EXPECT_THROW(plan.validate(4, 3), ContractError);
  auto j = plan.to_json();
  EXPECT_EQ(j["schedule"], "gen_first_verb_token");
  EXPECT_EQ(j["method"], "TA");
}

TEST(Schedule, PromptModesScopeToTheQueryLine) {
  PlantedModel model;
  LexiconTagger tagger;
  auto base = generate_greedy(model, kPrompt, 8);
  const auto& pt = base.prompt_tokens;
  ASSERT_EQ(pt.size(), 18u);
  ASSERT_EQ(pt[14].text, "has been seeing");
  auto resolve = [&](ScheduleMode m) {
    return resolve_schedule({m, &tagger}, kPrompt, pt, base.text, base.generated_tokens);
  };
  EXPECT_EQ(resolve(ScheduleMode::prompt_all_verb_tokens).prompt, std::set<std::size_t>{14});
  EXPECT_EQ(resolve(ScheduleMode::prompt_last_verb_token).prompt, std::set<std::size_t>{14});
  EXPECT_EQ(resolve(ScheduleMode::prompt_sentence_end).prompt, std::set<std::size_t>{16});
  EXPECT_EQ(resolve(ScheduleMode::prompt_final_token).prompt, std::set<std::size_t>{17});
  EXPECT_TRUE(resolve(ScheduleMode::final_token_every_step).every_step_final);
}

TEST(Schedule, GenerationModesUseTheUnsteeredContinuation) {
  PlantedModel model;
  LexiconTagger tagger;
  auto base = generate_greedy(model, kPrompt, 8);
  ASSERT_EQ(base.generated_tokens.size(), 4u);
  ASSERT_EQ(base.generated_tokens[1].text, "has been seeing");
  auto resolve = [&](ScheduleMode m) {
    return resolve_schedule({m, &tagger}, kPrompt, base.prompt_tokens, base.text,
                            base.generated_tokens);
  };
  EXPECT_EQ(resolve(ScheduleMode::gen_first_verb_token).generation, std::set<std::size_t>{19});
  EXPECT_EQ(resolve(ScheduleMode::gen_all_verb_tokens).generation, std::set<std::size_t>{19});
  EXPECT_EQ(resolve(ScheduleMode::gen_token_before_verb).generation, std::set<std::size_t>{18});
}

TEST(Schedule, EveryStepSteersTheNewestToken) {
  ResolvedSchedule r;
  r.every_step_final = true;
  auto p0 = positions_for_step(r, 0, 10, 10);
  ASSERT_EQ(p0.size(), 1u);
  EXPECT_EQ(p0[0].index, 9u);
  EXPECT_EQ(p0[0].phase, Phase::prompt);
  auto p3 = positions_for_step(r, 3, 10, 13);
  ASSERT_EQ(p3.size(), 1u);
  EXPECT_EQ(p3[0].index, 12u);
  EXPECT_EQ(p3[0].phase, Phase::generation);
}

TEST(SteeredGenerate, ZeroAlphaMatchesUnsteered) {
  PlantedModel model;
  for (auto mode : {ScheduleMode::final_token_every_step, ScheduleMode::prompt_final_token}) {
    SteeringPlan plan;
    plan.layer = 2;
    plan.alpha = 0.0;
    plan.target = dir(model.planted_direction("past"), "past");
    plan.schedule.mode = mode;
    auto out = steered_generate(model, kPrompt, plan, 8);
    EXPECT_EQ(out.text, out.unsteered_text);
    EXPECT_FALSE(out.steered_positions.empty());
  }
}

TEST(SteeredGenerate, PlantedDirectionChangesTense) {
  PlantedModel model;
  SteeringPlan plan;
  plan.layer = 0;
  plan.alpha = 8.0;
  plan.target = dir(model.planted_direction("future"), "future");
  auto out = steered_generate(model, kPrompt, plan, 8);
  EXPECT_NE(out.text.find("will have been seeing"), std::string::npos) << out.text;
  EXPECT_EQ(out.plan["alpha"], 8.0);
}
