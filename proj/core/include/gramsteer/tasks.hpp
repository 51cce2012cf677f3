#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gramsteer/corpus.hpp"
#include "gramsteer/pos_tagger.hpp"

namespace gramsteer {

enum class TaskKind { random_sentence, repetition, temporal_translation };
std::string_view to_string(TaskKind t);
std::optional<TaskKind> parse_task(std::string_view s);

struct TaskPrompt {
  TaskKind task = TaskKind::random_sentence;
  std::string prompt_text;
  std::optional<LabeledSentence> source;
  std::vector<std::pair<std::string, std::string>> few_shot;
  // Answer a correct unsteered model gives (repetition and translation).
  std::optional<std::string> expected;
  std::optional<LabeledSentence> expected_labels;

  nlohmann::json to_json() const;
  static TaskPrompt from_json(const nlohmann::json& j);
};

const std::vector<std::string>& imperative_verbs();
const std::vector<std::string>& sentence_descriptions();

// "<Verb> <Description>:" over the full cross product, deduplicated.
std::vector<TaskPrompt> random_sentence_prompts();

// "a \\ b\n\nc \\ d\n\nquery \\" where "\\" is two backslash characters.
std::string few_shot_layout(const std::vector<std::pair<std::string, std::string>>& pairs,
                            const std::string& query);

TaskPrompt repetition_prompt(const LabeledSentence& query,
                             const std::array<LabeledSentence, 2>& examples);

struct FeatureMapping {
  LabelKind label = LabelKind::aspect;
  std::string from;
  std::string to;
};

struct TranslationExample {
  LabeledSentence source;
  LabeledSentence target;
};

TaskPrompt translation_prompt(const LabeledSentence& query, const FeatureMapping& mapping,
                              const std::array<TranslationExample, 2>& examples,
                              std::optional<LabeledSentence> expected = std::nullopt);

// Rule-based reference conjugator: rewrites the verb group of a simple
// declarative sentence into (tense, aspect). Returns nullopt when no verb
// group the lexicon understands is found.
std::optional<std::string> reconjugate(const std::string& sentence, Tense tense, Aspect aspect,
                                       const PosTagger& tagger);
std::optional<LabeledSentence> apply_mapping(const LabeledSentence& s, const FeatureMapping& m,
                                             const PosTagger& tagger);

// One prompt per test sentence, with two other test sentences as seeded
// few-shot examples. Sentences that cannot be mapped are skipped.
std::vector<TaskPrompt> build_task_prompts(TaskKind task, const LabeledCorpus& test,
                                           const std::optional<FeatureMapping>& mapping,
                                           const PosTagger& tagger, std::uint64_t seed);

struct UnsteeredCheck {
  std::string output;
  std::string tense;   // probe labels of the output
  std::string aspect;
};

// Indices of prompts whose unsteered answer is valid: repetition requires the
// query verbatim, translation requires the mapped labels. Random-sentence
// prompts are all kept.
std::vector<std::size_t> validate_unsteered(const std::vector<TaskPrompt>& prompts,
                                            const std::vector<UnsteeredCheck>& outputs);

}  // namespace gramsteer
