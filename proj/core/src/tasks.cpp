#include "gramsteer/tasks.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/verbs.hpp"

namespace gramsteer {

namespace {
constexpr std::array<std::string_view, 3> kTaskNames{"random_sentence", "repetition",
                                                     "temporal_translation"};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

nlohmann::json sentence_json(const LabeledSentence& s) {
  return {{"text", s.text},
          {"tense", to_string(s.tense)},
          {"aspect", to_string(s.aspect)},
          {"source", to_string(s.source)}};
}

LabeledSentence sentence_from_json(const nlohmann::json& j) {
  LabeledSentence s;
  s.text = j.at("text").get<std::string>();
  s.tense = parse_tense(j.at("tense").get<std::string>()).value();
  s.aspect = parse_aspect(j.at("aspect").get<std::string>()).value();
  s.source = parse_source(j.value("source", "benchmark")).value_or(Source::benchmark);
  return s;
}

LabeledSentence with_value(LabeledSentence s, LabelKind kind, const std::string& value) {
  if (kind == LabelKind::tense) s.tense = parse_tense(value).value();
  else if (kind == LabelKind::aspect) s.aspect = parse_aspect(value).value();
  return s;
}
}  // namespace

std::string_view to_string(TaskKind t) { return kTaskNames[static_cast<std::size_t>(t)]; }
std::optional<TaskKind> parse_task(std::string_view s) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i)
    if (kTaskNames[i] == s) return static_cast<TaskKind>(i);
  return std::nullopt;
}

nlohmann::json TaskPrompt::to_json() const {
  nlohmann::json j{{"task", gramsteer::to_string(task)}, {"prompt", prompt_text}};
  j["source"] = source ? sentence_json(*source) : nlohmann::json(nullptr);
  j["few_shot"] = nlohmann::json::array();
  for (const auto& [a, b] : few_shot) j["few_shot"].push_back({a, b});
  j["expected"] = expected ? nlohmann::json(*expected) : nlohmann::json(nullptr);
  j["expected_labels"] =
      expected_labels ? sentence_json(*expected_labels) : nlohmann::json(nullptr);
  return j;
}

TaskPrompt TaskPrompt::from_json(const nlohmann::json& j) {
  TaskPrompt p;
  p.task = parse_task(j.at("task").get<std::string>()).value();
  p.prompt_text = j.at("prompt").get<std::string>();
  if (!j.at("source").is_null()) p.source = sentence_from_json(j["source"]);
  for (const auto& pair : j.at("few_shot"))
    p.few_shot.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
  if (!j.at("expected").is_null()) p.expected = j["expected"].get<std::string>();
  if (j.contains("expected_labels") && !j["expected_labels"].is_null())
    p.expected_labels = sentence_from_json(j["expected_labels"]);
  return p;
}

const std::vector<std::string>& imperative_verbs() {
  static const std::vector<std::string> v{"Generate", "Create",    "Produce", "Write", "Output",
                                          "Provide",  "Construct", "Make up", "Formulate",
                                          "Come up",  "Print",     "Return",  "Craft"};
  return v;
}

const std::vector<std::string>& sentence_descriptions() {
  static const std::vector<std::string> v{"a single sentence",
                                          "one sentence",
                                          "a random sentence",
                                          "a sentence using any verb tense",
                                          "an arbitrary sentence",
                                          "one grammatically correct sentence"};
  return v;
}

std::vector<TaskPrompt> random_sentence_prompts() {
  std::vector<TaskPrompt> out;
  std::set<std::string> seen;
  for (const auto& verb : imperative_verbs()) {
    for (const auto& desc : sentence_descriptions()) {
      std::string text = verb + " " + desc + ":";
      if (!seen.insert(text).second) continue;
      TaskPrompt p;
      p.task = TaskKind::random_sentence;
      p.prompt_text = std::move(text);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string few_shot_layout(const std::vector<std::pair<std::string, std::string>>& pairs,
                            const std::string& query) {
  std::string out;
  for (const auto& [a, b] : pairs) out += a + " \\\\ " + b + "\n\n";
  out += query + " \\\\";
  return out;
}

TaskPrompt repetition_prompt(const LabeledSentence& query,
                             const std::array<LabeledSentence, 2>& examples) {
  for (const auto& e : examples)
    if (e.text == query.text)
      throw ContractError("few-shot example equals the query: " + query.text);
  TaskPrompt p;
  p.task = TaskKind::repetition;
  p.source = query;
  for (const auto& e : examples) p.few_shot.emplace_back(e.text, e.text);
  p.prompt_text = few_shot_layout(p.few_shot, query.text);
  p.expected = query.text;
  p.expected_labels = query;
  return p;
}

TaskPrompt translation_prompt(const LabeledSentence& query, const FeatureMapping& mapping,
                              const std::array<TranslationExample, 2>& examples,
                              std::optional<LabeledSentence> expected) {
  if (mapping.label == LabelKind::tense_aspect)
    throw ContractError("translation maps a single property");
  if (label_of(query, mapping.label) != mapping.from)
    throw ContractError("query '" + query.text + "' is not " + mapping.from);
  auto other = *other_kind(mapping.label);
  for (const auto& e : examples) {
    if (e.source.text == query.text)
      throw ContractError("few-shot example equals the query: " + query.text);
    if (label_of(e.source, mapping.label) != mapping.from ||
        label_of(e.target, mapping.label) != mapping.to ||
        label_of(e.source, other) != label_of(e.target, other))
      throw ContractError("example '" + e.source.text + "' does not demonstrate " + mapping.from +
                          " -> " + mapping.to);
  }
  TaskPrompt p;
  p.task = TaskKind::temporal_translation;
  p.source = query;
  for (const auto& e : examples) p.few_shot.emplace_back(e.source.text, e.target.text);
  p.prompt_text = few_shot_layout(p.few_shot, query.text);
  if (expected) {
    p.expected = expected->text;
    p.expected_labels = expected;
  } else {
    p.expected_labels = with_value(query, mapping.label, mapping.to);
  }
  return p;
}

std::optional<std::string> reconjugate(const std::string& sentence, Tense tense, Aspect aspect,
                                       const PosTagger& tagger) {
  auto tagged = tagger.tag(sentence);
  // Longest run of AUX/VERB words (adverbs and negation are not handled).
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < tagged.size();) {
    if (!is_verbal(tagged[i].tag)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < tagged.size() && is_verbal(tagged[j].tag)) ++j;
    if (j - i > best_len && tagged[j - 1].tag == PosTag::VERB) {
      best_begin = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len == 0) return std::nullopt;
  std::vector<std::string> words;
  for (std::size_t k = best_begin; k < best_begin + best_len; ++k)
    words.push_back(tagged[k].word.text);
  auto parsed = parse_verb_group(words);
  if (!parsed) return std::nullopt;
  std::size_t b = tagged[best_begin].word.begin;
  std::size_t e = tagged[best_begin + best_len - 1].word.end;
  std::string subject = trim(std::string_view(sentence).substr(0, b));
  std::string group = conjugate(parsed->verb, tense, aspect, agreement_of(subject));
  return sentence.substr(0, b) + group + sentence.substr(e);
}

std::optional<LabeledSentence> apply_mapping(const LabeledSentence& s, const FeatureMapping& m,
                                             const PosTagger& tagger) {
  LabeledSentence out = with_value(s, m.label, m.to);
  auto text = reconjugate(s.text, out.tense, out.aspect, tagger);
  if (!text) return std::nullopt;
  out.text = *text;
  return out;
}

std::vector<TaskPrompt> build_task_prompts(TaskKind task, const LabeledCorpus& test,
                                           const std::optional<FeatureMapping>& mapping,
                                           const PosTagger& tagger, std::uint64_t seed) {
  if (task == TaskKind::random_sentence) return random_sentence_prompts();
  if (task == TaskKind::temporal_translation && !mapping)
    throw ConfigError("temporal translation needs a feature mapping");

  std::vector<std::size_t> pool;
  std::vector<std::optional<LabeledSentence>> mapped(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (task == TaskKind::repetition) {
      pool.push_back(i);
    } else if (label_of(test[i], mapping->label) == mapping->from) {
      mapped[i] = apply_mapping(test[i], *mapping, tagger);
      if (mapped[i]) pool.push_back(i);
    }
  }
  std::vector<TaskPrompt> out;
  if (pool.size() < 3) return out;
  for (std::size_t qi : pool) {
    std::uint64_t state = seed ^ fnv1a(test[qi].text);
    std::array<std::size_t, 2> pick{};
    for (std::size_t k = 0; k < 2;) {
      std::size_t c = pool[uniform_index(state, pool.size())];
      if (c == qi || (k == 1 && c == pick[0])) continue;
      pick[k++] = c;
    }
    if (task == TaskKind::repetition) {
      out.push_back(repetition_prompt(test[qi], {test[pick[0]], test[pick[1]]}));
    } else {
      std::array<TranslationExample, 2> ex{TranslationExample{test[pick[0]], *mapped[pick[0]]},
                                           TranslationExample{test[pick[1]], *mapped[pick[1]]}};
      out.push_back(translation_prompt(test[qi], *mapping, ex, mapped[qi]));
    }
  }
  return out;
}

std::vector<std::size_t> validate_unsteered(const std::vector<TaskPrompt>& prompts,
                                            const std::vector<UnsteeredCheck>& outputs) {
  if (prompts.size() != outputs.size()) throw ContractError("prompts and outputs differ in count");
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& p = prompts[i];
    const auto& o = outputs[i];
    bool ok = true;
    if (p.task == TaskKind::repetition) {
      ok = p.expected && trim(o.output) == trim(*p.expected);
    } else if (p.task == TaskKind::temporal_translation) {
      ok = p.expected_labels && o.tense == to_string(p.expected_labels->tense) &&
           o.aspect == to_string(p.expected_labels->aspect);
    }
    if (ok) kept.push_back(i);
  }
  return kept;
}

}  // namespace gramsteer
