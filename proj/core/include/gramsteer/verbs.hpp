#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gramsteer/types.hpp"

namespace gramsteer {

enum class VerbForm { base, third, past, participle, gerund };

struct VerbEntry {
  std::string base;
  std::string third;
  std::string past;
  std::string participle;
  std::string gerund;
};

// Grammatical person of a subject as far as agreement is concerned.
enum class Agreement { first_singular, third_singular, other };

// Entry built from spelling rules for a verb not in the irregular table.
VerbEntry regular_entry(std::string_view base);

// Lexicon lookup by lemma (lowercase). Unknown lemmas yield nullopt.
std::optional<VerbEntry> find_lemma(std::string_view base);

struct FormMatch {
  VerbEntry entry;
  std::vector<VerbForm> forms;
};

// Every lexicon entry that has `word` (lowercase) as one of its forms.
std::vector<FormMatch> lookup_form(std::string_view word);

bool is_participle(std::string_view word);
bool is_base_form(std::string_view word);
bool is_known_verb_form(std::string_view word);

Agreement agreement_of(std::string_view subject);

// Full verb group for a lemma, e.g. ("earn", present, perfect_progressive,
// third_singular) -> "has been earning".
std::string conjugate(const VerbEntry& verb, Tense tense, Aspect aspect, Agreement agr);

// Tense and aspect carried by a verb group such as "will have been seeing".
// The words must be the auxiliaries followed by the main verb form.
struct VerbGroupParse {
  VerbEntry verb;
  Tense tense;
  Aspect aspect;
};
std::optional<VerbGroupParse> parse_verb_group(const std::vector<std::string>& words);

std::string to_lower(std::string_view s);

}  // namespace gramsteer
