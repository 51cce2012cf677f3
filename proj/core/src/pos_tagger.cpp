#include "gramsteer/pos_tagger.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/verbs.hpp"

namespace gramsteer {

namespace {

constexpr std::array<std::string_view, 14> kTagNames{
    "VERB", "AUX", "NOUN", "PROPN", "PRON", "DET", "ADJ",
    "ADV",  "ADP", "CCONJ", "PART", "NUM", "PUNCT", "X"};

const std::set<std::string> kBe{"am", "is", "are", "was", "were", "be", "been", "being",
                                "'m", "'re"};
const std::set<std::string> kModal{"will", "would", "shall", "should", "can", "could",
                                   "may", "might", "must", "'ll", "'d"};
const std::set<std::string> kNegatedAux{
    "isn't", "aren't", "wasn't", "weren't", "won't", "wouldn't", "can't", "cannot",
    "couldn't", "shouldn't", "mustn't", "hasn't", "haven't", "hadn't", "don't",
    "doesn't", "didn't"};
const std::set<std::string> kHave{"have", "has", "had", "having", "'ve"};
const std::set<std::string> kDo{"do", "does", "did"};
const std::set<std::string> kPron{"i",    "you",  "he",   "she",  "it",   "we",
                                  "they", "me",   "him",  "us",   "them", "myself",
                                  "yourself", "himself", "herself", "itself",
                                  "ourselves", "themselves", "someone", "something",
                                  "everyone", "everything", "nobody", "nothing",
                                  "who", "what", "mine", "yours", "ours", "theirs"};
const std::set<std::string> kDet{"the", "a", "an", "this", "that", "these", "those",
                                 "some", "any", "every", "each", "no", "my", "your",
                                 "his", "her", "its", "our", "their", "another", "all",
                                 "both", "several", "many", "few"};
const std::set<std::string> kAdp{"in", "on", "at", "through", "from", "with", "about",
                                 "for", "of", "by", "into", "over", "under", "after",
                                 "before", "during", "around", "across", "near",
                                 "behind", "toward", "towards", "without", "since",
                                 "until", "between", "along", "past", "inside",
                                 "outside", "onto", "upon", "like"};
const std::set<std::string> kConj{"and", "or", "but", "nor", "yet"};
const std::set<std::string> kPart{"not", "n't", "to"};
const std::set<std::string> kAdv{"very",  "never", "always", "often", "already", "just",
                                 "also",  "soon",  "today",  "yesterday", "tomorrow",
                                 "now",   "then",  "here",   "there", "still", "again",
                                 "ever",  "once",  "too",    "so",    "well", "almost",
                                 "later", "tonight", "recently", "usually", "finally"};
const std::set<std::string> kAdj{"good", "bad", "big", "small", "new", "old", "happy",
                                 "sad", "blue", "red", "green", "long", "short", "hot",
                                 "cold", "beautiful", "single", "random", "arbitrary",
                                 "correct", "six", "young", "quiet", "loud", "fast",
                                 "slow", "late", "early", "delicious", "bright"};

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_punct_word(const std::string& w) {
  for (unsigned char c : w)
    if (is_word_char(c)) return false;
  return true;
}

bool is_number(const std::string& w) {
  for (unsigned char c : w)
    if (!std::isdigit(c) && c != '.' && c != ',') return false;
  return !w.empty();
}

// Index of the next word that is not an adverb or negation.
std::size_t skip_adverbs(const std::vector<Word>& words, std::size_t i) {
  while (i < words.size()) {
    std::string lw = to_lower(words[i].text);
    if (kAdv.count(lw) || lw == "not" || lw == "n't" || ends_with(lw, "ly")) {
      ++i;
      continue;
    }
    break;
  }
  return i;
}

bool looks_participle(const std::string& lw) {
  return is_participle(lw) || (lw.size() > 4 && (ends_with(lw, "ed") || ends_with(lw, "en")));
}

}  // namespace

std::string_view to_string(PosTag t) { return kTagNames[static_cast<std::size_t>(t)]; }

std::optional<PosTag> parse_pos_tag(std::string_view s) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i)
    if (kTagNames[i] == s) return static_cast<PosTag>(i);
  return std::nullopt;
}

std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (is_word_char(c)) {
      while (i < text.size()) {
        unsigned char d = static_cast<unsigned char>(text[i]);
        if (is_word_char(d)) {
          ++i;
        } else if (d == '-' && i + 1 < text.size() &&
                   is_word_char(static_cast<unsigned char>(text[i + 1]))) {
          ++i;
        } else {
          break;
        }
      }
    } else {
      ++i;
    }
    out.push_back(Word{std::string(text.substr(start, i - start)), start, i});
  }
  return out;
}

std::vector<TaggedWord> LexiconTagger::tag(std::string_view text) const {
  auto words = split_words(text);
  std::vector<TaggedWord> out;
  out.reserve(words.size());
  PosTag prev = PosTag::PUNCT;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i].text;
    std::string lw = to_lower(w);
    PosTag t = PosTag::NOUN;
    std::size_t next = skip_adverbs(words, i + 1);
    std::string next_lw = next < words.size() ? to_lower(words[next].text) : "";

    if (is_punct_word(w)) {
      t = PosTag::PUNCT;
    } else if (is_number(w)) {
      t = PosTag::NUM;
    } else if (kBe.count(lw) || kModal.count(lw) || kNegatedAux.count(lw)) {
      t = PosTag::AUX;
    } else if (kHave.count(lw)) {
      t = (next_lw == "been" || (!next_lw.empty() && looks_participle(next_lw) &&
                                 !kDet.count(next_lw)))
              ? PosTag::AUX
              : PosTag::VERB;
    } else if (kDo.count(lw)) {
      bool negated = next != i + 1;
      t = (negated || (!next_lw.empty() && is_base_form(next_lw) && !kDet.count(next_lw)))
              ? PosTag::AUX
              : PosTag::VERB;
    } else if (kPron.count(lw)) {
      t = PosTag::PRON;
    } else if (kDet.count(lw)) {
      t = PosTag::DET;
    } else if (kAdp.count(lw)) {
      t = PosTag::ADP;
    } else if (kConj.count(lw)) {
      t = PosTag::CCONJ;
    } else if (kPart.count(lw)) {
      t = PosTag::PART;
    } else if (kAdv.count(lw) || (lw.size() > 3 && ends_with(lw, "ly"))) {
      t = PosTag::ADV;
    } else if (kAdj.count(lw)) {
      t = PosTag::ADJ;
    } else if (is_known_verb_form(lw)) {
      bool nominal_slot = prev == PosTag::DET || prev == PosTag::ADJ || prev == PosTag::ADP;
      t = nominal_slot ? PosTag::NOUN : PosTag::VERB;
    } else if (ends_with(lw, "ing") && lw.size() > 4 && prev == PosTag::AUX) {
      t = PosTag::VERB;
    } else if (ends_with(lw, "ed") && lw.size() > 3 &&
               (prev == PosTag::PRON || prev == PosTag::NOUN || prev == PosTag::PROPN ||
                prev == PosTag::AUX || prev == PosTag::CCONJ || prev == PosTag::ADV)) {
      t = PosTag::VERB;
    } else if (i > 0 && std::isupper(static_cast<unsigned char>(w[0]))) {
      t = PosTag::PROPN;
    }
    out.push_back(TaggedWord{words[i], t});
    prev = t;
  }
  return out;
}

PrecomputedTagger::PrecomputedTagger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tag file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("text") || !j.contains("tags"))
      throw SchemaError(path + ":" + std::to_string(lineno) + ": malformed tag record");
    std::vector<PosTag> tags;
    for (const auto& t : j["tags"]) {
      auto p = parse_pos_tag(t.get<std::string>());
      if (!p) throw LabelError(path + ":" + std::to_string(lineno) + ": unknown tag");
      tags.push_back(*p);
    }
    table_[j["text"].get<std::string>()] = std::move(tags);
  }
}

std::vector<TaggedWord> PrecomputedTagger::tag(std::string_view text) const {
  auto it = table_.find(text);
  if (it == table_.end()) throw TaggerError("no precomputed tags for: " + std::string(text));
  auto words = split_words(text);
  if (words.size() != it->second.size())
    throw TaggerError("tag count does not match word count for: " + std::string(text));
  std::vector<TaggedWord> out;
  for (std::size_t i = 0; i < words.size(); ++i) out.push_back({words[i], it->second[i]});
  return out;
}

std::unique_ptr<PosTagger> make_tagger(const std::string& kind, const std::string& path) {
  if (kind == "lexicon") return std::make_unique<LexiconTagger>();
  if (kind == "precomputed") return std::make_unique<PrecomputedTagger>(path);
  throw ConfigError("unknown tagger kind: " + kind);
}

std::size_t count_tag(const std::vector<TaggedWord>& words, PosTag tag) {
  std::size_t n = 0;
  for (const auto& w : words) n += w.tag == tag;
  return n;
}

}  // namespace gramsteer
