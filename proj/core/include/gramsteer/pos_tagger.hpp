#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gramsteer {

// Coarse universal-style tag set.
enum class PosTag { VERB, AUX, NOUN, PROPN, PRON, DET, ADJ, ADV, ADP, CCONJ, PART, NUM, PUNCT, X };

std::string_view to_string(PosTag t);
std::optional<PosTag> parse_pos_tag(std::string_view s);
inline bool is_verbal(PosTag t) { return t == PosTag::VERB || t == PosTag::AUX; }

struct Word {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

struct TaggedWord {
  Word word;
  PosTag tag = PosTag::X;
};

// Words are runs of letters, digits, apostrophes and inner hyphens; every
// other non-space byte is a one-character word of its own.
std::vector<Word> split_words(std::string_view text);

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  // Throws TaggerError when the text cannot be tagged.
  virtual std::vector<TaggedWord> tag(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

// Rule tagger backed by the verb lexicon and closed-class word lists.
class LexiconTagger : public PosTagger {
 public:
  std::vector<TaggedWord> tag(std::string_view text) const override;
  std::string name() const override { return "lexicon"; }
};

// Replays tags produced offline by an external tagger. The file holds one
// JSON object per line: {"text": ..., "tags": ["PRON", "VERB", ...]} with one
// tag per word of split_words(text).
class PrecomputedTagger : public PosTagger {
 public:
  explicit PrecomputedTagger(const std::string& path);
  std::vector<TaggedWord> tag(std::string_view text) const override;
  std::string name() const override { return "precomputed"; }

 private:
  std::map<std::string, std::vector<PosTag>, std::less<>> table_;
};

std::unique_ptr<PosTagger> make_tagger(const std::string& kind, const std::string& path = "");

std::size_t count_tag(const std::vector<TaggedWord>& words, PosTag tag);

}  // namespace gramsteer
