#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gramsteer/pos_tagger.hpp"
#include "gramsteer/types.hpp"

namespace gramsteer {

struct LabeledSentence {
  std::string text;
  Tense tense = Tense::present;
  Aspect aspect = Aspect::simple;
  Source source = Source::synthetic;
};

// Class name of a sentence for a label kind ("past", "perfect", "past_perfect").
std::string label_of(const LabeledSentence& s, LabelKind kind);

class LabeledCorpus {
 public:
  LabeledCorpus() = default;
  // Throws SchemaError on empty or duplicate texts.
  LabeledCorpus(std::vector<LabeledSentence> sentences, Split split, std::string id = "");

  const std::vector<LabeledSentence>& sentences() const { return sentences_; }
  Split split() const { return split_; }
  const std::string& id() const { return id_; }
  std::size_t size() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }
  const LabeledSentence& operator[](std::size_t i) const { return sentences_[i]; }

  std::map<std::string, std::size_t> class_counts(LabelKind kind) const;
  std::vector<std::string> labels(LabelKind kind) const;

 private:
  std::vector<LabeledSentence> sentences_;
  Split split_ = Split::train;
  std::string id_;
};

// Reads one JSON record per line. Every malformed line is reported with its
// line number in a single SchemaError or LabelError. A missing "source"
// defaults to synthetic for the train split and benchmark for the test split.
LabeledCorpus load_corpus(const std::string& path, Split split);
LabeledCorpus parse_corpus(const std::string& content, Split split, const std::string& id);
void save_corpus(const LabeledCorpus& corpus, const std::string& path);

// Keeps sentences with exactly one VERB tag; auxiliaries do not count.
LabeledCorpus filter_single_verb(const LabeledCorpus& corpus, const PosTagger& tagger);

LabeledCorpus balance_downsample(const LabeledCorpus& corpus, LabelKind label,
                                 std::size_t per_class, std::uint64_t seed);

// Drops every sentence whose `label` value equals `target_value`.
LabeledCorpus build_steering_testset(const LabeledCorpus& corpus, LabelKind label,
                                     const std::string& target_value);

// Deterministic helpers shared by all seeded sampling.
std::size_t uniform_index(std::uint64_t& state, std::size_t n);
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t fnv1a(std::string_view s);

}  // namespace gramsteer
