#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>

namespace gramsteer {

// Scores a text pair in [0, 1]; identical texts score 1.
class Similarity {
 public:
  virtual ~Similarity() = default;
  virtual double score(const std::string& a, const std::string& b) const = 0;
  virtual std::string name() const = 0;
};

// Unigram F1 between the lowercased word bags.
class LexicalOverlap : public Similarity {
 public:
  double score(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "lexical_overlap"; }
};

class ExactMatch : public Similarity {
 public:
  double score(const std::string& a, const std::string& b) const override { return a == b; }
  std::string name() const override { return "exact_match"; }
};

// Scores read from JSONL lines {"a": ..., "b": ..., "score": ...}, e.g. produced
// offline by a pretrained scorer. Unknown pairs throw.
class PrecomputedSimilarity : public Similarity {
 public:
  explicit PrecomputedSimilarity(const std::string& path);
  double score(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "precomputed"; }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

// Runs `command <pair.json>` and parses a single number from its stdout.
// The file holds {"a": ..., "b": ...}.
class ExternalCommandSimilarity : public Similarity {
 public:
  explicit ExternalCommandSimilarity(std::string command) : command_(std::move(command)) {}
  double score(const std::string& a, const std::string& b) const override;
  std::string name() const override { return "external:" + command_; }

 private:
  std::string command_;
};

std::unique_ptr<Similarity> make_similarity(const std::string& kind, const std::string& arg = "");

}  // namespace gramsteer
