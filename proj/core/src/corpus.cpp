#include "gramsteer/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "gramsteer/error.hpp"

namespace gramsteer {

std::string label_of(const LabeledSentence& s, LabelKind kind) {
  switch (kind) {
    case LabelKind::tense:
      return std::string(to_string(s.tense));
    case LabelKind::aspect:
      return std::string(to_string(s.aspect));
    case LabelKind::tense_aspect:
      return tense_aspect_name(s.tense, s.aspect);
  }
  return {};
}

LabeledCorpus::LabeledCorpus(std::vector<LabeledSentence> sentences, Split split, std::string id)
    : sentences_(std::move(sentences)), split_(split), id_(std::move(id)) {
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    const auto& s = sentences_[i];
    if (s.text.empty()) throw SchemaError("sentence " + std::to_string(i) + " has empty text");
    if (!seen.insert(s.text).second)
      throw SchemaError("duplicate text within split: " + s.text);
  }
}

std::map<std::string, std::size_t> LabeledCorpus::class_counts(LabelKind kind) const {
  std::map<std::string, std::size_t> counts;
  for (const auto& name : class_names(kind)) counts[name] = 0;
  for (const auto& s : sentences_) ++counts[label_of(s, kind)];
  return counts;
}

std::vector<std::string> LabeledCorpus::labels(LabelKind kind) const {
  std::vector<std::string> out;
  out.reserve(sentences_.size());
  for (const auto& s : sentences_) out.push_back(label_of(s, kind));
  return out;
}

LabeledCorpus parse_corpus(const std::string& content, Split split, const std::string& id) {
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  std::vector<LabeledSentence> out;
  std::vector<std::string> schema_errors;
  std::vector<std::string> label_errors;
  std::set<std::string> seen;
  const Source default_source = split == Split::train ? Source::synthetic : Source::benchmark;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string where = "line " + std::to_string(lineno) + ": ";
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      schema_errors.push_back(where + "not a JSON object");
      continue;
    }
    bool ok = true;
    for (const char* key : {"text", "tense", "aspect"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        schema_errors.push_back(where + "missing or non-string field '" + key + "'");
        ok = false;
      }
    }
    if (!ok) continue;
    LabeledSentence s;
    s.text = j["text"].get<std::string>();
    if (s.text.empty()) {
      schema_errors.push_back(where + "empty text");
      continue;
    }
    auto tense = parse_tense(j["tense"].get<std::string>());
    auto aspect = parse_aspect(j["aspect"].get<std::string>());
    if (!tense) label_errors.push_back(where + "unknown tense '" + j["tense"].get<std::string>() + "'");
    if (!aspect) label_errors.push_back(where + "unknown aspect '" + j["aspect"].get<std::string>() + "'");
    s.source = default_source;
    if (j.contains("source")) {
      auto src = j["source"].is_string() ? parse_source(j["source"].get<std::string>()) : std::nullopt;
      if (!src) {
        label_errors.push_back(where + "unknown source");
        continue;
      }
      s.source = *src;
    }
    if (!tense || !aspect) continue;
    s.tense = *tense;
    s.aspect = *aspect;
    if (!seen.insert(s.text).second) {
      schema_errors.push_back(where + "duplicate text");
      continue;
    }
    out.push_back(std::move(s));
  }
  auto join = [](const std::vector<std::string>& v) {
    std::string r;
    for (const auto& x : v) r += "\n  " + x;
    return r;
  };
  if (!schema_errors.empty()) throw SchemaError("corpus " + id + " rejected:" + join(schema_errors));
  if (!label_errors.empty()) throw LabelError("corpus " + id + " rejected:" + join(label_errors));
  return LabeledCorpus(std::move(out), split, id);
}

LabeledCorpus load_corpus(const std::string& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), split, path);
}

void save_corpus(const LabeledCorpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const auto& s : corpus.sentences()) {
    nlohmann::json j;
    j["text"] = s.text;
    j["tense"] = to_string(s.tense);
    j["aspect"] = to_string(s.aspect);
    j["source"] = to_string(s.source);
    out << j.dump() << '\n';
  }
}

LabeledCorpus filter_single_verb(const LabeledCorpus& corpus, const PosTagger& tagger) {
  std::vector<LabeledSentence> kept;
  for (const auto& s : corpus.sentences()) {
    try {
      if (count_tag(tagger.tag(s.text), PosTag::VERB) == 1) kept.push_back(s);
    } catch (const std::exception& e) {
      spdlog::warn("tagger failed, dropping sentence '{}': {}", s.text, e.what());
    }
  }
  return LabeledCorpus(std::move(kept), corpus.split(), corpus.id() + "+single_verb");
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t uniform_index(std::uint64_t& state, std::size_t n) {
  if (n == 0) return 0;
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = splitmix64(state);
  } while (r >= limit);
  return static_cast<std::size_t>(r % n);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

LabeledCorpus balance_downsample(const LabeledCorpus& corpus, LabelKind label,
                                 std::size_t per_class, std::uint64_t seed) {
  auto counts = corpus.class_counts(label);
  for (const auto& [name, n] : counts)
    if (n < per_class)
      throw CapacityError("class '" + name + "' has " + std::to_string(n) +
                          " sentences, fewer than per_class=" + std::to_string(per_class));
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    members[label_of(corpus[i], label)].push_back(i);
  std::vector<std::size_t> chosen;
  for (auto& [name, idx] : members) {
    std::uint64_t state = seed ^ fnv1a(name);
    // Partial Fisher-Yates: the first per_class slots are the sample.
    for (std::size_t k = 0; k < per_class; ++k) {
      std::size_t j = k + uniform_index(state, idx.size() - k);
      std::swap(idx[k], idx[j]);
    }
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<long>(per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<LabeledSentence> out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(corpus[i]);
  return LabeledCorpus(std::move(out), corpus.split(),
                       corpus.id() + "+balanced(" + std::string(to_string(label)) + "," +
                           std::to_string(per_class) + "," + std::to_string(seed) + ")");
}

LabeledCorpus build_steering_testset(const LabeledCorpus& corpus, LabelKind label,
                                     const std::string& target_value) {
  std::vector<LabeledSentence> out;
  for (const auto& s : corpus.sentences())
    if (label_of(s, label) != target_value) out.push_back(s);
  return LabeledCorpus(std::move(out), corpus.split(),
                       corpus.id() + "-" + target_value);
}

}  // namespace gramsteer
