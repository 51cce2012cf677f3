#include "gramsteer/planted_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/verbs.hpp"

namespace gramsteer {

namespace {

const std::vector<std::string> kTrainSubjects{"She", "He", "Maya", "The teacher", "My brother",
                                              "The child"};
const std::vector<std::string> kTestSubjects{"Paul", "The farmer"};
const std::vector<std::string> kLemmas{"see",   "eat",  "draw",  "throw", "sing", "speak",
                                       "break", "drive", "write", "know",  "grow", "ride"};
const std::vector<std::string> kObjects{"the bird",  "an apple",   "a picture",  "the ball",
                                        "a song",    "the truth",  "the window", "her car",
                                        "a letter",  "the answer", "some tomatoes", "a horse"};
const std::vector<std::string> kInstructionWords{
    "Generate", "Create", "Produce", "Write", "Output", "Provide", "Construct",
    "Make", "up", "Formulate", "Come", "Print", "Return", "Craft", "a", "single",
    "sentence", "one", "random", "using", "any", "verb", "tense", "an", "arbitrary",
    "grammatically", "correct"};

constexpr int kTenseDims = 3;
constexpr int kPlantedDims = 7;

struct Normal {
  std::uint64_t state;
  bool has_spare = false;
  double spare = 0.0;
  double operator()() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    auto u01 = [&] {
      return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
    };
    double u1 = u01(), u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
};

bool is_word_byte(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '\'' || u >= 0x80;
}

}  // namespace

PlantedConfig planted_config_from_json(const nlohmann::json& spec) {
  PlantedConfig c;
  const nlohmann::json p = spec.contains("planted") ? spec["planted"] : nlohmann::json::object();
  c.dim = p.value("dim", c.dim);
  c.layers = p.value("layers", c.layers);
  c.growth = p.value("growth", c.growth);
  c.mix = p.value("mix", c.mix);
  c.jitter = p.value("jitter", c.jitter);
  c.prior = p.value("prior", c.prior);
  c.sharpness = p.value("sharpness", c.sharpness);
  c.plan_bonus = p.value("plan_bonus", c.plan_bonus);
  c.off_grammar = p.value("off_grammar", c.off_grammar);
  c.seed = p.value("seed", c.seed);
  c.context_length = p.value("context_length", c.context_length);
  if (c.dim < kPlantedDims + 8) throw ConfigError("planted dim must be at least 15");
  if (c.layers < 1) throw ConfigError("planted model needs at least one block");
  return c;
}

nlohmann::json planted_config_to_json(const PlantedConfig& c) {
  return {{"dim", c.dim},         {"layers", c.layers},
          {"growth", c.growth},   {"mix", c.mix},
          {"jitter", c.jitter},   {"prior", c.prior},
          {"sharpness", c.sharpness}, {"plan_bonus", c.plan_bonus},
          {"off_grammar", c.off_grammar}, {"seed", c.seed},
          {"context_length", c.context_length}};
}

// ---------------------------------------------------------------- tokenizer

PlantedTokenizer::PlantedTokenizer(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) index_[pieces_[i]] = static_cast<int>(i);
  for (std::size_t i = 2; i < pieces_.size(); ++i) by_length_.push_back(static_cast<int>(i));
  std::stable_sort(by_length_.begin(), by_length_.end(), [&](int a, int b) {
    return pieces_[static_cast<std::size_t>(a)].size() > pieces_[static_cast<std::size_t>(b)].size();
  });
}

int PlantedTokenizer::id_of(const std::string& piece) const {
  auto it = index_.find(piece);
  return it == index_.end() ? unk_id() : it->second;
}

std::vector<Token> PlantedTokenizer::encode(std::string_view text) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    int match = -1;
    for (int id : by_length_) {
      const auto& p = pieces_[static_cast<std::size_t>(id)];
      if (text.compare(i, p.size(), p) != 0) continue;
      std::size_t end = i + p.size();
      bool word_piece = is_word_byte(p.back());
      if (word_piece && end < text.size() && is_word_byte(text[end])) continue;
      match = id;
      break;
    }
    if (match >= 0) {
      std::size_t end = i + pieces_[static_cast<std::size_t>(match)].size();
      out.push_back(Token{match, std::string(text.substr(i, end - i)), i, end});
      i = end;
      continue;
    }
    std::size_t end = i + 1;
    if (is_word_byte(c))
      while (end < text.size() && is_word_byte(text[end])) ++end;
    out.push_back(Token{unk_id(), std::string(text.substr(i, end - i)), i, end});
    i = end;
  }
  return out;
}

std::vector<Token> PlantedTokenizer::render(const std::vector<int>& ids) const {
  std::vector<Token> out;
  std::size_t pos = 0;
  bool line_start = true;
  for (int id : ids) {
    const std::string& p = pieces_.at(static_cast<std::size_t>(id));
    if (id == eos_id()) continue;
    bool attach = line_start || p == "." || p == ":" || p == "\n";
    if (!attach) ++pos;
    out.push_back(Token{id, p, pos, pos + p.size()});
    pos += p.size();
    line_start = p == "\n";
  }
  return out;
}

// -------------------------------------------------------------------- model

struct PlantedModel::Cache {
  std::vector<std::size_t> seg_start;        // first position of the segment
  std::vector<std::vector<Vector>> coords;   // [layer][pos] planted coordinates
  std::vector<std::vector<Vector>> pool_sum; // [layer][pos] segment prefix sums
  std::vector<Vector> read;                  // induction read per position (block 1)
};

const std::vector<std::string>& PlantedModel::train_subjects() { return kTrainSubjects; }
const std::vector<std::string>& PlantedModel::test_subjects() { return kTestSubjects; }
const std::vector<std::string>& PlantedModel::lemmas() { return kLemmas; }
std::string PlantedModel::object_of(std::size_t lemma) { return kObjects.at(lemma); }

std::string PlantedModel::verb_group(std::size_t lemma, Tense t, Aspect a) {
  auto entry = find_lemma(kLemmas.at(lemma));
  return conjugate(*entry, t, a, Agreement::third_singular);
}

PlantedModel::PlantedModel(PlantedConfig cfg) : cfg_(cfg) {
  std::vector<std::string> pieces{"<eos>", "<unk>", "\n", "\\\\", ".", ":"};
  info_.assign(pieces.size(), PieceInfo{});
  auto add = [&](const std::string& p, PieceInfo info) {
    pieces.push_back(p);
    info_.push_back(info);
    return static_cast<int>(pieces.size() - 1);
  };
  std::vector<std::string> subjects = kTrainSubjects;
  subjects.insert(subjects.end(), kTestSubjects.begin(), kTestSubjects.end());
  for (std::size_t s = 0; s < subjects.size(); ++s)
    subject_ids_.push_back(add(subjects[s], {Kind::subject, -1, static_cast<int>(s)}));
  for (std::size_t l = 0; l < kLemmas.size(); ++l)
    object_ids_.push_back(add(kObjects[l], {Kind::object, static_cast<int>(l)}));
  vg_ids_.assign(kLemmas.size(), std::vector<int>(12));
  for (std::size_t l = 0; l < kLemmas.size(); ++l)
    for (auto t : all_tenses)
      for (auto a : all_aspects)
        vg_ids_[l][static_cast<std::size_t>(t) * 4 + static_cast<std::size_t>(a)] =
            add(verb_group(l, t, a), {Kind::verb_group, static_cast<int>(l), -1, t, a});
  for (const auto& w : kInstructionWords) add(w, {Kind::instruction});
  tokenizer_ = std::make_unique<PlantedTokenizer>(pieces);
  sep_id_ = 3;
  period_id_ = 4;
  colon_id_ = 5;
  newline_id_ = 2;

  const int d = cfg_.dim;
  Normal normal{cfg_.seed};
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = normal();
  Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  basis_ = q.leftCols(kPlantedDims);
  Matrix lexical = q.rightCols(d - kPlantedDims);
  auto lexical_vector = [&] {
    Vector z(d - kPlantedDims);
    for (int i = 0; i < z.size(); ++i) z[i] = normal();
    return Vector(lexical * z / std::sqrt(static_cast<double>(z.size())));
  };

  embeddings_ = Matrix::Zero(d, static_cast<Eigen::Index>(pieces.size()));
  std::vector<Vector> lemma_lex;
  for (std::size_t l = 0; l < kLemmas.size(); ++l) lemma_lex.push_back(lexical_vector());
  const double k1[4] = {1, -1, 1, -1};
  const double k2[3] = {1, 0, -1};
  for (std::size_t id = 0; id < pieces.size(); ++id) {
    const auto& info = info_[id];
    auto col = embeddings_.col(static_cast<Eigen::Index>(id));
    switch (info.kind) {
      case Kind::subject:
      case Kind::object:
        col = lexical_vector();
        break;
      case Kind::verb_group: {
        auto l = static_cast<std::size_t>(info.lemma);
        double h1 = l % 2 == 0 ? 1.0 : -1.0;
        double h2 = (l / 2) % 2 == 0 ? 1.0 : -1.0;
        auto t = static_cast<std::size_t>(info.tense);
        auto a = static_cast<std::size_t>(info.aspect);
        double jt = cfg_.jitter * h1 * k1[a];
        double ja = cfg_.jitter * h2 * k2[t];
        col = (1.0 + jt) * basis_.col(static_cast<Eigen::Index>(t)) +
              (1.0 + ja) * basis_.col(static_cast<Eigen::Index>(kTenseDims + a)) + lemma_lex[l];
        break;
      }
      case Kind::instruction: {
        Vector v = lexical_vector();
        for (int k = 0; k < kPlantedDims; ++k) v += cfg_.prior * normal() * basis_.col(k);
        col = v;
        break;
      }
      default:
        break;
    }
  }
}

std::string PlantedModel::id() const {
  return fmt::format("planted(d={},L={},growth={},mix={},jitter={},prior={},seed={})", cfg_.dim,
                     cfg_.layers, cfg_.growth, cfg_.mix, cfg_.jitter, cfg_.prior, cfg_.seed);
}

Vector PlantedModel::planted_direction(const std::string& value) const {
  if (auto t = parse_tense(value)) return basis_.col(static_cast<Eigen::Index>(*t));
  if (auto a = parse_aspect(value)) return basis_.col(kTenseDims + static_cast<Eigen::Index>(*a));
  throw LabelError("no planted direction for '" + value + "'");
}

Vector PlantedModel::induction_offset(const DecodeState& state, const Cache& cache,
                                      std::size_t i) const {
  const auto& ids = state.ids;
  const std::size_t s = cache.seg_start[i];
  Vector read = Vector::Zero(kPlantedDims);
  if (ids[s] != sep_id_ && ids[s] != colon_id_) return read;
  // Content of the segment in front of the separator.
  if (s > 0 && ids[s - 1] != newline_id_) {
    for (std::size_t j = cache.seg_start[s - 1]; j < s; ++j) read += cache.coords[0][j];
  }
  if (ids[s] != sep_id_) return read;
  // Mean right-minus-left difference over earlier "left \\ right" lines.
  Vector delta = Vector::Zero(kPlantedDims);
  int examples = 0;
  std::size_t j = 0;
  std::size_t line_end = s;
  while (line_end > 0 && ids[line_end - 1] != newline_id_) --line_end;
  while (j < line_end) {
    std::size_t k = j;
    while (k < line_end && ids[k] != newline_id_) ++k;
    std::size_t sep = k;
    for (std::size_t m = j; m < k; ++m)
      if (ids[m] == sep_id_) {
        sep = m;
        break;
      }
    if (sep < k) {
      Vector left = Vector::Zero(kPlantedDims), right = Vector::Zero(kPlantedDims);
      for (std::size_t m = j; m < sep; ++m) left += cache.coords[0][m];
      for (std::size_t m = sep + 1; m < k; ++m) right += cache.coords[0][m];
      delta += right - left;
      ++examples;
    }
    j = k + 1;
  }
  if (examples > 0) read += delta / examples;
  return read;
}

Vector PlantedModel::extend(DecodeState& state, const std::vector<int>& ids, Phase phase,
                            std::size_t step, const InterventionHook* hook) const {
  if (!state.cache) state.cache = std::make_shared<Cache>();
  auto& cache = *std::static_pointer_cast<Cache>(state.cache);
  const int L = cfg_.layers;
  if (state.states.size() != static_cast<std::size_t>(L) + 1)
    state.states.assign(static_cast<std::size_t>(L) + 1, {});
  if (cache.coords.empty()) {
    cache.coords.assign(static_cast<std::size_t>(L) + 1, {});
    cache.pool_sum.assign(static_cast<std::size_t>(L) + 1, {});
  }
  if (state.ids.size() + ids.size() > cfg_.context_length)
    throw InputTooLongError("sequence would exceed the context length of " +
                            std::to_string(cfg_.context_length));
  for (int id : ids) {
    if (id < 0 || id >= tokenizer_->vocab_size()) throw ContractError("token id out of range");
    const std::size_t i = state.ids.size();
    state.ids.push_back(id);
    std::size_t seg = i;
    if (i > 0 && id != newline_id_ && id != sep_id_ && id != colon_id_ &&
        state.ids[i - 1] != newline_id_)
      seg = cache.seg_start[i - 1];
    cache.seg_start.push_back(seg);

    auto record = [&](std::size_t layer, const Vector& x) {
      state.states[layer].push_back(x);
      Vector c = basis_.transpose() * x;
      Vector sum = c;
      if (i > seg) sum += cache.pool_sum[layer][i - 1];
      cache.coords[layer].push_back(std::move(c));
      cache.pool_sum[layer].push_back(std::move(sum));
    };

    Vector x = embeddings_.col(id);
    if (hook && hook->layer == 0) apply_hook(*hook, phase, i, step, x);
    record(0, x);
    cache.read.push_back(induction_offset(state, cache, i));
    const double count = static_cast<double>(i - seg + 1);
    for (int l = 1; l <= L; ++l) {
      const auto prev = static_cast<std::size_t>(l - 1);
      Vector pool = cache.pool_sum[prev][i];
      double n = count;
      if (l == 1 && cache.read[i].squaredNorm() > 0.0) {
        pool += cache.read[i];
        n += 1.0;
      }
      x = cfg_.growth * (x + cfg_.mix * (basis_ * (pool / n)));
      if (hook && hook->layer == l) apply_hook(*hook, phase, i, step, x);
      record(static_cast<std::size_t>(l), x);
    }
  }
  if (state.ids.empty()) return initial_logits();
  return logits_at(state, cache, state.ids.size() - 1);
}

Vector PlantedModel::initial_logits() const {
  Vector logits = Vector::Constant(tokenizer_->vocab_size(), -cfg_.off_grammar);
  for (int s : subject_ids_) logits[s] = 0.0;
  return logits;
}

Vector PlantedModel::logits_at(const DecodeState& state, const Cache& cache, std::size_t i) const {
  return grammar_logits(state.ids, cache.seg_start[i], i,
                        cache.coords[static_cast<std::size_t>(cfg_.layers)][i]);
}

Vector PlantedModel::grammar_logits(const std::vector<int>& ids, std::size_t seg, std::size_t i,
                                    const Vector& coords) const {
  const int V = tokenizer_->vocab_size();
  const double off = -cfg_.off_grammar;
  if (ids[i] == newline_id_) return initial_logits();

  const bool answer = ids[seg] == sep_id_ || ids[seg] == colon_id_;
  const std::size_t a_start = answer ? seg + 1 : seg;
  const std::size_t k = i + 1 - a_start;

  // Plan: which subject and lemma the answer is about.
  int plan_subject = -1, plan_lemma = -1;
  if (answer && seg > 0 && ids[seg - 1] != newline_id_) {
    std::size_t from = seg - 1;
    while (from > 0 && ids[from - 1] != newline_id_) --from;
    if (ids[seg] == sep_id_) {
      for (std::size_t j = from; j < seg; ++j) {
        const auto& inf = info_[static_cast<std::size_t>(ids[j])];
        if (inf.kind == Kind::subject && plan_subject < 0) plan_subject = inf.subject;
        if (inf.kind == Kind::verb_group && plan_lemma < 0) plan_lemma = inf.lemma;
      }
    }
    if (plan_subject < 0 || plan_lemma < 0) {
      std::string key;
      for (std::size_t j = from; j <= seg; ++j) key += std::to_string(ids[j]) + ",";
      std::uint64_t h = fnv1a(key);
      plan_subject = static_cast<int>(h % subject_ids_.size());
      plan_lemma = static_cast<int>((h / subject_ids_.size()) % kLemmas.size());
    }
  }

  Vector logits = Vector::Constant(V, off);
  auto kind_at = [&](std::size_t pos) { return info_[static_cast<std::size_t>(ids[pos])].kind; };
  if (k == 0) {
    for (std::size_t s = 0; s < subject_ids_.size(); ++s)
      logits[subject_ids_[s]] = static_cast<int>(s) == plan_subject ? cfg_.plan_bonus : 0.0;
    return logits;
  }
  if (k == 1 && kind_at(a_start) == Kind::subject) {
    double scale = coords.cwiseAbs().maxCoeff();
    Vector r = scale > 1e-12 ? Vector(coords / scale) : Vector(Vector::Zero(kPlantedDims));
    for (std::size_t l = 0; l < kLemmas.size(); ++l)
      for (int t = 0; t < 3; ++t)
        for (int a = 0; a < 4; ++a)
          logits[vg_ids_[l][static_cast<std::size_t>(t * 4 + a)]] =
              cfg_.sharpness * (r[t] + r[kTenseDims + a]) +
              (static_cast<int>(l) == plan_lemma ? cfg_.plan_bonus : 0.0);
    return logits;
  }
  if (k == 2 && kind_at(a_start) == Kind::subject && kind_at(a_start + 1) == Kind::verb_group) {
    logits[object_ids_[static_cast<std::size_t>(
        info_[static_cast<std::size_t>(ids[a_start + 1])].lemma)]] = 0.0;
    return logits;
  }
  if (k == 3 && kind_at(a_start + 2) == Kind::object) {
    logits[period_id_] = 0.0;
    return logits;
  }
  if (k == 4 && ids[a_start + 3] == period_id_) {
    logits[tokenizer_->eos_id()] = 0.0;
    return logits;
  }
  return Vector::Zero(V);
}

LabeledCorpus planted_corpus(Split split) {
  const auto& subjects = split == Split::train ? kTrainSubjects : kTestSubjects;
  std::vector<LabeledSentence> out;
  for (const auto& s : subjects)
    for (std::size_t l = 0; l < kLemmas.size(); ++l)
      for (auto t : all_tenses)
        for (auto a : all_aspects)
          out.push_back(LabeledSentence{
              s + " " + PlantedModel::verb_group(l, t, a) + " " + kObjects[l] + ".", t, a,
              split == Split::train ? Source::synthetic : Source::benchmark});
  return LabeledCorpus(std::move(out), split,
                       std::string("planted-") + std::string(to_string(split)));
}

}  // namespace gramsteer
