#include "gramsteer/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "gramsteer/error.hpp"

namespace gramsteer {

namespace {
constexpr std::array<std::string_view, 5> kReasonNames{"no_verb", "unigram_rep", "bigram_rep",
                                                       "fourgram_rep", "low_diversity"};

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}
std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}
}  // namespace

std::string_view to_string(DegenerationReason r) {
  return kReasonNames[static_cast<std::size_t>(r)];
}

std::vector<std::string> ngram_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) flush();
    else if (!std::ispunct(c)) cur.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  return out;
}

double repetition_rate(const std::vector<std::string>& words, std::size_t n) {
  if (n == 0 || words.size() < n) return 0.0;
  std::set<std::vector<std::string>> distinct;
  std::size_t total = words.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i)
    distinct.emplace(words.begin() + static_cast<std::ptrdiff_t>(i),
                     words.begin() + static_cast<std::ptrdiff_t>(i + n));
  // Repeated over total rather than 1 - distinct/total, so boundary ratios
  // such as 1/5 compare exactly against the thresholds.
  return static_cast<double>(total - distinct.size()) / static_cast<double>(total);
}

NgramStats ngram_stats(std::string_view text) {
  auto words = ngram_words(text);
  NgramStats s;
  s.unigram_rate = repetition_rate(words, 1);
  s.bigram_rate = repetition_rate(words, 2);
  s.trigram_rate = repetition_rate(words, 3);
  s.fourgram_rate = repetition_rate(words, 4);
  s.diversity = (1 - s.bigram_rate) * (1 - s.trigram_rate) * (1 - s.fourgram_rate);
  return s;
}

DegenerationVerdict detect_degenerate(std::string_view text, const PosTagger& tagger,
                                      const DegenerationThresholds& t) {
  DegenerationVerdict v;
  v.stats = ngram_stats(text);
  auto tags = tagger.tag(text);
  if (count_tag(tags, PosTag::VERB) + count_tag(tags, PosTag::AUX) == 0)
    v.reasons.insert(DegenerationReason::no_verb);
  if (!(v.stats.unigram_rate < t.unigram)) v.reasons.insert(DegenerationReason::unigram_rep);
  if (!(v.stats.bigram_rate < t.bigram)) v.reasons.insert(DegenerationReason::bigram_rep);
  if (!(v.stats.fourgram_rate < t.fourgram)) v.reasons.insert(DegenerationReason::fourgram_rep);
  if (!(v.stats.diversity > t.diversity)) v.reasons.insert(DegenerationReason::low_diversity);
  v.is_degenerate = !v.reasons.empty();
  return v;
}

nlohmann::json EvaluationRecord::to_json() const {
  return {{"sample_id", sample_id},
          {"prompt", prompt},
          {"steered", steered},
          {"unsteered", unsteered},
          {"steered_tense", steered_labels.tense},
          {"steered_aspect", steered_labels.aspect},
          {"unsteered_tense", unsteered_labels.tense},
          {"unsteered_aspect", unsteered_labels.aspect},
          {"S", in_S},
          {"D", in_D},
          {"S_F", in_SF},
          {"degeneration_reasons", reasons},
          {"steered_perplexity", opt(steered_perplexity)},
          {"unsteered_perplexity", opt(unsteered_perplexity)},
          {"similarity", opt(similarity)}};
}

EvaluationRecord EvaluationRecord::from_json(const nlohmann::json& j) {
  EvaluationRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.steered = j.at("steered").get<std::string>();
  r.unsteered = j.at("unsteered").get<std::string>();
  r.steered_labels = {j.at("steered_tense").get<std::string>(),
                      j.at("steered_aspect").get<std::string>()};
  r.unsteered_labels = {j.at("unsteered_tense").get<std::string>(),
                        j.at("unsteered_aspect").get<std::string>()};
  r.in_S = j.at("S").get<bool>();
  r.in_D = j.at("D").get<bool>();
  r.in_SF = j.at("S_F").get<bool>();
  r.reasons = j.at("degeneration_reasons").get<std::vector<std::string>>();
  r.steered_perplexity = opt_double(j, "steered_perplexity");
  r.unsteered_perplexity = opt_double(j, "unsteered_perplexity");
  r.similarity = opt_double(j, "similarity");
  return r;
}

void mark_record(EvaluationRecord& r, LabelKind target_kind, const std::string& target_value,
                 const DegenerationVerdict& verdict) {
  if (target_kind == LabelKind::tense_aspect)
    throw ContractError("steering targets a single property");
  bool tense = target_kind == LabelKind::tense;
  const std::string& got = tense ? r.steered_labels.tense : r.steered_labels.aspect;
  const std::string& other_now = tense ? r.steered_labels.aspect : r.steered_labels.tense;
  const std::string& other_before = tense ? r.unsteered_labels.aspect : r.unsteered_labels.tense;
  r.in_S = got == target_value;
  r.in_SF = r.in_S && other_now == other_before;
  r.in_D = verdict.is_degenerate;
  r.reasons.clear();
  for (auto reason : verdict.reasons) r.reasons.emplace_back(to_string(reason));
}

Metrics compute_metrics(const std::vector<EvaluationRecord>& records, std::size_t N) {
  if (N == 0) throw ContractError("metrics need N > 0");
  std::size_t s = 0, d = 0, s_not_d = 0, sf_not_d = 0;
  for (const auto& r : records) {
    if (r.in_SF && !r.in_S) throw ContractError("record " + r.sample_id + " has S_F outside S");
    s += r.in_S;
    d += r.in_D;
    s_not_d += r.in_S && !r.in_D;
    sf_not_d += r.in_SF && !r.in_D;
  }
  auto n = static_cast<double>(N);
  return {static_cast<double>(s) / n, static_cast<double>(d) / n,
          static_cast<double>(s_not_d) / n, static_cast<double>(sf_not_d) / n};
}

double relative_perplexity_change(double steered_ppl, double unsteered_ppl) {
  if (!(unsteered_ppl > 0)) throw ContractError("unsteered perplexity must be positive");
  return (steered_ppl - unsteered_ppl) / unsteered_ppl;
}

double relative_perplexity_change(const std::string& steered, const std::string& unsteered,
                                  const CausalModel& model) {
  if (steered == unsteered) return 0.0;
  return relative_perplexity_change(sequence_perplexity(model, steered),
                                    sequence_perplexity(model, unsteered));
}

std::optional<TopicShift> topic_shift(
    const std::vector<std::pair<std::string, std::string>>& steered_pairs,
    const Similarity& similarity) {
  if (steered_pairs.empty()) return std::nullopt;
  std::vector<double> scores;
  for (const auto& [u, s] : steered_pairs) scores.push_back(similarity.score(u, s));
  double mean = 0;
  for (double x : scores) mean += x;
  mean /= static_cast<double>(scores.size());
  double var = 0;
  for (double x : scores) var += (x - mean) * (x - mean);
  var /= static_cast<double>(scores.size());
  return TopicShift{mean, std::sqrt(var), scores.size()};
}

std::string answer_text(std::string_view generated) {
  std::size_t pos = 0;
  while (pos <= generated.size()) {
    auto nl = generated.find('\n', pos);
    auto line = generated.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                   : nl - pos);
    auto b = line.find_first_not_of(" \t\r");
    if (b != std::string_view::npos) {
      auto e = line.find_last_not_of(" \t\r");
      return std::string(line.substr(b, e - b + 1));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return {};
}

std::optional<std::size_t> best_cell(const std::vector<GridCell>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    if (!c.metrics) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = cells[*best];
    double ec = c.metrics->efficacy, eb = b.metrics->efficacy;
    if (ec > eb || (ec == eb && (c.layer < b.layer || (c.layer == b.layer && c.alpha < b.alpha))))
      best = i;
  }
  return best;
}

namespace {
struct Baseline {
  const TaskPrompt* prompt;
  GenerationResult generation;
  std::string answer;
  OutputLabels labels;
  std::optional<double> perplexity;
};

std::optional<double> safe_perplexity(const CausalModel& model, const std::string& text) {
  if (text.empty()) return std::nullopt;
  try {
    return sequence_perplexity(model, text);
  } catch (const Error&) {
    return std::nullopt;
  }
}
}  // namespace

GridResult grid_search(const GridContext& ctx, const std::vector<TaskPrompt>& prompts,
                       const GridSpec& spec) {
  if (!ctx.model || !ctx.tagger || !ctx.tense_probe || !ctx.aspect_probe || !ctx.direction)
    throw ContractError("grid search context is incomplete");
  if (spec.layers.empty()) throw ConfigError("grid search needs at least one layer");
  if (spec.alphas.empty()) throw ConfigError("grid search needs at least one alpha");
  if (spec.target_kind == LabelKind::tense_aspect)
    throw ConfigError("steering target must be tense or aspect");
  const auto& model = *ctx.model;

  // Unsteered pass, shared by every cell.
  std::vector<Baseline> all;
  std::vector<UnsteeredCheck> checks;
  for (const auto& p : prompts) {
    Baseline b{&p, generate_greedy(model, p.prompt_text, spec.max_new_tokens), {}, {}, {}};
    b.answer = answer_text(b.generation.text);
    b.labels = label_output(b.answer, *ctx.tense_probe, *ctx.aspect_probe, model);
    checks.push_back({b.answer, b.labels.tense, b.labels.aspect});
    all.push_back(std::move(b));
  }
  auto kept = validate_unsteered(prompts, checks);
  spdlog::info("grid: {} of {} prompts pass unsteered validation", kept.size(), prompts.size());
  if (spec.perplexity)
    for (auto i : kept) all[i].perplexity = safe_perplexity(model, all[i].answer);

  GridResult result;
  result.spec = spec;
  result.N = kept.size();
  for (int layer : spec.layers) {
    for (double alpha : spec.alphas) {
      GridCell cell;
      cell.layer = layer;
      cell.alpha = alpha;
      try {
        if (kept.empty()) throw InsufficientDataError("no prompt survived unsteered validation");
        SteeringPlan plan;
        plan.method = spec.method;
        plan.layer = layer;
        plan.alpha = alpha;
        plan.target = ctx.direction(layer, spec.target_value);
        if (spec.method != SteeringMethod::TA) {
          if (!spec.source_value) throw ConfigError("method needs a source feature value");
          plan.source = ctx.direction(layer, *spec.source_value);
        }
        plan.schedule = {spec.schedule, ctx.tagger};
        double ppl_sum = 0;
        std::size_t ppl_n = 0;
        std::vector<std::pair<std::string, std::string>> pairs;
        for (auto i : kept) {
          const auto& b = all[i];
          auto out = steered_generate(model, b.prompt->prompt_text, plan, spec.max_new_tokens,
                                      &b.generation);
          EvaluationRecord r;
          r.sample_id = b.prompt->source ? b.prompt->source->text : b.prompt->prompt_text;
          r.prompt = b.prompt->prompt_text;
          r.steered = answer_text(out.text);
          r.unsteered = b.answer;
          r.steered_labels = r.steered == r.unsteered
                                 ? b.labels
                                 : label_output(r.steered, *ctx.tense_probe, *ctx.aspect_probe,
                                                model);
          r.unsteered_labels = b.labels;
          mark_record(r, spec.target_kind, spec.target_value,
                      detect_degenerate(r.steered, *ctx.tagger));
          r.unsteered_perplexity = b.perplexity;
          if (spec.perplexity)
            r.steered_perplexity =
                r.steered == r.unsteered ? b.perplexity : safe_perplexity(model, r.steered);
          if (r.steered_perplexity && r.unsteered_perplexity) {
            ppl_sum += relative_perplexity_change(*r.steered_perplexity, *r.unsteered_perplexity);
            ++ppl_n;
          }
          if (ctx.similarity) {
            r.similarity = ctx.similarity->score(r.unsteered, r.steered);
            if (r.in_S) pairs.emplace_back(r.unsteered, r.steered);
          }
          cell.records.push_back(std::move(r));
        }
        cell.metrics = compute_metrics(cell.records, result.N);
        if (ppl_n > 0) cell.perplexity_change = ppl_sum / static_cast<double>(ppl_n);
        if (ctx.similarity) cell.topic = topic_shift(pairs, *ctx.similarity);
      } catch (const Error& e) {
        cell.error = e.what();
        cell.metrics.reset();
        spdlog::warn("grid cell layer {} alpha {} failed: {}", layer, alpha, e.what());
      }
      if (ctx.on_cell) ctx.on_cell(cell);
      result.cells.push_back(std::move(cell));
    }
  }
  result.best = best_cell(result.cells);
  return result;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  return {{"steering_success", m.steering_success},
          {"degenerate_rate", m.degenerate_rate},
          {"efficacy", m.efficacy},
          {"selectivity", m.selectivity}};
}

nlohmann::json cell_to_json(const GridCell& c, bool with_records) {
  nlohmann::json j{{"layer", c.layer}, {"alpha", c.alpha}};
  j["metrics"] = c.metrics ? metrics_to_json(*c.metrics) : nlohmann::json(nullptr);
  j["relative_perplexity_change"] = opt(c.perplexity_change);
  if (c.topic)
    j["topic_shift"] = {{"mean", c.topic->mean}, {"std", c.topic->stddev},
                        {"count", c.topic->count}};
  else
    j["topic_shift"] = nullptr;
  j["error"] = c.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.error);
  if (with_records) {
    j["records"] = nlohmann::json::array();
    for (const auto& r : c.records) j["records"].push_back(r.to_json());
  }
  return j;
}

nlohmann::json grid_to_json(const GridResult& g, bool with_records) {
  nlohmann::json j;
  j["task"] = to_string(g.spec.task);
  j["target_kind"] = to_string(g.spec.target_kind);
  j["target"] = g.spec.target_value;
  j["source"] = g.spec.source_value ? nlohmann::json(*g.spec.source_value)
                                    : nlohmann::json(nullptr);
  j["method"] = to_string(g.spec.method);
  j["schedule"] = to_string(g.spec.schedule);
  j["layers"] = g.spec.layers;
  j["alphas"] = g.spec.alphas;
  j["N"] = g.N;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : g.cells) j["cells"].push_back(cell_to_json(c, with_records));
  j["best"] = g.best ? nlohmann::json(*g.best) : nlohmann::json(nullptr);
  return j;
}

}  // namespace gramsteer
