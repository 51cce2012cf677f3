#include "gramsteer/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gramsteer/corpus.hpp"
#include "gramsteer/error.hpp"
#include "gramsteer/evaluation.hpp"
#include "gramsteer/geometry.hpp"
#include "gramsteer/model.hpp"
#include "gramsteer/persistence.hpp"
#include "gramsteer/planted_model.hpp"
#include "gramsteer/probing.hpp"
#include "gramsteer/representation.hpp"
#include "gramsteer/steering.hpp"
#include "gramsteer/tasks.hpp"

namespace gramsteer {

namespace fs = std::filesystem;

namespace {

std::string path_in(const RunConfig& c, const std::string& rel) {
  return (fs::path(c.output_dir) / rel).string();
}

std::unique_ptr<CausalModel> load_model(const RunConfig& c) {
  return make_model(resolve_model_spec(c.model));
}

LabeledCorpus load_split(const std::string& path, Split split, const char* what) {
  if (path.empty()) throw ConfigError(std::string("config has no ") + what + " corpus path");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " corpus not found: " + path);
  return load_corpus(path, split);
}

Aggregation parse_agg(const std::string& s) {
  auto a = parse_aggregation(s);
  if (!a) throw ConfigError("unknown aggregation: " + s);
  return *a;
}

std::vector<Aggregation> config_strategies(const RunConfig& c) {
  std::vector<Aggregation> out;
  for (const auto& s : c.strategies) out.push_back(parse_agg(s));
  if (out.empty()) throw ConfigError("no aggregation strategies configured");
  return out;
}

std::vector<int> all_layers(int layer_count) {
  std::vector<int> v(static_cast<std::size_t>(layer_count) + 1);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<int> config_layers(const std::vector<int>& configured, int layer_count) {
  if (configured.empty()) return all_layers(layer_count);
  for (int l : configured)
    if (l < 0 || l > layer_count)
      throw ConfigError(fmt::format("layer {} outside 0..{}", l, layer_count));
  return configured;
}

LabelKind parse_kind(const std::string& s) {
  auto k = parse_label_kind(s);
  if (!k || *k == LabelKind::tense_aspect) throw ConfigError("target kind must be tense or aspect");
  return *k;
}

nlohmann::json corpus_meta(const LabeledCorpus& c) {
  nlohmann::json texts = nlohmann::json::array(), tense = nlohmann::json::array(),
                 aspect = nlohmann::json::array();
  for (const auto& s : c.sentences()) {
    texts.push_back(s.text);
    tense.push_back(to_string(s.tense));
    aspect.push_back(to_string(s.aspect));
  }
  return {{"texts", texts}, {"tense", tense}, {"aspect", aspect}};
}

std::vector<std::size_t> subset_indices(const LabeledCorpus& full, const LabeledCorpus& subset) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < full.size(); ++i) index[full[i].text] = i;
  std::vector<std::size_t> out;
  for (const auto& s : subset.sentences()) out.push_back(index.at(s.text));
  return out;
}

Matrix take(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

FeatureSet take(const FeatureSet& fs_in, const std::vector<std::size_t>& rows,
                const std::string& id) {
  FeatureSet out;
  out.corpus_id = id;
  for (const auto& [key, m] : fs_in.matrices) out.matrices[key] = take(m, rows);
  for (auto r : rows)
    out.token_counts.push_back(r < fs_in.token_counts.size() ? fs_in.token_counts[r] : 0);
  return out;
}

struct TrainView {
  FeatureSet features;
  std::vector<std::string> labels;
};

// The training rows for one target: the per-target balanced subset when the
// extract step recorded one, all rows otherwise.
TrainView train_view(const FeatureStore& store, LabelKind kind) {
  auto key = std::string(to_string(kind));
  auto all = store.meta.at("sentences").at(key).get<std::vector<std::string>>();
  std::vector<std::size_t> rows;
  if (store.meta.contains("subsets") && store.meta["subsets"].contains(key)) {
    rows = store.meta["subsets"][key].get<std::vector<std::size_t>>();
  } else {
    rows.resize(all.size());
    std::iota(rows.begin(), rows.end(), 0);
  }
  TrainView v;
  v.features = take(store.features, rows, store.features.corpus_id + "/" + key);
  for (auto r : rows) v.labels.push_back(all[r]);
  return v;
}

std::vector<std::string> store_labels(const FeatureStore& store, LabelKind kind) {
  return store.meta.at("sentences").at(std::string(to_string(kind))).get<std::vector<std::string>>();
}

void write_text(const std::string& path, const std::string& text) { write_file_atomic(path, text); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) { return fmt::format("{:.6g}", v); }

std::vector<std::pair<std::string, std::string>> contrast_pairs(LabelKind kind) {
  auto names = class_names(kind);
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) out.emplace_back(names[j], names[i]);
  return out;
}

}  // namespace

nlohmann::json cmd_extract(const RunConfig& c) {
  auto model = load_model(c);
  auto tagger = make_tagger(c.tagger, c.tagger_path);
  auto train = load_split(c.train_corpus, Split::train, "train");
  auto test = c.test_corpus.empty() ? std::optional<LabeledCorpus>{}
                                    : std::optional(load_split(c.test_corpus, Split::test, "test"));
  if (c.filter_single_verb) {
    train = filter_single_verb(train, *tagger);
    if (test) test = filter_single_verb(*test, *tagger);
  }
  auto layers = config_layers(c.layers, model->layer_count());
  auto strategies = config_strategies(c);
  const std::string hash = c.hash();

  nlohmann::json subsets = nlohmann::json::object();
  if (c.downsample_tense > 0)
    subsets["tense"] = subset_indices(
        train, balance_downsample(train, LabelKind::tense, c.downsample_tense, c.seed_downsample));
  if (c.downsample_aspect > 0)
    subsets["aspect"] = subset_indices(
        train,
        balance_downsample(train, LabelKind::aspect, c.downsample_aspect, c.seed_downsample));

  nlohmann::json summary{{"config_hash", hash}, {"model", model->id()}};
  auto save = [&](const LabeledCorpus& corpus, const std::string& name,
                  const nlohmann::json& extra) {
    spdlog::info("extract: {} sentences from {} split", corpus.size(), name);
    auto features = extract_features(*model, corpus, layers, strategies);
    nlohmann::json meta{{"config_hash", hash},
                        {"model", model->id()},
                        {"split", name},
                        {"layers", layers},
                        {"strategies", c.strategies},
                        {"sentences", corpus_meta(corpus)}};
    for (const auto& [k, v] : extra.items()) meta[k] = v;
    save_feature_store(path_in(c, "features/" + name), features, meta);
    summary[name] = {{"rows", corpus.size()}, {"matrices", features.matrices.size()}};
  };
  save(train, "train", {{"subsets", subsets}});
  if (test) save(*test, "test", nlohmann::json::object());

  auto profile = norm_profile(*model, test ? *test : train, {});
  write_json(path_in(c, "features/norm_profile.json"),
             {{"config_hash", hash}, {"mean_final_token_norm", profile.mean_final_norm}});
  return summary;
}

nlohmann::json cmd_probe(const RunConfig& c) {
  auto train = load_feature_store(path_in(c, "features/train"));
  std::optional<FeatureStore> test;
  if (fs::exists(path_in(c, "features/test.json"))) test = load_feature_store(path_in(c, "features/test"));
  auto layers = train.meta.at("layers").get<std::vector<int>>();
  auto strategies = config_strategies(c);
  ProbeOptions opts{c.probe_l2, c.probe_tolerance, c.probe_max_iterations, 10};
  const std::string hash = c.hash();

  nlohmann::json summary{{"config_hash", hash}};
  std::string csv = "target,layer,strategy,holdout_macro_f1,test_macro_f1\n";
  for (auto kind : {LabelKind::tense, LabelKind::aspect}) {
    auto view = train_view(train, kind);
    std::vector<std::string> test_labels;
    if (test) test_labels = store_labels(*test, kind);
    auto sweep = layer_sweep(view.features, view.labels, test ? &test->features : nullptr,
                             test_labels, kind, layers, strategies, opts, c.holdout_fraction,
                             c.seed_holdout);
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : sweep.cells) {
      cells.push_back({{"layer", cell.layer},
                       {"strategy", to_string(cell.strategy)},
                       {"holdout_macro_f1", cell.holdout_macro_f1},
                       {"test_macro_f1", cell.test_macro_f1}});
      csv += fmt::format("{},{},{},{},{}\n", to_string(kind), cell.layer,
                         to_string(cell.strategy), num(cell.holdout_macro_f1),
                         num(cell.test_macro_f1));
    }
    nlohmann::json report = nullptr;
    if (test) {
      const auto& r = sweep.best_test_report;
      report = {{"macro_f1", r.macro_f1}, {"f1", r.f1}, {"support", r.support},
                {"confusion", r.confusion}};
    }
    nlohmann::json doc{{"config_hash", hash},
                       {"target", to_string(kind)},
                       {"feature_store", train.meta.at("config_hash")},
                       {"probe", probe_to_json(sweep.best_probe)},
                       {"sweep", cells},
                       {"best_test_report", report}};
    write_json(path_in(c, fmt::format("probes/{}.json", to_string(kind))), doc);
    const auto& best = sweep.cells[sweep.best];
    summary[std::string(to_string(kind))] = {
        {"best_layer", best.layer},
        {"best_strategy", to_string(best.strategy)},
        {"holdout_macro_f1", best.holdout_macro_f1},
        {"test_macro_f1", test ? nlohmann::json(sweep.best_test_report.macro_f1)
                               : nlohmann::json(nullptr)}};
    spdlog::info("probe {}: best layer {} ({}), holdout macro F1 {:.4f}", to_string(kind),
                 best.layer, to_string(best.strategy), best.holdout_macro_f1);
  }
  write_text(path_in(c, "probes/sweep.csv"), csv);
  return summary;
}

nlohmann::json cmd_directions(const RunConfig& c) {
  auto train = load_feature_store(path_in(c, "features/train"));
  std::optional<FeatureStore> test;
  if (fs::exists(path_in(c, "features/test.json"))) test = load_feature_store(path_in(c, "features/test"));
  auto layers = train.meta.at("layers").get<std::vector<int>>();
  auto strategy = parse_agg(c.aggregation);
  const std::string hash = c.hash();

  // Planted ground truth, when available, for the recovery diagnostic.
  std::unique_ptr<PlantedModel> planted;
  if (c.model.value("kind", "") == "planted")
    planted = std::make_unique<PlantedModel>(planted_config_from_json(c.model));

  nlohmann::json diagnostics{{"config_hash", hash}, {"strategy", c.aggregation},
                             {"cutoff", c.pinv_cutoff}, {"layers", nlohmann::json::array()}};
  nlohmann::json summary{{"config_hash", hash}, {"errors", nlohmann::json::array()}};
  double min_recovery = 1.0, max_contrast_cos = 0.0;

  for (int layer : layers) {
    nlohmann::json dir_doc{{"config_hash", hash},
                           {"layer", layer},
                           {"strategy", c.aggregation},
                           {"corpus_id", train.features.corpus_id},
                           {"cutoff", c.pinv_cutoff},
                           {"directions", nlohmann::json::object()}};
    nlohmann::json layer_diag{{"layer", layer}};
    std::map<std::string, ConceptDirection> found;
    std::map<LabelKind, CenteringStats> centering;

    for (auto kind : {LabelKind::tense, LabelKind::aspect}) {
      auto view = train_view(train, kind);
      const Matrix& rows = view.features.at(layer, strategy);
      auto stats = fit_centering_rows(rows, layer, strategy, view.features.corpus_id);
      centering[kind] = stats;
      Matrix centered = stats.apply_rows(rows);
      dir_doc["centering"][std::string(to_string(kind))] = stats.id();
      for (const auto& value : class_names(kind)) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < view.labels.size(); ++i)
          if (view.labels[i] == value) idx.push_back(i);
        try {
          auto cs = class_stats(take(centered, idx), c.pinv_cutoff);
          auto d = estimate_direction(cs, value, layer);
          auto rec = direction_to_json(d);
          rec["rank"] = cs.rank;
          rec["samples"] = cs.sample_count;
          dir_doc["directions"][value] = rec;
          found.emplace(value, std::move(d));
        } catch (const Error& e) {
          summary["errors"].push_back(
              {{"layer", layer}, {"feature", value}, {"error", e.what()}});
          spdlog::warn("directions: layer {} feature {}: {}", layer, value, e.what());
        }
      }
    }
    write_json(path_in(c, fmt::format("directions/layer_{}.json", layer)), dir_doc);

    // Pairwise cosines of unit directions and of binary contrasts.
    nlohmann::json cos = nlohmann::json::object();
    for (auto a = found.begin(); a != found.end(); ++a)
      for (auto b = std::next(a); b != found.end(); ++b)
        cos[a->first + "|" + b->first] = direction_cosine(a->second.unit, b->second.unit);
    layer_diag["unit_cosines"] = cos;

    std::map<std::string, Vector> contrasts;
    std::map<std::string, LabelKind> contrast_kind;
    for (auto kind : {LabelKind::tense, LabelKind::aspect})
      for (const auto& [pos, neg] : contrast_pairs(kind))
        if (found.count(pos) && found.count(neg)) {
          auto name = pos + "-" + neg;
          contrasts[name] = binary_contrast(found.at(pos), found.at(neg)).vector;
          contrast_kind[name] = kind;
        }
    nlohmann::json ccos = nlohmann::json::object();
    double layer_max = 0.0;
    for (const auto& [na, va] : contrasts)
      for (const auto& [nb, vb] : contrasts) {
        if (contrast_kind[na] != LabelKind::tense || contrast_kind[nb] != LabelKind::aspect)
          continue;
        double v = direction_cosine(va, vb);
        ccos[na + "|" + nb] = v;
        layer_max = std::max(layer_max, std::abs(v));
      }
    layer_diag["tense_aspect_contrast_cosines"] = ccos;
    layer_diag["max_abs_tense_aspect_contrast_cosine"] = layer_max;
    max_contrast_cos = std::max(max_contrast_cos, layer_max);

    // Projections of held-out (or training) points onto each parent's unit directions.
    nlohmann::json quality = nlohmann::json::object();
    for (auto kind : {LabelKind::tense, LabelKind::aspect}) {
      std::vector<Vector> axes;
      std::vector<std::string> names;
      for (const auto& v : class_names(kind))
        if (found.count(v)) {
          axes.push_back(found.at(v).unit);
          names.push_back(v);
        }
      if (axes.empty()) continue;
      Matrix points;
      std::vector<std::string> labels;
      if (test) {
        points = centering[kind].apply_rows(test->features.at(layer, strategy));
        labels = store_labels(*test, kind);
      } else {
        auto view = train_view(train, kind);
        points = centering[kind].apply_rows(view.features.at(layer, strategy));
        labels = view.labels;
      }
      Matrix coords = project(points, axes);
      std::string csv = "label";
      for (const auto& n : names) csv += "," + n;
      csv += "\n";
      for (Eigen::Index r = 0; r < coords.rows(); ++r) {
        csv += labels[static_cast<std::size_t>(r)];
        for (Eigen::Index k = 0; k < coords.cols(); ++k) csv += "," + num(coords(r, k));
        csv += "\n";
      }
      write_text(path_in(c, fmt::format("directions/projection_layer{}_{}.csv", layer,
                                        to_string(kind))),
                 csv);
      try {
        auto q = cluster_quality(coords, labels);
        quality[std::string(to_string(kind))] = {{"explained_variance", q.explained_variance},
                                                 {"fisher_ratio", q.fisher_ratio},
                                                 {"silhouette", q.silhouette}};
      } catch (const Error& e) {
        quality[std::string(to_string(kind))] = {{"error", e.what()}};
      }
    }
    layer_diag["cluster_quality"] = quality;

    if (planted) {
      nlohmann::json rec = nlohmann::json::object();
      for (const auto& [value, d] : found) {
        double v = std::abs(direction_cosine(d.unit, planted->planted_direction(value)));
        rec[value] = v;
        min_recovery = std::min(min_recovery, v);
      }
      layer_diag["planted_recovery_abs_cosine"] = rec;
    }
    diagnostics["layers"].push_back(layer_diag);
  }
  write_json(path_in(c, "directions/diagnostics.json"), diagnostics);
  summary["max_abs_tense_aspect_contrast_cosine"] = max_contrast_cos;
  if (planted) summary["min_planted_recovery_abs_cosine"] = min_recovery;
  summary["layers"] = layers;
  return summary;
}

std::string steer_run_name(const RunConfig& c) {
  std::string name = fmt::format("{}_{}_{}", c.task, c.target, c.method);
  if (c.source) name += "_from_" + *c.source;
  return name + "_" + c.schedule;
}

nlohmann::json cmd_steer(const RunConfig& c) {
  const std::string hash = c.hash();
  auto model = load_model(c);
  auto tagger = make_tagger(c.tagger, c.tagger_path);

  GridSpec spec;
  auto task = parse_task(c.task);
  if (!task) throw ConfigError("unknown task: " + c.task);
  spec.task = *task;
  spec.target_kind = parse_kind(c.target_kind);
  auto values = class_names(spec.target_kind);
  if (std::find(values.begin(), values.end(), c.target) == values.end())
    throw ConfigError("target '" + c.target + "' is not a " + c.target_kind + " value");
  spec.target_value = c.target;
  spec.source_value = c.source;
  auto method = parse_method(c.method);
  if (!method) throw ConfigError("unknown steering method: " + c.method);
  spec.method = *method;
  auto schedule = parse_schedule_mode(c.schedule);
  if (!schedule) throw ConfigError("unknown schedule mode: " + c.schedule);
  spec.schedule = *schedule;
  spec.layers = config_layers(c.steer_layers, model->layer_count());
  spec.alphas = c.alphas;
  spec.max_new_tokens = c.max_new_tokens;
  spec.perplexity = c.perplexity;

  // Persisted inputs only: probes and per-layer direction files.
  auto load_probe = [&](const char* kind) {
    auto path = path_in(c, fmt::format("probes/{}.json", kind));
    if (!fs::exists(path)) throw ConfigError("missing probe file: " + path);
    return probe_from_json(read_json(path).at("probe"));
  };
  Probe tense_probe = load_probe("tense");
  Probe aspect_probe = load_probe("aspect");
  std::map<int, std::map<std::string, ConceptDirection>> directions;
  nlohmann::json direction_hashes = nlohmann::json::object();
  for (int layer : spec.layers) {
    auto path = path_in(c, fmt::format("directions/layer_{}.json", layer));
    if (!fs::exists(path)) throw ConfigError("missing direction file: " + path);
    auto doc = read_json(path);
    direction_hashes[std::to_string(layer)] = doc.at("config_hash");
    for (const auto& [value, rec] : doc.at("directions").items())
      directions[layer].emplace(value, direction_from_json(rec));
  }

  std::vector<TaskPrompt> prompts;
  if (spec.task == TaskKind::random_sentence) {
    prompts = random_sentence_prompts();
  } else {
    auto test = load_split(c.test_corpus, Split::test, "test");
    auto pool = build_steering_testset(test, spec.target_kind, spec.target_value);
    std::optional<FeatureMapping> mapping;
    if (c.mapping) {
      auto kind = parse_label_kind(c.mapping->value("label", ""));
      if (!kind) throw ConfigError("mapping.label must be tense or aspect");
      mapping = FeatureMapping{*kind, c.mapping->value("from", ""), c.mapping->value("to", "")};
    }
    prompts = build_task_prompts(spec.task, pool, mapping, *tagger, c.seed_few_shot);
  }
  if (prompts.empty()) throw InsufficientDataError("no prompts could be built for " + c.task);

  std::unique_ptr<Similarity> similarity = make_similarity(c.similarity, c.similarity_arg);
  const std::string run = steer_run_name(c);
  const std::string dir = "steer/" + run;
  {
    std::string lines;
    for (const auto& p : prompts) lines += p.to_json().dump() + "\n";
    write_text(path_in(c, dir + "/prompts.jsonl"), lines);
  }

  GridContext ctx;
  ctx.model = model.get();
  ctx.tagger = tagger.get();
  ctx.tense_probe = &tense_probe;
  ctx.aspect_probe = &aspect_probe;
  ctx.similarity = similarity.get();
  ctx.direction = [&](int layer, const std::string& value) -> ConceptDirection {
    auto it = directions.find(layer);
    if (it == directions.end() || !it->second.count(value))
      throw DegenerateDirectionError(fmt::format("no direction for {} at layer {}", value, layer));
    return it->second.at(value);
  };
  ctx.on_cell = [&](const GridCell& cell) {
    auto j = cell_to_json(cell);
    j["config_hash"] = hash;
    write_json(path_in(c, fmt::format("{}/cells/layer{}_alpha{}.json", dir, cell.layer,
                                      num(cell.alpha))),
               j);
  };
  auto grid = grid_search(ctx, prompts, spec);

  auto doc = grid_to_json(grid, false);
  doc["config_hash"] = hash;
  doc["config"] = c.to_json();
  doc["direction_config_hashes"] = direction_hashes;
  doc["probe_layers"] = {{"tense", tense_probe.layer}, {"aspect", aspect_probe.layer}};
  write_json(path_in(c, dir + "/grid.json"), doc);

  std::string csv =
      "layer,alpha,steering_success,degenerate_rate,efficacy,selectivity,"
      "relative_perplexity_change,topic_shift_mean,error\n";
  for (const auto& cell : grid.cells) {
    if (cell.metrics)
      csv += fmt::format("{},{},{},{},{},{},{},{},\n", cell.layer, num(cell.alpha),
                         num(cell.metrics->steering_success), num(cell.metrics->degenerate_rate),
                         num(cell.metrics->efficacy), num(cell.metrics->selectivity),
                         cell.perplexity_change ? num(*cell.perplexity_change) : "",
                         cell.topic ? num(cell.topic->mean) : "");
    else
      csv += fmt::format("{},{},,,,,,,{}\n", cell.layer, num(cell.alpha), csv_escape(cell.error));
  }
  write_text(path_in(c, dir + "/summary.csv"), csv);

  nlohmann::json summary{{"config_hash", hash}, {"run", run}, {"N", grid.N},
                         {"prompts", prompts.size()}};
  if (grid.best) {
    const auto& b = grid.cells[*grid.best];
    summary["best"] = {{"layer", b.layer}, {"alpha", b.alpha},
                       {"metrics", metrics_to_json(*b.metrics)}};
  }
  return summary;
}

nlohmann::json cmd_report(const RunConfig& c) {
  const std::string hash = c.hash();
  auto root = fs::path(path_in(c, "steer"));
  if (!fs::exists(root)) throw ConfigError("no steering results under " + root.string());
  std::vector<fs::path> grids;
  for (const auto& entry : fs::directory_iterator(root))
    if (fs::exists(entry.path() / "grid.json")) grids.push_back(entry.path() / "grid.json");
  std::sort(grids.begin(), grids.end());
  if (grids.empty()) throw ConfigError("no grid.json files under " + root.string());

  std::vector<double> norms;
  if (fs::exists(path_in(c, "features/norm_profile.json")))
    norms = read_json(path_in(c, "features/norm_profile.json"))
                .at("mean_final_token_norm")
                .get<std::vector<double>>();

  std::string cmp =
      "run,task,target_kind,target,method,schedule,N,best_layer,best_alpha,steering_success,"
      "degenerate_rate,efficacy,selectivity,relative_perplexity_change,topic_shift_mean,"
      "topic_shift_std\n";
  std::string md =
      "| run | best layer | best alpha | success | degenerate | efficacy | selectivity |\n"
      "|---|---|---|---|---|---|---|\n";
  std::string norm_csv = "run,layer,mean_final_token_norm,best_alpha,efficacy\n";
  for (const auto& path : grids) {
    auto g = read_json(path.string());
    std::string run = path.parent_path().filename().string();
    std::string best_cols = ",,,,,,,,";
    std::string md_cols = " - | - | - | - | - | - |";
    if (!g.at("best").is_null()) {
      const auto& cell = g["cells"][g["best"].get<std::size_t>()];
      const auto& m = cell["metrics"];
      auto opt_num = [](const nlohmann::json& v) {
        return v.is_null() ? std::string() : num(v.get<double>());
      };
      const auto& topic = cell["topic_shift"];
      best_cols = fmt::format(
          "{},{},{},{},{},{},{},{},{}", cell["layer"].get<int>(), num(cell["alpha"].get<double>()),
          num(m["steering_success"].get<double>()), num(m["degenerate_rate"].get<double>()),
          num(m["efficacy"].get<double>()), num(m["selectivity"].get<double>()),
          opt_num(cell["relative_perplexity_change"]),
          topic.is_null() ? "" : num(topic["mean"].get<double>()),
          topic.is_null() ? "" : num(topic["std"].get<double>()));
      md_cols = fmt::format(" {} | {} | {} | {} | {} | {} |", cell["layer"].get<int>(),
                            num(cell["alpha"].get<double>()),
                            num(m["steering_success"].get<double>()),
                            num(m["degenerate_rate"].get<double>()),
                            num(m["efficacy"].get<double>()), num(m["selectivity"].get<double>()));
    }
    cmp += fmt::format("{},{},{},{},{},{},{},{}\n", csv_escape(run), g["task"].get<std::string>(),
                       g["target_kind"].get<std::string>(), g["target"].get<std::string>(),
                       g["method"].get<std::string>(), g["schedule"].get<std::string>(),
                       g["N"].get<std::size_t>(), best_cols);
    md += "| " + run + " |" + md_cols + "\n";

    // Best alpha per layer next to the layer's residual norm.
    std::map<int, std::pair<double, double>> per_layer;  // layer -> (efficacy, alpha)
    for (const auto& cell : g["cells"]) {
      if (cell["metrics"].is_null()) continue;
      int layer = cell["layer"].get<int>();
      double eff = cell["metrics"]["efficacy"].get<double>();
      double alpha = cell["alpha"].get<double>();
      auto it = per_layer.find(layer);
      if (it == per_layer.end() || eff > it->second.first ||
          (eff == it->second.first && alpha < it->second.second))
        per_layer[layer] = {eff, alpha};
    }
    for (const auto& [layer, best] : per_layer) {
      std::string norm = static_cast<std::size_t>(layer) < norms.size()
                             ? num(norms[static_cast<std::size_t>(layer)])
                             : "";
      norm_csv += fmt::format("{},{},{},{},{}\n", csv_escape(run), layer, norm, num(best.second),
                              num(best.first));
    }
  }
  write_text(path_in(c, "report/comparison.csv"), cmp);
  write_text(path_in(c, "report/comparison.md"), md);
  write_text(path_in(c, "report/norm_vs_alpha.csv"), norm_csv);
  write_json(path_in(c, "report/report.json"),
             {{"config_hash", hash}, {"runs", grids.size()}});
  return {{"config_hash", hash}, {"runs", grids.size()}};
}

nlohmann::json write_planted_fixture(const std::string& dir_in) {
  const std::string dir = fs::absolute(dir_in).lexically_normal().string();
  fs::create_directories(dir);
  auto train = planted_corpus(Split::train);
  auto test = planted_corpus(Split::test);
  save_corpus(train, (fs::path(dir) / "train.jsonl").string());
  save_corpus(test, (fs::path(dir) / "test.jsonl").string());
  RunConfig c;
  c.model = {{"kind", "planted"}, {"planted", planted_config_to_json(PlantedConfig{})}};
  c.train_corpus = (fs::path(dir) / "train.jsonl").string();
  c.test_corpus = (fs::path(dir) / "test.jsonl").string();
  c.output_dir = (fs::path(dir) / "run").string();
  c.strategies = {"norm_sum", "mean", "final_token"};
  c.target = "past";
  c.steer_layers = {0, 3, 6};
  c.alphas = {0, 4, 16, 64, 256};
  c.max_new_tokens = 8;
  write_json((fs::path(dir) / "config.json").string(), c.to_json());
  return {{"train", train.size()}, {"test", test.size()}, {"config", c.to_json()}};
}

}  // namespace gramsteer
