#include "gramsteer/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "gramsteer/error.hpp"
#include "gramsteer/persistence.hpp"

namespace gramsteer {

namespace {
template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j[key].is_object()) throw ConfigError(std::string("config section '") + key +
                                             "' must be an object");
  return j[key];
}

void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                    const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ConfigError("unknown config key '" + where + k + "'");
}
}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["corpus"] = {{"train", train_corpus},
                 {"test", test_corpus},
                 {"tagger", tagger},
                 {"tagger_path", tagger_path},
                 {"filter_single_verb", filter_single_verb},
                 {"downsample_tense", downsample_tense},
                 {"downsample_aspect", downsample_aspect}};
  j["output_dir"] = output_dir;
  j["representation"] = {{"layers", layers}, {"strategies", strategies},
                         {"aggregation", aggregation}};
  j["probe"] = {{"l2", probe_l2},
                {"tolerance", probe_tolerance},
                {"max_iterations", probe_max_iterations},
                {"holdout_fraction", holdout_fraction}};
  j["directions"] = {{"cutoff", pinv_cutoff}};
  j["steering"] = {{"task", task},
                   {"target_kind", target_kind},
                   {"target", target},
                   {"source", source ? nlohmann::json(*source) : nlohmann::json(nullptr)},
                   {"method", method},
                   {"schedule", schedule},
                   {"layers", steer_layers},
                   {"alphas", alphas},
                   {"max_new_tokens", max_new_tokens},
                   {"mapping", mapping ? *mapping : nlohmann::json(nullptr)},
                   {"similarity", similarity},
                   {"similarity_arg", similarity_arg},
                   {"perplexity", perplexity}};
  j["seeds"] = {{"downsample", seed_downsample},
                {"holdout", seed_holdout},
                {"few_shot", seed_few_shot}};
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"model", "corpus", "output_dir", "representation", "probe", "directions",
                     "steering", "seeds"},
                 "");
  RunConfig c;
  if (j.contains("model")) {
    if (!j["model"].is_object() || !j["model"].contains("kind"))
      throw ConfigError("config 'model' needs a 'kind'");
    c.model = j["model"];
  }
  const auto& corpus = section(j, "corpus");
  reject_unknown(corpus, {"train", "test", "tagger", "tagger_path", "filter_single_verb",
                          "downsample_tense", "downsample_aspect"},
                 "corpus.");
  read(corpus, "train", c.train_corpus);
  read(corpus, "test", c.test_corpus);
  read(corpus, "tagger", c.tagger);
  read(corpus, "tagger_path", c.tagger_path);
  read(corpus, "filter_single_verb", c.filter_single_verb);
  read(corpus, "downsample_tense", c.downsample_tense);
  read(corpus, "downsample_aspect", c.downsample_aspect);
  read(j, "output_dir", c.output_dir);

  const auto& rep = section(j, "representation");
  reject_unknown(rep, {"layers", "strategies", "aggregation"}, "representation.");
  read(rep, "layers", c.layers);
  read(rep, "strategies", c.strategies);
  read(rep, "aggregation", c.aggregation);

  const auto& probe = section(j, "probe");
  reject_unknown(probe, {"l2", "tolerance", "max_iterations", "holdout_fraction"}, "probe.");
  read(probe, "l2", c.probe_l2);
  read(probe, "tolerance", c.probe_tolerance);
  read(probe, "max_iterations", c.probe_max_iterations);
  read(probe, "holdout_fraction", c.holdout_fraction);

  const auto& dir = section(j, "directions");
  reject_unknown(dir, {"cutoff"}, "directions.");
  read(dir, "cutoff", c.pinv_cutoff);

  const auto& st = section(j, "steering");
  reject_unknown(st, {"task", "target_kind", "target", "source", "method", "schedule", "layers",
                      "alphas", "max_new_tokens", "mapping", "similarity", "similarity_arg",
                      "perplexity"},
                 "steering.");
  read(st, "task", c.task);
  read(st, "target_kind", c.target_kind);
  read(st, "target", c.target);
  if (st.contains("source") && !st["source"].is_null()) c.source = st["source"].get<std::string>();
  read(st, "method", c.method);
  read(st, "schedule", c.schedule);
  read(st, "layers", c.steer_layers);
  read(st, "alphas", c.alphas);
  read(st, "max_new_tokens", c.max_new_tokens);
  if (st.contains("mapping") && !st["mapping"].is_null()) c.mapping = st["mapping"];
  read(st, "similarity", c.similarity);
  read(st, "similarity_arg", c.similarity_arg);
  read(st, "perplexity", c.perplexity);

  const auto& seeds = section(j, "seeds");
  reject_unknown(seeds, {"downsample", "holdout", "few_shot"}, "seeds.");
  read(seeds, "downsample", c.seed_downsample);
  read(seeds, "holdout", c.seed_holdout);
  read(seeds, "few_shot", c.seed_few_shot);
  return c;
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

RunConfig load_config(const std::string& path) { return load_config(path, {}); }

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value: " + assignment);
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;
  }
  nlohmann::json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    auto dot = key.find('.', pos);
    std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError("empty path segment in override: " + key);
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override path crosses a non-object: " + key);
      *node = nlohmann::json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = parsed;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::object();
  if (!path.empty()) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    try {
      doc = read_json(path);
    } catch (const SchemaError& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return RunConfig::from_json(doc);
}

nlohmann::json resolve_model_spec(const nlohmann::json& model) {
  nlohmann::json out = model;
  if (!out.contains("checkpoint") || !out["checkpoint"].is_string()) return out;
  std::filesystem::path p(out["checkpoint"].get<std::string>());
  if (p.is_relative()) {
    const char* root = std::getenv(kCheckpointEnv);
    if (!root || !*root)
      throw ConfigError(std::string("relative checkpoint path needs ") + kCheckpointEnv);
    out["checkpoint"] = (std::filesystem::path(root) / p).string();
  }
  return out;
}

}  // namespace gramsteer
