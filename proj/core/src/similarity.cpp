#include "gramsteer/similarity.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gramsteer/error.hpp"
#include "gramsteer/evaluation.hpp"

namespace gramsteer {

double LexicalOverlap::score(const std::string& a, const std::string& b) const {
  auto wa = ngram_words(a);
  auto wb = ngram_words(b);
  if (wa.empty() && wb.empty()) return 1.0;
  if (wa.empty() || wb.empty()) return 0.0;
  std::map<std::string, int> ca, cb;
  for (const auto& w : wa) ++ca[w];
  for (const auto& w : wb) ++cb[w];
  double common = 0;
  for (const auto& [w, n] : ca) {
    auto it = cb.find(w);
    if (it != cb.end()) common += std::min(n, it->second);
  }
  double p = common / static_cast<double>(wb.size());
  double r = common / static_cast<double>(wa.size());
  return p + r == 0 ? 0.0 : 2 * p * r / (p + r);
}

PrecomputedSimilarity::PrecomputedSimilarity(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open similarity table " + path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      table_[{j.at("a").get<std::string>(), j.at("b").get<std::string>()}] =
          j.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

double PrecomputedSimilarity::score(const std::string& a, const std::string& b) const {
  auto it = table_.find({a, b});
  if (it == table_.end()) it = table_.find({b, a});
  if (it == table_.end()) throw ContractError("no precomputed similarity for pair");
  return it->second;
}

double ExternalCommandSimilarity::score(const std::string& a, const std::string& b) const {
  auto dir = std::filesystem::temp_directory_path();
  auto file = dir / ("gramsteer_pair_" + std::to_string(::getpid()) + ".json");
  {
    std::ofstream out(file);
    out << nlohmann::json{{"a", a}, {"b", b}}.dump();
  }
  std::string cmd = command_ + " '" + file.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) throw IoError("cannot run " + command_);
  std::string output;
  std::array<char, 256> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) output += buf.data();
  int status = ::pclose(pipe);
  std::filesystem::remove(file);
  if (status != 0) throw IoError("similarity command failed: " + command_);
  try {
    return std::stod(output);
  } catch (const std::exception&) {
    throw IoError("similarity command printed no number: " + output);
  }
}

std::unique_ptr<Similarity> make_similarity(const std::string& kind, const std::string& arg) {
  if (kind == "lexical_overlap") return std::make_unique<LexicalOverlap>();
  if (kind == "exact_match") return std::make_unique<ExactMatch>();
  if (kind == "precomputed") return std::make_unique<PrecomputedSimilarity>(arg);
  if (kind == "external") return std::make_unique<ExternalCommandSimilarity>(arg);
  throw ConfigError("unknown similarity kind: " + kind);
}

}  // namespace gramsteer
