#include "gramsteer/persistence.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <openssl/evp.h>
#include <unistd.h>

#include "gramsteer/error.hpp"

namespace gramsteer {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "feature store assumes little-endian");

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename onto " + path + ": " + ec.message());
}

nlohmann::json read_json(const std::string& path) {
  auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

nlohmann::json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw SchemaError("matrix must be a list of rows");
  if (j.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols())) throw SchemaError("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r]).transpose();
  }
  return m;
}

nlohmann::json centering_to_json(const CenteringStats& c) {
  return {{"id", c.id()},
          {"layer", c.layer},
          {"strategy", to_string(c.strategy)},
          {"fitted_on", c.fitted_on},
          {"mean", vector_to_json(c.mean)}};
}

CenteringStats centering_from_json(const nlohmann::json& j) {
  CenteringStats c;
  c.layer = j.at("layer").get<int>();
  auto s = parse_aggregation(j.at("strategy").get<std::string>());
  if (!s) throw SchemaError("unknown aggregation in centering record");
  c.strategy = *s;
  c.fitted_on = j.at("fitted_on").get<std::string>();
  c.mean = vector_from_json(j.at("mean"));
  return c;
}

nlohmann::json probe_to_json(const Probe& p) {
  return {{"classes", p.classes},
          {"layer", p.layer},
          {"strategy", to_string(p.strategy)},
          {"centering", centering_to_json(p.centering)},
          {"weights", matrix_to_json(p.weights)},
          {"bias", vector_to_json(p.bias)},
          {"iterations", p.iterations},
          {"converged", p.converged}};
}

Probe probe_from_json(const nlohmann::json& j) {
  try {
    Probe p;
    p.classes = j.at("classes").get<std::vector<std::string>>();
    p.layer = j.at("layer").get<int>();
    auto s = parse_aggregation(j.at("strategy").get<std::string>());
    if (!s) throw SchemaError("unknown aggregation in probe record");
    p.strategy = *s;
    p.centering = centering_from_json(j.at("centering"));
    p.weights = matrix_from_json(j.at("weights"));
    p.bias = vector_from_json(j.at("bias"));
    p.iterations = j.value("iterations", 0);
    p.converged = j.value("converged", false);
    if (p.weights.rows() != static_cast<Eigen::Index>(p.classes.size()) ||
        p.bias.size() != p.weights.rows() || p.centering.mean.size() != p.weights.cols())
      throw SchemaError("probe record has inconsistent shapes");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("probe record: ") + e.what());
  }
}

nlohmann::json direction_to_json(const ConceptDirection& d) {
  return {{"feature", d.feature},
          {"layer", d.layer},
          {"unit", vector_to_json(d.unit)},
          {"scaled", vector_to_json(d.scaled)}};
}

ConceptDirection direction_from_json(const nlohmann::json& j) {
  try {
    ConceptDirection d;
    d.feature = j.at("feature").get<std::string>();
    d.layer = j.at("layer").get<int>();
    d.unit = vector_from_json(j.at("unit"));
    d.scaled = vector_from_json(j.at("scaled"));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("direction record: ") + e.what());
  }
}

namespace {
template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw SchemaError("feature store truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_feature_store(const std::string& prefix, const FeatureSet& features,
                        const nlohmann::json& meta) {
  std::string bin = "GSFM";
  put<std::uint32_t>(bin, kVersion);
  put<std::uint32_t>(bin, static_cast<std::uint32_t>(features.matrices.size()));
  auto entries = nlohmann::json::array();
  for (const auto& [key, m] : features.matrices) {
    entries.push_back({{"layer", key.first},
                       {"strategy", to_string(key.second)},
                       {"rows", m.rows()},
                       {"cols", m.cols()},
                       {"offset", bin.size()}});
    put<std::int32_t>(bin, key.first);
    put<std::uint32_t>(bin, static_cast<std::uint32_t>(key.second));
    put<std::uint64_t>(bin, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(bin, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(bin, m(r, c));
  }
  nlohmann::json side = meta;
  side["format"] = "GSFM";
  side["version"] = kVersion;
  side["corpus_id"] = features.corpus_id;
  side["token_counts"] = features.token_counts;
  side["entries"] = entries;
  side["sha256"] = sha256_hex(bin);
  write_file_atomic(prefix + ".bin", bin);
  write_json(prefix + ".json", side);
}

FeatureStore load_feature_store(const std::string& prefix) {
  FeatureStore store;
  store.meta = read_json(prefix + ".json");
  auto bin = read_file(prefix + ".bin");
  if (store.meta.value("sha256", "") != sha256_hex(bin))
    throw SchemaError("feature store checksum mismatch: " + prefix);
  if (bin.size() < 4 || bin.compare(0, 4, "GSFM") != 0)
    throw SchemaError("not a feature store: " + prefix);
  std::size_t pos = 4;
  if (take<std::uint32_t>(bin, pos) != kVersion)
    throw SchemaError("unsupported feature store version");
  auto count = take<std::uint32_t>(bin, pos);
  for (std::uint32_t i = 0; i < count; ++i) {
    int layer = take<std::int32_t>(bin, pos);
    auto strategy = static_cast<Aggregation>(take<std::uint32_t>(bin, pos));
    auto rows = static_cast<Eigen::Index>(take<std::uint64_t>(bin, pos));
    auto cols = static_cast<Eigen::Index>(take<std::uint64_t>(bin, pos));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = take<double>(bin, pos);
    store.features.matrices[{layer, strategy}] = std::move(m);
  }
  if (pos != bin.size()) throw SchemaError("trailing bytes in feature store");
  store.features.corpus_id = store.meta.value("corpus_id", "");
  store.features.token_counts =
      store.meta.value("token_counts", std::vector<std::size_t>{});
  return store;
}

}  // namespace gramsteer
