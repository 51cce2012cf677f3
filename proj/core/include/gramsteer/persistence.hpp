#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gramsteer/geometry.hpp"
#include "gramsteer/probing.hpp"
#include "gramsteer/representation.hpp"

namespace gramsteer {

std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);  // list of rows
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json centering_to_json(const CenteringStats& c);
CenteringStats centering_from_json(const nlohmann::json& j);

nlohmann::json probe_to_json(const Probe& p);
Probe probe_from_json(const nlohmann::json& j);

nlohmann::json direction_to_json(const ConceptDirection& d);
ConceptDirection direction_from_json(const nlohmann::json& j);

// Feature store: `<prefix>.bin` holds the matrices ("GSFM", version, count,
// then per matrix layer, strategy, rows, cols and row-major float64 data, all
// little-endian); `<prefix>.json` holds the metadata, the entry table and the
// binary's SHA-256. Identical inputs give identical bytes.
struct FeatureStore {
  FeatureSet features;
  nlohmann::json meta;
};

void save_feature_store(const std::string& prefix, const FeatureSet& features,
                        const nlohmann::json& meta);
FeatureStore load_feature_store(const std::string& prefix);

}  // namespace gramsteer
