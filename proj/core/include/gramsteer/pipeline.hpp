#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "gramsteer/config.hpp"

namespace gramsteer {

// Each command reads the config plus artifacts of earlier commands from
// config.output_dir and writes its own artifacts there. Every artifact
// carries the producing config hash. The return value is a short summary.
nlohmann::json cmd_extract(const RunConfig& config);
nlohmann::json cmd_probe(const RunConfig& config);
nlohmann::json cmd_directions(const RunConfig& config);
nlohmann::json cmd_steer(const RunConfig& config);
nlohmann::json cmd_report(const RunConfig& config);

// Writes train.jsonl, test.jsonl and config.json for the planted model into
// `dir`; the config's output directory is `dir`/run.
nlohmann::json write_planted_fixture(const std::string& dir);

std::string steer_run_name(const RunConfig& config);

}  // namespace gramsteer
