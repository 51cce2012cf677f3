// gramsteer: extract, probe, directions, steer, report.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gramsteer/config.hpp"
#include "gramsteer/error.hpp"
#include "gramsteer/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Probe and steer tense and aspect in language-model activations"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  using Command = gramsteer::RunConfig;
  struct Entry {
    const char* name;
    const char* help;
    nlohmann::json (*run)(const Command&);
  };
  const Entry entries[] = {
      {"extract", "capture activations and write the feature store", gramsteer::cmd_extract},
      {"probe", "layer sweep of linear probes; saves the best probes", gramsteer::cmd_probe},
      {"directions", "per-layer concept directions and geometry diagnostics",
       gramsteer::cmd_directions},
      {"steer", "grid search over steering layers and strengths", gramsteer::cmd_steer},
      {"report", "comparison tables from finished steering runs", gramsteer::cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> commands;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("-c,--config", config_path, "run config (JSON)");
    sub->add_option("--set", overrides, "override a config key, e.g. steering.alphas=[0,4]")
;
    commands.emplace_back(sub, &e);
  }
  std::string fixture_dir;
  auto* init = app.add_subcommand("init-planted", "write the planted corpus and a config");
  init->add_option("dir", fixture_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (init->parsed()) {
      auto out = gramsteer::write_planted_fixture(fixture_dir);
      out.erase("config");
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    for (const auto& [sub, entry] : commands) {
      if (!sub->parsed()) continue;
      auto config = gramsteer::load_config(config_path, overrides);
      std::cout << entry->run(config).dump(2) << "\n";
    }
  } catch (const gramsteer::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
