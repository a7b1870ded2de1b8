// Copyright 2026 The aggnes Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: run / sweep / check / delta-star / presets.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "aggnes/errors.hpp"
#include "aggnes/io.hpp"
#include "aggnes/dynamics.hpp"
#include "aggnes/scenario.hpp"

namespace fs = std::filesystem;
using aggnes::Json;

namespace {

// A path to a JSON file, or the name of a built-in preset.
aggnes::ScenarioConfig load_config(const std::string& arg) {
  if (!fs::exists(arg)) {
    for (const auto& name : aggnes::preset_names()) {
      if (name == arg) return aggnes::parse_scenario(aggnes::preset_scenario(arg));
    }
    throw aggnes::ConfigError("no such config file or preset: " + arg);
  }
  std::ifstream in(arg);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw aggnes::ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return aggnes::parse_scenario(j);
}

fs::path output_dir(const aggnes::ScenarioConfig& c, const std::string& out) {
  if (!out.empty()) return out;
  const char* root = std::getenv("AGGNES_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "runs") /
         (c.output_dir.empty() ? c.name : c.output_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed Nash equilibrium seeking for aggregative games "
               "over switching graphs"};
  app.require_subcommand(1);

  std::string config_arg;
  std::string out_arg;
  std::string grid_arg;

  auto* run = app.add_subcommand("run", "Check assumptions, integrate, verify");
  run->add_option("config", config_arg, "Scenario JSON or preset name")
      ->required();
  run->add_option("--out", out_arg, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid");
  sweep->add_option("config", config_arg, "Scenario JSON or preset name")
      ->required();
  sweep->add_option("--grid", grid_arg, "Grid JSON")->required();
  sweep->add_option("--out", out_arg, "Output directory");

  auto* check = app.add_subcommand("check", "Assumption checks only");
  check->add_option("config", config_arg, "Scenario JSON or preset name")
      ->required();
  check->add_option("--out", out_arg, "Output directory");

  auto* dstar = app.add_subcommand("delta-star", "Print the gain bound");
  dstar->add_option("config", config_arg, "Scenario JSON or preset name")
      ->required();

  std::string preset_arg;
  auto* presets = app.add_subcommand("presets", "List or print presets");
  presets->add_option("name", preset_arg, "Preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : aggnes::kExitSchema;
  }

  try {
    if (presets->parsed()) {
      if (preset_arg.empty()) {
        for (const auto& name : aggnes::preset_names()) std::cout << name << '\n';
      } else {
        std::cout << aggnes::preset_scenario(preset_arg).dump(2) << '\n';
      }
      return aggnes::kExitPass;
    }

    const aggnes::ScenarioConfig config = load_config(config_arg);

    if (dstar->parsed()) {
      const auto game = aggnes::build_game(config);
      const auto schedule = aggnes::build_schedule(config);
      const auto initial = aggnes::build_initial_state(config, game);
      const auto ac = aggnes::check_assumptions(config, game, schedule, initial);
      if (!ac.ok && !(ac.constants.mu > 0.0)) {
        std::cerr << ac.message << '\n';
        return aggnes::kExitAssumption;
      }
      const auto gb = aggnes::compute_gain_bound(config, schedule, ac.constants);
      Json j = gb.to_json();
      j["alpha"] = config.alpha;
      std::cout << j.dump(2) << '\n';
      return aggnes::kExitPass;
    }

    if (check->parsed()) {
      const auto res = aggnes::check_scenario(config, output_dir(config, out_arg));
      std::cout << res.assumptions.dump(2) << '\n';
      if (res.exit_code != aggnes::kExitPass) std::cerr << res.message << '\n';
      return res.exit_code;
    }

    if (run->parsed()) {
      const fs::path dir = output_dir(config, out_arg);
      const auto res = aggnes::run_scenario(config, dir);
      std::cout << (res.exit_code == aggnes::kExitPass ? "PASS" : "FAIL")
                << " exit=" << res.exit_code << " " << res.message << '\n'
                << "artifacts: " << dir.string() << '\n';
      return res.exit_code;
    }

    if (sweep->parsed()) {
      std::ifstream in(grid_arg);
      if (!in) throw aggnes::ConfigError("cannot read grid file " + grid_arg);
      Json grid;
      try {
        grid = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw aggnes::ConfigError(std::string("invalid grid JSON: ") + e.what());
      }
      const fs::path dir = output_dir(config, out_arg);
      const auto rows = aggnes::sweep(config, grid, dir);
      aggnes::write_sweep_summary(std::cout, rows);
      for (const auto& r : rows) {
        if (r.result.exit_code != aggnes::kExitPass) return aggnes::kExitCheckFailed;
      }
      return aggnes::kExitPass;
    }
  } catch (const aggnes::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return aggnes::kExitSchema;
  } catch (const aggnes::AssumptionViolation& e) {
    std::cerr << e.what() << '\n';
    return aggnes::kExitAssumption;
  } catch (const aggnes::HorizonTooShort& e) {
    std::cerr << e.what() << '\n';
    return aggnes::kExitSchema;
  } catch (const aggnes::DivergenceError& e) {
    std::cerr << e.what() << '\n';
    return aggnes::kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return aggnes::kExitCheckFailed;
  }
  return aggnes::kExitPass;
}
