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

#ifndef AGGNES_SCENARIO_HPP_
#define AGGNES_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aggnes/analysis.hpp"
#include "aggnes/dynamics.hpp"
#include "aggnes/game.hpp"
#include "aggnes/graph.hpp"
#include "aggnes/io.hpp"

namespace aggnes {

// Process exit codes shared by the library entry points and the CLI.
enum ExitCode : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitSchema = 2,
  kExitAssumption = 3,
  kExitDivergence = 4,
};

struct ScheduleSource {
  // Exactly one of these is used.
  std::optional<Json> inline_schedule;
  std::string generator;  // "ring-partition" or "complete"
  int n_parts = 2;
  double segment_len = 1.0;
  std::uint64_t seed = 0;
};

// A fully defaulted scenario. Every field has a JSON counterpart; see
// parse_scenario.
struct ScenarioConfig {
  std::string name = "scenario";
  std::string game_preset = "lq-game";
  LqGameParams game;

  std::optional<GameConstants> constants;  // skips estimation when set
  double box_lower = -10.0;
  double box_upper = 10.0;
  int constant_samples = 10000;

  ScheduleSource schedule;
  double window_T = 0.0;    // <= 0: one schedule period
  double probe_step = 0.0;  // <= 0: the dwell time
  double balance_tol = 1e-9;

  std::optional<double> delta;  // unset: delta_factor * delta_star
  double delta_factor = 0.5;
  double alpha = 1.0;
  double beta = 1.0;

  std::optional<Vec> x0;
  std::optional<Vec> s0;
  std::optional<Vec> nu0;

  double h = 1e-3;
  double t_end = 100.0;
  int record_stride = 1;

  Tolerances tolerances;
  int probes_per_segment = 2;
  double p_horizon = 60.0;
  double p_step = 5e-3;

  std::uint64_t seed = 1;
  std::string output_dir;  // relative to the output root; empty: name
};

// Throws ConfigError on schema violations.
ScenarioConfig parse_scenario(const Json& j);
// Canonical document with every default spelled out. parse_scenario of the
// result reproduces the config.
Json scenario_to_json(const ScenarioConfig& config);

std::vector<std::string> preset_names();
// Throws ConfigError for unknown names.
Json preset_scenario(const std::string& name);

GameSpec build_game(const ScenarioConfig& config);
SwitchingSchedule build_schedule(const ScenarioConfig& config);
SystemState build_initial_state(const ScenarioConfig& config,
                                const GameSpec& game);

struct AssumptionCheck {
  bool ok = true;
  std::optional<Assumption> violated;  // first failing assumption
  std::string message;
  GameConstants constants;
  Json document;
};

// Runs every assumption check and records each outcome; never throws for a
// failed check.
AssumptionCheck check_assumptions(const ScenarioConfig& config,
                                  const GameSpec& game,
                                  const SwitchingSchedule& schedule,
                                  const SystemState& initial);

struct GainBound {
  GameConstants constants;
  LyapunovEstimate lyapunov;
  double M = 0.0;
  double delta_star = 0.0;
  double delta = 0.0;  // gain the run uses

  Json to_json() const;
};

GainBound compute_gain_bound(const ScenarioConfig& config,
                             const SwitchingSchedule& schedule,
                             const GameConstants& constants);

struct RunResult {
  int exit_code = kExitPass;
  std::string message;
  Json assumptions;
  Json report;
  std::optional<ConvergenceReport> convergence;
  std::optional<GainBound> gain;
};

// Validates assumptions, derives the gain bound, integrates, and verifies
// convergence. Writes assumptions.json, then trajectory.csv and
// report.json, into out_dir when it is nonempty.
RunResult run_scenario(const ScenarioConfig& config,
                       const std::filesystem::path& out_dir);

// Assumption checks only; writes assumptions.json when out_dir is nonempty.
RunResult check_scenario(const ScenarioConfig& config,
                         const std::filesystem::path& out_dir);

struct SweepRow {
  int index = 0;
  Json point;  // grid values applied to this run
  double delta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double delta_star = 0.0;
  RunResult result;
};

// One run per point of the Cartesian product of the grid axes (delta,
// delta_factor, alpha, beta, segment_len). Runs land in out_dir/run_NNN and
// a summary.csv row is written per run. A grid with no axes, or with an
// empty axis, has no points. Per-run failures are recorded, not thrown.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const Json& grid,
                            const std::filesystem::path& out_dir,
                            int max_threads = 0);

void write_sweep_summary(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace aggnes

#endif  // AGGNES_SCENARIO_HPP_
