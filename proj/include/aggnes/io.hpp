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

#ifndef AGGNES_IO_HPP_
#define AGGNES_IO_HPP_

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "aggnes/analysis.hpp"
#include "aggnes/dynamics.hpp"
#include "aggnes/game.hpp"
#include "aggnes/graph.hpp"

namespace aggnes {

using Json = nlohmann::json;

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

// Header: t,graph_idx,x_0..,s_0..,nu_0.. ; one row per sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
// Inverse of write_trajectory_csv. Throws ConfigError on malformed input.
Trajectory read_trajectory_csv(std::istream& in);

void write_matrix_csv(std::ostream& out, const Mat& m);

// {"nodes": N, "graphs": [row-major adjacency...], "segments": [[idx, dur]],
//  "repeat": bool, "dwell_tau": tau}. Nested row arrays are accepted on
// input. Throws ConfigError on schema violations.
Json schedule_to_json(const SwitchingSchedule& schedule);
SwitchingSchedule schedule_from_json(const Json& j);

Json to_json(const GameConstants& k);
Json to_json(const LyapunovEstimate& est);
Json to_json(const ConvergenceReport& report);

// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_hash(const std::string& content);

}  // namespace aggnes

#endif  // AGGNES_IO_HPP_
