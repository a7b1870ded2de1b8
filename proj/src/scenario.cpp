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

#include "aggnes/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "aggnes/errors.hpp"

namespace aggnes {

namespace fs = std::filesystem;

namespace {

Vec vec_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[k] = j[k].get<double>();
  return v;
}

Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v[k]);
  return j;
}

Json mat_to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

void reject_unknown(const Json& j, const std::set<std::string>& known,
                    const char* where) {
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigError(std::string(where) + ": unknown key '" + item.key() +
                        "'");
    }
  }
}

void require(bool cond, const std::string& what) {
  if (!cond) throw ConfigError(what);
}

void parse_game(const Json& g, ScenarioConfig& c) {
  reject_unknown(g, {"preset", "N", "n", "c", "d", "A"}, "game");
  c.game_preset = g.value("preset", "lq-game");
  require(c.game_preset == "lq-game",
          "game: unknown preset '" + c.game_preset + "'");
  c.game.n_players = g.at("N").get<int>();
  c.game.action_dim = g.value("n", 1);
  require(c.game.n_players >= 2, "game: N must be >= 2");
  require(c.game.action_dim >= 1, "game: n must be >= 1");
  c.game.c = vec_from_json(g.at("c"), "game.c");
  require(c.game.c.size() == c.game.n_players * c.game.action_dim,
          "game.c must have N*n entries");
  c.game.d = g.value("d", 0.0);
  c.game.weights.clear();
  if (g.contains("A")) {
    const Json& a = g.at("A");
    require(a.is_array() && a.size() == static_cast<std::size_t>(c.game.n_players),
            "game.A must list one weight per player");
    const int n = c.game.action_dim;
    for (const Json& w : a) {
      if (w.is_number()) {
        c.game.weights.push_back(w.get<double>() * Mat::Identity(n, n));
        continue;
      }
      require(w.is_array() && w.size() == static_cast<std::size_t>(n),
              "game.A entries are scalars or n x n nested arrays");
      Mat m(n, n);
      for (int r = 0; r < n; ++r) {
        require(w[r].is_array() && w[r].size() == static_cast<std::size_t>(n),
                "game.A rows must have n entries");
        for (int col = 0; col < n; ++col) m(r, col) = w[r][col].get<double>();
      }
      c.game.weights.push_back(m);
    }
  }
}

void parse_schedule(const Json& s, ScenarioConfig& c) {
  if (s.contains("generator")) {
    reject_unknown(s, {"generator", "n_parts", "segment_len", "seed"},
                   "schedule");
    c.schedule.inline_schedule.reset();
    c.schedule.generator = s.at("generator").get<std::string>();
    require(c.schedule.generator == "ring-partition" ||
                c.schedule.generator == "complete",
            "schedule: unknown generator '" + c.schedule.generator + "'");
    c.schedule.n_parts = s.value("n_parts", 1);
    c.schedule.segment_len = s.value("segment_len", 1.0);
    c.schedule.seed = s.value("seed", std::uint64_t{0});
    require(c.schedule.segment_len > 0.0, "schedule: segment_len > 0");
  } else {
    reject_unknown(s, {"nodes", "graphs", "segments", "repeat", "dwell_tau"},
                   "schedule");
    c.schedule.generator.clear();
    c.schedule.inline_schedule = s;
    schedule_from_json(s);  // validate early
  }
}

void parse_tolerances(const Json& t, Tolerances& tol) {
  reject_unknown(t,
                 {"x", "s", "nu", "min_r_squared", "discard_fraction",
                  "nu_sum_drift", "z1"},
                 "analysis.tolerances");
  tol.x = t.value("x", tol.x);
  tol.s = t.value("s", tol.s);
  tol.nu = t.value("nu", tol.nu);
  tol.min_r_squared = t.value("min_r_squared", tol.min_r_squared);
  tol.discard_fraction = t.value("discard_fraction", tol.discard_fraction);
  tol.nu_sum_drift = t.value("nu_sum_drift", tol.nu_sum_drift);
  tol.z1 = t.value("z1", tol.z1);
  require(tol.discard_fraction >= 0.0 && tol.discard_fraction < 1.0,
          "analysis.tolerances.discard_fraction must be in [0, 1)");
}

ScenarioConfig parse_document(const Json& j) {
  require(j.is_object(), "scenario must be a JSON object");
  reject_unknown(j,
                 {"name", "game", "constants", "constant_estimation",
                  "schedule", "assumption_checks", "params", "initial",
                  "integration", "analysis", "seed", "output_dir"},
                 "scenario");
  ScenarioConfig c;
  c.name = j.value("name", c.name);
  parse_game(j.at("game"), c);
  const int dim = c.game.n_players * c.game.action_dim;

  if (j.contains("constants") && !j.at("constants").is_null()) {
    const Json& k = j.at("constants");
    reject_unknown(k, {"mu", "theta", "theta_hat", "ell"}, "constants");
    GameConstants gc{k.at("mu").get<double>(), k.at("theta").get<double>(),
                     k.at("theta_hat").get<double>(), k.at("ell").get<double>()};
    try {
      gc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("constants: ") + e.what());
    }
    c.constants = gc;
  }
  if (j.contains("constant_estimation")) {
    const Json& e = j.at("constant_estimation");
    reject_unknown(e, {"box", "samples"}, "constant_estimation");
    if (e.contains("box")) {
      const Json& box = e.at("box");
      require(box.is_array() && box.size() == 2,
              "constant_estimation.box is [lower, upper]");
      c.box_lower = box[0].get<double>();
      c.box_upper = box[1].get<double>();
      require(c.box_lower < c.box_upper, "constant_estimation: empty box");
    }
    c.constant_samples = e.value("samples", c.constant_samples);
    require(c.constant_samples >= 2, "constant_estimation.samples >= 2");
  }

  parse_schedule(j.at("schedule"), c);

  if (j.contains("assumption_checks")) {
    const Json& a = j.at("assumption_checks");
    reject_unknown(a, {"window_T", "probe_step", "balance_tol"},
                   "assumption_checks");
    c.window_T = a.value("window_T", c.window_T);
    c.probe_step = a.value("probe_step", c.probe_step);
    c.balance_tol = a.value("balance_tol", c.balance_tol);
  }

  if (j.contains("params")) {
    const Json& p = j.at("params");
    reject_unknown(p, {"delta", "delta_factor", "alpha", "beta"}, "params");
    if (p.contains("delta")) {
      const Json& d = p.at("delta");
      if (d.is_string()) {
        require(d.get<std::string>() == "auto",
                "params.delta is a number or \"auto\"");
        c.delta.reset();
      } else {
        c.delta = d.get<double>();
        require(*c.delta > 0.0, "params.delta must be positive");
      }
    }
    c.delta_factor = p.value("delta_factor", c.delta_factor);
    c.alpha = p.value("alpha", c.alpha);
    c.beta = p.value("beta", c.beta);
    require(c.delta_factor > 0.0, "params.delta_factor must be positive");
    require(c.alpha > 0.0 && c.beta > 0.0, "params: alpha, beta > 0");
  }

  if (j.contains("initial")) {
    const Json& init = j.at("initial");
    if (init.is_string()) {
      require(init.get<std::string>() == "default",
              "initial is \"default\" or an object");
    } else {
      reject_unknown(init, {"x", "s", "nu"}, "initial");
      auto read = [&](const char* key, std::optional<Vec>& out) {
        if (!init.contains(key)) return;
        out = vec_from_json(init.at(key), key);
        require(out->size() == dim,
                std::string("initial.") + key + " must have N*n entries");
      };
      read("x", c.x0);
      read("s", c.s0);
      read("nu", c.nu0);
    }
  }

  if (j.contains("integration")) {
    const Json& in = j.at("integration");
    reject_unknown(in, {"h", "t_end", "record_stride"}, "integration");
    c.h = in.value("h", c.h);
    c.t_end = in.value("t_end", c.t_end);
    c.record_stride = in.value("record_stride", c.record_stride);
    require(c.h > 0.0 && c.t_end > 0.0 && c.record_stride >= 1,
            "integration: h > 0, t_end > 0, record_stride >= 1");
  }

  if (j.contains("analysis")) {
    const Json& an = j.at("analysis");
    reject_unknown(an,
                   {"tolerances", "probes_per_segment", "p_horizon", "p_step"},
                   "analysis");
    if (an.contains("tolerances")) parse_tolerances(an.at("tolerances"), c.tolerances);
    c.probes_per_segment = an.value("probes_per_segment", c.probes_per_segment);
    c.p_horizon = an.value("p_horizon", c.p_horizon);
    c.p_step = an.value("p_step", c.p_step);
    require(c.probes_per_segment >= 1 && c.p_horizon > 0.0 && c.p_step > 0.0,
            "analysis: probes_per_segment >= 1, p_horizon > 0, p_step > 0");
  }
  c.tolerances.t_end = c.t_end;

  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

}  // namespace

ScenarioConfig parse_scenario(const Json& j) {
  try {
    if (j.is_object() && j.contains("preset")) {
      Json merged = preset_scenario(j.at("preset").get<std::string>());
      Json patch = j;
      patch.erase("preset");
      merged.merge_patch(patch);
      return parse_document(merged);
    }
    return parse_document(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

Json scenario_to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  Json game{{"preset", c.game_preset},
            {"N", c.game.n_players},
            {"n", c.game.action_dim},
            {"c", vec_to_json(c.game.c)},
            {"d", c.game.d}};
  if (!c.game.weights.empty()) {
    Json a = Json::array();
    for (const Mat& w : c.game.weights) a.push_back(mat_to_json(w));
    game["A"] = a;
  }
  j["game"] = game;
  if (c.constants) j["constants"] = to_json(*c.constants);
  j["constant_estimation"] = {{"box", {c.box_lower, c.box_upper}},
                              {"samples", c.constant_samples}};
  if (c.schedule.inline_schedule) {
    j["schedule"] = *c.schedule.inline_schedule;
  } else {
    j["schedule"] = {{"generator", c.schedule.generator},
                     {"n_parts", c.schedule.n_parts},
                     {"segment_len", c.schedule.segment_len},
                     {"seed", c.schedule.seed}};
  }
  j["assumption_checks"] = {{"window_T", c.window_T},
                            {"probe_step", c.probe_step},
                            {"balance_tol", c.balance_tol}};
  j["params"] = {{"delta", c.delta ? Json(*c.delta) : Json("auto")},
                 {"delta_factor", c.delta_factor},
                 {"alpha", c.alpha},
                 {"beta", c.beta}};
  if (!c.x0 && !c.s0 && !c.nu0) {
    j["initial"] = "default";
  } else {
    Json init = Json::object();
    if (c.x0) init["x"] = vec_to_json(*c.x0);
    if (c.s0) init["s"] = vec_to_json(*c.s0);
    if (c.nu0) init["nu"] = vec_to_json(*c.nu0);
    j["initial"] = init;
  }
  j["integration"] = {
      {"h", c.h}, {"t_end", c.t_end}, {"record_stride", c.record_stride}};
  const Tolerances& t = c.tolerances;
  j["analysis"] = {{"tolerances",
                    {{"x", t.x},
                     {"s", t.s},
                     {"nu", t.nu},
                     {"min_r_squared", t.min_r_squared},
                     {"discard_fraction", t.discard_fraction},
                     {"nu_sum_drift", t.nu_sum_drift},
                     {"z1", t.z1}}},
                   {"probes_per_segment", c.probes_per_segment},
                   {"p_horizon", c.p_horizon},
                   {"p_step", c.p_step}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

std::vector<std::string> preset_names() {
  return {"lq-n5-partition2", "lq-n5-complete", "lq-n2-static"};
}

Json preset_scenario(const std::string& name) {
  const Json tolerances{{"x", 1e-4},
                        {"s", 1e-4},
                        {"nu", 1e-4},
                        {"min_r_squared", 0.9},
                        {"discard_fraction", 0.2},
                        {"nu_sum_drift", 1e-9},
                        {"z1", 1e-9}};
  const Json n5_game{{"preset", "lq-game"},
                     {"N", 5},
                     {"n", 1},
                     {"c", {1, 2, 3, 4, 5}},
                     {"d", 0.1}};
  if (name == "lq-n5-partition2") {
    // Ring on five players split in two halves; every instantaneous graph
    // is disconnected, their union over one second is the ring.
    return Json{
        {"name", name},
        {"game", n5_game},
        {"constant_estimation", {{"box", {-10, 10}}, {"samples", 10000}}},
        {"schedule",
         {{"generator", "ring-partition"},
          {"n_parts", 2},
          {"segment_len", 0.5},
          {"seed", 7}}},
        {"assumption_checks", {{"window_T", 1.0}, {"probe_step", 0.5}}},
        {"params", {{"delta", "auto"}, {"delta_factor", 0.5}, {"alpha", 1.0},
                    {"beta", 1.0}}},
        {"initial", "default"},
        {"integration", {{"h", 1e-3}, {"t_end", 500.0}, {"record_stride", 100}}},
        {"analysis",
         {{"tolerances", tolerances},
          {"probes_per_segment", 2},
          {"p_horizon", 60.0},
          {"p_step", 5e-3}}},
        {"seed", 1}};
  }
  if (name == "lq-n5-complete") {
    Json t = tolerances;
    t["x"] = 1e-6;
    return Json{
        {"name", name},
        {"game", n5_game},
        {"constant_estimation", {{"box", {-10, 10}}, {"samples", 10000}}},
        {"schedule", {{"generator", "complete"}, {"segment_len", 1.0}}},
        {"params", {{"delta", "auto"}, {"delta_factor", 0.5}, {"alpha", 1.0},
                    {"beta", 1.0}}},
        {"initial", "default"},
        {"integration", {{"h", 1e-3}, {"t_end", 500.0}, {"record_stride", 100}}},
        {"analysis",
         {{"tolerances", t},
          {"probes_per_segment", 1},
          {"p_horizon", 60.0},
          {"p_step", 5e-3}}},
        {"seed", 1}};
  }
  if (name == "lq-n2-static") {
    return Json{
        {"name", name},
        {"game", {{"preset", "lq-game"}, {"N", 2}, {"n", 1}, {"c", {1, 2}},
                  {"d", 0.1}}},
        {"constant_estimation", {{"box", {-5, 5}}, {"samples", 10000}}},
        {"schedule",
         {{"nodes", 2}, {"graphs", {{0, 1, 1, 0}}}, {"segments", {{0, 1.0}}},
          {"repeat", true}}},
        {"params", {{"delta", "auto"}, {"alpha", 1.0}, {"beta", 1.0}}},
        {"initial", "default"},
        {"integration", {{"h", 1e-3}, {"t_end", 200.0}, {"record_stride", 100}}},
        {"analysis", {{"tolerances", tolerances}, {"p_horizon", 60.0}}},
        {"seed", 1}};
  }
  throw ConfigError("unknown preset '" + name + "'");
}

GameSpec build_game(const ScenarioConfig& c) { return make_lq_game(c.game); }

SwitchingSchedule build_schedule(const ScenarioConfig& c) {
  if (c.schedule.inline_schedule) {
    SwitchingSchedule s = schedule_from_json(*c.schedule.inline_schedule);
    if (s.n_nodes() != c.game.n_players) {
      throw ConfigError("schedule node count differs from game.N");
    }
    return s;
  }
  try {
    if (c.schedule.generator == "complete") {
      return SwitchingSchedule::constant(
          WeightedDigraph::complete(c.game.n_players), c.schedule.segment_len);
    }
    return generate_partition_schedule(c.game.n_players, c.schedule.n_parts,
                                       c.schedule.segment_len, c.schedule.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule generator: ") + e.what());
  }
}

SystemState build_initial_state(const ScenarioConfig& c, const GameSpec& game) {
  const Vec x0 = c.x0 ? *c.x0 : Vec::Zero(game.stacked_dim());
  SystemState st = default_initial_state(game, x0);
  if (c.s0) st.s = *c.s0;
  if (c.nu0) st.nu = *c.nu0;
  return st;
}

AssumptionCheck check_assumptions(const ScenarioConfig& c, const GameSpec& game,
                                  const SwitchingSchedule& schedule,
                                  const SystemState& initial) {
  AssumptionCheck out;
  Json& doc = out.document;
  auto fail = [&](Assumption a, const std::string& msg) {
    if (!out.violated) {
      out.violated = a;
      out.message = std::string("assumption violated [") + assumption_id(a) +
                    "]: " + msg;
    }
    out.ok = false;
  };

  // Weight balance of every graph.
  Json balance = Json::array();
  for (std::size_t k = 0; k < schedule.graphs().size(); ++k) {
    const WeightedDigraph& g = schedule.graphs()[k];
    const Mat& a = g.adjacency();
    const double imbalance =
        (a.rowwise().sum() - a.colwise().sum().transpose()).cwiseAbs().maxCoeff();
    const bool ok = is_weight_balanced(g, c.balance_tol);
    balance.push_back({{"graph", k},
                       {"max_imbalance", imbalance},
                       {"balanced", ok},
                       {"connected", is_connected(g)}});
    if (!ok) {
      fail(Assumption::kWeightBalance,
           "graph " + std::to_string(k) + " has in/out-degree mismatch " +
               format_double(imbalance));
    }
  }
  doc["weight_balance"] = {{"tolerance", c.balance_tol}, {"graphs", balance}};

  const double window = c.window_T > 0.0 ? c.window_T : schedule.period();
  const double step = c.probe_step > 0.0 ? c.probe_step : schedule.dwell_tau();
  const JointConnectivity jc = is_jointly_connected(schedule, window, step);
  doc["joint_connectivity"] = {
      {"window_T", window},
      {"probe_step", step},
      {"probes", jc.probes},
      {"connected", jc.connected},
      {"partial_coverage", jc.partial_coverage},
      {"first_failure",
       std::isnan(jc.first_failure) ? Json(nullptr) : Json(jc.first_failure)}};
  if (!jc.connected) {
    fail(Assumption::kJointConnectivity,
         "union graph over a window of " + format_double(window) +
             " is disconnected at t=" + format_double(jc.first_failure));
  }

  if (c.constants) {
    out.constants = *c.constants;
    doc["constants"] = to_json(out.constants);
    doc["constants"]["source"] = "given";
  } else {
    try {
      out.constants = estimate_constants(
          game,
          Box::uniform(game.stacked_dim(), c.box_lower, c.box_upper),
          c.constant_samples, c.seed);
      doc["constants"] = to_json(out.constants);
      doc["constants"]["source"] = "estimated";
      doc["constants"]["box"] = {c.box_lower, c.box_upper};
      doc["constants"]["samples"] = c.constant_samples;
      doc["constants"]["seed"] = c.seed;
    } catch (const AssumptionViolation& e) {
      doc["constants"] = {{"source", "estimated"}, {"error", e.what()}};
      fail(e.which(), e.what());
    }
  }
  if (out.ok || out.constants.mu > 0.0) {
    if (!(out.constants.theta > 0.0)) {
      fail(Assumption::kLipschitzPseudoGradient, "theta is not positive");
    }
    if (!(out.constants.ell > 0.0)) {
      fail(Assumption::kBoundedAggregateJacobian, "ell is not positive");
    }
  }

  const int n = game.action_dim();
  Vec nu_sum = Vec::Zero(n);
  for (int i = 0; i < game.n_players(); ++i) {
    nu_sum += initial.nu.segment(i * n, n);
  }
  const double nu_abs = nu_sum.cwiseAbs().maxCoeff();
  const bool nu_ok = nu_abs <= 1e-12;
  doc["zero_multiplier_sum"] = {{"max_abs", nu_abs}, {"ok", nu_ok}};
  if (!nu_ok) {
    fail(Assumption::kZeroMultiplierSum,
         "initial multipliers sum to " + format_double(nu_abs));
  }

  doc["ok"] = out.ok;
  doc["violated"] =
      out.violated ? Json(assumption_id(*out.violated)) : Json(nullptr);
  return out;
}

Json GainBound::to_json() const {
  return Json{{"constants", aggnes::to_json(constants)},
              {"lyapunov", aggnes::to_json(lyapunov)},
              {"M", M},
              {"delta_star", delta_star},
              {"delta", delta}};
}

GainBound compute_gain_bound(const ScenarioConfig& c,
                             const SwitchingSchedule& schedule,
                             const GameConstants& constants) {
  GainBound gb;
  gb.constants = constants;
  AlgorithmParams params{1.0, c.alpha, c.beta, std::nullopt};
  const int n = c.game.action_dim;
  const int d = 2 * c.game.n_players * n - n;
  gb.lyapunov = estimate_p(schedule, params, n, Mat::Identity(d, d),
                           default_probe_times(schedule, c.probes_per_segment),
                           c.p_horizon, c.p_step);
  gb.M = gain_coupling(gb.lyapunov.p_hat, constants.ell, c.alpha);
  gb.delta_star = delta_star(constants, gb.lyapunov.p_hat,
                             gb.lyapunov.lambda_min_Q, c.alpha);
  gb.delta = c.delta ? *c.delta : c.delta_factor * gb.delta_star;
  return gb;
}

namespace {

void write_json(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

Json base_report(const ScenarioConfig& c) {
  const Json canonical = scenario_to_json(c);
  Json r;
  r["scenario"] = c.name;
  r["scenario_hash"] = git_blob_hash(canonical.dump());
  r["schedule_id"] =
      c.schedule.inline_schedule
          ? git_blob_hash(c.schedule.inline_schedule->dump())
          : c.schedule.generator + "(N=" + std::to_string(c.game.n_players) +
                ",parts=" + std::to_string(c.schedule.n_parts) +
                ",segment=" + format_double(c.schedule.segment_len) +
                ",seed=" + std::to_string(c.schedule.seed) + ")";
  r["config"] = canonical;
  return r;
}

}  // namespace

RunResult check_scenario(const ScenarioConfig& c, const fs::path& out_dir) {
  RunResult res;
  const GameSpec game = build_game(c);
  const SwitchingSchedule schedule = build_schedule(c);
  const SystemState initial = build_initial_state(c, game);
  const AssumptionCheck ac = check_assumptions(c, game, schedule, initial);
  res.assumptions = ac.document;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(out_dir / "assumptions.json", res.assumptions);
  }
  res.exit_code = ac.ok ? kExitPass : kExitAssumption;
  res.message = ac.ok ? "all assumption checks passed" : ac.message;
  return res;
}

RunResult run_scenario(const ScenarioConfig& c, const fs::path& out_dir) {
  RunResult res;
  const GameSpec game = build_game(c);
  const SwitchingSchedule schedule = build_schedule(c);
  const SystemState initial = build_initial_state(c, game);
  const AssumptionCheck ac = check_assumptions(c, game, schedule, initial);
  res.assumptions = ac.document;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_json(out_dir / "assumptions.json", res.assumptions);
  }
  res.report = base_report(c);
  auto finish = [&](int code, const std::string& msg) {
    res.exit_code = code;
    res.message = msg;
    res.report["exit_code"] = code;
    res.report["message"] = msg;
    res.report["pass"] = code == kExitPass;
    if (!out_dir.empty()) write_json(out_dir / "report.json", res.report);
    return res;
  };
  if (!ac.ok) return finish(kExitAssumption, ac.message);

  try {
    res.gain = compute_gain_bound(c, schedule, ac.constants);
  } catch (const HorizonTooShort& e) {
    return finish(kExitSchema, e.what());
  }
  res.report["gain_bound"] = res.gain->to_json();
  AlgorithmParams params{res.gain->delta, c.alpha, c.beta,
                         res.gain->delta_star};
  res.report["params"] = {{"delta", params.delta},
                          {"alpha", params.alpha},
                          {"beta", params.beta},
                          {"delta_star", res.gain->delta_star},
                          {"delta_source", c.delta ? "given" : "auto"},
                          {"delta_factor", c.delta_factor},
                          {"below_bound", params.below_bound()},
                          {"Q", "identity"}};

  Vec x_star;
  try {
    x_star = solve_ne(game, ac.constants, 1e-12, 1000000);
  } catch (const OracleFailure& e) {
    return finish(kExitCheckFailed, e.what());
  }
  res.report["x_star"] = vec_to_json(x_star);

  IntegrateOptions opts;
  opts.record_stride = c.record_stride;
  Trajectory traj;
  bool diverged = false;
  std::string divergence_msg;
  try {
    traj = integrate(initial, game, schedule, params, c.t_end, c.h, opts);
  } catch (const DivergenceError& e) {
    traj = e.partial();
    diverged = true;
    divergence_msg = e.what();
  }
  if (!out_dir.empty()) {
    std::ofstream csv(out_dir / "trajectory.csv");
    write_trajectory_csv(csv, traj);
  }
  res.convergence = verify_convergence(traj, game, x_star, params, c.tolerances);
  res.report["convergence"] = to_json(*res.convergence);
  if (diverged) return finish(kExitDivergence, divergence_msg);
  return finish(res.convergence->pass ? kExitPass : kExitCheckFailed,
                res.convergence->pass ? "all checks passed"
                                      : "convergence checks failed");
}

namespace {

const char* const kGridAxes[] = {"delta", "delta_factor", "alpha", "beta",
                                 "segment_len"};

std::vector<Json> grid_points(const Json& grid) {
  if (!grid.is_object()) throw ConfigError("grid must be a JSON object");
  reject_unknown(grid, {std::begin(kGridAxes), std::end(kGridAxes)}, "grid");
  std::vector<std::pair<std::string, Json>> axes;
  for (const char* key : kGridAxes) {
    if (!grid.contains(key)) continue;
    const Json& values = grid.at(key);
    if (!values.is_array()) throw ConfigError("grid axes must be arrays");
    for (const Json& v : values) {
      if (!v.is_number()) throw ConfigError("grid values must be numbers");
    }
    axes.emplace_back(key, values);
  }
  std::vector<Json> points;
  if (axes.empty()) return points;
  for (const auto& axis : axes) {
    if (axis.second.empty()) return points;
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    Json p = Json::object();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      p[axes[a].first] = axes[a].second[idx[a]];
    }
    points.push_back(p);
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
  }
}

SweepRow run_point(const ScenarioConfig& base, const Json& point, int index,
                   const fs::path& out_dir) {
  SweepRow row;
  row.index = index;
  row.point = point;
  ScenarioConfig c = base;
  char name[32];
  std::snprintf(name, sizeof(name), "run_%03d", index);
  c.name = base.name + "/" + name;
  try {
    if (point.contains("delta_factor")) {
      c.delta.reset();
      c.delta_factor = point["delta_factor"].get<double>();
    }
    if (point.contains("delta")) c.delta = point["delta"].get<double>();
    if (point.contains("alpha")) c.alpha = point["alpha"].get<double>();
    if (point.contains("beta")) c.beta = point["beta"].get<double>();
    if (point.contains("segment_len")) {
      if (c.schedule.inline_schedule) {
        throw ConfigError("segment_len axis needs a generated schedule");
      }
      c.schedule.segment_len = point["segment_len"].get<double>();
      c.probe_step = 0.0;
      c.window_T = 0.0;
    }
    if (!(c.alpha > 0.0 && c.beta > 0.0 && c.delta_factor > 0.0 &&
          (!c.delta || *c.delta > 0.0) && c.schedule.segment_len > 0.0)) {
      throw ConfigError("grid point has a nonpositive parameter");
    }
    row.alpha = c.alpha;
    row.beta = c.beta;
    row.result = run_scenario(c, out_dir.empty() ? fs::path() : out_dir / name);
  } catch (const ConfigError& e) {
    row.result.exit_code = kExitSchema;
    row.result.message = e.what();
  } catch (const Error& e) {
    row.result.exit_code = kExitCheckFailed;
    row.result.message = e.what();
  }
  if (row.result.gain) {
    row.delta = row.result.gain->delta;
    row.delta_star = row.result.gain->delta_star;
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep(const ScenarioConfig& base, const Json& grid,
                            const fs::path& out_dir, int max_threads) {
  const std::vector<Json> points = grid_points(grid);
  std::vector<SweepRow> rows(points.size());
  if (!out_dir.empty()) fs::create_directories(out_dir);
  int workers = max_threads > 0
                    ? max_threads
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < points.size(); k += workers) {
        rows[k] = run_point(base, points[k], static_cast<int>(k), out_dir);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (!out_dir.empty()) {
    std::ofstream out(out_dir / "summary.csv");
    write_sweep_summary(out, rows);
  }
  return rows;
}

void write_sweep_summary(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "run,point,delta,alpha,beta,delta_star,x_error,s_error,nu_error,"
         "lambda_hat,r_squared,pass,exit_code\n";
  for (const SweepRow& r : rows) {
    // key=value pairs joined by ';' keep the column comma-free.
    std::string point;
    for (auto it = r.point.begin(); it != r.point.end(); ++it) {
      if (!point.empty()) point += ';';
      point += it.key() + '=' +
               (it->is_number() ? format_double(it->get<double>()) : it->dump());
    }
    out << r.index << ',' << point << ',' << format_double(r.delta) << ','
        << format_double(r.alpha) << ',' << format_double(r.beta) << ','
        << format_double(r.delta_star) << ',';
    if (r.result.convergence) {
      const ConvergenceReport& cr = *r.result.convergence;
      out << format_double(cr.x_error) << ',' << format_double(cr.s_error)
          << ',' << format_double(cr.nu_error) << ',';
      if (cr.decay) {
        out << format_double(cr.decay->lambda) << ','
            << format_double(cr.decay->r_squared);
      } else {
        out << ',';
      }
    } else {
      out << ",,,,";
    }
    out << ',' << (r.result.exit_code == kExitPass ? "true" : "false") << ','
        << r.result.exit_code << '\n';
  }
}

}  // namespace aggnes
