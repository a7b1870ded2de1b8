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

#include "aggnes/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "aggnes/errors.hpp"

namespace aggnes {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int dim = traj.stacked_dim;
  out << "t,graph_idx";
  for (const char* block : {"x", "s", "nu"}) {
    for (int k = 0; k < dim; ++k) out << ',' << block << '_' << k;
  }
  out << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_double(traj.times[k]) << ',' << traj.graph[k];
    const Vec& v = traj.values[k];
    for (Eigen::Index c = 0; c < v.size(); ++c) {
      out << ',' << format_double(v[c]);
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("trajectory csv: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trajectory csv: empty");
  const auto header = split_csv(line);
  if (header.size() < 5 || (header.size() - 2) % 3 != 0 || header[0] != "t" ||
      header[1] != "graph_idx") {
    throw ConfigError("trajectory csv: unexpected header");
  }
  Trajectory traj;
  traj.stacked_dim = static_cast<int>((header.size() - 2) / 3);
  int last_graph = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ConfigError("trajectory csv: ragged row");
    }
    const double t = parse_double(cells[0]);
    const int graph = std::stoi(cells[1]);
    Vec v(static_cast<Eigen::Index>(cells.size() - 2));
    for (std::size_t c = 2; c < cells.size(); ++c) v[c - 2] = parse_double(cells[c]);
    if (!traj.times.empty() && graph != last_graph) {
      traj.switching_instants.push_back(t);
    }
    last_graph = graph;
    traj.times.push_back(t);
    traj.graph.push_back(graph);
    traj.values.push_back(std::move(v));
  }
  return traj;
}

void write_matrix_csv(std::ostream& out, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Json schedule_to_json(const SwitchingSchedule& schedule) {
  Json j;
  const int N = schedule.n_nodes();
  j["nodes"] = N;
  j["graphs"] = Json::array();
  for (const auto& g : schedule.graphs()) {
    Json flat = Json::array();
    for (int r = 0; r < N; ++r) {
      for (int c = 0; c < N; ++c) flat.push_back(g.adjacency()(r, c));
    }
    j["graphs"].push_back(flat);
  }
  j["segments"] = Json::array();
  for (const Segment& s : schedule.segments()) {
    j["segments"].push_back({s.graph, s.duration});
  }
  j["repeat"] = schedule.repeat();
  j["dwell_tau"] = schedule.dwell_tau();
  return j;
}

SwitchingSchedule schedule_from_json(const Json& j) {
  try {
    const int N = j.at("nodes").get<int>();
    if (N < 1) throw ConfigError("schedule: nodes must be positive");
    std::vector<WeightedDigraph> graphs;
    for (const Json& g : j.at("graphs")) {
      Mat a(N, N);
      if (g.size() == static_cast<std::size_t>(N) && g[0].is_array()) {
        for (int r = 0; r < N; ++r) {
          if (g[r].size() != static_cast<std::size_t>(N)) {
            throw ConfigError("schedule: adjacency row has wrong length");
          }
          for (int c = 0; c < N; ++c) a(r, c) = g[r][c].get<double>();
        }
      } else {
        if (g.size() != static_cast<std::size_t>(N) * N) {
          throw ConfigError("schedule: adjacency must have nodes^2 entries");
        }
        for (int r = 0; r < N; ++r) {
          for (int c = 0; c < N; ++c) a(r, c) = g[r * N + c].get<double>();
        }
      }
      graphs.emplace_back(std::move(a));
    }
    std::vector<Segment> segments;
    for (const Json& s : j.at("segments")) {
      if (!s.is_array() || s.size() != 2) {
        throw ConfigError("schedule: segments are [graph_index, duration]");
      }
      segments.push_back({s[0].get<int>(), s[1].get<double>()});
    }
    const bool repeat = j.value("repeat", true);
    const double dwell = j.value("dwell_tau", 0.0);
    return SwitchingSchedule(std::move(graphs), std::move(segments), repeat,
                             dwell);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
}

Json to_json(const GameConstants& k) {
  return Json{{"mu", k.mu},
              {"theta", k.theta},
              {"theta_hat", k.theta_hat},
              {"ell", k.ell}};
}

Json to_json(const LyapunovEstimate& est) {
  return Json{{"p_hat", est.p_hat},
              {"gamma_hat", est.gamma_hat},
              {"lambda_hat", est.lambda_hat},
              {"lambda_min_Q", est.lambda_min_Q},
              {"Q_is_identity",
               est.Q.isIdentity(0.0)},
              {"horizon", est.horizon},
              {"step", est.step},
              {"tail_bound", est.tail_bound},
              {"c1", est.c1},
              {"c2", est.c2},
              {"probe_times", est.probe_times},
              {"probe_norms", est.probe_norms}};
}

namespace {

// JSON has no NaN / inf; those become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const ConvergenceReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["t_final"] = r.t_final;
  j["terminal_errors"] = {{"x", number(r.x_error)},
                          {"s", number(r.s_error)},
                          {"nu", number(r.nu_error)}};
  if (r.decay) {
    j["decay_fit"] = {{"lambda", r.decay->lambda},
                      {"gamma", r.decay->gamma},
                      {"r_squared", r.decay->r_squared},
                      {"samples", r.decay->samples}};
  } else {
    j["decay_fit"] = nullptr;
  }
  j["invariants"] = {{"nu_sum_drift", number(r.nu_sum_drift)},
                     {"z1_max", number(r.z1_max)}};
  j["sup_norm"] = number(r.sup_norm);
  j["bounded"] = r.bounded;
  j["diverged"] = r.diverged;
  j["blowup_time"] = r.blowup_time ? Json(*r.blowup_time) : Json(nullptr);
  j["tolerances"] = {{"x", r.tolerances.x},
                     {"s", r.tolerances.s},
                     {"nu", r.tolerances.nu},
                     {"min_r_squared", r.tolerances.min_r_squared},
                     {"discard_fraction", r.tolerances.discard_fraction},
                     {"nu_sum_drift", r.tolerances.nu_sum_drift},
                     {"z1", r.tolerances.z1}};
  j["checks"] = Json::array();
  for (const Check& c : r.checks) {
    Json cj{{"name", c.name},
            {"value", number(c.value)},
            {"threshold", number(c.threshold)},
            {"comparison", c.upper ? "<=" : ">="},
            {"pass", c.pass}};
    if (!c.note.empty()) cj["note"] = c.note;
    j["checks"].push_back(cj);
  }
  return j;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size() + 1);  // include '\0'
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) {
    hex << std::hex << std::setw(2) << std::setfill('0')
        << static_cast<int>(digest[k]);
  }
  return hex.str();
}

}  // namespace aggnes
