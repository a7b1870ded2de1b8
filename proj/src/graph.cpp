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

#include "aggnes/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>

#include "aggnes/errors.hpp"
#include "aggnes/rng.hpp"

namespace aggnes {

WeightedDigraph::WeightedDigraph(Mat adjacency)
    : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() != adjacency_.cols() || adjacency_.rows() == 0) {
    throw std::invalid_argument("adjacency must be square and nonempty");
  }
  if (!adjacency_.allFinite() || (adjacency_.array() < 0.0).any()) {
    throw std::invalid_argument("adjacency must be finite and nonnegative");
  }
  if (adjacency_.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("adjacency must have a zero diagonal");
  }
}

WeightedDigraph WeightedDigraph::from_edges(
    int n_nodes, const std::vector<std::tuple<int, int, double>>& edges) {
  Mat a = Mat::Zero(n_nodes, n_nodes);
  for (const auto& [from, to, w] : edges) {
    if (from < 0 || to < 0 || from >= n_nodes || to >= n_nodes) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    a(to, from) = w;
  }
  return WeightedDigraph(std::move(a));
}

WeightedDigraph WeightedDigraph::undirected(
    int n_nodes, const std::vector<std::pair<int, int>>& edges,
    double weight) {
  std::vector<std::tuple<int, int, double>> directed;
  for (const auto& [a, b] : edges) {
    directed.emplace_back(a, b, weight);
    directed.emplace_back(b, a, weight);
  }
  return from_edges(n_nodes, directed);
}

WeightedDigraph WeightedDigraph::complete(int n_nodes) {
  Mat a = Mat::Ones(n_nodes, n_nodes);
  a.diagonal().setZero();
  return WeightedDigraph(std::move(a));
}

Mat Laplacian::kron(int n) const {
  const int N = n_nodes();
  Mat out = Mat::Zero(N * n, N * n);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (matrix_(i, j) != 0.0) {
        out.block(i * n, j * n, n, n).diagonal().setConstant(matrix_(i, j));
      }
    }
  }
  return out;
}

Laplacian laplacian(const WeightedDigraph& g) {
  const Mat& a = g.adjacency();
  Mat l = -a;
  l.diagonal() = a.rowwise().sum();
  return Laplacian(std::move(l));
}

bool is_weight_balanced(const WeightedDigraph& g, double tol) {
  const Mat& a = g.adjacency();
  const Vec out_minus_in = a.rowwise().sum() - a.colwise().sum().transpose();
  return out_minus_in.cwiseAbs().maxCoeff() <= tol;
}

bool is_connected(const WeightedDigraph& g) {
  const int N = g.n_nodes();
  for (int root = 0; root < N; ++root) {
    std::vector<char> seen(N, 0);
    std::queue<int> frontier;
    seen[root] = 1;
    frontier.push(root);
    int reached = 1;
    while (!frontier.empty()) {
      const int j = frontier.front();
      frontier.pop();
      for (int i = 0; i < N; ++i) {
        if (!seen[i] && g.has_edge(j, i)) {
          seen[i] = 1;
          ++reached;
          frontier.push(i);
        }
      }
    }
    if (reached == N) return true;
  }
  return false;
}

SwitchingSchedule::SwitchingSchedule(std::vector<WeightedDigraph> graphs,
                                     std::vector<Segment> segments,
                                     bool repeat, double dwell_tau)
    : graphs_(std::move(graphs)),
      segments_(std::move(segments)),
      repeat_(repeat),
      dwell_tau_(dwell_tau),
      period_(0.0) {
  if (graphs_.empty() || segments_.empty()) {
    throw std::invalid_argument("schedule needs at least one graph/segment");
  }
  for (const auto& g : graphs_) {
    if (g.n_nodes() != graphs_.front().n_nodes()) {
      throw std::invalid_argument("schedule graphs differ in node count");
    }
  }
  double shortest = std::numeric_limits<double>::infinity();
  offsets_.reserve(segments_.size());
  for (const Segment& s : segments_) {
    if (s.graph < 0 || s.graph >= static_cast<int>(graphs_.size())) {
      throw std::invalid_argument("segment graph index out of range");
    }
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
      throw std::invalid_argument("segment durations must be positive");
    }
    offsets_.push_back(period_);
    period_ += s.duration;
    shortest = std::min(shortest, s.duration);
  }
  if (dwell_tau_ <= 0.0) dwell_tau_ = shortest;
  if (shortest < dwell_tau_) {
    throw std::invalid_argument("segment shorter than the dwell time " +
                                std::to_string(dwell_tau_));
  }
}

SwitchingSchedule SwitchingSchedule::constant(const WeightedDigraph& g,
                                              double segment_len) {
  return SwitchingSchedule({g}, {{0, segment_len}}, true);
}

double SwitchingSchedule::segment_start(std::int64_t cycle, int k) const {
  return static_cast<double>(cycle) * period_ + offsets_[k];
}

std::vector<ActiveInterval> SwitchingSchedule::intervals(double t0,
                                                         double t1) const {
  if (!(t0 >= 0.0) || t1 < t0) {
    throw std::invalid_argument("intervals: need 0 <= t0 <= t1");
  }
  if (!repeat_ && (t0 >= period_ || t1 > period_)) {
    throw ScheduleExhausted("schedule ends at t=" + std::to_string(period_) +
                            ", requested up to t=" + std::to_string(t1));
  }
  const int n_seg = static_cast<int>(segments_.size());
  std::int64_t cycle =
      repeat_ ? static_cast<std::int64_t>(std::floor(t0 / period_)) : 0;
  int k = 0;
  auto end_of = [&](std::int64_t c, int j) {
    return j + 1 < n_seg ? segment_start(c, j + 1) : segment_start(c + 1, 0);
  };
  // floor() may land one cycle late or early after rounding; walk to the
  // segment whose [start, end) contains t0.
  while (cycle > 0 && segment_start(cycle, 0) > t0) --cycle;
  while (end_of(cycle, k) <= t0) {
    if (++k == n_seg) {
      k = 0;
      ++cycle;
    }
  }

  std::vector<ActiveInterval> out;
  while (true) {
    const double begin = std::max(segment_start(cycle, k), t0);
    const double end = std::min(end_of(cycle, k), t1);
    out.push_back({begin, end, segments_[k].graph});
    if (end >= t1) break;
    if (++k == n_seg) {
      k = 0;
      ++cycle;
    }
  }
  return out;
}

int SwitchingSchedule::active_index(double t) const {
  return intervals(t, t).front().graph;
}

std::vector<double> SwitchingSchedule::switching_instants(double t0,
                                                          double t1) const {
  std::vector<double> out;
  for (const ActiveInterval& iv : intervals(t0, t1)) {
    if (iv.begin > t0 && iv.begin < t1) out.push_back(iv.begin);
  }
  return out;
}

WeightedDigraph union_graph(const SwitchingSchedule& schedule, double t,
                            double window) {
  if (!(window > 0.0)) throw std::invalid_argument("window must be > 0");
  if (t >= schedule.horizon()) {
    throw ScheduleExhausted("union_graph: t=" + std::to_string(t) +
                            " is past the schedule horizon");
  }
  const double end = std::min(t + window, schedule.horizon());
  // Slivers this short come from rounding at a switching instant.
  const double eps = 1e-10 * std::max(1.0, std::abs(t) + window);
  const int N = schedule.n_nodes();
  Mat a = Mat::Zero(N, N);
  for (const ActiveInterval& iv : schedule.intervals(t, end)) {
    if (iv.end - iv.begin > eps) {
      a = a.cwiseMax(schedule.graphs()[iv.graph].adjacency());
    }
  }
  return WeightedDigraph(std::move(a));
}

JointConnectivity is_jointly_connected(const SwitchingSchedule& schedule,
                                       double window_T, double probe_step) {
  if (!(window_T > 0.0)) throw std::invalid_argument("window_T must be > 0");
  if (!(probe_step > 0.0) ||
      probe_step > schedule.dwell_tau() * (1.0 + 1e-12)) {
    throw std::invalid_argument("probe_step must be in (0, dwell_tau]");
  }

  JointConnectivity result;
  const double period = schedule.period();
  std::vector<double> probes;
  double last_probe;
  if (schedule.repeat()) {
    last_probe = period;  // exclusive
    for (std::int64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * probe_step;
      if (t >= period) break;
      probes.push_back(t);
    }
  } else {
    result.partial_coverage = true;
    last_probe = std::max(0.0, period - window_T);
    for (std::int64_t k = 0;; ++k) {
      const double t = static_cast<double>(k) * probe_step;
      if (t > last_probe) break;
      probes.push_back(t);
    }
  }

  // The union only changes where t or t + window_T crosses an instant.
  const int n_seg = static_cast<int>(schedule.segments().size());
  for (int k = 0; k < n_seg; ++k) {
    const double s = schedule.segment_start(0, k);
    double arrival = s - window_T;
    if (schedule.repeat()) {
      arrival = std::fmod(arrival, period);
      if (arrival < 0.0) arrival += period;
    }
    for (double t : {s, arrival}) {
      if (t >= 0.0 && (schedule.repeat() ? t < last_probe : t <= last_probe)) {
        probes.push_back(t);
      }
    }
  }
  std::sort(probes.begin(), probes.end());
  probes.erase(std::unique(probes.begin(), probes.end()), probes.end());

  result.connected = true;
  for (double t : probes) {
    ++result.probes;
    if (!is_connected(union_graph(schedule, t, window_T))) {
      result.connected = false;
      result.first_failure = t;
      break;
    }
  }
  return result;
}

SwitchingSchedule generate_partition_schedule(int n_nodes, int n_parts,
                                              double segment_len,
                                              std::uint64_t seed) {
  if (n_nodes < 3) throw std::invalid_argument("partition schedule: N >= 3");
  if (n_parts < 1 || n_parts > n_nodes) {
    throw std::invalid_argument("partition schedule: need 1 <= parts <= N");
  }
  if (!(segment_len > 0.0)) {
    throw std::invalid_argument("partition schedule: segment_len > 0");
  }
  std::vector<std::pair<int, int>> ring;
  for (int k = 0; k < n_nodes; ++k) ring.emplace_back(k, (k + 1) % n_nodes);

  Rng rng(seed);
  for (int k = n_nodes - 1; k > 0; --k) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    std::swap(ring[k], ring[j]);
  }

  std::vector<std::vector<std::pair<int, int>>> parts(n_parts);
  for (int k = 0; k < n_nodes; ++k) parts[k % n_parts].push_back(ring[k]);

  std::vector<WeightedDigraph> graphs;
  std::vector<Segment> segments;
  for (int p = 0; p < n_parts; ++p) {
    std::sort(parts[p].begin(), parts[p].end());
    graphs.push_back(WeightedDigraph::undirected(n_nodes, parts[p]));
    segments.push_back({p, segment_len});
  }
  return SwitchingSchedule(std::move(graphs), std::move(segments), true,
                           segment_len);
}

}  // namespace aggnes
