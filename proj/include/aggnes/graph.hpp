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

#ifndef AGGNES_GRAPH_HPP_
#define AGGNES_GRAPH_HPP_

#include <cstdint>
#include <limits>
#include <tuple>
#include <vector>

#include "aggnes/types.hpp"

namespace aggnes {

// Weighted digraph on nodes {0, ..., N-1}.
//
// Orientation convention used everywhere: adjacency(i, j) > 0 means there
// is an edge (j, i), i.e. node i receives information from node j.
class WeightedDigraph {
 public:
  // Throws std::invalid_argument unless the matrix is square, finite,
  // nonnegative and has a zero diagonal.
  explicit WeightedDigraph(Mat adjacency);

  // Builds a graph from (from, to, weight) triples.
  static WeightedDigraph from_edges(
      int n_nodes, const std::vector<std::tuple<int, int, double>>& edges);
  // Adds both orientations of each {a, b} with the given weight.
  static WeightedDigraph undirected(
      int n_nodes, const std::vector<std::pair<int, int>>& edges,
      double weight = 1.0);
  static WeightedDigraph complete(int n_nodes);

  int n_nodes() const { return static_cast<int>(adjacency_.rows()); }
  const Mat& adjacency() const { return adjacency_; }
  bool has_edge(int from, int to) const { return adjacency_(to, from) > 0.0; }

 private:
  Mat adjacency_;
};

// L = D - A with D = diag(row sums of A). Rows always sum to zero; columns
// also sum to zero iff the graph is weight-balanced.
class Laplacian {
 public:
  explicit Laplacian(Mat matrix) : matrix_(std::move(matrix)) {}

  const Mat& matrix() const { return matrix_; }
  int n_nodes() const { return static_cast<int>(matrix_.rows()); }
  // L (x) I_n.
  Mat kron(int n) const;

 private:
  Mat matrix_;
};

Laplacian laplacian(const WeightedDigraph& g);

// |sum_j a_ij - sum_j a_ji| <= tol for every node.
bool is_weight_balanced(const WeightedDigraph& g, double tol = 1e-12);

// Some node reaches every other node along directed edges.
bool is_connected(const WeightedDigraph& g);

struct Segment {
  int graph = 0;
  double duration = 0.0;
};

// Contiguous time interval on which one graph is active. Boundaries are
// computed from cycle * period + offset so that every consumer sees
// bit-identical switching instants.
struct ActiveInterval {
  double begin = 0.0;
  double end = 0.0;
  int graph = 0;
};

// Piecewise-constant switching signal over a fixed set of graphs. Segments
// are played in order, cyclically when `repeat` is set. The signal is
// right-continuous: at a switching instant the next segment is active.
class SwitchingSchedule {
 public:
  // dwell_tau <= 0 selects the smallest segment duration. Throws
  // std::invalid_argument on an empty schedule, mismatched node counts,
  // out-of-range graph indices, or durations shorter than dwell_tau.
  SwitchingSchedule(std::vector<WeightedDigraph> graphs,
                    std::vector<Segment> segments, bool repeat,
                    double dwell_tau = 0.0);

  static SwitchingSchedule constant(const WeightedDigraph& g,
                                    double segment_len = 1.0);

  int n_nodes() const { return graphs_.front().n_nodes(); }
  const std::vector<WeightedDigraph>& graphs() const { return graphs_; }
  const std::vector<Segment>& segments() const { return segments_; }
  bool repeat() const { return repeat_; }
  double dwell_tau() const { return dwell_tau_; }
  // Sum of segment durations.
  double period() const { return period_; }
  // End of the last segment; infinity for repeating schedules.
  double horizon() const {
    return repeat_ ? std::numeric_limits<double>::infinity() : period_;
  }

  // Start time of segment k in cycle `cycle`.
  double segment_start(std::int64_t cycle, int k) const;

  // Active intervals covering [t0, t1], clipped to that range. Throws
  // ScheduleExhausted if a finite schedule ends before t1.
  std::vector<ActiveInterval> intervals(double t0, double t1) const;

  // Graph index active at time t.
  int active_index(double t) const;

  // Switching instants in (t0, t1).
  std::vector<double> switching_instants(double t0, double t1) const;

 private:
  std::vector<WeightedDigraph> graphs_;
  std::vector<Segment> segments_;
  std::vector<double> offsets_;  // prefix sums, offsets_[k] = start of k
  bool repeat_;
  double dwell_tau_;
  double period_;
};

// Edge-set union (elementwise max of adjacency) of the graphs active on
// [t, t + window). Throws ScheduleExhausted when t is past a finite
// schedule's horizon.
WeightedDigraph union_graph(const SwitchingSchedule& schedule, double t,
                            double window);

struct JointConnectivity {
  bool connected = false;
  // Set for non-repeating schedules: only windows inside the finite horizon
  // were examined.
  bool partial_coverage = false;
  // First probe time whose union graph is disconnected, or NaN.
  double first_failure = std::numeric_limits<double>::quiet_NaN();
  int probes = 0;

  explicit operator bool() const { return connected; }
};

// Checks that every window [t, t + window_T) over one schedule period has a
// connected union graph. Probes a grid of step probe_step (which must not
// exceed the dwell time) plus every instant where the union can change.
JointConnectivity is_jointly_connected(const SwitchingSchedule& schedule,
                                       double window_T, double probe_step);

// Splits the edges of an undirected unit-weight ring on N nodes into
// n_parts subgraphs (seeded shuffle, then round-robin), one repeating
// segment of length segment_len per part. Every part is weight-balanced;
// the union over n_parts * segment_len is the ring.
SwitchingSchedule generate_partition_schedule(int n_nodes, int n_parts,
                                              double segment_len,
                                              std::uint64_t seed);

}  // namespace aggnes

#endif  // AGGNES_GRAPH_HPP_
