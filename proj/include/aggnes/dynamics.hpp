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

#ifndef AGGNES_DYNAMICS_HPP_
#define AGGNES_DYNAMICS_HPP_

#include <optional>
#include <vector>

#include "aggnes/errors.hpp"
#include "aggnes/game.hpp"
#include "aggnes/graph.hpp"
#include "aggnes/types.hpp"

namespace aggnes {

// Gains of the seeking dynamics: delta scales the action update, alpha the
// estimator leak, beta the consensus coupling.
struct AlgorithmParams {
  double delta = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  // Certified gain bound, when one has been computed.
  std::optional<double> delta_star;

  void validate() const;
  bool below_bound() const { return !delta_star || delta < *delta_star; }
};

// Joint state (x, s, nu) of all players at time t; each block is stacked
// col(., ..., .) in R^{Nn}.
struct SystemState {
  Vec x;
  Vec s;
  Vec nu;
  double t = 0.0;

  Vec packed() const;
  static SystemState unpack(const Vec& packed, int stacked_dim, double t);
};

// s(0) = phi(x(0)), nu(0) = 0.
SystemState default_initial_state(const GameSpec& game, const Vec& x0);

// P_n = (1 1^T / N) (x) I_n and its complement.
struct Projections {
  Mat P;
  Mat P_perp;
};

Projections projection_matrices(int N, int n);

// Orthogonal Q = [r R] with r = 1/sqrt(N) and R an orthonormal basis of the
// complement, together with their (x) I_n lifts.
struct OrthogonalBasis {
  int N = 0;
  int n = 0;
  Vec r;
  Mat R;
  Mat r_kron;
  Mat R_kron;
  Mat Q_kron;
};

// R comes from Gram-Schmidt on [r | e_1 ... e_N] in that order (dependent
// columns dropped), with each column's first entry above 1e-10 in magnitude
// made positive.
OrthogonalBasis orthogonal_basis(int N, int n);

struct StateDerivative {
  Vec x;
  Vec s;
  Vec nu;
};

// Right-hand side of the seeking dynamics:
//   x'  = -delta F(x, s)
//   s'  = -alpha (s - phi(x)) - beta (L (x) I_n) s - nu
//   nu' = alpha beta (L (x) I_n) s
// Player i's consensus term only reads s_j for neighbors j (L_ij != 0).
StateDerivative closed_loop_field(const SystemState& state,
                                  const GameSpec& game,
                                  const Laplacian& laplacian,
                                  const AlgorithmParams& params);

// Time-stamped samples of a switched trajectory. For closed-loop runs each
// value is packed (x, s, nu); for ancillary runs it is zeta.
struct Trajectory {
  int stacked_dim = 0;  // N*n for closed-loop runs, 0 otherwise
  std::vector<double> times;
  std::vector<int> graph;  // active graph from each sample onward
  std::vector<Vec> values;
  std::vector<double> switching_instants;
  std::optional<double> blowup_time;

  std::size_t size() const { return times.size(); }
  Vec x(std::size_t k) const { return values[k].segment(0, stacked_dim); }
  Vec s(std::size_t k) const {
    return values[k].segment(stacked_dim, stacked_dim);
  }
  Vec nu(std::size_t k) const {
    return values[k].segment(2 * stacked_dim, stacked_dim);
  }
  SystemState state(std::size_t k) const {
    return SystemState::unpack(values[k], stacked_dim, times[k]);
  }
};

// Thrown when the state stops being finite or its norm passes the
// divergence threshold. Carries the samples recorded up to that point.
class DivergenceError : public Error {
 public:
  DivergenceError(double blowup_time, Trajectory partial);
  double blowup_time() const { return blowup_time_; }
  const Trajectory& partial() const { return partial_; }

 private:
  double blowup_time_;
  Trajectory partial_;
};

struct IntegrateOptions {
  // Record every k-th step; switching instants and the endpoints are always
  // recorded.
  int record_stride = 1;
  double divergence_threshold = 1e9;
  // Allowed |sum_i nu_i(0)|.
  double nu_sum_tol = 1e-12;
};

// Fixed-step RK4 over [initial.t, t_end] with switch alignment. Throws
// AssumptionViolation(kZeroMultiplierSum) if sum_i nu_i(0) != 0 and
// DivergenceError on blow-up.
Trajectory integrate(const SystemState& initial, const GameSpec& game,
                     const SwitchingSchedule& schedule,
                     const AlgorithmParams& params, double t_end, double h,
                     const IntegrateOptions& options = {});

// Error and rotated coordinates around an equilibrium.
struct TransformedState {
  Vec x_bar;   // x - x*
  Vec s_bar;   // s - P_n phi(x)
  Vec nu_bar;  // nu - alpha P_n^perp phi(x)
  Vec y1, y2;  // Q^T s_bar split n / Nn - n
  Vec z1, z2;  // Q^T nu_bar split n / Nn - n
};

TransformedState to_error_coordinates(const SystemState& state,
                                      const GameSpec& game, const Vec& x_star,
                                      const OrthogonalBasis& basis,
                                      double alpha);

// Inverse of the s-part of the transform: Q (x) I_n y + P_n phi(x).
Vec reconstruct_estimate(const TransformedState& ts, const GameSpec& game,
                         const Vec& x, const OrthogonalBasis& basis);

// System matrix of the linear estimator-error subsystem for one graph, on
// zeta = (zeta1 in R^n, zeta2, zeta3 in R^{Nn-n}):
//   [ -alpha I    0                          0  ]
//   [  0         -alpha I - beta (R^T L R)(x)I  -I ]
//   [  0          alpha beta (R^T L R)(x)I    0  ]
Mat ancillary_matrix(const Laplacian& laplacian, const AlgorithmParams& params,
                     const OrthogonalBasis& basis);

// Integrates zeta' = A(t) zeta with the same switch-aligned stepper.
Trajectory simulate_ancillary(const SwitchingSchedule& schedule,
                              const AlgorithmParams& params, int action_dim,
                              const Vec& zeta0, double t_end, double h,
                              const IntegrateOptions& options = {});

}  // namespace aggnes

#endif  // AGGNES_DYNAMICS_HPP_
