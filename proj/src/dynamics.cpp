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

#include "aggnes/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <unsupported/Eigen/KroneckerProduct>

#include "aggnes/stepper.hpp"

namespace aggnes {

namespace {

Mat kron_identity(const Mat& m, int n) {
  return Eigen::kroneckerProduct(m, Mat::Identity(n, n)).eval();
}

}  // namespace

void AlgorithmParams::validate() const {
  if (!(delta > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("delta, alpha and beta must be positive");
  }
}

Vec SystemState::packed() const {
  Vec out(x.size() + s.size() + nu.size());
  out << x, s, nu;
  return out;
}

SystemState SystemState::unpack(const Vec& packed, int stacked_dim, double t) {
  if (packed.size() != 3 * stacked_dim) {
    throw ShapeError("SystemState::unpack: expected length 3*N*n");
  }
  return SystemState{packed.segment(0, stacked_dim),
                     packed.segment(stacked_dim, stacked_dim),
                     packed.segment(2 * stacked_dim, stacked_dim), t};
}

SystemState default_initial_state(const GameSpec& game, const Vec& x0) {
  game.check_stacked(x0, "default_initial_state");
  return SystemState{x0, stacked_phi(game, x0), Vec::Zero(game.stacked_dim()),
                     0.0};
}

Projections projection_matrices(int N, int n) {
  if (N < 1 || n < 1) throw std::invalid_argument("projections: N, n >= 1");
  Mat P = kron_identity(Mat::Constant(N, N, 1.0 / N), n);
  Mat P_perp = Mat::Identity(N * n, N * n) - P;
  return {std::move(P), std::move(P_perp)};
}

OrthogonalBasis orthogonal_basis(int N, int n) {
  if (N < 2 || n < 1) throw std::invalid_argument("basis: N >= 2, n >= 1");
  OrthogonalBasis b;
  b.N = N;
  b.n = n;
  b.r = Vec::Constant(N, 1.0 / std::sqrt(static_cast<double>(N)));

  Mat q(N, N);
  q.col(0) = b.r;
  int filled = 1;
  for (int e = 0; e < N && filled < N; ++e) {
    Vec v = Vec::Unit(N, e);
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < filled; ++k) v -= q.col(k).dot(v) * q.col(k);
    }
    const double norm = v.norm();
    if (norm < 1e-10) continue;
    v /= norm;
    for (int k = 0; k < N; ++k) {
      if (std::abs(v[k]) > 1e-10) {
        if (v[k] < 0.0) v = -v;
        break;
      }
    }
    q.col(filled++) = v;
  }
  b.R = q.rightCols(N - 1);
  b.r_kron = kron_identity(b.r, n);
  b.R_kron = kron_identity(b.R, n);
  b.Q_kron = kron_identity(q, n);
  return b;
}

StateDerivative closed_loop_field(const SystemState& state,
                                  const GameSpec& game,
                                  const Laplacian& laplacian,
                                  const AlgorithmParams& params) {
  game.check_stacked(state.x, "closed_loop_field(x)");
  game.check_stacked(state.s, "closed_loop_field(s)");
  game.check_stacked(state.nu, "closed_loop_field(nu)");
  if (laplacian.n_nodes() != game.n_players()) {
    throw ShapeError("closed_loop_field: graph size differs from N");
  }
  const int N = game.n_players();
  const int n = game.action_dim();
  const Mat& L = laplacian.matrix();

  // Player i only touches s_j with L_ij != 0.
  Vec consensus = Vec::Zero(game.stacked_dim());
  for (int i = 0; i < N; ++i) {
    auto out = consensus.segment(i * n, n);
    const auto s_i = state.s.segment(i * n, n);
    for (int j = 0; j < N; ++j) {
      if (j == i || L(i, j) == 0.0) continue;
      out += (-L(i, j)) * (s_i - state.s.segment(j * n, n));
    }
  }

  StateDerivative d;
  d.x = -params.delta * extended_pseudo_gradient(game, state.x, state.s);
  d.s = -params.alpha * (state.s - stacked_phi(game, state.x)) -
        params.beta * consensus - state.nu;
  d.nu = params.alpha * params.beta * consensus;
  return d;
}

DivergenceError::DivergenceError(double blowup_time, Trajectory partial)
    : Error("state diverged at t=" + std::to_string(blowup_time)),
      blowup_time_(blowup_time),
      partial_(std::move(partial)) {}

namespace {

// Shared recorder for closed-loop and ancillary runs.
template <class Field>
Trajectory run_switched(const SwitchingSchedule& schedule, const Vec& y0,
                        double t0, double t_end, double h, int stacked_dim,
                        const IntegrateOptions& options, Field&& field) {
  if (!(h > 0.0)) throw std::invalid_argument("integrate: h must be > 0");
  if (!(t_end > t0)) throw std::invalid_argument("integrate: t_end <= t0");
  if (options.record_stride < 1) {
    throw std::invalid_argument("integrate: record_stride must be >= 1");
  }
  Trajectory traj;
  traj.stacked_dim = stacked_dim;
  traj.switching_instants = schedule.switching_instants(t0, t_end);
  long long steps = 0;
  auto observe = [&](double t, const Vec& y, int graph, SampleKind kind) {
    const bool finite = y.allFinite();
    if (!finite || y.norm() > options.divergence_threshold) {
      if (finite) {
        traj.times.push_back(t);
        traj.graph.push_back(graph);
        traj.values.push_back(y);
      }
      traj.blowup_time = t;
      throw DivergenceError(t, std::move(traj));
    }
    bool record = kind != SampleKind::kStep;
    if (kind == SampleKind::kStep) {
      record = ++steps % options.record_stride == 0;
    }
    if (record) {
      traj.times.push_back(t);
      traj.graph.push_back(graph);
      traj.values.push_back(y);
    }
    return true;
  };
  integrate_switched(schedule, y0, t0, t_end, h, field, observe);
  return traj;
}

}  // namespace

Trajectory integrate(const SystemState& initial, const GameSpec& game,
                     const SwitchingSchedule& schedule,
                     const AlgorithmParams& params, double t_end, double h,
                     const IntegrateOptions& options) {
  params.validate();
  game.check_stacked(initial.x, "integrate(x0)");
  game.check_stacked(initial.s, "integrate(s0)");
  game.check_stacked(initial.nu, "integrate(nu0)");
  if (schedule.n_nodes() != game.n_players()) {
    throw ShapeError("integrate: schedule node count differs from N");
  }
  const int n = game.action_dim();
  const int dim = game.stacked_dim();
  Vec nu_sum = Vec::Zero(n);
  for (int i = 0; i < game.n_players(); ++i) {
    nu_sum += initial.nu.segment(i * n, n);
  }
  if (nu_sum.cwiseAbs().maxCoeff() > options.nu_sum_tol) {
    throw AssumptionViolation(
        Assumption::kZeroMultiplierSum,
        "sum of initial multipliers has magnitude " +
            std::to_string(nu_sum.cwiseAbs().maxCoeff()) +
            "; it must vanish");
  }

  std::vector<Laplacian> laplacians;
  for (const auto& g : schedule.graphs()) laplacians.push_back(laplacian(g));

  auto field = [&](double t, const Vec& y, int graph) -> Vec {
    const SystemState st = SystemState::unpack(y, dim, t);
    const StateDerivative d =
        closed_loop_field(st, game, laplacians[graph], params);
    Vec out(3 * dim);
    out << d.x, d.s, d.nu;
    return out;
  };
  return run_switched(schedule, initial.packed(), initial.t, t_end, h, dim,
                      options, field);
}

TransformedState to_error_coordinates(const SystemState& state,
                                      const GameSpec& game, const Vec& x_star,
                                      const OrthogonalBasis& basis,
                                      double alpha) {
  game.check_stacked(state.x, "to_error_coordinates(x)");
  game.check_stacked(state.s, "to_error_coordinates(s)");
  game.check_stacked(state.nu, "to_error_coordinates(nu)");
  game.check_stacked(x_star, "to_error_coordinates(x_star)");
  if (basis.N != game.n_players() || basis.n != game.action_dim()) {
    throw ShapeError("to_error_coordinates: basis does not match the game");
  }
  const int n = game.action_dim();
  const int rest = game.stacked_dim() - n;
  const Projections proj = projection_matrices(basis.N, n);
  const Vec phi = stacked_phi(game, state.x);

  TransformedState ts;
  ts.x_bar = state.x - x_star;
  ts.s_bar = state.s - proj.P * phi;
  ts.nu_bar = state.nu - alpha * (proj.P_perp * phi);
  const Vec y = basis.Q_kron.transpose() * ts.s_bar;
  const Vec z = basis.Q_kron.transpose() * ts.nu_bar;
  ts.y1 = y.head(n);
  ts.y2 = y.tail(rest);
  ts.z1 = z.head(n);
  ts.z2 = z.tail(rest);
  return ts;
}

Vec reconstruct_estimate(const TransformedState& ts, const GameSpec& game,
                         const Vec& x, const OrthogonalBasis& basis) {
  Vec y(ts.y1.size() + ts.y2.size());
  y << ts.y1, ts.y2;
  const Projections proj = projection_matrices(basis.N, basis.n);
  return basis.Q_kron * y + proj.P * stacked_phi(game, x);
}

Mat ancillary_matrix(const Laplacian& laplacian, const AlgorithmParams& params,
                     const OrthogonalBasis& basis) {
  if (laplacian.n_nodes() != basis.N) {
    throw ShapeError("ancillary_matrix: graph size differs from basis");
  }
  const int n = basis.n;
  const int m = basis.N * n - n;
  const double a = params.alpha;
  const double b = params.beta;
  const Mat reduced = kron_identity(
      basis.R.transpose() * laplacian.matrix() * basis.R, n);

  Mat A = Mat::Zero(n + 2 * m, n + 2 * m);
  A.topLeftCorner(n, n) = -a * Mat::Identity(n, n);
  A.block(n, n, m, m) = -a * Mat::Identity(m, m) - b * reduced;
  A.block(n, n + m, m, m) = -Mat::Identity(m, m);
  A.block(n + m, n, m, m) = a * b * reduced;
  return A;
}

Trajectory simulate_ancillary(const SwitchingSchedule& schedule,
                              const AlgorithmParams& params, int action_dim,
                              const Vec& zeta0, double t_end, double h,
                              const IntegrateOptions& options) {
  if (!(params.alpha > 0.0) || !(params.beta > 0.0)) {
    throw std::invalid_argument("alpha and beta must be positive");
  }
  const OrthogonalBasis basis = orthogonal_basis(schedule.n_nodes(), action_dim);
  const int dim = 2 * basis.N * action_dim - action_dim;
  if (zeta0.size() != dim) {
    throw ShapeError("simulate_ancillary: zeta0 must have length 2Nn - n");
  }
  std::vector<Mat> system;
  for (const auto& g : schedule.graphs()) {
    system.push_back(ancillary_matrix(laplacian(g), params, basis));
  }
  auto field = [&](double, const Vec& z, int graph) -> Vec {
    return system[graph] * z;
  };
  return run_switched(schedule, zeta0, 0.0, t_end, h, 0, options, field);
}

}  // namespace aggnes
