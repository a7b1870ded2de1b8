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

#ifndef AGGNES_ANALYSIS_HPP_
#define AGGNES_ANALYSIS_HPP_

#include <optional>
#include <string>
#include <vector>

#include "aggnes/dynamics.hpp"
#include "aggnes/game.hpp"
#include "aggnes/graph.hpp"
#include "aggnes/types.hpp"

namespace aggnes {

// M = 2 p ell sqrt(alpha^2 + 1).
double gain_coupling(double p, double ell, double alpha);

// Largest action gain for which the closed-loop Lyapunov function is
// guaranteed to decrease:
//   4 mu lambda_min(Q) / ((theta_hat + M theta)^2 + 4 mu M theta_hat).
// Sufficient, not necessary. Throws std::invalid_argument on nonpositive
// inputs.
double delta_star(const GameConstants& constants, double p,
                  double lambda_min_Q, double alpha);

struct DecayFit {
  double lambda = 0.0;  // -slope of log(norm) against t
  double gamma = 0.0;   // exp(intercept)
  double r_squared = 0.0;
  int samples = 0;
};

// Least-squares fit of log(norm) = log(gamma) - lambda t. The series is cut
// at the first norm below 1e-14, then the first `discard_fraction` of the
// remaining time span is dropped. Throws Error when fewer than 10 samples
// remain.
DecayFit fit_decay_rate(const std::vector<double>& times,
                        const std::vector<double>& norms,
                        double discard_fraction);

// Truncated Lyapunov integral P(t) = int_t^{t+horizon} Phi^T Q Phi dtau of
// the ancillary system, plus samples of ||Phi(tau, t)|| taken every
// `sample_dt` (relative times tau - t).
struct Gramian {
  Mat P;
  std::vector<double> lag;
  std::vector<double> transition_norm;
};

Gramian lyapunov_gramian(const SwitchingSchedule& schedule,
                         const AlgorithmParams& params, int action_dim,
                         const Mat& Q, double t, double horizon, double h,
                         double sample_dt = 0.05);

struct LyapunovEstimate {
  double p_hat = 0.0;  // max spectral norm of P over probes
  double gamma_hat = 0.0;
  double lambda_hat = 0.0;
  Mat Q;
  double lambda_min_Q = 0.0;
  double horizon = 0.0;
  double step = 0.0;
  double tail_bound = 0.0;
  // Extreme eigenvalues of P over probes (decrescence constants).
  double c1 = 0.0;
  double c2 = 0.0;
  std::vector<double> probe_times;
  std::vector<double> probe_norms;
};

// `per_segment` evenly spaced probes inside every segment of the first
// schedule period.
std::vector<double> default_probe_times(const SwitchingSchedule& schedule,
                                        int per_segment);

inline constexpr double kLyapunovTailTolerance = 1e-6;

// Estimates p = sup_t ||P(t)|| on the given probe grid. Also fits
// ||Phi(tau, t)|| <= gamma exp(-lambda (tau - t)): lambda is the smallest
// per-probe decay fit, gamma the smallest prefactor enveloping every
// sample. Throws HorizonTooShort when
//   gamma^2 exp(-2 lambda horizon) / (2 lambda) ||Q|| > 1e-6.
LyapunovEstimate estimate_p(const SwitchingSchedule& schedule,
                            const AlgorithmParams& params, int action_dim,
                            const Mat& Q, const std::vector<double>& probe_times,
                            double horizon, double h);

struct Tolerances {
  double x = 1e-4;
  double s = 1e-4;
  double nu = 1e-4;
  double min_r_squared = 0.9;
  double discard_fraction = 0.2;
  double nu_sum_drift = 1e-9;
  double z1 = 1e-9;
  // When set, a trajectory ending earlier counts as incomplete.
  std::optional<double> t_end;
};

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool upper = true;  // value <= threshold when set, >= otherwise
  bool pass = false;
  std::string note;
};

struct ConvergenceReport {
  double t_final = 0.0;
  double x_error = 0.0;
  double s_error = 0.0;
  double nu_error = 0.0;
  std::optional<DecayFit> decay;
  double nu_sum_drift = 0.0;
  double z1_max = 0.0;
  double sup_norm = 0.0;
  bool bounded = false;
  bool diverged = false;
  std::optional<double> blowup_time;
  Tolerances tolerances;
  std::vector<Check> checks;
  bool pass = false;
};

// Relative roundoff floor for ||x - x*||: decay fits stop at the first
// sample below kDecayFitFloor * max(1, ||x*||).
inline constexpr double kDecayFitFloor = 1e-10;

// Compares a closed-loop trajectory with the equilibrium limits
//   x -> x*,  s -> P_n phi(x*),  nu -> alpha P_n^perp phi(x*),
// fits the decay of ||x - x*||, and records the conserved-quantity
// maxima. Never throws on a failed criterion; failures are report entries.
ConvergenceReport verify_convergence(const Trajectory& trajectory,
                                  const GameSpec& game, const Vec& x_star,
                                  const AlgorithmParams& params,
                                  const Tolerances& tolerances);

}  // namespace aggnes

#endif  // AGGNES_ANALYSIS_HPP_
