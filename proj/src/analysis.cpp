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

#include "aggnes/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "aggnes/errors.hpp"
#include "aggnes/stepper.hpp"

namespace aggnes {

double gain_coupling(double p, double ell, double alpha) {
  return 2.0 * p * ell * std::sqrt(alpha * alpha + 1.0);
}

double delta_star(const GameConstants& k, double p, double lambda_min_Q,
                  double alpha) {
  if (!(k.mu > 0.0) || !(k.theta > 0.0) || !(k.ell > 0.0) ||
      !(k.theta_hat >= 0.0) || !(p > 0.0) || !(lambda_min_Q > 0.0) ||
      !(alpha > 0.0)) {
    throw std::invalid_argument("delta_star: inputs must be positive");
  }
  const double M = gain_coupling(p, k.ell, alpha);
  const double coupling = k.theta_hat + M * k.theta;
  return 4.0 * k.mu * lambda_min_Q /
         (coupling * coupling + 4.0 * k.mu * M * k.theta_hat);
}

DecayFit fit_decay_rate(const std::vector<double>& times,
                        const std::vector<double>& norms,
                        double discard_fraction) {
  if (times.size() != norms.size()) {
    throw std::invalid_argument("fit_decay_rate: length mismatch");
  }
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0)) {
    throw std::invalid_argument("fit_decay_rate: discard in [0, 1)");
  }
  std::size_t end = 0;
  while (end < norms.size() && norms[end] >= 1e-14 &&
         std::isfinite(norms[end])) {
    ++end;
  }
  if (end < 10) {
    throw Error("fit_decay_rate: fewer than 10 usable samples");
  }
  const double t_cut =
      times[0] + discard_fraction * (times[end - 1] - times[0]);
  std::size_t begin = 0;
  while (begin < end && times[begin] < t_cut) ++begin;
  const std::size_t count = end - begin;
  if (count < 10) {
    throw Error("fit_decay_rate: fewer than 10 samples after discarding " +
                std::to_string(begin) + " transient samples");
  }

  double mean_t = 0.0;
  double mean_y = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    mean_t += times[k];
    mean_y += std::log(norms[k]);
  }
  mean_t /= static_cast<double>(count);
  mean_y /= static_cast<double>(count);
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    const double dt = times[k] - mean_t;
    const double dy = std::log(norms[k]) - mean_y;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (stt <= 0.0) throw Error("fit_decay_rate: samples share one time");
  const double slope = sty / stt;
  const double intercept = mean_y - slope * mean_t;
  double ss_res = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    const double r = std::log(norms[k]) - (intercept + slope * times[k]);
    ss_res += r * r;
  }

  DecayFit fit;
  fit.lambda = -slope;
  fit.gamma = std::exp(intercept);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  fit.samples = static_cast<int>(count);
  return fit;
}

namespace {

double spectral_norm(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

}  // namespace

Gramian lyapunov_gramian(const SwitchingSchedule& schedule,
                         const AlgorithmParams& params, int action_dim,
                         const Mat& Q, double t, double horizon, double h,
                         double sample_dt) {
  if (!(horizon > 0.0) || !(h > 0.0) || !(sample_dt > 0.0)) {
    throw std::invalid_argument("lyapunov_gramian: horizon, h > 0");
  }
  const OrthogonalBasis basis =
      orthogonal_basis(schedule.n_nodes(), action_dim);
  const int d = 2 * basis.N * action_dim - action_dim;
  if (Q.rows() != d || Q.cols() != d) {
    throw ShapeError("lyapunov_gramian: Q must be (2Nn - n) square");
  }
  std::vector<Mat> system;
  for (const auto& g : schedule.graphs()) {
    system.push_back(ancillary_matrix(laplacian(g), params, basis));
  }

  // Columns [0, d) carry Phi(tau, t); columns [d, 2d) the running integral.
  Mat y = Mat::Zero(d, 2 * d);
  y.leftCols(d).setIdentity();
  auto field = [&](double, const Mat& state, int graph) -> Mat {
    const auto phi = state.leftCols(d);
    Mat out(d, 2 * d);
    out.leftCols(d) = system[graph] * phi;
    out.rightCols(d) = phi.transpose() * Q * phi;
    return out;
  };

  Gramian g;
  const long long stride =
      std::max(1LL, std::llround(sample_dt / h));
  long long steps = 0;
  auto observe = [&](double tau, const Mat& state, int, SampleKind kind) {
    if (kind == SampleKind::kStep && ++steps % stride != 0) return true;
    g.lag.push_back(tau - t);
    g.transition_norm.push_back(spectral_norm(state.leftCols(d)));
    return true;
  };
  y = integrate_switched(schedule, y, t, t + horizon, h, field, observe);
  const Mat P = y.rightCols(d);
  g.P = 0.5 * (P + P.transpose());
  return g;
}

std::vector<double> default_probe_times(const SwitchingSchedule& schedule,
                                        int per_segment) {
  if (per_segment < 1) throw std::invalid_argument("per_segment >= 1");
  std::vector<double> probes;
  const auto& segs = schedule.segments();
  for (int k = 0; k < static_cast<int>(segs.size()); ++k) {
    const double start = schedule.segment_start(0, k);
    for (int j = 0; j < per_segment; ++j) {
      probes.push_back(start + segs[k].duration * j / per_segment);
    }
  }
  return probes;
}

LyapunovEstimate estimate_p(const SwitchingSchedule& schedule,
                            const AlgorithmParams& params, int action_dim,
                            const Mat& Q, const std::vector<double>& probe_times,
                            double horizon, double h) {
  if (probe_times.empty()) throw std::invalid_argument("estimate_p: no probes");
  if (!Q.isApprox(Q.transpose(), 1e-12)) {
    throw std::invalid_argument("estimate_p: Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> q_eig(Q);
  if (q_eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("estimate_p: Q must be positive definite");
  }

  LyapunovEstimate est;
  est.Q = Q;
  est.lambda_min_Q = q_eig.eigenvalues().minCoeff();
  est.horizon = horizon;
  est.step = h;
  est.probe_times = probe_times;
  est.c1 = std::numeric_limits<double>::infinity();
  est.lambda_hat = std::numeric_limits<double>::infinity();

  std::vector<Gramian> grams;
  for (double t : probe_times) {
    Gramian g = lyapunov_gramian(schedule, params, action_dim, Q, t, horizon, h);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.P);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    est.c1 = std::min(est.c1, lo);
    est.c2 = std::max(est.c2, hi);
    est.probe_norms.push_back(hi);
    est.p_hat = std::max(est.p_hat, hi);
    try {
      est.lambda_hat = std::min(
          est.lambda_hat, fit_decay_rate(g.lag, g.transition_norm, 0.2).lambda);
    } catch (const Error& e) {
      throw HorizonTooShort(
          std::string("estimate_p: horizon too short to fit the decay (") +
              e.what() + ")",
          std::max(2.0 * horizon, 1.0));
    }
    grams.push_back(std::move(g));
  }
  if (!(est.lambda_hat > 0.0)) {
    throw HorizonTooShort(
        "estimate_p: transition matrix shows no exponential decay",
        std::numeric_limits<double>::infinity());
  }
  for (const Gramian& g : grams) {
    for (std::size_t k = 0; k < g.lag.size(); ++k) {
      est.gamma_hat = std::max(
          est.gamma_hat, g.transition_norm[k] * std::exp(est.lambda_hat * g.lag[k]));
    }
  }
  const double q_norm = q_eig.eigenvalues().maxCoeff();
  const double two_lambda = 2.0 * est.lambda_hat;
  est.tail_bound = est.gamma_hat * est.gamma_hat *
                   std::exp(-two_lambda * horizon) / two_lambda * q_norm;
  if (est.tail_bound > kLyapunovTailTolerance) {
    const double suggested =
        std::log(est.gamma_hat * est.gamma_hat * q_norm /
                 (two_lambda * kLyapunovTailTolerance)) /
        two_lambda;
    throw HorizonTooShort("estimate_p: tail bound " +
                              std::to_string(est.tail_bound) +
                              " exceeds 1e-6; use horizon >= " +
                              std::to_string(std::ceil(suggested)),
                          std::ceil(suggested));
  }
  return est;
}

namespace {

Check upper_check(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, true,
          std::isfinite(value) && value <= threshold, ""};
}

}  // namespace

ConvergenceReport verify_convergence(const Trajectory& traj, const GameSpec& game,
                                  const Vec& x_star,
                                  const AlgorithmParams& params,
                                  const Tolerances& tol) {
  game.check_stacked(x_star, "verify_convergence(x_star)");
  ConvergenceReport rep;
  rep.tolerances = tol;
  rep.blowup_time = traj.blowup_time;
  rep.diverged = traj.blowup_time.has_value();

  if (traj.size() == 0 || traj.stacked_dim != game.stacked_dim()) {
    rep.checks.push_back({"trajectory", 0.0, 0.0, true, false,
                          "empty or not a closed-loop trajectory"});
    return rep;
  }

  const int n = game.action_dim();
  const Projections proj = projection_matrices(game.n_players(), n);
  const OrthogonalBasis basis = orthogonal_basis(game.n_players(), n);
  const Vec phi_star = stacked_phi(game, x_star);
  const Vec s_limit = proj.P * phi_star;
  const Vec nu_limit = params.alpha * (proj.P_perp * phi_star);

  auto nu_sum = [&](const Vec& nu) {
    Vec sum = Vec::Zero(n);
    for (int i = 0; i < game.n_players(); ++i) sum += nu.segment(i * n, n);
    return sum;
  };
  const Vec nu_sum0 = nu_sum(traj.nu(0));

  std::vector<double> err_times;
  std::vector<double> err_norms;
  bool finite = true;
  double max_x_err = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vec& v = traj.values[k];
    if (!v.allFinite()) {
      finite = false;
      break;
    }
    rep.sup_norm = std::max(rep.sup_norm, v.norm());
    const Vec x = traj.x(k);
    const Vec nu = traj.nu(k);
    const double e = (x - x_star).norm();
    max_x_err = std::max(max_x_err, e);
    err_times.push_back(traj.times[k]);
    err_norms.push_back(e);
    rep.nu_sum_drift = std::max(
        rep.nu_sum_drift, (nu_sum(nu) - nu_sum0).cwiseAbs().maxCoeff());
    const Vec nu_bar =
        nu - params.alpha * (proj.P_perp * stacked_phi(game, x));
    rep.z1_max = std::max(rep.z1_max, (basis.r_kron.transpose() * nu_bar).norm());
  }

  const std::size_t last = traj.size() - 1;
  rep.t_final = traj.times[last];
  rep.x_error = (traj.x(last) - x_star).norm();
  rep.s_error = (traj.s(last) - s_limit).norm();
  rep.nu_error = (traj.nu(last) - nu_limit).norm();
  rep.bounded = finite && !rep.diverged && rep.sup_norm < 1e9;

  rep.checks.push_back(upper_check("x_error", rep.x_error, tol.x));
  rep.checks.push_back(upper_check("s_error", rep.s_error, tol.s));
  rep.checks.push_back(upper_check("nu_error", rep.nu_error, tol.nu));

  // Samples at the roundoff floor carry no rate information; the fit uses
  // the error series up to its first visit to the floor.
  const double floor = kDecayFitFloor * std::max(1.0, x_star.norm());
  std::size_t usable = 0;
  while (usable < err_norms.size() && err_norms[usable] > floor) ++usable;
  err_times.resize(usable);
  err_norms.resize(usable);

  // A run that starts at the equilibrium has nothing to fit.
  if (max_x_err <= floor) {
    rep.checks.push_back({"decay_rate", 0.0, 0.0, false, true,
                          "error at numerical zero throughout"});
    rep.checks.push_back({"decay_fit_r2", 1.0, tol.min_r_squared, false, true,
                          "error at numerical zero throughout"});
  } else {
    try {
      rep.decay = fit_decay_rate(err_times, err_norms, tol.discard_fraction);
      rep.checks.push_back({"decay_rate", rep.decay->lambda, 0.0, false,
                            rep.decay->lambda > 0.0, ""});
      rep.checks.push_back({"decay_fit_r2", rep.decay->r_squared,
                            tol.min_r_squared, false,
                            rep.decay->r_squared >= tol.min_r_squared, ""});
    } catch (const Error& e) {
      // Too few samples above the floor: the error collapsed to roundoff
      // within a handful of records, which is convergence, not a failure.
      const bool collapsed = usable < traj.size() && rep.x_error <= floor;
      const std::string note =
          collapsed ? "error reached the roundoff floor too fast to fit"
                    : e.what();
      rep.checks.push_back({"decay_rate", 0.0, 0.0, false, collapsed, note});
      rep.checks.push_back({"decay_fit_r2", 0.0, tol.min_r_squared, false,
                            collapsed, note});
    }
  }
  rep.checks.push_back(
      upper_check("nu_sum_drift", rep.nu_sum_drift, tol.nu_sum_drift));
  rep.checks.push_back(upper_check("z1_max", rep.z1_max, tol.z1));
  rep.checks.push_back({"bounded", rep.sup_norm, 1e9, true, rep.bounded,
                        rep.diverged ? "diverged" : ""});
  if (tol.t_end) {
    const bool complete = rep.t_final >= *tol.t_end - 1e-9 * *tol.t_end;
    rep.checks.push_back({"complete", rep.t_final, *tol.t_end, false, complete,
                          complete ? "" : "trajectory ended early"});
  }

  rep.pass = !rep.diverged;
  for (const Check& c : rep.checks) rep.pass = rep.pass && c.pass;
  return rep;
}

}  // namespace aggnes
