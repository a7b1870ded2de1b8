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

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "aggnes/analysis.hpp"
#include "aggnes/dynamics.hpp"
#include "aggnes/errors.hpp"
#include "aggnes/game.hpp"
#include "aggnes/graph.hpp"
#include "aggnes/io.hpp"
#include "aggnes/rng.hpp"
#include "doctest.h"

using namespace aggnes;

namespace {

// Direct transcription of the bound, used as an oracle.
double bound(double mu, double theta, double theta_hat, double ell, double p,
             double alpha, double lmin) {
  const double M = 2.0 * p * ell * std::sqrt(alpha * alpha + 1.0);
  const double a = theta_hat + M * theta;
  return 4.0 * mu * lmin / (a * a + 4.0 * mu * M * theta_hat);
}

GameSpec lq(int N, double d) {
  LqGameParams p;
  p.n_players = N;
  p.c = Vec::LinSpaced(N, 1, N);
  p.d = d;
  return make_lq_game(p);
}

Vec lq_oracle(int N, double d) {
  const Mat H = Mat::Identity(N, N) * (1.0 + d / N) + Mat::Constant(N, N, d / N);
  return H.lu().solve(Vec::LinSpaced(N, 1, N));
}

}  // namespace

TEST_CASE("delta_star closed form") {
  const GameConstants k{1.0, 1.15, 0.1, 1.0};
  CHECK(gain_coupling(2.0, 1.0, 1.0) == doctest::Approx(4.0 * std::sqrt(2.0)));
  const double ds = delta_star(k, 2.0, 1.0, 1.0);
  CHECK(std::abs(ds - 0.087163) <= 1e-5);
  CHECK(ds == doctest::Approx(bound(1.0, 1.15, 0.1, 1.0, 2.0, 1.0, 1.0)).epsilon(1e-14));
}

TEST_CASE("delta_star monotonicity by finite differences") {
  const GameConstants k{1.0, 1.15, 0.1, 1.0};
  const double base = delta_star(k, 2.0, 1.0, 1.0);
  const double e = 1e-6;
  auto with = [&](auto mutate) {
    GameConstants c = k;
    double p = 2.0, lmin = 1.0, alpha = 1.0;
    mutate(c, p, lmin, alpha);
    return (delta_star(c, p, lmin, alpha) - base) / e;
  };
  CHECK(with([&](GameConstants& c, double&, double&, double&) { c.mu += e; }) > 0);
  CHECK(with([&](GameConstants&, double&, double& l, double&) { l += e; }) > 0);
  CHECK(with([&](GameConstants& c, double&, double&, double&) { c.theta += e; }) < 0);
  CHECK(with([&](GameConstants& c, double&, double&, double&) { c.theta_hat += e; }) < 0);
  CHECK(with([&](GameConstants& c, double&, double&, double&) { c.ell += e; }) < 0);
  CHECK(with([&](GameConstants&, double& p, double&, double&) { p += e; }) < 0);
  CHECK(with([&](GameConstants&, double&, double&, double& a) { a += e; }) < 0);

  // Doubling p at least halves the bound here.
  CHECK(delta_star(k, 4.0, 1.0, 1.0) <= 0.5 * base);

  // Near the decoupled limit the bound blows up.
  const GameConstants tiny{1.0, 1.15, 1e-9, 1.0};
  const double p_small = 1e-9 / (2.0 * std::sqrt(2.0));
  CHECK(gain_coupling(p_small, 1.0, 1.0) == doctest::Approx(1e-9));
  CHECK(delta_star(tiny, p_small, 1.0, 1.0) > 1e15);
  // theta_hat = 0 is allowed and finite.
  CHECK(std::isfinite(delta_star(GameConstants{1, 1, 0, 1}, 1.0, 1.0, 1.0)));

  CHECK_THROWS_AS(delta_star(k, 0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(delta_star(k, 1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(delta_star(k, 1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(delta_star(GameConstants{0, 1, 0, 1}, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("fit_decay_rate on exact exponentials") {
  std::vector<double> t, a, b;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.1 * k);
    a.push_back(std::exp(-2.0 * t.back()));
    b.push_back(5.0 * std::exp(-0.5 * t.back()));
  }
  const DecayFit fa = fit_decay_rate(t, a, 0.0);
  CHECK(std::abs(fa.lambda - 2.0) <= 1e-9);
  CHECK(fa.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fa.samples == 101);
  const DecayFit fb = fit_decay_rate(t, b, 0.2);
  CHECK(fb.lambda == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fb.gamma == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(fb.samples < 101);
  CHECK(fb.samples >= 80);
}

TEST_CASE("fit_decay_rate edge cases") {
  std::vector<double> t, v;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(k);
    v.push_back(std::exp(-1.0 * k));
  }
  // Samples below 1e-14 (t > 32) are dropped, the rest fit exactly.
  const DecayFit f = fit_decay_rate(t, v, 0.0);
  CHECK(f.lambda == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.samples <= 33);

  // Noisy decay still yields a positive rate with lower r^2.
  Rng rng(8);
  std::vector<double> noisy;
  for (int k = 0; k <= 100; ++k)
    noisy.push_back(std::exp(-0.1 * k + 0.3 * rng.normal()));
  const DecayFit fn = fit_decay_rate(t, noisy, 0.0);
  CHECK(fn.lambda > 0.05);
  CHECK(fn.r_squared < 1.0);

  CHECK_THROWS_AS(fit_decay_rate({0, 1, 2}, {1, 0.5, 0.25}, 0.0), Error);
  CHECK_THROWS_AS(fit_decay_rate(t, std::vector<double>(5, 1.0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_decay_rate(t, v, 1.0), std::invalid_argument);
}

TEST_CASE("Lyapunov integral on the empty graph") {
  // alpha = 1, N = 2, n = 1: the first ancillary coordinate is e^{-t}, so
  // P[0,0] = int_0^H e^{-2t} = (1 - e^{-2H}) / 2.
  const SwitchingSchedule sch =
      SwitchingSchedule::constant(WeightedDigraph(Mat::Zero(2, 2)));
  const AlgorithmParams p{0.1, 1.0, 0.7, {}};
  const double H = 20.0;
  const Gramian gr = lyapunov_gramian(sch, p, 1, Mat::Identity(3, 3), 0.0, H, 1e-2);
  CHECK(gr.P(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0 * H))).epsilon(1e-9));
  CHECK(gr.P(0, 1) == doctest::Approx(0.0));
  CHECK(gr.P(0, 2) == doctest::Approx(0.0));
  CHECK(gr.transition_norm.front() == doctest::Approx(1.0));
  CHECK(gr.lag.front() == 0.0);
}

TEST_CASE("Lyapunov estimate on the partition schedule") {
  const SwitchingSchedule sch = generate_partition_schedule(5, 2, 0.5, 7);
  const AlgorithmParams p{0.1, 1.0, 1.0, {}};
  const int dim = 9;
  const auto probes = default_probe_times(sch, 2);
  REQUIRE(probes.size() == 4);
  for (double t : probes) {
    CHECK(t >= 0.0);
    CHECK(t < sch.period());
  }

  const LyapunovEstimate e1 =
      estimate_p(sch, p, 1, Mat::Identity(dim, dim), probes, 60.0, 5e-3);
  CHECK(e1.p_hat > 0.0);
  CHECK(e1.lambda_hat > 0.0);
  CHECK(e1.gamma_hat >= 1.0);
  CHECK(e1.tail_bound <= kLyapunovTailTolerance);
  CHECK(e1.c1 > 0.0);
  CHECK(e1.c2 == doctest::Approx(e1.p_hat));
  CHECK(e1.lambda_min_Q == doctest::Approx(1.0));

  const LyapunovEstimate e2 =
      estimate_p(sch, p, 1, 2.0 * Mat::Identity(dim, dim), probes, 60.0, 5e-3);
  CHECK(std::abs(e2.p_hat - 2.0 * e1.p_hat) <= 1e-8 * e1.p_hat);

  for (double t : probes) {
    const Gramian g = lyapunov_gramian(sch, p, 1, Mat::Identity(dim, dim), t, 60.0, 5e-3);
    CHECK((g.P - g.P.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(g.P);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  try {
    estimate_p(sch, p, 1, Mat::Identity(dim, dim), probes, 2.0, 5e-3);
    FAIL("expected HorizonTooShort");
  } catch (const HorizonTooShort& err) {
    CHECK(err.suggested_horizon() > 2.0);
  }
  CHECK_THROWS_AS(estimate_p(sch, p, 1, -Mat::Identity(dim, dim), probes, 60, 5e-3),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_p(sch, p, 1, Mat::Identity(dim, dim), {}, 60, 5e-3),
                  std::invalid_argument);
}

TEST_CASE("ancillary trajectories decay on the partition schedule") {
  const SwitchingSchedule sch = generate_partition_schedule(5, 2, 0.5, 7);
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    Vec z0(9);
    for (auto& v : z0) v = rng.normal();
    z0.normalize();
    IntegrateOptions o;
    o.record_stride = 50;
    const Trajectory tr =
        simulate_ancillary(sch, AlgorithmParams{0.1, 1, 1, {}}, 1, z0, 30.0, 1e-3, o);
    std::vector<double> norms;
    for (const Vec& v : tr.values) norms.push_back(v.norm());
    const DecayFit f = fit_decay_rate(tr.times, norms, 0.2);
    CHECK(f.lambda > 0.0);
    CHECK(f.r_squared >= 0.9);
  }
}

TEST_CASE("verify_convergence from an equilibrium start") {
  const int N = 4;
  const GameSpec g = lq(N, 0.1);
  const Vec xs = lq_oracle(N, 0.1);
  const AlgorithmParams p{0.05, 1.0, 1.0, {}};
  const Projections pr = projection_matrices(N, 1);
  const Vec phi = stacked_phi(g, xs);
  const SystemState st{xs, pr.P * phi, p.alpha * pr.P_perp * phi, 0.0};
  const SwitchingSchedule sch = generate_partition_schedule(N, 2, 0.5, 3);
  const Trajectory tr = integrate(st, g, sch, p, 20.0, 1e-2);
  Tolerances tol;
  tol.t_end = 20.0;
  const ConvergenceReport r = verify_convergence(tr, g, xs, p, tol);
  CHECK(r.x_error <= 1e-10);
  CHECK(r.s_error <= 1e-10);
  CHECK(r.nu_error <= 1e-10);
  CHECK(r.pass);
  CHECK_FALSE(r.diverged);
  for (const Check& c : r.checks) CHECK_MESSAGE(c.pass, c.name);
}

TEST_CASE("verify_convergence flags real failures") {
  const int N = 3;
  const GameSpec g = lq(N, 0.1);
  const Vec xs = lq_oracle(N, 0.1);
  const SwitchingSchedule sch =
      SwitchingSchedule::constant(WeightedDigraph::complete(N));

  SUBCASE("too short to converge") {
    const AlgorithmParams p{0.05, 1.0, 1.0, {}};
    const Trajectory tr =
        integrate(default_initial_state(g, Vec::Zero(N)), g, sch, p, 5.0, 1e-2);
    const ConvergenceReport r = verify_convergence(tr, g, xs, p, Tolerances{});
    CHECK_FALSE(r.pass);
    CHECK(r.x_error > 1e-4);
  }

  SUBCASE("divergence is reported, never passed") {
    const AlgorithmParams p{1e4, 1.0, 1.0, {}};
    try {
      integrate(default_initial_state(g, Vec::Ones(N)), g, sch, p, 10.0, 1e-3);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      Tolerances tol;
      tol.t_end = 10.0;
      const ConvergenceReport r = verify_convergence(e.partial(), g, xs, p, tol);
      CHECK(r.diverged);
      CHECK_FALSE(r.pass);
      REQUIRE(r.blowup_time.has_value());
      CHECK(*r.blowup_time == e.blowup_time());
    }
  }

  SUBCASE("a gain far above the bound is reported faithfully") {
    // The bound is sufficient, not necessary: whatever happens must be
    // reported consistently.
    const GameConstants k{1.05, 1.15, 0.1, 1.0};
    const double ds = delta_star(k, 5.0, 1.0, 1.0);
    const AlgorithmParams p{100.0 * ds, 1.0, 1.0, ds};
    CHECK_FALSE(p.below_bound());
    Tolerances tol;
    tol.t_end = 100.0;
    try {
      const Trajectory tr =
          integrate(default_initial_state(g, Vec::Zero(N)), g, sch, p, 100.0, 1e-3);
      const ConvergenceReport r = verify_convergence(tr, g, xs, p, tol);
      CHECK_FALSE(r.diverged);
      CHECK(r.pass == (r.x_error <= tol.x && r.s_error <= tol.s &&
                       r.nu_error <= tol.nu && r.decay && r.decay->lambda > 0));
    } catch (const DivergenceError& e) {
      const ConvergenceReport r = verify_convergence(e.partial(), g, xs, p, tol);
      CHECK(r.diverged);
      CHECK_FALSE(r.pass);
    }
  }
}

TEST_CASE("report is reproducible from the trajectory CSV") {
  const int N = 5;
  const GameSpec g = lq(N, 0.1);
  const Vec xs = lq_oracle(N, 0.1);
  const AlgorithmParams p{0.04, 1.0, 1.0, {}};
  const SwitchingSchedule sch = generate_partition_schedule(N, 2, 0.5, 7);
  IntegrateOptions o;
  o.record_stride = 20;
  const Trajectory tr =
      integrate(default_initial_state(g, Vec::Zero(N)), g, sch, p, 60.0, 1e-3, o);
  std::stringstream csv;
  write_trajectory_csv(csv, tr);
  const Trajectory back = read_trajectory_csv(csv);
  REQUIRE(back.size() == tr.size());
  CHECK(back.stacked_dim == N);
  CHECK(back.switching_instants == tr.switching_instants);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK(back.times[k] == tr.times[k]);
    CHECK(back.graph[k] == tr.graph[k]);
    CHECK(back.values[k] == tr.values[k]);
  }
  const Json a = to_json(verify_convergence(tr, g, xs, p, Tolerances{}));
  const Json b = to_json(verify_convergence(back, g, xs, p, Tolerances{}));
  CHECK(a.dump() == b.dump());
}
