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

#include "aggnes/errors.hpp"
#include "aggnes/game.hpp"
#include "aggnes/rng.hpp"
#include "doctest.h"

using namespace aggnes;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

GameSpec gq(double d = 0.1) {
  LqGameParams p;
  p.n_players = 2;
  p.action_dim = 1;
  p.c = vec({1.0, 2.0});
  p.d = d;
  return make_lq_game(p);
}

// Nonlinear aggregate phi_i(x) = w_i x + 0.3 sin(x) (componentwise), cost
// fbar_i = 0.5 ||x - c_i||^2 + 0.25 ||x||^2 ||sigma||^2 / N.
GameSpec nonlinear_game(int N, int n) {
  auto cost_grad = [N](int i, const Vec& x, const Vec& s) {
    const double k = 0.5 / N;
    return CostGradients{x - Vec::Constant(x.size(), i + 1.0) +
                             k * s.squaredNorm() * x,
                         k * x.squaredNorm() * s};
  };
  auto phi = [](int i, const Vec& x) -> Vec {
    return (1.0 + 0.1 * i) * x + 0.3 * x.array().sin().matrix();
  };
  auto phi_jac = [](int i, const Vec& x) -> Mat {
    Vec diag = Vec::Constant(x.size(), 1.0 + 0.1 * i) +
               0.3 * x.array().cos().matrix();
    return diag.asDiagonal();
  };
  auto cost = [N](int i, const Vec& x, const Vec& s) {
    return 0.5 * (x - Vec::Constant(x.size(), i + 1.0)).squaredNorm() +
           0.25 / N * x.squaredNorm() * s.squaredNorm();
  };
  return GameSpec(N, n, cost_grad, phi, phi_jac, cost);
}

// Independent route to F: central differences of f_i(x) = fbar_i(x_i,
// sigma(x)) in player i's own coordinates.
Vec fd_pseudo_gradient(const GameSpec& g, const Vec& x, double eps = 1e-6) {
  const int n = g.action_dim();
  Vec F(x.size());
  for (int i = 0; i < g.n_players(); ++i) {
    for (int k = 0; k < n; ++k) {
      Vec xp = x, xm = x;
      xp[i * n + k] += eps;
      xm[i * n + k] -= eps;
      const double fp = g.cost(i, xp.segment(i * n, n), aggregate(g, xp));
      const double fm = g.cost(i, xm.segment(i * n, n), aggregate(g, xm));
      F[i * n + k] = (fp - fm) / (2 * eps);
    }
  }
  return F;
}

// Closed-form LQ Hessian H with F(x) = H x - c:
//   H_ii = I + (d/N)(A_i + A_i^T),  H_ij = (d/N) A_j.
Mat lq_hessian(int N, int n, double d, const std::vector<Mat>& A) {
  Mat H = Mat::Zero(N * n, N * n);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const Mat Aj = A.empty() ? Mat::Identity(n, n) : A[j];
      H.block(i * n, j * n, n, n) = (d / N) * Aj;
    }
    const Mat Ai = A.empty() ? Mat::Identity(n, n) : A[i];
    H.block(i * n, i * n, n, n) =
        Mat::Identity(n, n) + (d / N) * (Ai + Ai.transpose());
  }
  return H;
}

}  // namespace

TEST_CASE("aggregate averages the local contributions") {
  CHECK(aggregate(gq(), vec({1.0, 3.0}))[0] == doctest::Approx(2.0));

  LqGameParams zero;
  zero.n_players = 3;
  zero.action_dim = 2;
  zero.c = Vec::Zero(6);
  zero.weights.assign(3, Mat::Zero(2, 2));
  const Vec agg = aggregate(make_lq_game(zero), Vec::LinSpaced(6, -3, 4));
  CHECK(agg.isZero(0.0));

  LqGameParams weighted;
  weighted.c = vec({1.0, 2.0});
  weighted.weights = {Mat::Constant(1, 1, 2.0), Mat::Constant(1, 1, 1.0)};
  CHECK(aggregate(make_lq_game(weighted), vec({1.0, 3.0}))[0] ==
        doctest::Approx(2.5));

  CHECK_THROWS_AS(aggregate(gq(), vec({1.0, 2.0, 3.0})), ShapeError);
}

TEST_CASE("pseudo-gradient of the quadratic game") {
  const Vec f0 = pseudo_gradient(gq(), vec({0.0, 0.0}));
  CHECK(f0[0] == doctest::Approx(-1.0));
  CHECK(f0[1] == doctest::Approx(-2.0));

  CHECK(pseudo_gradient(gq(0.0), vec({1.0, 2.0})).isZero(0.0));

  const Vec f1 = pseudo_gradient(gq(), vec({1.0, 1.0}));
  CHECK(f1[0] == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(f1[1] == doctest::Approx(-0.85).epsilon(1e-12));

  CHECK_THROWS_AS(pseudo_gradient(gq(), Vec::Zero(3)), ShapeError);
}

TEST_CASE("extended pseudo-gradient") {
  const Vec j0 = extended_pseudo_gradient(gq(), vec({0, 0}), vec({0, 0}));
  CHECK(j0[0] == doctest::Approx(-1.0));
  CHECK(j0[1] == doctest::Approx(-2.0));

  const Vec j1 = extended_pseudo_gradient(gq(), vec({1, 1}), vec({2, 0}));
  CHECK(j1[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(j1[1] == doctest::Approx(-0.95).epsilon(1e-12));

  CHECK_THROWS_AS(extended_pseudo_gradient(gq(), vec({1, 1}), Vec::Zero(1)),
                  ShapeError);
}

TEST_CASE("extended pseudo-gradient at the true aggregate equals F") {
  Rng rng(11);
  for (const GameSpec& g : {gq(), nonlinear_game(4, 2), nonlinear_game(3, 1)}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vec x(g.stacked_dim());
      for (auto& v : x) v = rng.uniform(-4.0, 4.0);
      const Vec s = aggregate(g, x).replicate(g.n_players(), 1);
      CHECK((extended_pseudo_gradient(g, x, s) - pseudo_gradient(g, x))
                .norm() == 0.0);
    }
  }
}

TEST_CASE("gradients agree with finite differences of the costs") {
  Rng rng(5);
  LqGameParams p;
  p.n_players = 3;
  p.action_dim = 2;
  p.c = Vec::LinSpaced(6, -1, 2);
  p.d = 0.3;
  p.weights = {Mat::Identity(2, 2), 2.0 * Mat::Identity(2, 2),
               (Mat(2, 2) << 1.0, 0.5, -0.2, 1.5).finished()};
  for (const GameSpec& g : {make_lq_game(p), nonlinear_game(4, 2), gq()}) {
    for (int trial = 0; trial < 20; ++trial) {
      Vec x(g.stacked_dim());
      for (auto& v : x) v = rng.uniform(-2.0, 2.0);
      const Vec F = pseudo_gradient(g, x);
      const Vec F_fd = fd_pseudo_gradient(g, x);
      CHECK((F - F_fd).norm() <= 1e-5 * std::max(1.0, F.norm()));
    }
  }
}

TEST_CASE("phi_jac matches a central-difference Jacobian") {
  Rng rng(9);
  const GameSpec g = nonlinear_game(3, 3);
  const double eps = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const int i = trial % 3;
    Vec x(3);
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    Mat fd(3, 3);  // Jacobian, rows = outputs
    for (int k = 0; k < 3; ++k) {
      Vec xp = x, xm = x;
      xp[k] += eps;
      xm[k] -= eps;
      fd.col(k) = (g.phi(i, xp) - g.phi(i, xm)) / (2 * eps);
    }
    const Mat jt = g.phi_jac(i, x);
    CHECK((jt.transpose() - fd).norm() <= 1e-6 * fd.norm());
  }
}

TEST_CASE("estimate_constants on the quadratic game") {
  const GameSpec g = gq();
  const GameConstants k =
      estimate_constants(g, Box::uniform(2, -5.0, 5.0), 10000, 42);
  CHECK(k.mu >= 1.049);
  CHECK(k.mu <= 1.051);
  CHECK(k.theta >= 1.149);
  CHECK(k.theta <= 1.151);
  CHECK(k.theta_hat == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(k.ell == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(k.mu <= k.theta);

  const GameConstants again =
      estimate_constants(g, Box::uniform(2, -5.0, 5.0), 10000, 42);
  CHECK(again.mu == k.mu);
  CHECK(again.theta == k.theta);

  // Monotonicity certificate on independent pairs.
  Rng rng(1234);
  for (int trial = 0; trial < 10000; ++trial) {
    Vec x(2), xp(2);
    for (auto& v : x) v = rng.uniform(-5.0, 5.0);
    for (auto& v : xp) v = rng.uniform(-5.0, 5.0);
    const Vec dx = x - xp;
    const double lhs = dx.dot(pseudo_gradient(g, x) - pseudo_gradient(g, xp));
    REQUIRE(lhs >= 0.99 * k.mu * dx.squaredNorm());
  }
}

TEST_CASE("estimate_constants rejects non-monotone games and bad input") {
  CHECK_THROWS_AS(estimate_constants(gq(-3.0), Box::uniform(2, -5, 5), 1000, 1),
                  AssumptionViolation);
  try {
    estimate_constants(gq(-3.0), Box::uniform(2, -5, 5), 1000, 1);
  } catch (const AssumptionViolation& e) {
    CHECK(e.which() == Assumption::kStrongMonotonicity);
  }
  CHECK_THROWS_AS(estimate_constants(gq(), Box::uniform(3, -5, 5), 100, 1),
                  ShapeError);
  CHECK_THROWS_AS(estimate_constants(gq(), Box::uniform(2, -5, 5), 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_constants(gq(), Box::uniform(2, 5, -5), 10, 1),
                  std::invalid_argument);
}

TEST_CASE("solve_ne reaches the quadratic game's equilibrium") {
  const GameSpec g = gq();
  const GameConstants k =
      estimate_constants(g, Box::uniform(2, -5.0, 5.0), 10000, 42);
  const Vec x = solve_ne(g, k, 1e-12, 100000);
  CHECK(x[0] == doctest::Approx(0.828157).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(1.780538).epsilon(1e-6));
  CHECK(pseudo_gradient(g, x).norm() <= 1e-10);
  const Vec exact = lq_hessian(2, 1, 0.1, {}).lu().solve(vec({1.0, 2.0}));
  CHECK((x - exact).norm() <= 1e-11);

  const Vec decoupled = solve_ne(gq(0.0), GameConstants{1, 1, 0, 1}, 1e-14, 10);
  CHECK(decoupled[0] == 1.0);
  CHECK(decoupled[1] == 2.0);
}

TEST_CASE("solve_ne matches a dense linear solve for larger games") {
  SUBCASE("N = 5 scalar actions") {
    LqGameParams p;
    p.n_players = 5;
    p.c = Vec::LinSpaced(5, 1, 5);
    p.d = 0.1;
    const GameSpec g = make_lq_game(p);
    const GameConstants k =
        estimate_constants(g, Box::uniform(5, -10, 10), 10000, 3);
    const Vec x = solve_ne(g, k, 1e-12, 100000);
    const Vec exact = lq_hessian(5, 1, 0.1, {}).lu().solve(p.c);
    CHECK((x - exact).norm() <= 1e-8);
  }
  SUBCASE("N = 3, n = 2 with weighted aggregates") {
    LqGameParams p;
    p.n_players = 3;
    p.action_dim = 2;
    p.c = Vec::LinSpaced(6, -1, 3);
    p.d = 0.2;
    p.weights = {Mat::Identity(2, 2), 0.5 * Mat::Identity(2, 2),
                 (Mat(2, 2) << 1.0, 0.2, 0.0, 0.8).finished()};
    const GameSpec g = make_lq_game(p);
    const GameConstants k =
        estimate_constants(g, Box::uniform(6, -10, 10), 20000, 3);
    const Vec x = solve_ne(g, k, 1e-12, 100000);
    const Vec exact = lq_hessian(3, 2, 0.2, p.weights).lu().solve(p.c);
    CHECK((x - exact).norm() <= 1e-8);
    CHECK(pseudo_gradient(g, x).norm() <= 1e-12);
  }
}

TEST_CASE("solve_ne reports non-convergence") {
  try {
    solve_ne(gq(), GameConstants{0.01, 1.15, 0.1, 1.0}, 1e-12, 3);
    FAIL("expected OracleFailure");
  } catch (const OracleFailure& e) {
    CHECK(e.residual() > 1e-12);
  }
  CHECK_THROWS_AS(solve_ne(gq(), GameConstants{2.0, 1.0, 0.1, 1.0}, 1e-9, 10),
                  std::invalid_argument);
}

TEST_CASE("GameSpec and LQ construction validate their inputs") {
  CHECK_THROWS_AS(make_lq_game(LqGameParams{2, 1, Vec::Zero(3), 0.1, {}}),
                  ShapeError);
  CHECK_THROWS_AS(
      make_lq_game(LqGameParams{2, 1, Vec::Zero(2), 0.1, {Mat::Identity(1, 1)}}),
      ShapeError);
  CHECK_THROWS_AS(GameSpec(0, 1, {}, {}, {}), std::invalid_argument);
}
