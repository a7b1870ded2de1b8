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

#include "aggnes/game.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "aggnes/errors.hpp"
#include "aggnes/rng.hpp"

namespace aggnes {

GameSpec::GameSpec(int n_players, int action_dim, CostGradFn cost_grad,
                   PhiFn phi, PhiJacFn phi_jac, CostFn cost)
    : n_players_(n_players),
      action_dim_(action_dim),
      cost_grad_(std::move(cost_grad)),
      phi_(std::move(phi)),
      phi_jac_(std::move(phi_jac)),
      cost_(std::move(cost)) {
  if (n_players_ < 1 || action_dim_ < 1) {
    throw std::invalid_argument("GameSpec: N and n must be positive");
  }
  if (!cost_grad_ || !phi_ || !phi_jac_) {
    throw std::invalid_argument("GameSpec: gradient callables are required");
  }
}

void GameSpec::check_stacked(const Vec& v, const char* what) const {
  if (v.size() != stacked_dim()) {
    throw ShapeError(std::string(what) + ": expected length " +
                     std::to_string(stacked_dim()) + ", got " +
                     std::to_string(v.size()));
  }
}

void GameConstants::validate() const {
  if (!(mu > 0.0) || !(theta > 0.0) || !(ell > 0.0) || !(theta_hat >= 0.0)) {
    throw std::invalid_argument(
        "GameConstants: mu, theta, ell must be positive and theta_hat "
        "nonnegative");
  }
  if (mu > theta) {
    throw std::invalid_argument("GameConstants: mu exceeds theta");
  }
}

Box Box::uniform(int dim, double lo, double hi) {
  return Box{Vec::Constant(dim, lo), Vec::Constant(dim, hi)};
}

Vec stacked_phi(const GameSpec& game, const Vec& x) {
  game.check_stacked(x, "stacked_phi");
  const int n = game.action_dim();
  Vec out(game.stacked_dim());
  for (int i = 0; i < game.n_players(); ++i) {
    out.segment(i * n, n) = game.phi(i, x.segment(i * n, n));
  }
  return out;
}

Mat stacked_phi_jacobian(const GameSpec& game, const Vec& x) {
  game.check_stacked(x, "stacked_phi_jacobian");
  const int n = game.action_dim();
  Mat jac = Mat::Zero(game.stacked_dim(), game.stacked_dim());
  for (int i = 0; i < game.n_players(); ++i) {
    jac.block(i * n, i * n, n, n) =
        game.phi_jac(i, x.segment(i * n, n)).transpose();
  }
  return jac;
}

Vec aggregate(const GameSpec& game, const Vec& x) {
  game.check_stacked(x, "aggregate");
  const int n = game.action_dim();
  Vec sum = Vec::Zero(n);
  for (int i = 0; i < game.n_players(); ++i) {
    sum += game.phi(i, x.segment(i * n, n));
  }
  return sum / static_cast<double>(game.n_players());
}

Vec extended_pseudo_gradient(const GameSpec& game, const Vec& x,
                             const Vec& s) {
  game.check_stacked(x, "extended_pseudo_gradient(x)");
  game.check_stacked(s, "extended_pseudo_gradient(s)");
  const int n = game.action_dim();
  const double inv_n = 1.0 / static_cast<double>(game.n_players());
  Vec out(game.stacked_dim());
  for (int i = 0; i < game.n_players(); ++i) {
    const Vec x_i = x.segment(i * n, n);
    const CostGradients g = game.cost_grad(i, x_i, s.segment(i * n, n));
    out.segment(i * n, n) = g.own + inv_n * (game.phi_jac(i, x_i) * g.aggregate);
  }
  return out;
}

Vec pseudo_gradient(const GameSpec& game, const Vec& x) {
  const Vec sigma = aggregate(game, x);
  return extended_pseudo_gradient(game, x, sigma.replicate(game.n_players(), 1));
}

namespace {

Vec sample_box(const Box& box, Rng& rng) {
  Vec v(box.lower.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    v[k] = rng.uniform(box.lower[k], box.upper[k]);
  }
  return v;
}

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

GameConstants estimate_constants(const GameSpec& game, const Box& box,
                                 int n_samples, std::uint64_t seed) {
  const int dim = game.stacked_dim();
  if (box.lower.size() != dim || box.upper.size() != dim) {
    throw ShapeError("estimate_constants: box dimension mismatch");
  }
  if ((box.upper.array() < box.lower.array()).any()) {
    throw std::invalid_argument("estimate_constants: empty box");
  }
  if (n_samples < 2) {
    throw std::invalid_argument("estimate_constants: need >= 2 samples");
  }

  Rng rng(seed);
  GameConstants k;
  k.mu = std::numeric_limits<double>::infinity();
  int used = 0;
  for (int sample = 0; sample < n_samples; ++sample) {
    const Vec x = sample_box(box, rng);
    const Vec xp = sample_box(box, rng);
    const Vec s = sample_box(box, rng);
    const Vec sp = sample_box(box, rng);

    const Vec dx = x - xp;
    const double dx2 = dx.squaredNorm();
    if (dx2 > 1e-16) {
      const Vec dF = pseudo_gradient(game, x) - pseudo_gradient(game, xp);
      k.mu = std::min(k.mu, dx.dot(dF) / dx2);
      k.theta = std::max(k.theta, dF.norm() / std::sqrt(dx2));
      ++used;
    }
    const Vec ds = s - sp;
    if (ds.squaredNorm() > 1e-16) {
      const Vec dG = extended_pseudo_gradient(game, x, s) -
                     extended_pseudo_gradient(game, x, sp);
      k.theta_hat = std::max(k.theta_hat, dG.norm() / ds.norm());
    }
    k.ell = std::max(k.ell, spectral_norm(stacked_phi_jacobian(game, x)));
  }

  if (used == 0 || !(k.mu > 0.0)) {
    throw AssumptionViolation(
        Assumption::kStrongMonotonicity,
        "sampled monotonicity modulus " + std::to_string(used ? k.mu : 0.0) +
            " is not positive");
  }
  return k;
}

Vec solve_ne(const GameSpec& game, const GameConstants& constants, double tol,
             int max_iters) {
  constants.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("solve_ne: tol must be > 0");
  const double eta = constants.mu / (constants.theta * constants.theta);
  Vec x = Vec::Zero(game.stacked_dim());
  Vec f = pseudo_gradient(game, x);
  for (int it = 0; it < max_iters; ++it) {
    if (f.norm() <= tol) return x;
    x -= eta * f;
    f = pseudo_gradient(game, x);
  }
  if (f.norm() <= tol) return x;
  throw OracleFailure("solve_ne: no convergence after " +
                          std::to_string(max_iters) +
                          " iterations, residual " + std::to_string(f.norm()),
                      f.norm());
}

GameSpec make_lq_game(const LqGameParams& p) {
  const int N = p.n_players;
  const int n = p.action_dim;
  if (N < 1 || n < 1) throw std::invalid_argument("lq game: N, n >= 1");
  if (p.c.size() != N * n) {
    throw ShapeError("lq game: c must have length N*n");
  }
  if (!p.weights.empty()) {
    if (static_cast<int>(p.weights.size()) != N) {
      throw ShapeError("lq game: need one weight matrix per player");
    }
    for (const Mat& a : p.weights) {
      if (a.rows() != n || a.cols() != n) {
        throw ShapeError("lq game: weight matrices must be n x n");
      }
    }
  }

  const Vec c = p.c;
  const double d = p.d;
  const std::vector<Mat> weights = p.weights;
  auto weight = [weights, n](int i) -> Mat {
    return weights.empty() ? Mat::Identity(n, n) : weights[i];
  };

  auto cost_grad = [c, d, n](int i, const Vec& x_i, const Vec& s_i) {
    return CostGradients{x_i - c.segment(i * n, n) + d * s_i, d * x_i};
  };
  auto phi = [weight](int i, const Vec& x_i) -> Vec {
    return weight(i) * x_i;
  };
  auto phi_jac = [weight](int i, const Vec&) -> Mat {
    return weight(i).transpose();
  };
  auto cost = [c, d, n](int i, const Vec& x_i, const Vec& sigma) {
    return 0.5 * (x_i - c.segment(i * n, n)).squaredNorm() + d * x_i.dot(sigma);
  };
  return GameSpec(N, n, cost_grad, phi, phi_jac, cost);
}

}  // namespace aggnes
