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

#ifndef AGGNES_GAME_HPP_
#define AGGNES_GAME_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "aggnes/types.hpp"

namespace aggnes {

// Partial gradients of a player's cost fbar_i(y, sigma):
//   own       = d/dy fbar_i(y, s_i)     at y = x_i
//   aggregate = d/dy fbar_i(x_i, y)     at y = s_i
struct CostGradients {
  Vec own;
  Vec aggregate;
};

// An aggregative game over N players with actions in R^n. Player i's cost
// depends on its own action and on the aggregate (1/N) sum_j phi_j(x_j).
//
// The game is described entirely by gradient callables; an optional scalar
// cost enables finite-difference cross-checks. Stacked vectors follow the
// col(x_1, ..., x_N) layout throughout the library.
class GameSpec {
 public:
  using CostGradFn =
      std::function<CostGradients(int i, const Vec& x_i, const Vec& s_i)>;
  using PhiFn = std::function<Vec(int i, const Vec& x_i)>;
  // Transpose of the Jacobian of phi_i at x_i.
  using PhiJacFn = std::function<Mat(int i, const Vec& x_i)>;
  using CostFn =
      std::function<double(int i, const Vec& x_i, const Vec& sigma)>;

  GameSpec(int n_players, int action_dim, CostGradFn cost_grad, PhiFn phi,
           PhiJacFn phi_jac, CostFn cost = {});

  int n_players() const { return n_players_; }
  int action_dim() const { return action_dim_; }
  int stacked_dim() const { return n_players_ * action_dim_; }

  CostGradients cost_grad(int i, const Vec& x_i, const Vec& s_i) const {
    return cost_grad_(i, x_i, s_i);
  }
  Vec phi(int i, const Vec& x_i) const { return phi_(i, x_i); }
  Mat phi_jac(int i, const Vec& x_i) const { return phi_jac_(i, x_i); }

  bool has_cost() const { return static_cast<bool>(cost_); }
  double cost(int i, const Vec& x_i, const Vec& sigma) const {
    return cost_(i, x_i, sigma);
  }

  // Throws ShapeError unless v has length N*n.
  void check_stacked(const Vec& v, const char* what) const;

 private:
  int n_players_;
  int action_dim_;
  CostGradFn cost_grad_;
  PhiFn phi_;
  PhiJacFn phi_jac_;
  CostFn cost_;
};

// Regularity constants of the game.
//   mu        strong monotonicity modulus of F
//   theta     Lipschitz modulus of F
//   theta_hat Lipschitz modulus of the extended pseudo-gradient in s
//   ell       bound on the Jacobian of the stacked aggregate map
struct GameConstants {
  double mu = 0.0;
  double theta = 0.0;
  double theta_hat = 0.0;
  double ell = 0.0;

  // Throws std::invalid_argument on mu, theta, ell <= 0, theta_hat < 0 or
  // mu > theta.
  void validate() const;
};

// Axis-aligned box in R^{Nn} used to sample the regularity constants.
struct Box {
  Vec lower;
  Vec upper;

  static Box uniform(int dim, double lo, double hi);
};

// (1/N) sum_i phi_i(x_i).
Vec aggregate(const GameSpec& game, const Vec& x);

// col(phi_1(x_1), ..., phi_N(x_N)).
Vec stacked_phi(const GameSpec& game, const Vec& x);

// Block-diagonal Jacobian d phi(x) / d x (not transposed).
Mat stacked_phi_jacobian(const GameSpec& game, const Vec& x);

// F(x) = col(grad_1 f_1, ..., grad_N f_N), evaluated as the extended
// pseudo-gradient at s = 1_N (x) aggregate(x).
Vec pseudo_gradient(const GameSpec& game, const Vec& x);

// col(J_1(x_1, s_1), ..., J_N(x_N, s_N)) with
//   J_i = own gradient + (1/N) grad phi_i(x_i) * aggregate gradient.
Vec extended_pseudo_gradient(const GameSpec& game, const Vec& x,
                             const Vec& s);

// Randomized empirical estimate of the regularity constants over `box`.
// mu is the smallest sampled monotonicity ratio; theta, theta_hat and ell
// are the largest sampled Lipschitz ratios / Jacobian norms. Deterministic
// for a fixed seed. Throws AssumptionViolation(kStrongMonotonicity) when the
// sampled mu is not positive.
GameConstants estimate_constants(const GameSpec& game, const Box& box,
                                 int n_samples, std::uint64_t seed);

// Centralized Nash equilibrium: iterates x <- x - eta F(x) with
// eta = mu / theta^2 from x = 0 until ||F(x)|| <= tol. Throws OracleFailure
// when max_iters is exhausted.
Vec solve_ne(const GameSpec& game, const GameConstants& constants, double tol,
             int max_iters);

// Linear-quadratic aggregative game
//   fbar_i(x_i, sigma) = 0.5 ||x_i - c_i||^2 + d x_i^T sigma,
//   phi_i(x_i) = A_i x_i.
// `c` is stacked (length N*n); `weights` holds one n x n matrix per player,
// or is empty for phi_i = identity.
struct LqGameParams {
  int n_players = 2;
  int action_dim = 1;
  Vec c;
  double d = 0.0;
  std::vector<Mat> weights;
};

GameSpec make_lq_game(const LqGameParams& params);

}  // namespace aggnes

#endif  // AGGNES_GAME_HPP_
