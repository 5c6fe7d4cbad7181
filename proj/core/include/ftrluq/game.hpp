#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ftrluq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Two-player zero-sum game. A is player 1's payoff matrix; the induced
// views are A12 = A and A21 = -A^T, so A12 = -(A21)^T holds exactly.
struct Game {
  Mat A;

  explicit Game(Mat payoff);

  Eigen::Index n1() const { return A.rows(); }
  Eigen::Index n2() const { return A.cols(); }
  const Mat& A12() const { return A; }
  Mat A21() const { return -A.transpose(); }
  // Payoff view for `player` acting on the opponent's strategy.
  Mat payoff_view(int player) const;
  // Gram matrix driving the linearized dynamics: AA^T (player 1), A^T A (player 2).
  Mat gram(int player) const;
  // Spectral norm squared, used by the simultaneous-update step-size condition.
  double spectral_norm_sq() const;
};

enum class RegKind { Euclidean, NegativeEntropy };

struct Regularizer {
  RegKind kind;
  Eigen::Index dimension;
};

// Cumulative canonical coordinates of one player: X integrates the played
// strategies, y accumulates payoffs. t is a step index for discrete
// dynamics and real time for flows.
struct DualState {
  int player = 1;
  Vec y;
  Vec X;
  double t = 0.0;
};

// Instantaneous strategies of both players.
struct PrimalState {
  Vec x1;
  Vec x2;
  double t = 0.0;
};

// grad of the convex conjugate h*. NegativeEntropy: softmax with
// max-subtraction; Euclidean: identity (h = 0.5*||x||^2 convention, so
// h*(y) = 0.5*||y||^2 and grad h*(y) = y).
Vec conjugate_gradient(const Regularizer& reg, const Vec& y);

// Hessian of h*. NegativeEntropy: diag(p) - p p^T at p = softmax(y);
// Euclidean: identity.
Mat conjugate_hessian(const Regularizer& reg, const Vec& y);

// h* itself. NegativeEntropy: log-sum-exp (shifted); Euclidean: 0.5*||y||^2.
double conjugate_value(const Regularizer& reg, const Vec& y);

// Per-agent Hamiltonian H_i(X_i, y_i) = h*_i(y_i) + h*_j(y_j(0) + A^(ji) X_i).
// reg1/reg2 are the regularizers of players 1 and 2 in that order;
// state.player selects which agent's Hamiltonian is evaluated.
double hamiltonian_value(const Game& game, const Regularizer& reg1,
                         const Regularizer& reg2, const DualState& state,
                         const Vec& y_other_initial);

// Reconstructs y_player from the opponent's cumulative strategy:
// y_i = y_i(0) + A^(ij) X_j. Exact at every step of the dual schemes
// started from X^0 = 0.
Vec cumulative_payoff_identity(const Game& game, const Vec& X_other,
                               const Vec& y_initial, int player);

// Named matrices used by the bundled experiments.
// A1..A3 singular Gram, A4..A6 nonsingular (continuous-flow studies);
// B1..B6 mirror that split for the symplectic scheme; C1 (singular) and
// C2 feed the explicit-Euler growth study; RPS is rock-paper-scissors.
const std::vector<std::string>& named_game_list();
Game named_game(const std::string& name);
bool is_named_game(const std::string& name);

// Canonical 4x4 initial covariance over (y1_1, y1_2, X1_1, X1_2) used by
// the bundled 2x2-game experiments.
Mat canonical_initial_covariance();

}  // namespace ftrluq
