#include "ftrluq/game.hpp"

#include <cmath>
#include <stdexcept>

namespace ftrluq {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}

void require_dim(const Regularizer& reg, const Vec& y, const char* what) {
  if (y.size() != reg.dimension) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(y.size()) + ", regularizer expects " +
                                std::to_string(reg.dimension) + ")");
  }
}

Vec softmax(const Vec& y) {
  const double m = y.maxCoeff();
  Vec e = (y.array() - m).exp();
  return e / e.sum();
}

double log_sum_exp(const Vec& y) {
  const double m = y.maxCoeff();
  return m + std::log((y.array() - m).exp().sum());
}

}  // namespace

Game::Game(Mat payoff) : A(std::move(payoff)) {
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("Game: empty payoff matrix");
  if (!A.allFinite()) throw std::domain_error("Game: payoff matrix has non-finite entries");
}

Mat Game::payoff_view(int player) const {
  if (player == 1) return A12();
  if (player == 2) return A21();
  throw std::invalid_argument("Game::payoff_view: player must be 1 or 2");
}

Mat Game::gram(int player) const {
  if (player == 1) return A * A.transpose();
  if (player == 2) return A.transpose() * A;
  throw std::invalid_argument("Game::gram: player must be 1 or 2");
}

double Game::spectral_norm_sq() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(A * A.transpose());
  return es.eigenvalues().maxCoeff();
}

Vec conjugate_gradient(const Regularizer& reg, const Vec& y) {
  require_dim(reg, y, "conjugate_gradient");
  require_finite(y, "conjugate_gradient");
  if (reg.kind == RegKind::Euclidean) return y;
  return softmax(y);
}

Mat conjugate_hessian(const Regularizer& reg, const Vec& y) {
  require_dim(reg, y, "conjugate_hessian");
  require_finite(y, "conjugate_hessian");
  if (reg.kind == RegKind::Euclidean) {
    return Mat::Identity(y.size(), y.size());
  }
  const Vec p = softmax(y);
  Mat h = Mat(p.asDiagonal());
  h.noalias() -= p * p.transpose();
  return h;
}

double conjugate_value(const Regularizer& reg, const Vec& y) {
  require_dim(reg, y, "conjugate_value");
  require_finite(y, "conjugate_value");
  if (reg.kind == RegKind::Euclidean) return 0.5 * y.squaredNorm();
  return log_sum_exp(y);
}

double hamiltonian_value(const Game& game, const Regularizer& reg1,
                         const Regularizer& reg2, const DualState& state,
                         const Vec& y_other_initial) {
  if (state.player != 1 && state.player != 2) {
    throw std::invalid_argument("hamiltonian_value: player must be 1 or 2");
  }
  const Regularizer& reg_self = (state.player == 1) ? reg1 : reg2;
  const Regularizer& reg_other = (state.player == 1) ? reg2 : reg1;
  // A^(ji) X_i maps agent i's cumulative strategy into the opponent's payoff space.
  const Mat Aji = game.payoff_view(state.player == 1 ? 2 : 1);
  if (y_other_initial.size() != Aji.rows()) {
    throw std::invalid_argument("hamiltonian_value: y_other_initial has wrong dimension");
  }
  if (state.X.size() != Aji.cols()) {
    throw std::invalid_argument("hamiltonian_value: state.X has wrong dimension");
  }
  const Vec y_other = y_other_initial + Aji * state.X;
  return conjugate_value(reg_self, state.y) + conjugate_value(reg_other, y_other);
}

Vec cumulative_payoff_identity(const Game& game, const Vec& X_other,
                               const Vec& y_initial, int player) {
  const Mat Aij = game.payoff_view(player);
  if (X_other.size() != Aij.cols()) {
    throw std::invalid_argument("cumulative_payoff_identity: X_other has wrong dimension");
  }
  if (y_initial.size() != Aij.rows()) {
    throw std::invalid_argument("cumulative_payoff_identity: y_initial has wrong dimension");
  }
  return y_initial + Aij * X_other;
}

namespace {

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

const std::vector<std::string>& named_game_list() {
  static const std::vector<std::string> names = {
      "RPS", "A1", "A2", "A3", "A4", "A5", "A6",
      "B1", "B2", "B3", "B4", "B5", "B6", "C1", "C2"};
  return names;
}

bool is_named_game(const std::string& name) {
  for (const auto& n : named_game_list()) {
    if (n == name) return true;
  }
  return false;
}

Game named_game(const std::string& name) {
  if (name == "RPS") {
    Mat m(3, 3);
    m << 0, -1, 1, 1, 0, -1, -1, 1, 0;
    return Game(m);
  }
  if (name == "A1") return Game(mat2(1, -1, -1, 1));
  if (name == "A2") return Game(mat2(1.2, -1.2, -1, 1));
  if (name == "A3") return Game(mat2(1.5, -1.5, -1, 1));
  if (name == "A4") return Game(mat2(1, -2, -1, 1));
  if (name == "A5") return Game(mat2(2, -3, -1, 5));
  if (name == "A6") return Game(mat2(2, -1.5, -2, 3));
  if (name == "B1") return Game(mat2(1, -1, -1, 1));
  if (name == "B2") return Game(mat2(1.2, -1.2, -1, 1));
  if (name == "B3") return Game(mat2(1, -1.3, -1, 1.3));
  if (name == "B4") return Game(mat2(1, -1.1, -1, 1));
  if (name == "B5") return Game(mat2(1, -1.2, -1, 1));
  if (name == "B6") return Game(mat2(1, -1.3, -1, 1));
  if (name == "C1") return Game(mat2(1, -1.31, -1, 1.31));
  if (name == "C2") return Game(mat2(2, -1.7, -1.7, 1.5));
  throw std::invalid_argument("named_game: unknown game \"" + name + "\"");
}

Mat canonical_initial_covariance() {
  Mat p(4, 4);
  p << 8, 2, 1, 3,
       2, 13, 7, 9,
       1, 7, 9, 2,
       3, 9, 2, 10;
  return p;
}

}  // namespace ftrluq
