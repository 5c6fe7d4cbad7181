#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ftrluq/dynamics.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/rng.hpp"

using namespace ftrluq;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST_CASE("entropy conjugate gradient is the softmax") {
  const Regularizer ent3{RegKind::NegativeEntropy, 3};
  const Vec p = conjugate_gradient(ent3, Vec::Zero(3));
  for (int i = 0; i < 3; ++i) CHECK(p(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const Regularizer ent2{RegKind::NegativeEntropy, 2};
  const Vec q = conjugate_gradient(ent2, vec2(std::log(2.0), 0.0));
  CHECK(q(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(q(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("Euclidean conjugate gradient is the identity") {
  const Regularizer euc{RegKind::Euclidean, 2};
  const Vec y = vec2(2.0, -1.0);
  CHECK((conjugate_gradient(euc, y) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("softmax lands on the simplex for random inputs") {
  Xoshiro256pp rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = 2 + static_cast<int>(rng.next() % 9);
    Vec y(dim);
    for (int i = 0; i < dim; ++i) y(i) = rng.uniform(-50.0, 50.0);
    const Vec p = conjugate_gradient(Regularizer{RegKind::NegativeEntropy, dim}, y);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    CHECK((p.array() > 0.0).all());
    // A 100-nat gap saturates the leading entry to 1.0 exactly.
    CHECK(p.maxCoeff() <= 1.0);
  }
}

TEST_CASE("conjugate operations reject bad input") {
  const Regularizer ent3{RegKind::NegativeEntropy, 3};
  CHECK_THROWS_AS(conjugate_gradient(ent3, Vec::Zero(2)), std::invalid_argument);
  Vec bad = Vec::Zero(3);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(conjugate_gradient(ent3, bad), std::domain_error);
  CHECK_THROWS_AS(conjugate_hessian(ent3, bad), std::domain_error);
}

TEST_CASE("conjugate Hessian closed forms") {
  const Mat He = conjugate_hessian(Regularizer{RegKind::Euclidean, 2}, vec2(3.0, 4.0));
  CHECK((He - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  const Mat Hs = conjugate_hessian(Regularizer{RegKind::NegativeEntropy, 2}, Vec::Zero(2));
  CHECK(Hs(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(Hs(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(Hs(1, 0) == doctest::Approx(-0.25).epsilon(1e-14));
  CHECK(Hs(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("entropy Hessian is PSD with zero row sums") {
  Xoshiro256pp rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + static_cast<int>(rng.next() % 9);
    Vec y(dim);
    for (int i = 0; i < dim; ++i) y(i) = rng.uniform(-10.0, 10.0);
    const Mat H = conjugate_hessian(Regularizer{RegKind::NegativeEntropy, dim}, y);
    CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(H.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("conjugate value closed forms") {
  CHECK(conjugate_value(Regularizer{RegKind::Euclidean, 2}, vec2(3.0, 4.0)) ==
        doctest::Approx(12.5).epsilon(1e-15));
  CHECK(conjugate_value(Regularizer{RegKind::NegativeEntropy, 2}, Vec::Zero(2)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(conjugate_value(Regularizer{RegKind::NegativeEntropy, 2},
                        vec2(std::log(2.0), 0.0)) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("Hamiltonian closed forms at the origin") {
  const Game game(named_game("A1").A);
  const Regularizer euc{RegKind::Euclidean, 2};
  const DualState s{1, Vec::Zero(2), Vec::Zero(2), 0.0};
  CHECK(hamiltonian_value(game, euc, euc, s, Vec::Zero(2)) == 0.0);

  const Regularizer ent{RegKind::NegativeEntropy, 2};
  CHECK(hamiltonian_value(game, ent, ent, s, Vec::Zero(2)) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("Hamiltonian is conserved by the continuous Euclidean flow") {
  const Game game = named_game("A1");
  DualDynamics regs{Regularizer{RegKind::Euclidean, 2},
                    Regularizer{RegKind::Euclidean, 2}, vec2(0.2, 0.1),
                    vec2(-0.3, 0.4)};
  const DualState s1{1, vec2(0.7, -0.4), Vec::Zero(2), 0.0};
  const DualState s2{2, regs.y2_init, Vec::Zero(2), 0.0};
  // Consistent setup: regs carry the initial duals the flow started from.
  DualDynamics ctx = regs;
  ctx.y1_init = s1.y;
  const Trajectory traj = integrate_continuous(game, ctx, s1, s2, 100.0, 0.5);

  const Regularizer euc{RegKind::Euclidean, 2};
  const double h1_0 = hamiltonian_value(game, euc, euc, traj.dual1.front(), ctx.y2_init);
  const double h2_0 = hamiltonian_value(game, euc, euc, traj.dual2.front(), ctx.y1_init);
  for (std::size_t i = 0; i < traj.dual1.size(); ++i) {
    const double h1 = hamiltonian_value(game, euc, euc, traj.dual1[i], ctx.y2_init);
    const double h2 = hamiltonian_value(game, euc, euc, traj.dual2[i], ctx.y1_init);
    CHECK(std::abs(h1 - h1_0) <= 1e-9 * std::abs(h1_0));
    CHECK(std::abs(h2 - h2_0) <= 1e-9 * std::abs(h2_0));
  }
}

TEST_CASE("cumulative payoff identity closed forms") {
  const Game game = named_game("A1");
  const Vec y0 = vec2(0.4, -0.2);
  CHECK((cumulative_payoff_identity(game, Vec::Zero(2), y0, 1) - y0)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  const Vec y = cumulative_payoff_identity(game, vec2(1.0, 0.0), Vec::Zero(2), 1);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(-1.0));
}

TEST_CASE("payoff identity holds along both dual steppers") {
  const Game game = named_game("RPS");
  const Vec x1 = vec3(0.3, 0.4, 0.3);
  const Vec x2 = vec3(0.25, 0.35, 0.4);

  struct Setup {
    UpdateRule rule;
    bool symplectic;
  };
  for (const Setup setup : {Setup{UpdateRule::MWU, false}, Setup{UpdateRule::AltMWU, true}}) {
    const AlgorithmSpec spec{setup.rule, 0.05, RegKind::NegativeEntropy};
    MatchedDualStart start = matched_dual_start(game, spec, x1, x2);
    DualState s1 = start.s1;
    DualState s2 = start.s2;
    for (int t = 0; t < 200; ++t) {
      const Vec y1_hat =
          cumulative_payoff_identity(game, s2.X, start.ctx.y1_init, 1);
      const Vec y2_hat =
          cumulative_payoff_identity(game, s1.X, start.ctx.y2_init, 2);
      CHECK((s1.y - y1_hat).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((s2.y - y2_hat).cwiseAbs().maxCoeff() <= 1e-10);
      auto next = setup.symplectic
                      ? step_dual_symplectic(spec, game, start.ctx, s1, s2)
                      : step_dual_euler(spec, game, start.ctx, s1, s2);
      s1 = next.first;
      s2 = next.second;
    }
  }
}

TEST_CASE("named games resolve to the printed matrices") {
  CHECK(named_game_list().size() == 15);

  const Game a1 = named_game("A1");
  CHECK(a1.A(0, 0) == 1.0);
  CHECK(a1.A(0, 1) == -1.0);
  CHECK(a1.A(1, 0) == -1.0);
  CHECK(a1.A(1, 1) == 1.0);

  const Game b3 = named_game("B3");
  CHECK(b3.A(0, 1) == -1.3);
  CHECK(b3.A(1, 1) == 1.3);

  const Game c1 = named_game("C1");
  CHECK(c1.A(0, 1) == -1.31);

  const Game rps = named_game("RPS");
  CHECK(rps.n1() == 3);
  CHECK(rps.A(0, 1) == -1.0);
  CHECK(rps.A(0, 2) == 1.0);
  CHECK(rps.A.trace() == 0.0);

  for (const auto& name : named_game_list()) {
    const Game g = named_game(name);
    CHECK((g.A12() + g.A21().transpose()).cwiseAbs().maxCoeff() == 0.0);
  }

  CHECK(is_named_game("B6"));
  CHECK_FALSE(is_named_game("A7"));
  CHECK_THROWS_AS(named_game("A7"), std::invalid_argument);
}

TEST_CASE("game construction rejects degenerate input") {
  CHECK_THROWS_AS(Game{Mat(0, 0)}, std::invalid_argument);
  Mat bad = Mat::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Game{bad}, std::domain_error);
}

TEST_CASE("canonical initial covariance matches the reference matrix") {
  const Mat P0 = canonical_initial_covariance();
  Mat expect(4, 4);
  expect << 8, 2, 1, 3, 2, 13, 7, 9, 1, 7, 9, 2, 3, 9, 2, 10;
  CHECK((P0 - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK((P0 - P0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(P0);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}
