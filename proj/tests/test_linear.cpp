#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ftrluq/game.hpp"
#include "ftrluq/linear_maps.hpp"
#include "ftrluq/rng.hpp"

using namespace ftrluq;

namespace {

Mat random_payoff(Xoshiro256pp& rng, int rows, int cols) {
  Mat A(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  return A;
}

std::vector<std::pair<double, double>> synthetic_series(
    double t0, double t1, int n, double (*f)(double)) {
  std::vector<std::pair<double, double>> s;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    s.emplace_back(t, f(t));
  }
  return s;
}

}  // namespace

TEST_CASE("generator block structure and spectrum") {
  const Game a1 = named_game("A1");
  const LinearGenerator gen = build_generator(a1, 1);
  CHECK(gen.L.rows() == 4);
  Mat G(2, 2);
  G << 2, -2, -2, 2;
  CHECK((gen.L.block(0, 2, 2, 2) + G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((gen.L.block(2, 0, 2, 2) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(gen.L.block(0, 0, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(gen.L.block(2, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);

  Eigen::SelfAdjointEigenSolver<Mat> es(a1.gram(1));
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(es.eigenvalues()(1) == doctest::Approx(4.0).epsilon(1e-12));

  // Identity Gram: the generator is a pure rotation, eigenvalues +-i.
  const Game rot(Mat::Identity(2, 2));
  Eigen::EigenSolver<Mat> ev(build_generator(rot, 1).L);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(ev.eigenvalues()(i).real()) <= 1e-12);
    CHECK(std::abs(std::abs(ev.eigenvalues()(i).imag()) - 1.0) <= 1e-12);
  }

  Mat wide(2, 3);
  wide << 1, 0, -1, 0, 1, -1;
  CHECK(build_generator(Game(wide), 2).L.rows() == 6);
}

TEST_CASE("generator eigenvalues are purely imaginary for random games") {
  Xoshiro256pp rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.next() % 5);
    const Game game(random_payoff(rng, n, n));
    Eigen::EigenSolver<Mat> ev(build_generator(game, 1).L);
    CHECK(ev.eigenvalues().real().cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("matrix exponential closed forms") {
  const Game rot(Mat::Identity(2, 2));
  const LinearGenerator gen = build_generator(rot, 1);
  CHECK((matrix_exponential(gen, 0.0) - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <=
        1e-15);

  const double t = 0.7;
  const Mat E = matrix_exponential(gen, t);
  Mat expect(4, 4);
  expect.setZero();
  expect.block(0, 0, 2, 2) = std::cos(t) * Mat::Identity(2, 2);
  expect.block(0, 2, 2, 2) = -std::sin(t) * Mat::Identity(2, 2);
  expect.block(2, 0, 2, 2) = std::sin(t) * Mat::Identity(2, 2);
  expect.block(2, 2, 2, 2) = std::cos(t) * Mat::Identity(2, 2);
  CHECK((E - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("matrix exponential satisfies the semigroup property") {
  const Game a1 = named_game("A1");
  const LinearGenerator gen = build_generator(a1, 1);
  Xoshiro256pp rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double s = rng.uniform(0.0, 5.0);
    const double t = rng.uniform(0.0, 5.0);
    const Mat lhs = matrix_exponential(gen, s + t);
    const Mat rhs = matrix_exponential(gen, s) * matrix_exponential(gen, t);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("discrete map block forms are literal") {
  const Game a1 = named_game("A1");
  const double eta = 0.1;
  const Mat G = a1.gram(1);
  const Mat I2 = Mat::Identity(2, 2);

  const DiscreteLinearMap euler = build_euler_map(a1, 1, eta);
  CHECK((euler.M.block(0, 0, 2, 2) - I2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((euler.M.block(0, 2, 2, 2) + eta * G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((euler.M.block(2, 0, 2, 2) - eta * I2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((euler.M.block(2, 2, 2, 2) - I2).cwiseAbs().maxCoeff() == 0.0);

  const DiscreteLinearMap symp = build_symplectic_map(a1, 1, eta);
  CHECK((symp.M.block(0, 0, 2, 2) - I2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((symp.M.block(0, 2, 2, 2) + eta * G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((symp.M.block(2, 0, 2, 2) - eta * I2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((symp.M.block(2, 2, 2, 2) - (I2 - eta * eta * G)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("symplectic maps are volume preserving, Euler maps are not") {
  Xoshiro256pp rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.next() % 5);
    const Game game(random_payoff(rng, n, n));
    for (double eta : {0.01, 0.05, 0.1}) {
      CHECK(std::abs(build_symplectic_map(game, 1, eta).M.determinant() - 1.0) <
            1e-10);
    }
  }
  const Game a1 = named_game("A1");
  CHECK(build_euler_map(a1, 1, 0.1).M.determinant() ==
        doctest::Approx(1.04).epsilon(1e-12));
}

TEST_CASE("map spectra match the closed forms") {
  Xoshiro256pp rng(37);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.next() % 5);
    const Game game(random_payoff(rng, n, n));
    const double eta = 0.05;
    Eigen::SelfAdjointEigenSolver<Mat> ges(game.gram(1));
    const Vec gamma = ges.eigenvalues();

    // Symplectic: all eigenvalue moduli are 1 when eta^2 gamma <= 2.
    REQUIRE(eta * eta * gamma.maxCoeff() <= 2.0);
    Eigen::EigenSolver<Mat> sev(build_symplectic_map(game, 1, eta).M);
    for (Eigen::Index i = 0; i < sev.eigenvalues().size(); ++i) {
      CHECK(std::abs(std::abs(sev.eigenvalues()(i)) - 1.0) <= 1e-8);
    }

    // Euler: moduli are sqrt(1 + gamma_j eta^2), each with multiplicity 2.
    Eigen::EigenSolver<Mat> eev(build_euler_map(game, 1, eta).M);
    std::vector<double> moduli;
    for (Eigen::Index i = 0; i < eev.eigenvalues().size(); ++i) {
      moduli.push_back(std::abs(eev.eigenvalues()(i)));
    }
    std::sort(moduli.begin(), moduli.end());
    std::vector<double> expect;
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      const double m = std::sqrt(1.0 + gamma(j) * eta * eta);
      expect.push_back(m);
      expect.push_back(m);
    }
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < moduli.size(); ++i) {
      CHECK(std::abs(moduli[i] - expect[i]) <= 1e-10);
    }
  }
}

TEST_CASE("covariance propagation basics") {
  const Game rot(Mat::Identity(2, 2));
  const Mat O = matrix_exponential(build_generator(rot, 1), 1.3);
  CHECK((propagate_covariance(Mat::Identity(4, 4), O) - Mat::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() <= 1e-12);

  const Game a1 = named_game("A1");
  const Mat M = build_euler_map(a1, 1, 0.1).M;
  const Mat P1 = propagate_covariance(Mat::Identity(4, 4), M);
  CHECK(P1.trace() == doctest::Approx((M * M.transpose()).trace()).epsilon(1e-12));
}

TEST_CASE("reference covariance stays symmetric PSD under long propagation") {
  const Game a1 = named_game("A1");
  const Mat M = build_symplectic_map(a1, 1, 0.05).M;
  Mat P = canonical_initial_covariance();
  for (int t = 0; t < 10000; ++t) P = propagate_covariance(P, M);
  CHECK((P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * P.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * P.cwiseAbs().maxCoeff());
}

TEST_CASE("covariance series endpoints and truncation") {
  const Game a1 = named_game("A1");
  const Mat P0 = canonical_initial_covariance();

  const CovarianceSeries zero = covariance_series(a1, MapKind::Symplectic, 0.05,
                                                  P0, 0, 1);
  REQUIRE(zero.samples.size() == 1);
  CHECK(zero.samples[0].t == 0.0);
  CHECK((zero.samples[0].P - P0).cwiseAbs().maxCoeff() == 0.0);

  // Nonsingular symplectic stays bounded and finite.
  const Game b4 = named_game("B4");
  const CovarianceSeries bounded = covariance_series(b4, MapKind::Symplectic,
                                                     0.05, Mat::Identity(4, 4),
                                                     3000, 10);
  CHECK_FALSE(bounded.truncated);
  double max_var = 0.0;
  for (const auto& s : bounded.samples) {
    REQUIRE(s.P.allFinite());
    max_var = std::max(max_var, s.P(2, 2));
  }
  CHECK(max_var < 1e6);

  // The explicit scheme blows up at a large step size and must truncate.
  const CovarianceSeries trunc = covariance_series(named_game("C2"),
                                                   MapKind::Euler, 0.5,
                                                   Mat::Identity(4, 4), 2000, 1);
  CHECK(trunc.truncated);
  CHECK(trunc.truncated_at < 2000.0);
  for (const auto& s : trunc.samples) CHECK(s.P.allFinite());

  // Euler at eta = 0.1 passes 10^6 times the initial variance well before 10^4.
  const CovarianceSeries c1 = covariance_series(named_game("C1"), MapKind::Euler,
                                                0.1, Mat::Identity(4, 4), 400, 10);
  CHECK(c1.samples.back().P(0, 0) > 1e6);
}

TEST_CASE("growth classifier on synthetic series") {
  const auto flat = synthetic_series(10.0, 1000.0, 100,
                                     +[](double) { return 5.0; });
  CHECK(classify_growth(flat, 1.0, 0.05).cls == GrowthClass::Bounded);

  const auto quad = synthetic_series(10.0, 1000.0, 100,
                                     +[](double t) { return t * t; });
  const GrowthVerdict qv = classify_growth(quad, 1.0, 0.05);
  CHECK(qv.cls == GrowthClass::Quadratic);
  CHECK(qv.fitted == doctest::Approx(2.0).epsilon(1e-6));

  const auto expo = synthetic_series(10.0, 1000.0, 100,
                                     +[](double t) { return std::pow(1.04, t); });
  const GrowthVerdict ev = classify_growth(expo, 1.0, 0.05);
  CHECK(ev.cls == GrowthClass::Exponential);
  CHECK(ev.fitted == doctest::Approx(1.04).epsilon(1e-6));
}

TEST_CASE("growth classifier enforces its preconditions") {
  const auto tiny = synthetic_series(10.0, 1000.0, 10,
                                     +[](double t) { return t; });
  CHECK_THROWS_AS(classify_growth(tiny, 1.0, 0.05), std::invalid_argument);

  const auto narrow = synthetic_series(100.0, 110.0, 60,
                                       +[](double t) { return t; });
  CHECK_THROWS_AS(classify_growth(narrow, 1.0, 0.05), std::invalid_argument);
}

TEST_CASE("growth classifier flags non-finite tails and classifies the prefix") {
  auto series = synthetic_series(10.0, 1000.0, 100,
                                 +[](double t) { return t * t; });
  series.back().second = std::numeric_limits<double>::infinity();
  const GrowthVerdict v = classify_growth(series, 1.0, 0.05);
  CHECK(v.truncated_input);
  CHECK(v.cls == GrowthClass::Quadratic);
}

TEST_CASE("Euler covariance grows with the spectral-radius base") {
  const Game a1 = named_game("A1");
  const CovarianceSeries series = covariance_series(a1, MapKind::Euler, 0.1,
                                                    Mat::Identity(4, 4), 2000, 10);
  std::vector<std::pair<double, double>> track;
  for (const auto& s : series.samples) track.emplace_back(s.t, s.P(0, 0));
  const GrowthVerdict v = classify_growth(track, 4.0, 0.1);
  CHECK(v.cls == GrowthClass::Exponential);
  CHECK(std::abs(v.fitted - 1.04) <= 0.05 * 1.04);
}

TEST_CASE("gram singularity report") {
  const GramInfo a1 = gram_singularity(named_game("A1"), 1);
  CHECK(a1.singular);
  CHECK(a1.gamma == doctest::Approx(4.0).epsilon(1e-12));

  const GramInfo a4 = gram_singularity(named_game("A4"), 1);
  CHECK_FALSE(a4.singular);
  CHECK(a4.gamma == doctest::Approx(6.854101966249684).epsilon(1e-12));
  CHECK(a4.min_eig == doctest::Approx(0.1458980337503155).epsilon(1e-12));

  const GramInfo b4 = gram_singularity(named_game("B4"), 1);
  CHECK_FALSE(b4.singular);
  CHECK(b4.min_eig == doctest::Approx(2.376638577418e-3).epsilon(1e-9));
  CHECK(b4.gamma == doctest::Approx(4.207623361423).epsilon(1e-12));

  const GramInfo rps = gram_singularity(named_game("RPS"), 1);
  CHECK(rps.singular);
  CHECK(rps.gamma == doctest::Approx(3.0).epsilon(1e-12));

  Mat wide(2, 3);
  wide << 1, -1, 0, 0, 1, -1;
  CHECK(gram_singularity(Game(wide), 2).singular);
}

TEST_CASE("theoretical growth table") {
  CHECK(theoretical_growth(MapKind::Continuous, false, true) == GrowthClass::Bounded);
  CHECK(theoretical_growth(MapKind::Continuous, false, false) == GrowthClass::Bounded);
  CHECK(theoretical_growth(MapKind::Continuous, true, true) == GrowthClass::Quadratic);
  CHECK(theoretical_growth(MapKind::Continuous, true, false) == GrowthClass::Bounded);
  CHECK(theoretical_growth(MapKind::Symplectic, true, true) == GrowthClass::Quadratic);
  CHECK(theoretical_growth(MapKind::Euler, false, true) == GrowthClass::Exponential);
  CHECK(theoretical_growth(MapKind::Euler, true, false) == GrowthClass::Exponential);
}
