#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "ftrluq/game.hpp"

namespace ftrluq {

enum class MapKind { Continuous, Euler, Symplectic };
const char* map_kind_name(MapKind kind);

// Generator of the Euclidean flow on the stacked coordinates (y; X):
//   L = [[0, -G], [I, 0]],  G = AA^T (player 1) or A^T A (player 2).
// All eigenvalues are purely imaginary or zero.
struct LinearGenerator {
  Mat L;
  Eigen::Index n() const { return L.rows() / 2; }
};

struct DiscreteLinearMap {
  Mat M;
  MapKind kind;
  double eta;
};

LinearGenerator build_generator(const Game& game, int player);

// Euler map [[I, -eta G], [eta I, I]]; eigenvalue moduli sqrt(1 + g eta^2)
// over the Gram eigenvalues g.
DiscreteLinearMap build_euler_map(const Game& game, int player, double eta);

// Symplectic map [[I, -eta G], [eta I, I - eta^2 G]]; det = 1, all
// eigenvalue moduli 1 when eta^2 * gamma <= 2.
DiscreteLinearMap build_symplectic_map(const Game& game, int player, double eta);

// e^{tL} by scaling-and-squaring with Pade approximation.
Mat matrix_exponential(const LinearGenerator& gen, double t);
Mat matrix_exponential(const Mat& L, double t);

// M P0 M^T, re-symmetrized as (Q + Q^T)/2 to kill roundoff skew.
Mat propagate_covariance(const Mat& P0, const Mat& M);

struct CovarianceSample {
  double t;
  Mat P;
};

struct CovarianceSeries {
  std::vector<CovarianceSample> samples;
  // Euler covariance grows exponentially; the series stops early with this
  // flag set once entries approach the double range.
  bool truncated = false;
  double truncated_at = std::numeric_limits<double>::quiet_NaN();
};

// Exact covariance evolution for player 1's stacked (y; X). Continuous:
// P(t) = e^{tL} P0 e^{tL}^T at t = 0, s, 2s, ... <= horizon. Discrete:
// the one-step map applied repeatedly (never a matrix power), recorded
// every sample_every steps.
CovarianceSeries covariance_series(const Game& game, MapKind kind, double eta,
                                   const Mat& P0, long horizon, long sample_every);

enum class GrowthClass { Bounded, Quadratic, Exponential };
const char* growth_class_name(GrowthClass cls);

struct GrowthVerdict {
  GrowthClass cls = GrowthClass::Bounded;
  // Quadratic: fitted log-log slope. Exponential: fitted per-step base.
  // Bounded: tail max/median ratio.
  double fitted = 0.0;
  double gamma = 0.0;
  bool singular = false;
  double r2 = 0.0;
  bool truncated_input = false;
  // Reference per-step covariance base 1 + gamma * eta^2 for Euler maps.
  double euler_base_reference = 0.0;
};

// Classifies a variance series (t, Var(t)). Decision order: log-log tail
// slope in [1.7, 2.3] -> Quadratic; else positive log-linear slope with
// R^2 > 0.99 -> Exponential (base e^slope); else tail max/median < 10 ->
// Bounded. If none fire, the regression with the higher R^2 wins.
// Requires >= 50 samples spanning at least one decade of t.
GrowthVerdict classify_growth(const std::vector<std::pair<double, double>>& series,
                              double gamma, double eta);

// Prediction from first principles, independent of any fitted data:
// continuous/symplectic with singular Gram grow the X variance
// quadratically and keep y bounded; nonsingular stays bounded; Euler is
// exponential in both coordinates.
GrowthClass theoretical_growth(MapKind kind, bool singular, bool x_coordinate);

struct GramInfo {
  bool singular;
  double gamma;    // max eigenvalue of the Gram matrix
  double min_eig;
};

// singular iff min eigenvalue < 1e-9 * max(1, gamma).
GramInfo gram_singularity(const Game& game, int player);

}  // namespace ftrluq
