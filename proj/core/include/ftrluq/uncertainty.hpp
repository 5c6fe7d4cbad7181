#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "ftrluq/dynamics.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/linear_maps.hpp"

namespace ftrluq {

// Gaussian noise in one player's canonical coordinates: the stacked vector
// (y; X) of `player` is drawn from N(mean, cov); the other player starts
// deterministically at y = 0, X = 0.
struct GaussianDualInit {
  int player = 1;
  Vec mean;  // length 2n
  Mat cov;   // 2n x 2n, symmetric PSD
};

// Uniform square on the simplex, spanned by the barycentric directions
// e1 - e3 and e2 - e3 around `center`. Both players draw independently
// from the same patch. The whole patch must sit inside the simplex interior.
struct SimplexPatchInit {
  Vec center;
  double side = 0.05;
};

struct InitDistribution {
  enum class Kind { GaussianDual, UniformSimplexPatch };
  Kind kind = Kind::GaussianDual;
  GaussianDualInit gauss;
  SimplexPatchInit patch;
};

struct EnsembleMember {
  DualState s1;
  DualState s2;
  DualDynamics ctx;  // per-member initial duals; members never share state
};

struct Ensemble {
  Game game;
  AlgorithmSpec algorithm;
  InitDistribution init;
  std::uint64_t seed = 0;
  int observed_player = 1;  // whose stacked (y; X) the statistics track
  std::vector<EnsembleMember> members;
};

// n independent draws, reproducible bit-exactly from the seed (each member
// owns a derived RNG stream, so evaluation order cannot matter). Gaussian
// draws go through the Cholesky factor of cov, with a 1e-12 diagonal jitter
// retry if the factorization fails on a degenerate PSD matrix.
Ensemble sample_ensemble(const Game& game, const AlgorithmSpec& algorithm,
                         const InitDistribution& dist, long n, std::uint64_t seed);

// Unbiased (n-1 denominator) covariance of the stacked (y; X) coordinates of
// the designated player, accumulated in a fixed order.
Mat sample_covariance(const Ensemble& ensemble);
Mat sample_covariance(const std::vector<Vec>& zs);
Vec sample_mean(const std::vector<Vec>& zs);

// Entrywise jackknife standard errors of sample_covariance(zs).
Mat jackknife_covariance_se(const std::vector<Vec>& zs);

// Recorded ensemble evolution of the designated player's stacked (y; X).
struct EnsembleSeries {
  std::vector<double> times;
  std::vector<std::vector<Vec>> states;  // [time][member]
  std::vector<Vec> mean;                 // sample mean per time
  std::vector<Mat> cov;                  // sample covariance per time
};

// Advances every member with the dual stepper matching the ensemble's rule
// (simultaneous -> Euler scheme, alternating -> symplectic scheme) and
// records at t = 0 and every sample_every steps.
EnsembleSeries evolve_ensemble_series(Ensemble& ensemble, long horizon,
                                      long sample_every);

// log|det M| in nats via LU factorization; -inf when M is singular
// (a non-injective map has no entropy ledger entry).
double entropy_delta_linear(const Mat& M);

struct MwuEntropyDelta {
  double mean_log_det = 0.0;  // Monte-Carlo estimate of E[log det J]
  double min_det = 0.0;       // min over samples; >= 1 up to roundoff
};

// Per-step entropy increment of the simultaneous entropy update at the
// ensemble's current states: det J = det(I + eta^2 H1 (A^(21))^T H2 A^(21))
// with H_i the conjugate Hessians at the members' current duals. Throws if
// any sample determinant falls below 1 - 1e-6.
MwuEntropyDelta entropy_delta_mwu_step(const Game& game, const Regularizer& reg1,
                                       const Regularizer& reg2,
                                       const Ensemble& ensemble_at_t, double eta);

// Williamson symplectic eigenvalues of a PSD matrix over canonically paired
// coordinates (y_alpha, X_alpha): moduli of the eigenvalues of J P, taken
// once per conjugate pair, ascending.
Vec symplectic_eigenvalues(const Mat& P);

// Linear symplectic width pi * d_min(P); the radius-r ball (P = r^2 I)
// yields pi r^2.
double gromov_width_linear(const Mat& P);

struct HeisenbergRecord {
  double t = 0.0;
  Vec dX;         // per-coordinate std of X
  Vec dy;         // per-coordinate std of y
  Vec product;    // dX_a * dy_a
  Vec block_det;  // det of the 2x2 (y_a, X_a) covariance block
  double bound_product = 0.0;  // (1/sqrt(2)) * w_L(P0) / pi
  double bound_block = 0.0;    // (w_L(P0) / pi)^2
};

// Exact linear propagation: the block-determinant bound is asserted hard
// (throws on violation beyond 1e-8).
std::vector<HeisenbergRecord> heisenberg_series(const Game& game, MapKind kind,
                                                double eta, const Mat& P0,
                                                long horizon, long sample_every);

struct HeisenbergEnsembleResult {
  std::vector<HeisenbergRecord> records;
  // Correlation of per-step increments of dX_1 and dy_1; negative values
  // mean the curves move in anti-phase. Diagnostic only.
  double antiphase_correlation = 0.0;
};

// Monte-Carlo variant: evolves the ensemble and reports the same records
// from sample covariances, bounds included for reference but not asserted.
HeisenbergEnsembleResult heisenberg_series_ensemble(Ensemble& ensemble,
                                                    long horizon,
                                                    long sample_every);

// c such that Var(X_alpha(t)) <= c t^2 over the recorded t > 0.
double calibrate_chebyshev_c(const CovarianceSeries& exact);
double calibrate_chebyshev_c(const EnsembleSeries& series);

struct ChebyshevReport {
  double k = 0.0;
  double c = 0.0;
  double bound_X = 0.0;  // 1 / k^2
  double bound_y = 0.0;  // c / k^2
  double max_fraction_X = 0.0;
  double max_fraction_y = 0.0;
  // per recorded t > 0: (t, max-over-coordinates fraction X, fraction y)
  std::vector<std::array<double, 3>> per_t;
};

// Empirical tail frequencies against the concentration bounds:
// X side: |X_a(t) - mu_X_a(t)| > k sqrt(c) t, bound 1/k^2;
// y side: |y_a(t) - mu_y_a(t)| > k, bound c/k^2.
// mu is the exactly propagated mean when `exact_mean` rows are given
// (one per recorded time), else the sample mean.
ChebyshevReport chebyshev_check(const EnsembleSeries& series, double k, double c,
                                const std::vector<Vec>* exact_mean = nullptr);

struct DispersionSnapshot {
  double t = 0.0;
  Mat points;  // n_samples x n1, player 1 strategies
  Vec mean;
  Vec var;
};

struct DispersionResult {
  std::vector<DispersionSnapshot> snapshots;
  bool plottable = true;  // false when the game is not 3-action
};

// Primal ensemble under the given rule from a uniform simplex patch,
// snapshotted at the requested times (integers, ascending).
DispersionResult figure1_dispersion(const Game& game, const AlgorithmSpec& spec,
                                    const SimplexPatchInit& patch,
                                    const std::vector<double>& times, long n,
                                    std::uint64_t seed);

}  // namespace ftrluq
