#include "ftrluq/acceptance.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <vector>

#include "ftrluq/dynamics.hpp"
#include "ftrluq/experiment.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/io_util.hpp"
#include "ftrluq/linear_maps.hpp"
#include "ftrluq/uncertainty.hpp"

namespace ftrluq {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v) { return format_double(v); }

void emit(std::ostream& os, int idx, const std::string& name, bool pass,
          const std::string& detail, double ms) {
  os << "C" << (idx < 10 ? "0" : "") << idx << " " << (pass ? "PASS" : "FAIL")
     << " " << name << ": " << detail << " [" << fmt(ms) << " ms]\n";
}

// Max eigenvalue of AA^T by a route independent of gram_singularity.
double gamma_oracle(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A * A.transpose());
  return es.eigenvalues().maxCoeff();
}

std::vector<std::pair<double, double>> variance_track(
    const CovarianceSeries& series, Eigen::Index row) {
  std::vector<std::pair<double, double>> out;
  out.reserve(series.samples.size());
  for (const auto& s : series.samples) out.push_back({s.t, s.P(row, row)});
  return out;
}

bool c1_equivalence(std::ostream& os, std::uint64_t) {
  const auto t0 = Clock::now();
  const Game rps = named_game("RPS");
  const EquivalenceReport sim = check_primal_dual_equivalence(
      rps, AlgorithmSpec{UpdateRule::MWU, 0.05, RegKind::NegativeEntropy}, 1000);
  const EquivalenceReport alt = check_primal_dual_equivalence(
      rps, AlgorithmSpec{UpdateRule::AltMWU, 0.05, RegKind::NegativeEntropy},
      1000);
  const double ms = ms_since(t0);
  const bool pass =
      sim.max_deviation < 1e-9 && alt.max_deviation < 1e-9 && ms < 1000.0;
  emit(os, 1, "primal-dual-equivalence", pass,
       "MWU dev " + fmt(sim.max_deviation) + ", AltMWU dev " +
           fmt(alt.max_deviation) + " (need < 1e-9, < 1 s)",
       ms);
  return pass;
}

bool c2_singular_growth(std::ostream& os, std::uint64_t) {
  const auto t0 = Clock::now();
  const Game a1 = named_game("A1");
  const Mat P0 = canonical_initial_covariance();
  const double gamma = gamma_oracle(a1.A);
  bool pass = true;
  std::string detail;
  for (MapKind kind : {MapKind::Continuous, MapKind::Symplectic}) {
    const CovarianceSeries series =
        covariance_series(a1, kind, 0.05, P0, 10000, 10);
    const GrowthVerdict vx =
        classify_growth(variance_track(series, 2), gamma, 0.05);
    const GrowthVerdict vy =
        classify_growth(variance_track(series, 0), gamma, 0.05);
    const bool ok_x =
        vx.cls == GrowthClass::Quadratic && vx.fitted >= 1.8 && vx.fitted <= 2.2;
    const bool ok_y = vy.cls == GrowthClass::Bounded && vy.fitted < 5.0;
    pass = pass && ok_x && ok_y;
    if (!detail.empty()) detail += "; ";
    detail += std::string(map_kind_name(kind)) + " slope " + fmt(vx.fitted) +
              ", y tail ratio " + fmt(vy.fitted);
  }
  const double ms = ms_since(t0);
  pass = pass && ms < 5000.0;
  emit(os, 2, "singular-covariance-growth", pass,
       detail + " (slope in [1.8, 2.2], ratio < 5, < 5 s)", ms);
  return pass;
}

bool c3_nonsingular_bounded(std::ostream& os, std::uint64_t) {
  const auto t0 = Clock::now();
  const Mat P0 = canonical_initial_covariance();
  bool pass = true;
  std::string detail;
  const std::pair<std::string, MapKind> cases[] = {
      {"A4", MapKind::Continuous}, {"B4", MapKind::Symplectic}};
  for (const auto& [name, kind] : cases) {
    const Game g = named_game(name);
    const double gamma = gamma_oracle(g.A);
    const CovarianceSeries series =
        covariance_series(g, kind, 0.05, P0, 10000, 10);
    const GrowthVerdict vx =
        classify_growth(variance_track(series, 2), gamma, 0.05);
    const GrowthVerdict vy =
        classify_growth(variance_track(series, 0), gamma, 0.05);
    pass = pass && vx.cls == GrowthClass::Bounded && vy.cls == GrowthClass::Bounded;
    if (!detail.empty()) detail += "; ";
    detail += name + " X " + growth_class_name(vx.cls) + ", y " +
              growth_class_name(vy.cls);
  }
  emit(os, 3, "nonsingular-covariance-bounded", pass,
       detail + " (need Bounded for all four)", ms_since(t0));
  return pass;
}

bool c4_euler_exponential(std::ostream& os, std::uint64_t) {
  const auto t0 = Clock::now();
  const Mat P0 = canonical_initial_covariance();
  bool pass = true;
  std::string detail;
  for (const std::string name : {"C1", "A1"}) {
    const Game g = named_game(name);
    const double gamma = gamma_oracle(g.A);
    const double ref = 1.0 + gamma * 0.1 * 0.1;
    const CovarianceSeries series =
        covariance_series(g, MapKind::Euler, 0.1, P0, 2000, 10);
    const GrowthVerdict vx =
        classify_growth(variance_track(series, 2), gamma, 0.1);
    const bool ok = vx.cls == GrowthClass::Exponential &&
                    std::abs(vx.fitted - ref) <= 0.05 * ref;
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += name + " base " + fmt(vx.fitted) + " vs " + fmt(ref);
  }
  emit(os, 4, "euler-exponential-base", pass, detail + " (within 5%)",
       ms_since(t0));
  return pass;
}

bool c5_entropy_ledger(std::ostream& os, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Game a1 = named_game("A1");
  const double eta = 0.05;
  const long T = 10000;

  const double d_alt =
      entropy_delta_linear(build_symplectic_map(a1, 1, eta).M);
  const double cum_alt = static_cast<double>(T) * d_alt;
  const bool ok_alt = std::abs(cum_alt) <= 1e-10;

  const double d_gda = entropy_delta_linear(build_euler_map(a1, 1, eta).M);
  const Mat G = a1.gram(1);
  const double ref =
      std::log((Mat::Identity(2, 2) + eta * eta * G).determinant());
  const bool ok_gda = std::abs(d_gda - ref) <= 1e-9 * std::abs(ref);

  // Simultaneous entropy update on RPS: every sample's volume factor must
  // stay at or above one, and the mean increment must stay positive.
  const Game rps = named_game("RPS");
  const AlgorithmSpec mwu{UpdateRule::MWU, 0.05, RegKind::NegativeEntropy};
  InitDistribution patch;
  patch.kind = InitDistribution::Kind::UniformSimplexPatch;
  patch.patch.center = Vec::Constant(3, 1.0 / 3.0);
  patch.patch.side = 0.05;
  Ensemble ens = sample_ensemble(rps, mwu, patch, 100, seed);
  const Regularizer r1{RegKind::NegativeEntropy, 3}, r2{RegKind::NegativeEntropy, 3};
  double min_det = std::numeric_limits<double>::infinity();
  double min_inc = std::numeric_limits<double>::infinity();
  bool ok_mwu = true;
  for (long step = 0; step < 100; ++step) {
    const MwuEntropyDelta d = entropy_delta_mwu_step(rps, r1, r2, ens, 0.05);
    min_det = std::min(min_det, d.min_det);
    min_inc = std::min(min_inc, d.mean_log_det);
    for (auto& m : ens.members) {
      const auto next = step_dual_euler(mwu, rps, m.ctx, m.s1, m.s2);
      m.s1 = next.first;
      m.s2 = next.second;
    }
  }
  ok_mwu = min_det >= 1.0 - 1e-8 && min_inc > 0.0;

  const bool pass = ok_alt && ok_gda && ok_mwu;
  emit(os, 5, "entropy-ledger", pass,
       "AltGDA cum " + fmt(cum_alt) + " (<= 1e-10); GDA slope " + fmt(d_gda) +
           " vs " + fmt(ref) + " (rel 1e-9); MWU min det " + fmt(min_det) +
           ", min increment " + fmt(min_inc),
       ms_since(t0));
  return pass;
}

bool c6_heisenberg_floor(std::ostream& os, std::uint64_t) {
  const auto t0 = Clock::now();
  const Game a1 = named_game("A1");
  const Mat P0 = canonical_initial_covariance();
  bool pass = true;
  std::string detail;
  try {
    const auto recs = heisenberg_series(a1, MapKind::Symplectic, 0.05, P0, 10000, 1);
    double min_margin = std::numeric_limits<double>::infinity();
    for (const auto& r : recs)
      for (Eigen::Index a = 0; a < r.block_det.size(); ++a)
        min_margin = std::min(min_margin, r.block_det(a) - r.bound_block);
    pass = min_margin >= -1e-8;
    detail = "min(block det - floor) over every step and coordinate is " +
             fmt(min_margin) + ", floor " + fmt(recs.front().bound_block);
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("hard floor violated: ") + e.what();
  }
  emit(os, 6, "heisenberg-block-floor", pass, detail + " (need >= -1e-8)",
       ms_since(t0));
  return pass;
}

bool c7_monte_carlo_vs_exact(std::ostream& os, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Game a1 = named_game("A1");
  const Mat P0 = canonical_initial_covariance();
  const AlgorithmSpec spec{UpdateRule::AltGDA, 0.05, RegKind::Euclidean};

  const CovarianceSeries exact =
      covariance_series(a1, MapKind::Symplectic, 0.05, P0, 200, 200);
  const Mat& P_exact = exact.samples.back().P;

  InitDistribution init;
  init.kind = InitDistribution::Kind::GaussianDual;
  init.gauss.player = 1;
  init.gauss.mean = Vec::Zero(4);
  init.gauss.cov = P0;
  Ensemble ens = sample_ensemble(a1, spec, init, 100000, seed);
  const EnsembleSeries es = evolve_ensemble_series(ens, 200, 200);
  const Mat& P_mc = es.cov.back();
  const Mat se = jackknife_covariance_se(es.states.back());

  double worst = 0.0;
  bool pass = true;
  for (Eigen::Index i = 0; i < P_mc.rows(); ++i)
    for (Eigen::Index j = 0; j < P_mc.cols(); ++j) {
      const double diff = std::abs(P_mc(i, j) - P_exact(i, j));
      if (diff > 3.0 * se(i, j) + 1e-300) pass = false;
      if (se(i, j) > 0.0) worst = std::max(worst, diff / se(i, j));
    }
  const double ms = ms_since(t0);
  pass = pass && ms < 30000.0;
  emit(os, 7, "monte-carlo-vs-exact", pass,
       "100000 members at t = 200, worst entry " + fmt(worst) +
           " jackknife SEs (need <= 3, < 30 s)",
       ms);
  return pass;
}

bool c8_chebyshev(std::ostream& os, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Game a1 = named_game("A1");
  const Mat P0 = canonical_initial_covariance();
  const AlgorithmSpec spec{UpdateRule::AltGDA, 0.05, RegKind::Euclidean};

  const CovarianceSeries exact =
      covariance_series(a1, MapKind::Symplectic, 0.05, P0, 10000, 100);
  const double c = calibrate_chebyshev_c(exact);

  InitDistribution init;
  init.kind = InitDistribution::Kind::GaussianDual;
  init.gauss.player = 1;
  init.gauss.mean = Vec::Zero(4);
  init.gauss.cov = P0;
  Ensemble ens = sample_ensemble(a1, spec, init, 1000, seed);
  const EnsembleSeries es = evolve_ensemble_series(ens, 10000, 100);
  const std::vector<Vec> mu(es.times.size(), Vec::Zero(4));

  bool pass = true;
  std::string detail = "c " + fmt(c);
  for (double k : {2.0, 3.0, 5.0}) {
    const ChebyshevReport rep = chebyshev_check(es, k, c, &mu);
    pass = pass && rep.max_fraction_X <= rep.bound_X;
    detail += "; k=" + fmt(k) + " max X fraction " + fmt(rep.max_fraction_X) +
              " vs " + fmt(rep.bound_X);
  }
  emit(os, 8, "chebyshev-concentration", pass, detail, ms_since(t0));
  return pass;
}

bool c9_dispersion(std::ostream& os, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const ExperimentConfig fig = registry_config("figure1-dispersion");
  const Game rps = named_game("RPS");
  const double oracle = fig.init.patch.side * fig.init.patch.side / 12.0;

  const DispersionResult at_cfg =
      figure1_dispersion(rps, fig.algorithm, fig.init.patch, fig.snapshot_times,
                         fig.ensemble_n, seed);
  const double var0 = at_cfg.snapshots.front().var(0);
  double ratio_cfg = 0.0;
  for (const auto& s : at_cfg.snapshots)
    ratio_cfg = std::max(ratio_cfg, s.var(0) / var0);

  // Reference run at the small step size, reported alongside: one revolution
  // of the cycle takes longer than 200 steps there, so the cloud cannot
  // spread a hundredfold yet.
  AlgorithmSpec slow = fig.algorithm;
  slow.eta = 0.05;
  const DispersionResult at_ref = figure1_dispersion(
      rps, slow, fig.init.patch, {0, 50, 80, 130, 150, 200}, fig.ensemble_n, seed);
  double ratio_ref = 0.0;
  for (const auto& s : at_ref.snapshots)
    ratio_ref = std::max(ratio_ref, s.var(0) / at_ref.snapshots.front().var(0));

  const bool ok_var0 = std::abs(var0 - oracle) <= 0.2 * oracle;
  const bool pass = ok_var0 && ratio_cfg >= 100.0;
  emit(os, 9, "dispersion-growth", pass,
       "t0 var " + fmt(var0) + " vs oracle " + fmt(oracle) +
           " (within 20%); ratio " + fmt(ratio_cfg) + " at config eta " +
           fmt(fig.algorithm.eta) + " (need >= 100); eta 0.05 reaches " +
           fmt(ratio_ref) + " (reported)",
       ms_since(t0));
  return pass;
}

bool c10_determinism(std::ostream& os, std::uint64_t seed,
                     const std::string& out_dir) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.games = {GameRef{"A1", named_game("A1").A}};
  cfg.algorithm = {UpdateRule::AltGDA, 0.05, RegKind::Euclidean};
  cfg.init.kind = InitDistribution::Kind::GaussianDual;
  cfg.init.gauss.player = 1;
  cfg.init.gauss.mean = Vec::Zero(4);
  cfg.init.gauss.cov = canonical_initial_covariance();
  cfg.init_given = true;
  cfg.horizon = 500;
  cfg.sample_every = 10;
  cfg.ensemble_n = 120;
  cfg.k_values = {2};
  cfg.seed = seed;

  bool pass = false;
  std::string detail;
  try {
    run_experiment(cfg, out_dir + "/det_a");
    run_experiment(cfg, out_dir + "/det_b");
    const std::string a = read_file(out_dir + "/det_a/manifest.json");
    const std::string b = read_file(out_dir + "/det_b/manifest.json");
    pass = a == b;
    detail = pass ? "manifests byte-identical (" + std::to_string(a.size()) +
                        " bytes, sha " + sha256_hex(a).substr(0, 12) + ")"
                  : "manifests differ";
  } catch (const std::exception& e) {
    detail = std::string("run failed: ") + e.what();
  }
  emit(os, 10, "determinism", pass, detail, ms_since(t0));
  return pass;
}

}  // namespace

bool run_acceptance(std::uint64_t seed, const std::string& out_dir,
                    std::ostream& os) {
  os << "acceptance suite, seed " << seed << "\n";
  int passed = 0;
  passed += c1_equivalence(os, seed) ? 1 : 0;
  passed += c2_singular_growth(os, seed) ? 1 : 0;
  passed += c3_nonsingular_bounded(os, seed) ? 1 : 0;
  passed += c4_euler_exponential(os, seed) ? 1 : 0;
  passed += c5_entropy_ledger(os, seed) ? 1 : 0;
  passed += c6_heisenberg_floor(os, seed) ? 1 : 0;
  passed += c7_monte_carlo_vs_exact(os, seed) ? 1 : 0;
  passed += c8_chebyshev(os, seed) ? 1 : 0;
  passed += c9_dispersion(os, seed) ? 1 : 0;
  passed += c10_determinism(os, seed, out_dir) ? 1 : 0;
  os << "acceptance: " << passed << "/10 criteria passed\n";
  return passed == 10;
}

}  // namespace ftrluq
