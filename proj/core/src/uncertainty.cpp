#include "ftrluq/uncertainty.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ftrluq/io_util.hpp"
#include "ftrluq/rng.hpp"

namespace ftrluq {

namespace {

Vec stacked(const DualState& s) {
  Vec z(s.y.size() + s.X.size());
  z << s.y, s.X;
  return z;
}

Vec observed_stacked(const EnsembleMember& m, int player) {
  return stacked(player == 1 ? m.s1 : m.s2);
}

void validate_patch(const Game& game, const SimplexPatchInit& patch) {
  if (game.n1() != game.n2() || game.n1() < 3)
    throw std::invalid_argument(
        "simplex patch init needs a square game with at least 3 actions");
  if (patch.center.size() != game.n1())
    throw std::invalid_argument("patch center must match the action count");
  if (!(patch.side > 0.0))
    throw std::invalid_argument("patch side must be positive");
  if (std::abs(patch.center.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("patch center must lie on the simplex");
  const double s = patch.side;
  // Worst corners: u = v = -s/2 hits coordinates 1 and 2, u = v = +s/2
  // pushes coordinate 3 down by s.
  if (!(patch.center(0) - s / 2 > 0.0) || !(patch.center(1) - s / 2 > 0.0) ||
      !(patch.center(2) - s > 0.0))
    throw std::invalid_argument("patch extends outside the simplex interior");
}

// Point in the square patch: center + u (e1 - e3) + v (e2 - e3).
Vec patch_point(const SimplexPatchInit& patch, Xoshiro256pp& rng) {
  const double u = rng.uniform(-patch.side / 2, patch.side / 2);
  const double v = rng.uniform(-patch.side / 2, patch.side / 2);
  Vec x = patch.center;
  x(0) += u;
  x(1) += v;
  x(2) -= u + v;
  return x;
}

Mat cholesky_factor(const Mat& cov) {
  if (cov.isZero(0.0)) return Mat::Zero(cov.rows(), cov.cols());
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // PSD with a null direction fails the strict factorization; nudge once.
  Eigen::LLT<Mat> jittered(cov + 1e-12 * Mat::Identity(cov.rows(), cov.cols()));
  if (jittered.info() == Eigen::Success) return jittered.matrixL();
  throw std::invalid_argument("init covariance is not positive semidefinite");
}

void step_member(const Game& game, const AlgorithmSpec& spec,
                 EnsembleMember& m) {
  const auto next = rule_is_alternating(spec.rule)
                        ? step_dual_symplectic(spec, game, m.ctx, m.s1, m.s2)
                        : step_dual_euler(spec, game, m.ctx, m.s1, m.s2);
  m.s1 = next.first;
  m.s2 = next.second;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 3 || b.size() != n) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

HeisenbergRecord record_from_covariance(double t, const Mat& P,
                                        double bound_product,
                                        double bound_block) {
  const Eigen::Index n = P.rows() / 2;
  HeisenbergRecord rec;
  rec.t = t;
  rec.dX = Vec(n);
  rec.dy = Vec(n);
  rec.product = Vec(n);
  rec.block_det = Vec(n);
  rec.bound_product = bound_product;
  rec.bound_block = bound_block;
  for (Eigen::Index a = 0; a < n; ++a) {
    const double vy = std::max(P(a, a), 0.0);
    const double vx = std::max(P(n + a, n + a), 0.0);
    rec.dy(a) = std::sqrt(vy);
    rec.dX(a) = std::sqrt(vx);
    rec.product(a) = rec.dy(a) * rec.dX(a);
    rec.block_det(a) = P(a, a) * P(n + a, n + a) - P(a, n + a) * P(n + a, a);
  }
  return rec;
}

}  // namespace

Ensemble sample_ensemble(const Game& game, const AlgorithmSpec& algorithm,
                         const InitDistribution& dist, long n,
                         std::uint64_t seed) {
  validate_algorithm_spec(algorithm);
  if (algorithm.rule == UpdateRule::ContinuousFTRL)
    throw std::invalid_argument("ensembles advance by discrete steppers");
  if (n < 1) throw std::invalid_argument("ensemble size must be at least 1");

  Ensemble e{game, algorithm, dist, seed, 1, {}};
  e.members.reserve(static_cast<std::size_t>(n));

  if (dist.kind == InitDistribution::Kind::GaussianDual) {
    const auto& g = dist.gauss;
    if (g.player != 1 && g.player != 2)
      throw std::invalid_argument("gaussian init player must be 1 or 2");
    e.observed_player = g.player;
    const Eigen::Index np = g.player == 1 ? game.n1() : game.n2();
    const Eigen::Index nq = g.player == 1 ? game.n2() : game.n1();
    if (g.mean.size() != 2 * np || g.cov.rows() != 2 * np ||
        g.cov.cols() != 2 * np)
      throw std::invalid_argument("gaussian init dimensions must be 2n");
    if ((g.cov - g.cov.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("init covariance must be symmetric");
    const Mat L = cholesky_factor(g.cov);
    for (long i = 0; i < n; ++i) {
      Xoshiro256pp rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
      Vec xi(2 * np);
      for (Eigen::Index j = 0; j < 2 * np; ++j) xi(j) = rng.normal();
      const Vec z = g.mean + L * xi;
      EnsembleMember m;
      DualState noisy{g.player, z.head(np), z.tail(np), 0.0};
      DualState quiet{g.player == 1 ? 2 : 1, Vec::Zero(nq), Vec::Zero(nq), 0.0};
      m.s1 = g.player == 1 ? noisy : quiet;
      m.s2 = g.player == 1 ? quiet : noisy;
      m.ctx.reg1 = Regularizer{algorithm.regularizer_kind, game.n1()};
      m.ctx.reg2 = Regularizer{algorithm.regularizer_kind, game.n2()};
      m.ctx.y1_init = m.s1.y;
      m.ctx.y2_init = m.s2.y;
      e.members.push_back(std::move(m));
    }
    return e;
  }

  validate_patch(game, dist.patch);
  e.observed_player = 1;
  for (long i = 0; i < n; ++i) {
    Xoshiro256pp rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    const Vec x1 = patch_point(dist.patch, rng);
    const Vec x2 = patch_point(dist.patch, rng);
    const MatchedDualStart start = matched_dual_start(game, algorithm, x1, x2);
    e.members.push_back(EnsembleMember{start.s1, start.s2, start.ctx});
  }
  return e;
}

Vec sample_mean(const std::vector<Vec>& zs) {
  if (zs.empty()) throw std::invalid_argument("mean of empty sample");
  Vec sum = Vec::Zero(zs.front().size());
  for (const Vec& z : zs) sum += z;
  return sum / static_cast<double>(zs.size());
}

Mat sample_covariance(const std::vector<Vec>& zs) {
  const std::size_t n = zs.size();
  if (n < 2) throw std::invalid_argument("covariance needs at least 2 samples");
  const Vec mu = sample_mean(zs);
  Mat acc = Mat::Zero(mu.size(), mu.size());
  for (const Vec& z : zs) {
    const Vec d = z - mu;
    acc += d * d.transpose();
  }
  return acc / static_cast<double>(n - 1);
}

Mat sample_covariance(const Ensemble& ensemble) {
  std::vector<Vec> zs;
  zs.reserve(ensemble.members.size());
  for (const auto& m : ensemble.members)
    zs.push_back(observed_stacked(m, ensemble.observed_player));
  return sample_covariance(zs);
}

Mat jackknife_covariance_se(const std::vector<Vec>& zs) {
  const std::size_t n = zs.size();
  if (n < 3) throw std::invalid_argument("jackknife needs at least 3 samples");
  const Eigen::Index d = zs.front().size();
  Vec s1 = Vec::Zero(d);
  Mat s2 = Mat::Zero(d, d);
  for (const Vec& z : zs) {
    s1 += z;
    s2 += z * z.transpose();
  }
  // Leave-one-out estimates in closed form from the two power sums,
  // recomputed in a second pass so nothing per-member is stored.
  auto leave_one_out = [&](const Vec& z) -> Mat {
    const Vec mu_i = (s1 - z) / static_cast<double>(n - 1);
    return (s2 - z * z.transpose() -
            static_cast<double>(n - 1) * mu_i * mu_i.transpose()) /
           static_cast<double>(n - 2);
  };
  Mat theta_bar = Mat::Zero(d, d);
  for (const Vec& z : zs) theta_bar += leave_one_out(z);
  theta_bar /= static_cast<double>(n);
  Mat var = Mat::Zero(d, d);
  for (const Vec& z : zs) {
    const Mat dm = leave_one_out(z) - theta_bar;
    var += dm.cwiseProduct(dm);
  }
  var *= static_cast<double>(n - 1) / static_cast<double>(n);
  return var.cwiseSqrt();
}

EnsembleSeries evolve_ensemble_series(Ensemble& ensemble, long horizon,
                                      long sample_every) {
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  if (sample_every < 1) throw std::invalid_argument("sample_every must be >= 1");
  if (ensemble.members.size() < 2)
    throw std::invalid_argument("ensemble statistics need at least 2 members");

  EnsembleSeries out;
  auto record = [&](double t) {
    std::vector<Vec> zs;
    zs.reserve(ensemble.members.size());
    for (const auto& m : ensemble.members)
      zs.push_back(observed_stacked(m, ensemble.observed_player));
    out.times.push_back(t);
    out.mean.push_back(sample_mean(zs));
    out.cov.push_back(sample_covariance(zs));
    out.states.push_back(std::move(zs));
  };

  record(0.0);
  for (long step = 1; step <= horizon; ++step) {
    for (auto& m : ensemble.members)
      step_member(ensemble.game, ensemble.algorithm, m);
    if (step % sample_every == 0) record(static_cast<double>(step));
  }
  return out;
}

double entropy_delta_linear(const Mat& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("map must be square");
  Eigen::PartialPivLU<Mat> lu(M);
  const Vec diag = lu.matrixLU().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double u = std::abs(diag(i));
    if (u == 0.0) return -std::numeric_limits<double>::infinity();
    sum += std::log(u);
  }
  return sum;
}

MwuEntropyDelta entropy_delta_mwu_step(const Game& game, const Regularizer& reg1,
                                       const Regularizer& reg2,
                                       const Ensemble& ensemble_at_t,
                                       double eta) {
  if (ensemble_at_t.members.empty())
    throw std::invalid_argument("entropy step needs a nonempty ensemble");
  const Mat A21 = game.A21();
  std::vector<double> logs;
  logs.reserve(ensemble_at_t.members.size());
  double min_det = std::numeric_limits<double>::infinity();
  for (const auto& m : ensemble_at_t.members) {
    const Mat H1 = conjugate_hessian(reg1, m.s1.y);
    const Mat H2 = conjugate_hessian(reg2, m.s2.y);
    const Mat K = Mat::Identity(game.n1(), game.n1()) +
                  eta * eta * H1 * A21.transpose() * H2 * A21;
    const double det = K.determinant();
    if (det < 1.0 - 1e-6)
      throw std::runtime_error("entropy increment fell below the unit floor");
    min_det = std::min(min_det, det);
    logs.push_back(std::log(det));
  }
  MwuEntropyDelta out;
  out.min_det = min_det;
  out.mean_log_det = compensated_sum(logs) / static_cast<double>(logs.size());
  return out;
}

Vec symplectic_eigenvalues(const Mat& P) {
  if (P.rows() != P.cols() || P.rows() % 2 != 0)
    throw std::invalid_argument("symplectic spectrum needs an even dimension");
  const Eigen::Index n = P.rows() / 2;
  Mat J = Mat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = Mat::Identity(n, n);
  J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
  Eigen::EigenSolver<Mat> es(J * P);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigen decomposition of J P failed");
  std::vector<double> mods(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    mods[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
  std::sort(mods.begin(), mods.end());
  Vec d(n);
  // Eigenvalues of J P come in conjugate pairs +-i d_a; after sorting the
  // moduli each d_a occupies two adjacent slots.
  for (Eigen::Index a = 0; a < n; ++a) d(a) = mods[static_cast<std::size_t>(2 * a)];
  return d;
}

double gromov_width_linear(const Mat& P) {
  const Vec d = symplectic_eigenvalues(P);
  constexpr double pi = 3.14159265358979323846;
  return pi * d(0);
}

std::vector<HeisenbergRecord> heisenberg_series(const Game& game, MapKind kind,
                                                double eta, const Mat& P0,
                                                long horizon,
                                                long sample_every) {
  const Vec d0 = symplectic_eigenvalues(P0);
  const double d_min = d0(0);
  const double bound_block = d_min * d_min;
  const double bound_product = d_min / std::sqrt(2.0);

  const CovarianceSeries series =
      covariance_series(game, kind, eta, P0, horizon, sample_every);
  std::vector<HeisenbergRecord> out;
  out.reserve(series.samples.size());
  for (const auto& s : series.samples) {
    HeisenbergRecord rec =
        record_from_covariance(s.t, s.P, bound_product, bound_block);
    for (Eigen::Index a = 0; a < rec.block_det.size(); ++a) {
      if (rec.block_det(a) < bound_block - 1e-8)
        throw std::runtime_error(
            "conjugate block determinant fell below the invariant floor");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

HeisenbergEnsembleResult heisenberg_series_ensemble(Ensemble& ensemble,
                                                    long horizon,
                                                    long sample_every) {
  const EnsembleSeries series =
      evolve_ensemble_series(ensemble, horizon, sample_every);
  HeisenbergEnsembleResult out;
  const Vec d0 = symplectic_eigenvalues(series.cov.front());
  const double d_min = std::max(d0(0), 0.0);
  const double bound_block = d_min * d_min;
  const double bound_product = d_min / std::sqrt(2.0);
  out.records.reserve(series.times.size());
  for (std::size_t i = 0; i < series.times.size(); ++i)
    out.records.push_back(record_from_covariance(series.times[i], series.cov[i],
                                                 bound_product, bound_block));
  std::vector<double> inc_x, inc_y;
  for (std::size_t i = 0; i + 1 < out.records.size(); ++i) {
    inc_x.push_back(out.records[i + 1].dX(0) - out.records[i].dX(0));
    inc_y.push_back(out.records[i + 1].dy(0) - out.records[i].dy(0));
  }
  out.antiphase_correlation = pearson(inc_x, inc_y);
  return out;
}

double calibrate_chebyshev_c(const CovarianceSeries& exact) {
  double c = 0.0;
  bool seen = false;
  for (const auto& s : exact.samples) {
    if (!(s.t > 0.0)) continue;
    const Eigen::Index n = s.P.rows() / 2;
    for (Eigen::Index a = 0; a < n; ++a) {
      c = std::max(c, s.P(n + a, n + a) / (s.t * s.t));
      seen = true;
    }
  }
  if (!seen) throw std::invalid_argument("calibration needs samples at t > 0");
  return c;
}

double calibrate_chebyshev_c(const EnsembleSeries& series) {
  double c = 0.0;
  bool seen = false;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (!(t > 0.0)) continue;
    const Mat& P = series.cov[i];
    const Eigen::Index n = P.rows() / 2;
    for (Eigen::Index a = 0; a < n; ++a) {
      c = std::max(c, P(n + a, n + a) / (t * t));
      seen = true;
    }
  }
  if (!seen) throw std::invalid_argument("calibration needs samples at t > 0");
  return c;
}

ChebyshevReport chebyshev_check(const EnsembleSeries& series, double k, double c,
                                const std::vector<Vec>* exact_mean) {
  if (!(k > 1.0)) throw std::invalid_argument("chebyshev check needs k > 1");
  if (!(c > 0.0)) throw std::invalid_argument("chebyshev check needs c > 0");
  if (exact_mean != nullptr && exact_mean->size() != series.times.size())
    throw std::invalid_argument("exact mean rows must match recorded times");

  ChebyshevReport rep;
  rep.k = k;
  rep.c = c;
  rep.bound_X = 1.0 / (k * k);
  rep.bound_y = c / (k * k);
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const double t = series.times[i];
    if (!(t > 0.0)) continue;  // the X threshold degenerates to zero at t = 0
    const Vec& mu = exact_mean != nullptr ? (*exact_mean)[i] : series.mean[i];
    const auto& zs = series.states[i];
    const Eigen::Index n = mu.size() / 2;
    const double thr_x = k * std::sqrt(c) * t;
    double frac_x = 0.0, frac_y = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      long out_x = 0, out_y = 0;
      for (const Vec& z : zs) {
        if (std::abs(z(n + a) - mu(n + a)) > thr_x) ++out_x;
        if (std::abs(z(a) - mu(a)) > k) ++out_y;
      }
      frac_x = std::max(frac_x, static_cast<double>(out_x) /
                                    static_cast<double>(zs.size()));
      frac_y = std::max(frac_y, static_cast<double>(out_y) /
                                    static_cast<double>(zs.size()));
    }
    rep.per_t.push_back({t, frac_x, frac_y});
    rep.max_fraction_X = std::max(rep.max_fraction_X, frac_x);
    rep.max_fraction_y = std::max(rep.max_fraction_y, frac_y);
  }
  if (rep.per_t.empty())
    throw std::invalid_argument("chebyshev check needs samples at t > 0");
  return rep;
}

DispersionResult figure1_dispersion(const Game& game, const AlgorithmSpec& spec,
                                    const SimplexPatchInit& patch,
                                    const std::vector<double>& times, long n,
                                    std::uint64_t seed) {
  validate_algorithm_spec(spec);
  if (spec.rule == UpdateRule::ContinuousFTRL)
    throw std::invalid_argument("dispersion snapshots use discrete steppers");
  validate_patch(game, patch);
  if (n < 2) throw std::invalid_argument("dispersion needs at least 2 samples");
  if (times.empty()) throw std::invalid_argument("no snapshot times given");
  std::vector<long> steps;
  steps.reserve(times.size());
  for (double t : times) {
    const long s = std::lround(t);
    if (s < 0 || std::abs(t - static_cast<double>(s)) > 1e-9)
      throw std::invalid_argument("snapshot times must be nonnegative integers");
    if (!steps.empty() && s <= steps.back())
      throw std::invalid_argument("snapshot times must be strictly increasing");
    steps.push_back(s);
  }

  std::vector<PrimalState> members;
  members.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    Xoshiro256pp rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    members.push_back(PrimalState{patch_point(patch, rng),
                                  patch_point(patch, rng), 0.0});
  }

  DispersionResult out;
  out.plottable = game.n1() == 3;
  auto snapshot = [&](long step) {
    DispersionSnapshot snap;
    snap.t = static_cast<double>(step);
    snap.points = Mat(n, game.n1());
    for (long i = 0; i < n; ++i)
      snap.points.row(i) = members[static_cast<std::size_t>(i)].x1.transpose();
    snap.mean = snap.points.colwise().mean();
    Vec var = Vec::Zero(game.n1());
    for (long i = 0; i < n; ++i) {
      const Vec d = snap.points.row(i).transpose() - snap.mean;
      var += d.cwiseProduct(d);
    }
    snap.var = var / static_cast<double>(n - 1);
    out.snapshots.push_back(std::move(snap));
  };

  std::size_t next = 0;
  if (steps[next] == 0) {
    snapshot(0);
    ++next;
  }
  const long last = steps.back();
  for (long step = 1; step <= last && next < steps.size(); ++step) {
    for (auto& m : members) m = step_primal(spec, game, m);
    if (step == steps[next]) {
      snapshot(step);
      ++next;
    }
  }
  return out;
}

}  // namespace ftrluq
