#include "ftrluq/linear_maps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace ftrluq {

const char* map_kind_name(MapKind kind) {
  switch (kind) {
    case MapKind::Continuous: return "continuous";
    case MapKind::Euler: return "euler";
    case MapKind::Symplectic: return "symplectic";
  }
  return "?";
}

LinearGenerator build_generator(const Game& game, int player) {
  const Mat G = game.gram(player);
  const Eigen::Index n = G.rows();
  Mat L = Mat::Zero(2 * n, 2 * n);
  L.block(0, n, n, n) = -G;
  L.block(n, 0, n, n) = Mat::Identity(n, n);
  return LinearGenerator{std::move(L)};
}

DiscreteLinearMap build_euler_map(const Game& game, int player, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("build_euler_map: eta must be positive");
  const Mat G = game.gram(player);
  const Eigen::Index n = G.rows();
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.block(0, 0, n, n) = Mat::Identity(n, n);
  M.block(0, n, n, n) = -eta * G;
  M.block(n, 0, n, n) = eta * Mat::Identity(n, n);
  M.block(n, n, n, n) = Mat::Identity(n, n);
  return DiscreteLinearMap{std::move(M), MapKind::Euler, eta};
}

DiscreteLinearMap build_symplectic_map(const Game& game, int player, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("build_symplectic_map: eta must be positive");
  const Mat G = game.gram(player);
  const Eigen::Index n = G.rows();
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.block(0, 0, n, n) = Mat::Identity(n, n);
  M.block(0, n, n, n) = -eta * G;
  M.block(n, 0, n, n) = eta * Mat::Identity(n, n);
  M.block(n, n, n, n) = Mat::Identity(n, n) - (eta * eta) * G;
  return DiscreteLinearMap{std::move(M), MapKind::Symplectic, eta};
}

Mat matrix_exponential(const Mat& L, double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("matrix_exponential: t must be finite");
  Mat result = (t * L).exp();
  if (!result.allFinite()) {
    throw std::runtime_error("matrix_exponential: non-finite result");
  }
  return result;
}

Mat matrix_exponential(const LinearGenerator& gen, double t) {
  return matrix_exponential(gen.L, t);
}

Mat propagate_covariance(const Mat& P0, const Mat& M) {
  if (P0.rows() != P0.cols() || M.cols() != P0.rows()) {
    throw std::invalid_argument("propagate_covariance: shape mismatch");
  }
  Mat Q = M * P0 * M.transpose();
  return 0.5 * (Q + Q.transpose());
}

CovarianceSeries covariance_series(const Game& game, MapKind kind, double eta,
                                   const Mat& P0, long horizon, long sample_every) {
  if (horizon < 0) throw std::invalid_argument("covariance_series: horizon must be >= 0");
  if (sample_every < 1) throw std::invalid_argument("covariance_series: sample_every must be >= 1");
  if (P0.rows() != 2 * game.n1() || P0.cols() != 2 * game.n1()) {
    throw std::invalid_argument("covariance_series: P0 must be 2*n1 x 2*n1 over (y1; X1)");
  }

  CovarianceSeries out;
  out.samples.push_back({0.0, 0.5 * (P0 + P0.transpose())});
  if (horizon == 0) return out;

  // Entries beyond this are one squaring away from the double range.
  constexpr double kOverflowGuard = 1e290;

  if (kind == MapKind::Continuous) {
    const LinearGenerator gen = build_generator(game, 1);
    for (long t = sample_every; t <= horizon; t += sample_every) {
      const Mat E = matrix_exponential(gen, double(t));
      out.samples.push_back({double(t), propagate_covariance(P0, E)});
    }
    return out;
  }

  const DiscreteLinearMap map = (kind == MapKind::Euler)
                                    ? build_euler_map(game, 1, eta)
                                    : build_symplectic_map(game, 1, eta);
  Mat P = 0.5 * (P0 + P0.transpose());
  for (long t = 1; t <= horizon; ++t) {
    P = propagate_covariance(P, map.M);
    if (!P.allFinite() || P.cwiseAbs().maxCoeff() > kOverflowGuard) {
      out.truncated = true;
      out.truncated_at = double(t);
      break;
    }
    if (t % sample_every == 0) out.samples.push_back({double(t), P});
  }
  return out;
}

const char* growth_class_name(GrowthClass cls) {
  switch (cls) {
    case GrowthClass::Bounded: return "Bounded";
    case GrowthClass::Quadratic: return "Quadratic";
    case GrowthClass::Exponential: return "Exponential";
  }
  return "?";
}

namespace {

struct Fit {
  double slope = 0.0;
  double r2 = 0.0;
  bool ok = false;
};

Fit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  Fit f;
  const std::size_t n = xs.size();
  if (n < 3) return f;
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / double(n), my = sy / double(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.r2 = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.ok = true;
  return f;
}

}  // namespace

GrowthVerdict classify_growth(const std::vector<std::pair<double, double>>& series,
                              double gamma, double eta) {
  // Finite prefix only; non-finite tails mark the verdict as truncated.
  std::vector<std::pair<double, double>> finite;
  finite.reserve(series.size());
  bool truncated = false;
  for (const auto& [t, v] : series) {
    if (!std::isfinite(v)) {
      truncated = true;
      break;
    }
    finite.emplace_back(t, v);
  }

  if (finite.size() < 50) {
    throw std::invalid_argument("classify_growth: need at least 50 finite samples");
  }
  double t_min_pos = 0.0, t_max = 0.0;
  for (const auto& [t, v] : finite) {
    if (t > 0 && (t_min_pos == 0.0 || t < t_min_pos)) t_min_pos = t;
    t_max = std::max(t_max, t);
  }
  if (!(t_min_pos > 0) || t_max / t_min_pos < 10.0) {
    throw std::invalid_argument("classify_growth: series must span at least one decade of t");
  }

  GrowthVerdict verdict;
  verdict.gamma = gamma;
  verdict.truncated_input = truncated;
  verdict.euler_base_reference = 1.0 + gamma * eta * eta;

  // Tail half of the finite samples, positive t and positive variance only.
  const std::size_t begin = finite.size() / 2;
  std::vector<double> ts, log_ts, log_vs, vs;
  for (std::size_t i = begin; i < finite.size(); ++i) {
    const auto& [t, v] = finite[i];
    if (t <= 0 || v <= 0) continue;
    ts.push_back(t);
    vs.push_back(v);
    log_ts.push_back(std::log(t));
    log_vs.push_back(std::log(v));
  }

  const Fit loglog = linear_fit(log_ts, log_vs);
  const Fit loglin = linear_fit(ts, log_vs);

  if (loglog.ok && loglog.slope >= 1.7 && loglog.slope <= 2.3) {
    verdict.cls = GrowthClass::Quadratic;
    verdict.fitted = loglog.slope;
    verdict.r2 = loglog.r2;
    return verdict;
  }
  if (loglin.ok && loglin.slope > 0 && loglin.r2 > 0.99) {
    verdict.cls = GrowthClass::Exponential;
    verdict.fitted = std::exp(loglin.slope);
    verdict.r2 = loglin.r2;
    return verdict;
  }

  std::vector<double> sorted_vs = vs;
  std::sort(sorted_vs.begin(), sorted_vs.end());
  const double median = sorted_vs.empty() ? 0.0 : sorted_vs[sorted_vs.size() / 2];
  const double peak = sorted_vs.empty() ? 0.0 : sorted_vs.back();
  const double ratio = (median > 0) ? peak / median : 0.0;
  if (ratio < 10.0) {
    verdict.cls = GrowthClass::Bounded;
    verdict.fitted = ratio;
    verdict.r2 = 0.0;
    return verdict;
  }

  // Fallback for series none of the calibrated rules recognize: the
  // regression with the better fit wins.
  if (loglin.ok && (!loglog.ok || loglin.r2 >= loglog.r2)) {
    verdict.cls = GrowthClass::Exponential;
    verdict.fitted = std::exp(loglin.slope);
    verdict.r2 = loglin.r2;
  } else if (loglog.ok) {
    verdict.cls = GrowthClass::Quadratic;
    verdict.fitted = loglog.slope;
    verdict.r2 = loglog.r2;
  } else {
    verdict.cls = GrowthClass::Bounded;
    verdict.fitted = ratio;
  }
  return verdict;
}

GrowthClass theoretical_growth(MapKind kind, bool singular, bool x_coordinate) {
  if (kind == MapKind::Euler) return GrowthClass::Exponential;
  if (singular && x_coordinate) return GrowthClass::Quadratic;
  return GrowthClass::Bounded;
}

GramInfo gram_singularity(const Game& game, int player) {
  Eigen::SelfAdjointEigenSolver<Mat> es(game.gram(player));
  const double gamma = es.eigenvalues().maxCoeff();
  const double min_eig = es.eigenvalues().minCoeff();
  const bool singular = min_eig < 1e-9 * std::max(1.0, gamma);
  return GramInfo{singular, gamma, min_eig};
}

}  // namespace ftrluq
