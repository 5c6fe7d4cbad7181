#include "ftrluq/dynamics.hpp"

#include <cmath>

#include "ftrluq/linear_maps.hpp"

namespace ftrluq {

namespace {

// Multiplicative update in log space: softmax(ln x + delta). Equivalent to
// x .* exp(delta) renormalized, but immune to exponent overflow.
Vec mwu_apply(const Vec& x, const Vec& delta) {
  Vec logw = x.array().log() + delta.array();
  const double m = logw.maxCoeff();
  Vec w = (logw.array() - m).exp();
  return w / w.sum();
}

void check_simplex(const Vec& x, const char* what) {
  if (std::abs(x.sum() - 1.0) > 1e-10 || (x.array() <= 0).any()) {
    throw std::runtime_error(std::string(what) + ": iterate left the simplex");
  }
}

}  // namespace

const char* update_rule_name(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::GDA: return "GDA";
    case UpdateRule::AltGDA: return "AltGDA";
    case UpdateRule::MWU: return "MWU";
    case UpdateRule::AltMWU: return "AltMWU";
    case UpdateRule::ContinuousFTRL: return "ContinuousFTRL";
  }
  return "?";
}

bool rule_is_alternating(UpdateRule rule) {
  return rule == UpdateRule::AltGDA || rule == UpdateRule::AltMWU;
}

RegKind rule_default_reg(UpdateRule rule) {
  if (rule == UpdateRule::MWU || rule == UpdateRule::AltMWU) {
    return RegKind::NegativeEntropy;
  }
  return RegKind::Euclidean;
}

void validate_algorithm_spec(const AlgorithmSpec& spec) {
  if (!(spec.eta > 0)) throw std::invalid_argument("AlgorithmSpec: eta must be positive");
  const bool entropy = spec.regularizer_kind == RegKind::NegativeEntropy;
  switch (spec.rule) {
    case UpdateRule::GDA:
    case UpdateRule::AltGDA:
      if (entropy) {
        throw std::invalid_argument("AlgorithmSpec: GDA family requires the Euclidean regularizer");
      }
      break;
    case UpdateRule::MWU:
    case UpdateRule::AltMWU:
      if (!entropy) {
        throw std::invalid_argument("AlgorithmSpec: MWU family requires the negative-entropy regularizer");
      }
      break;
    case UpdateRule::ContinuousFTRL:
      break;
  }
}

bool simultaneous_step_condition_ok(const Game& game, double eta) {
  return eta < std::min(1.0, 1.0 / game.spectral_norm_sq());
}

PrimalState step_primal(const AlgorithmSpec& spec, const Game& game,
                        const PrimalState& state) {
  validate_algorithm_spec(spec);
  if (state.x1.size() != game.n1() || state.x2.size() != game.n2()) {
    throw std::invalid_argument("step_primal: state dimensions do not match the game");
  }
  const double eta = spec.eta;
  const Mat& A12 = game.A12();
  const Mat A21 = game.A21();
  PrimalState next;
  next.t = state.t + 1;
  switch (spec.rule) {
    case UpdateRule::GDA:
      next.x1 = state.x1 + eta * (A12 * state.x2);
      next.x2 = state.x2 + eta * (A21 * state.x1);
      break;
    case UpdateRule::AltGDA:
      next.x2 = state.x2 + eta * (A21 * state.x1);
      next.x1 = state.x1 + eta * (A12 * next.x2);
      break;
    case UpdateRule::MWU:
      next.x1 = mwu_apply(state.x1, eta * (A12 * state.x2));
      next.x2 = mwu_apply(state.x2, eta * (A21 * state.x1));
      check_simplex(next.x1, "step_primal(MWU)");
      check_simplex(next.x2, "step_primal(MWU)");
      break;
    case UpdateRule::AltMWU:
      next.x2 = mwu_apply(state.x2, eta * (A21 * state.x1));
      next.x1 = mwu_apply(state.x1, eta * (A12 * next.x2));
      check_simplex(next.x1, "step_primal(AltMWU)");
      check_simplex(next.x2, "step_primal(AltMWU)");
      break;
    case UpdateRule::ContinuousFTRL:
      throw std::invalid_argument("step_primal: ContinuousFTRL has no discrete primal step");
  }
  return next;
}

std::pair<DualState, DualState> step_dual_euler(const AlgorithmSpec& spec,
                                                const Game& game,
                                                const DualDynamics& regs,
                                                const DualState& state1,
                                                const DualState& state2) {
  const double eta = spec.eta;
  const Mat& A12 = game.A12();
  const Mat A21 = game.A21();

  DualState n1 = state1;
  DualState n2 = state2;
  n1.t = state1.t + 1;
  n2.t = state2.t + 1;

  // Opponent strategies are reconstructed from initial duals plus the
  // agent's own cumulative strategy; both players advance from round-t data.
  const Vec x2_hat = conjugate_gradient(regs.reg2, regs.y2_init + A21 * state1.X);
  const Vec x1_hat = conjugate_gradient(regs.reg1, regs.y1_init + A12 * state2.X);

  n1.y = state1.y + eta * (A12 * x2_hat);
  n1.X = state1.X + eta * conjugate_gradient(regs.reg1, state1.y);
  n2.y = state2.y + eta * (A21 * x1_hat);
  n2.X = state2.X + eta * conjugate_gradient(regs.reg2, state2.y);
  return {n1, n2};
}

std::pair<DualState, DualState> step_dual_symplectic(const AlgorithmSpec& spec,
                                                     const Game& game,
                                                     const DualDynamics& regs,
                                                     const DualState& state1,
                                                     const DualState& state2) {
  const double eta = spec.eta;
  const Mat& A12 = game.A12();
  const Mat A21 = game.A21();

  DualState n1 = state1;
  DualState n2 = state2;
  n1.t = state1.t + 1;
  n2.t = state2.t + 1;

  // Type I for player 1: momentum first, position from the fresh momentum.
  n1.y = state1.y + eta * (A12 * conjugate_gradient(regs.reg2, regs.y2_init + A21 * state1.X));
  n1.X = state1.X + eta * conjugate_gradient(regs.reg1, n1.y);

  // Type II for player 2: position first, momentum from the fresh position.
  n2.X = state2.X + eta * conjugate_gradient(regs.reg2, state2.y);
  n2.y = state2.y + eta * (A21 * conjugate_gradient(regs.reg1, regs.y1_init + A12 * n2.X));
  return {n1, n2};
}

std::pair<DualState, DualState> step_dual_symplectic_inverse(
    const AlgorithmSpec& spec, const Game& game, const DualDynamics& regs,
    const DualState& state1, const DualState& state2) {
  const double eta = spec.eta;
  const Mat& A12 = game.A12();
  const Mat A21 = game.A21();

  DualState p1 = state1;
  DualState p2 = state2;
  p1.t = state1.t - 1;
  p2.t = state2.t - 1;

  p1.X = state1.X - eta * conjugate_gradient(regs.reg1, state1.y);
  p1.y = state1.y - eta * (A12 * conjugate_gradient(regs.reg2, regs.y2_init + A21 * p1.X));

  p2.y = state2.y - eta * (A21 * conjugate_gradient(regs.reg1, regs.y1_init + A12 * state2.X));
  p2.X = state2.X - eta * conjugate_gradient(regs.reg2, p2.y);
  return {p1, p2};
}

namespace {

// Augmented per-agent generator for the Euclidean flow: on z = (y; X; 1),
//   dz/dt = [[0, -G, A^(ij) y_j(0)], [I, 0, 0], [0, 0, 0]] z.
Mat augmented_generator(const Game& game, int player, const Vec& y_other_init) {
  const Mat G = game.gram(player);
  const Mat Aij = game.payoff_view(player);
  const Eigen::Index n = G.rows();
  Mat L = Mat::Zero(2 * n + 1, 2 * n + 1);
  L.block(0, n, n, n) = -G;
  L.block(n, 0, n, n) = Mat::Identity(n, n);
  L.block(0, 2 * n, n, 1) = Aij * y_other_init;
  return L;
}

void record_sample(Trajectory& traj, const DualDynamics& regs, const DualState& s1,
                   const DualState& s2) {
  traj.dual1.push_back(s1);
  traj.dual2.push_back(s2);
  PrimalState p;
  p.x1 = conjugate_gradient(regs.reg1, s1.y);
  p.x2 = conjugate_gradient(regs.reg2, s2.y);
  p.t = s1.t;
  traj.primal.push_back(p);
}

}  // namespace

Trajectory integrate_continuous(const Game& game, const DualDynamics& regs,
                                const DualState& state1, const DualState& state2,
                                double t_final, double dt) {
  if (!(t_final > 0)) throw std::invalid_argument("integrate_continuous: t_final must be positive");
  if (!(dt > 0)) throw std::invalid_argument("integrate_continuous: dt must be positive");

  Trajectory traj;
  traj.algorithm = AlgorithmSpec{UpdateRule::ContinuousFTRL, dt, regs.reg1.kind};
  const long steps = std::lround(t_final / dt);
  traj.horizon = steps;

  DualState s1 = state1;
  DualState s2 = state2;
  record_sample(traj, regs, s1, s2);

  const bool all_euclidean = regs.reg1.kind == RegKind::Euclidean &&
                             regs.reg2.kind == RegKind::Euclidean;
  if (all_euclidean) {
    // Exact affine flow: one matrix exponential per agent, iterated.
    const Mat E1 = matrix_exponential(augmented_generator(game, 1, regs.y2_init), dt);
    const Mat E2 = matrix_exponential(augmented_generator(game, 2, regs.y1_init), dt);
    const Eigen::Index msize1 = game.n1();
    const Eigen::Index msize2 = game.n2();
    Vec z1(2 * msize1 + 1), z2(2 * msize2 + 1);
    z1 << s1.y, s1.X, 1.0;
    z2 << s2.y, s2.X, 1.0;
    for (long k = 1; k <= steps; ++k) {
      z1 = E1 * z1;
      z2 = E2 * z2;
      s1.y = z1.head(msize1);
      s1.X = z1.segment(msize1, msize1);
      s2.y = z2.head(msize2);
      s2.X = z2.segment(msize2, msize2);
      s1.t = s2.t = k * dt;
      record_sample(traj, regs, s1, s2);
    }
    return traj;
  }

  // Nonlinear case: classical RK4 on the joint Hamiltonian field.
  const Mat& A12 = game.A12();
  const Mat A21 = game.A21();
  const auto field = [&](const DualState& a, const DualState& b, Vec& dy1, Vec& dX1,
                         Vec& dy2, Vec& dX2) {
    dy1 = A12 * conjugate_gradient(regs.reg2, regs.y2_init + A21 * a.X);
    dX1 = conjugate_gradient(regs.reg1, a.y);
    dy2 = A21 * conjugate_gradient(regs.reg1, regs.y1_init + A12 * b.X);
    dX2 = conjugate_gradient(regs.reg2, b.y);
  };

  Vec k1y1, k1X1, k1y2, k1X2, k2y1, k2X1, k2y2, k2X2;
  Vec k3y1, k3X1, k3y2, k3X2, k4y1, k4X1, k4y2, k4X2;
  DualState a = s1, b = s2;
  for (long k = 1; k <= steps; ++k) {
    field(s1, s2, k1y1, k1X1, k1y2, k1X2);
    a.y = s1.y + 0.5 * dt * k1y1;
    a.X = s1.X + 0.5 * dt * k1X1;
    b.y = s2.y + 0.5 * dt * k1y2;
    b.X = s2.X + 0.5 * dt * k1X2;
    field(a, b, k2y1, k2X1, k2y2, k2X2);
    a.y = s1.y + 0.5 * dt * k2y1;
    a.X = s1.X + 0.5 * dt * k2X1;
    b.y = s2.y + 0.5 * dt * k2y2;
    b.X = s2.X + 0.5 * dt * k2X2;
    field(a, b, k3y1, k3X1, k3y2, k3X2);
    a.y = s1.y + dt * k3y1;
    a.X = s1.X + dt * k3X1;
    b.y = s2.y + dt * k3y2;
    b.X = s2.X + dt * k3X2;
    field(a, b, k4y1, k4X1, k4y2, k4X2);

    s1.y += (dt / 6.0) * (k1y1 + 2 * k2y1 + 2 * k3y1 + k4y1);
    s1.X += (dt / 6.0) * (k1X1 + 2 * k2X1 + 2 * k3X1 + k4X1);
    s2.y += (dt / 6.0) * (k1y2 + 2 * k2y2 + 2 * k3y2 + k4y2);
    s2.X += (dt / 6.0) * (k1X2 + 2 * k2X2 + 2 * k3X2 + k4X2);
    s1.t = s2.t = k * dt;
    if (!s1.y.allFinite() || !s1.X.allFinite() || !s2.y.allFinite() || !s2.X.allFinite()) {
      throw IntegrationError("integrate_continuous: RK4 produced non-finite values", s1.t);
    }
    record_sample(traj, regs, s1, s2);
  }
  return traj;
}

MatchedDualStart matched_dual_start(const Game& game, const AlgorithmSpec& spec,
                                    const Vec& x1_0, const Vec& x2_0) {
  if (x1_0.size() != game.n1() || x2_0.size() != game.n2()) {
    throw std::invalid_argument("matched_dual_start: start dimensions do not match the game");
  }
  const bool entropy = spec.regularizer_kind == RegKind::NegativeEntropy;
  MatchedDualStart out;
  out.ctx.reg1 = Regularizer{spec.regularizer_kind, game.n1()};
  out.ctx.reg2 = Regularizer{spec.regularizer_kind, game.n2()};

  // y^0 = grad h(x^0): identity for Euclidean, ln x for entropy (the
  // softmax is shift-invariant, so the +1 of the entropy gradient drops).
  Vec y1 = entropy ? Vec(x1_0.array().log()) : x1_0;
  Vec y2 = entropy ? Vec(x2_0.array().log()) : x2_0;
  if (rule_is_alternating(spec.rule)) {
    // Phase alignment: the symplectic scheme's first extracted strategy is
    // player 1's response to x2^0; pre-subtracting that response makes the
    // extracted orbit start at x1^0 itself.
    y1 -= spec.eta * (game.A12() * x2_0);
  }
  out.ctx.y1_init = y1;
  out.ctx.y2_init = y2;
  out.s1 = DualState{1, y1, Vec::Zero(game.n1()), 0.0};
  out.s2 = DualState{2, y2, Vec::Zero(game.n2()), 0.0};
  return out;
}

EquivalenceReport check_primal_dual_equivalence(const Game& game,
                                                const AlgorithmSpec& spec,
                                                long horizon) {
  if (horizon < 0) throw std::invalid_argument("check_primal_dual_equivalence: horizon must be >= 0");
  if (spec.rule == UpdateRule::ContinuousFTRL) {
    throw std::invalid_argument("check_primal_dual_equivalence: needs a discrete rule");
  }
  validate_algorithm_spec(spec);

  // Skewed start: the uniform point is an equilibrium of several named
  // games, which would make the comparison vacuously static.
  PrimalState prim;
  prim.x1 = Vec::LinSpaced(game.n1(), 1.0, double(game.n1()));
  prim.x1 /= prim.x1.sum();
  prim.x2 = Vec::LinSpaced(game.n2(), 2.0, double(game.n2()) + 1.0);
  prim.x2 /= prim.x2.sum();
  prim.t = 0.0;

  MatchedDualStart start = matched_dual_start(game, spec, prim.x1, prim.x2);
  DualState d1 = start.s1;
  DualState d2 = start.s2;
  const bool alternating = rule_is_alternating(spec.rule);

  double max_dev = 0.0;
  for (long t = 0; t <= horizon; ++t) {
    const auto next = alternating
                          ? step_dual_symplectic(spec, game, start.ctx, d1, d2)
                          : step_dual_euler(spec, game, start.ctx, d1, d2);
    const Vec x1_dual = (next.first.X - d1.X) / spec.eta;
    const Vec x2_dual = (next.second.X - d2.X) / spec.eta;
    const double dev = std::max((x1_dual - prim.x1).lpNorm<Eigen::Infinity>(),
                                (x2_dual - prim.x2).lpNorm<Eigen::Infinity>());
    max_dev = std::max(max_dev, dev);
    d1 = next.first;
    d2 = next.second;
    if (t < horizon) prim = step_primal(spec, game, prim);
  }
  return EquivalenceReport{max_dev};
}

}  // namespace ftrluq
