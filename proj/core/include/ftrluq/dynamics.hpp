#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ftrluq/game.hpp"

namespace ftrluq {

enum class UpdateRule { GDA, AltGDA, MWU, AltMWU, ContinuousFTRL };

const char* update_rule_name(UpdateRule rule);
bool rule_is_alternating(UpdateRule rule);
// Regularizer family the rule requires (GDA family Euclidean, MWU family
// NegativeEntropy). ContinuousFTRL may pair with either; returns Euclidean.
RegKind rule_default_reg(UpdateRule rule);

struct AlgorithmSpec {
  UpdateRule rule = UpdateRule::AltGDA;
  double eta = 0.05;
  RegKind regularizer_kind = RegKind::Euclidean;
};

// Throws if the rule/regularizer pairing is inconsistent or eta <= 0.
void validate_algorithm_spec(const AlgorithmSpec& spec);

// Step-size condition for the simultaneous entropy update's volume-growth
// bound: eta < min{1, 1/||A||_2^2}. Violation is a warning, not an error.
bool simultaneous_step_condition_ok(const Game& game, double eta);

// Shared context of a dual trajectory pair: regularizers plus both players'
// initial dual vectors. The steppers are written in the per-agent
// self-contained form, reconstructing the opponent's dual from its initial
// value and the agent's own cumulative strategy; that form stays exact for
// randomized canonical coordinates where X^0 != 0.
struct DualDynamics {
  Regularizer reg1;
  Regularizer reg2;
  Vec y1_init;
  Vec y2_init;
};

// One round of the chosen primal rule. Simultaneous rules use both players'
// round-(t-1) strategies; alternating rules update x2 first and give x1 the
// fresh x2.
PrimalState step_primal(const AlgorithmSpec& spec, const Game& game,
                        const PrimalState& state);

// Explicit-Euler dual step, both players:
//   y^{t+1} = y^t + eta * A^(ij) grad h*_j(y_j(0) + A^(ji) X^t)
//   X^{t+1} = X^t + eta * grad h*_i(y^t)
std::pair<DualState, DualState> step_dual_euler(const AlgorithmSpec& spec,
                                                const Game& game,
                                                const DualDynamics& regs,
                                                const DualState& state1,
                                                const DualState& state2);

// Symplectic dual step: player 1 is Type I (y first, X from the fresh y),
// player 2 is Type II (X first, y from the fresh X).
std::pair<DualState, DualState> step_dual_symplectic(const AlgorithmSpec& spec,
                                                     const Game& game,
                                                     const DualDynamics& regs,
                                                     const DualState& state1,
                                                     const DualState& state2);

// Algebraic inverse of step_dual_symplectic; composing the two returns the
// input state (the step is injective).
std::pair<DualState, DualState> step_dual_symplectic_inverse(
    const AlgorithmSpec& spec, const Game& game, const DualDynamics& regs,
    const DualState& state1, const DualState& state2);

struct Trajectory {
  AlgorithmSpec algorithm;
  std::vector<PrimalState> primal;
  std::vector<DualState> dual1;
  std::vector<DualState> dual2;
  long horizon = 0;
};

// Thrown when an integration step produces non-finite values.
struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, double time)
      : std::runtime_error(msg), t(time) {}
  double t;
};

// Continuous-time flow of both agents. Euclidean pair: exact affine flow
// via the matrix exponential of the per-agent generator, sampled every dt.
// Any entropy regularizer: classical RK4 with step dt.
Trajectory integrate_continuous(const Game& game, const DualDynamics& regs,
                                const DualState& state1, const DualState& state2,
                                double t_final, double dt);

struct EquivalenceReport {
  double max_deviation = 0.0;
};

// Runs the primal rule and its dual discretization (simultaneous rules pair
// with the Euler scheme, alternating rules with the symplectic scheme) from
// matched initial conditions and reports the max strategy deviation over
// t <= horizon. Strategies are extracted from the dual run via
// x^t = (X^{t+1} - X^t) / eta.
EquivalenceReport check_primal_dual_equivalence(const Game& game,
                                                const AlgorithmSpec& spec,
                                                long horizon);

// Converts primal starts into matched dual initial conditions (X^0 = 0,
// y^0 = grad h(x^0)). For alternating rules y1 additionally absorbs the
// half-round offset -eta * A^(12) x2^0 so the extracted orbit reproduces the
// primal orbit exactly rather than up to a half-step phase.
struct MatchedDualStart {
  DualDynamics ctx;
  DualState s1;
  DualState s2;
};
MatchedDualStart matched_dual_start(const Game& game, const AlgorithmSpec& spec,
                                    const Vec& x1_0, const Vec& x2_0);

}  // namespace ftrluq
