#include <benchmark/benchmark.h>

#include <string>
#include <utility>

#include "ftrluq/dynamics.hpp"
#include "ftrluq/game.hpp"
#include "ftrluq/io_util.hpp"
#include "ftrluq/linear_maps.hpp"
#include "ftrluq/rng.hpp"
#include "ftrluq/uncertainty.hpp"

using namespace ftrluq;

namespace {

Game bench_game(int n, std::uint64_t seed) {
  Xoshiro256pp rng(seed);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
  return Game(A);
}

void bm_symplectic_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Game game = bench_game(n, 7);
  AlgorithmSpec spec{UpdateRule::AltGDA, 0.05, RegKind::Euclidean};
  DualDynamics dyn{Regularizer{RegKind::Euclidean, n}, Regularizer{RegKind::Euclidean, n},
                   Vec::Zero(n), Vec::Zero(n)};
  DualState s1{1, Vec::Zero(n), Vec::Zero(n), 0.0};
  DualState s2{2, Vec::Zero(n), Vec::Zero(n), 0.0};
  s1.y(0) = 0.1;
  for (auto _ : state) {
    auto [a, b] = step_dual_symplectic(spec, game, dyn, s1, s2);
    s1 = std::move(a);
    s2 = std::move(b);
    benchmark::DoNotOptimize(s1.X.data());
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_mwu_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Game game = bench_game(n, 11);
  AlgorithmSpec spec{UpdateRule::AltMWU, 0.05, RegKind::NegativeEntropy};
  DualDynamics dyn{Regularizer{RegKind::NegativeEntropy, n},
                   Regularizer{RegKind::NegativeEntropy, n}, Vec::Zero(n), Vec::Zero(n)};
  DualState s1{1, Vec::Zero(n), Vec::Zero(n), 0.0};
  DualState s2{2, Vec::Zero(n), Vec::Zero(n), 0.0};
  for (auto _ : state) {
    auto [a, b] = step_dual_symplectic(spec, game, dyn, s1, s2);
    s1 = std::move(a);
    s2 = std::move(b);
    benchmark::DoNotOptimize(s1.X.data());
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_propagate_covariance(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Game game = bench_game(n, 13);
  const DiscreteLinearMap map = build_symplectic_map(game, 1, 0.05);
  Mat P = Mat::Identity(2 * n, 2 * n);
  for (auto _ : state) {
    P = propagate_covariance(P, map.M);
    benchmark::DoNotOptimize(P.data());
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_matrix_exponential(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Game game = bench_game(n, 17);
  const LinearGenerator gen = build_generator(game, 1);
  for (auto _ : state) {
    const Mat E = matrix_exponential(gen.L, 0.5);
    benchmark::DoNotOptimize(E.sum());
  }
}

void bm_softmax(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Xoshiro256pp rng(19);
  Vec y(n);
  for (int i = 0; i < n; ++i) y(i) = rng.uniform(-3.0, 3.0);
  const Regularizer reg{RegKind::NegativeEntropy, n};
  for (auto _ : state) {
    const Vec x = conjugate_gradient(reg, y);
    benchmark::DoNotOptimize(x.sum());
  }
  state.SetItemsProcessed(state.iterations());
}

void bm_symplectic_eigenvalues(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Xoshiro256pp rng(23);
  Mat B(2 * n, 2 * n);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = 0; j < 2 * n; ++j) B(i, j) = rng.normal();
  const Mat P = B * B.transpose() + Mat::Identity(2 * n, 2 * n);
  for (auto _ : state) {
    const Vec d = symplectic_eigenvalues(P);
    benchmark::DoNotOptimize(d.sum());
  }
}

void bm_sha256(benchmark::State& state) {
  const std::string payload(static_cast<std::size_t>(state.range(0)), 'x');
  for (auto _ : state) {
    const std::string h = sha256_hex(payload);
    benchmark::DoNotOptimize(h.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}

void bm_ensemble_step(benchmark::State& state) {
  const Game game = named_game("RPS");
  AlgorithmSpec spec{UpdateRule::AltMWU, 0.05, RegKind::NegativeEntropy};
  InitDistribution init;
  init.kind = InitDistribution::Kind::GaussianDual;
  init.gauss.player = 1;
  init.gauss.mean = Vec::Zero(6);
  init.gauss.cov = 0.04 * Mat::Identity(6, 6);
  Ensemble ens = sample_ensemble(game, spec, init, static_cast<int>(state.range(0)), 29);
  for (auto _ : state) {
    evolve_ensemble_series(ens, 1, 1);
    benchmark::DoNotOptimize(ens.members.front().s1.X.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(bm_symplectic_step)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK(bm_mwu_step)->Arg(3)->Arg(8)->Arg(32);
BENCHMARK(bm_propagate_covariance)->Arg(2)->Arg(8)->Arg(32);
BENCHMARK(bm_matrix_exponential)->Arg(2)->Arg(8)->Arg(16);
BENCHMARK(bm_softmax)->Arg(3)->Arg(16)->Arg(64);
BENCHMARK(bm_symplectic_eigenvalues)->Arg(2)->Arg(8)->Arg(16);
BENCHMARK(bm_sha256)->Arg(1024)->Arg(65536);
BENCHMARK(bm_ensemble_step)->Arg(100)->Arg(400);

}  // namespace

BENCHMARK_MAIN();
