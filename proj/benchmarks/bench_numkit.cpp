#include <benchmark/benchmark.h>

#include "kldobs/adversary.hpp"
#include "kldobs/bench/preset.hpp"
#include "kldobs/numkit.hpp"
#include "kldobs/synthesis.hpp"

namespace {

using kldobs::Matrix;

void BM_DiscreteLyapunov(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  Matrix f = Matrix::Random(n, n);
  f *= 0.95 / kldobs::numkit::spectral_radius(f);
  const Matrix g = Matrix::Random(n, n);
  const Matrix q = g * g.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(kldobs::numkit::solve_discrete_lyapunov(f, q));
}
BENCHMARK(BM_DiscreteLyapunov)->Arg(6)->Arg(20)->Arg(60);

void BM_GeneralizedEigenpair(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Matrix a = Matrix::Random(n, n), b = Matrix::Random(n, n);
  const Matrix psi = a * a.transpose(), gamma = b * b.transpose() + Matrix::Identity(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(kldobs::numkit::smallest_generalized_eigenpair(psi, gamma));
}
BENCHMARK(BM_GeneralizedEigenpair)->Arg(3)->Arg(5)->Arg(20);

void BM_DetectabilityThermal(benchmark::State& state) {
  const kldobs::LtiSystem sys = kldobs::bench::preset_thermal();
  const kldobs::ObserverGain kal = kldobs::kalman_gain(sys);
  const kldobs::ImpactWeight w = kldobs::impact_weight_estimation_error(sys, kal);
  const kldobs::AttackMatrix att({1, 3, 5}, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kldobs::detectability(sys, kal, att, w, kldobs::Instant::steady()));
  }
}
BENCHMARK(BM_DetectabilityThermal);

}  // namespace
