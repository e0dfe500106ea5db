#include <benchmark/benchmark.h>

#include "kldobs/bench/preset.hpp"
#include "kldobs/monitor.hpp"
#include "kldobs/synthesis.hpp"

namespace {

using namespace kldobs;

void BM_Simulate(benchmark::State& state) {
  const LtiSystem sys = bench::preset_thermal();
  const ObserverGain kal = kalman_gain(sys);
  const AttackSchedule sched = AttackSchedule::step(AttackMatrix({1, 3, 5}, 5), Vector::Ones(3), 100);
  const int horizon = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RandomStream stream(seed++);
    benchmark::DoNotOptimize(simulate(sys, kal, sched, horizon, stream));
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_Simulate)->Arg(300)->Arg(3000);

void BM_MonteCarlo(benchmark::State& state) {
  const LtiSystem sys = bench::preset_thermal();
  const Detector det = make_detector(sys, kalman_gain(sys), 0.005);
  const AttackSchedule sched = AttackSchedule::ramp(AttackMatrix({1, 2, 3, 5}, 5), Vector::Ones(4), 200, 0.01);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_detection(sys, det, sched, 800, 200, 0, workers));
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
