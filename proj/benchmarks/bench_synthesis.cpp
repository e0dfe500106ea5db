#include <benchmark/benchmark.h>

#include "kldobs/bench/preset.hpp"
#include "kldobs/sdp.hpp"
#include "kldobs/synthesis.hpp"

namespace {

using namespace kldobs;

struct Instance {
  LtiSystem sys = bench::preset_thermal();
  ObserverGain kal = kalman_gain(sys);
  ImpactWeight w = impact_weight_estimation_error(sys, kal);
  AttackMatrix att{{1, 3, 5}, 5};
};

const Instance& thermal() {
  static const Instance t;
  return t;
}

void BM_KalmanGain(benchmark::State& state) {
  const Instance& t = thermal();
  for (auto _ : state) benchmark::DoNotOptimize(kalman_gain(t.sys));
}
BENCHMARK(BM_KalmanGain);

// One stability relaxation solve: the building block of every design.
void BM_SdpStabilityRelaxation(benchmark::State& state) {
  const Instance& t = thermal();
  for (auto _ : state) {
    sdp::Problem p;
    const sdp::MatExpr pm = p.add_symmetric("P", 6);
    const sdp::MatExpr z = p.add_symmetric("Z", 5);
    const sdp::MatExpr g = p.add_matrix("G", 6, 5);
    add_stability_relaxation(p, t.sys, pm, z, g, 1e-8);
    p.add_lmi(sdp::MatExpr(Matrix(1e3 * Matrix::Identity(6, 6))) - pm, "bound");
    sdp::LinExpr tr;
    for (int i = 0; i < 5; ++i) tr += z(i, i);
    p.maximize(tr);
    benchmark::DoNotOptimize(p.solve());
  }
}
BENCHMARK(BM_SdpStabilityRelaxation)->Unit(benchmark::kMillisecond);

void BM_CertifyFixedGain(benchmark::State& state) {
  const Instance& t = thermal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify_fixed_gain(t.sys, t.att, t.w, t.kal.l, Instant::steady()));
  }
}
BENCHMARK(BM_CertifyFixedGain)->Unit(benchmark::kMillisecond);

void BM_SteadyLmiDesign(benchmark::State& state) {
  const Instance& t = thermal();
  for (auto _ : state) benchmark::DoNotOptimize(design_steady_lmi(t.sys, t.att, t.w));
}
BENCHMARK(BM_SteadyLmiDesign)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
