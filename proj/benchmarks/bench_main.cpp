#include <benchmark/benchmark.h>

#include "mmchss/td_sim.hpp"

using namespace mmchss;

static void BM_SteadyState(benchmark::State& state) {
  const mmc::CircuitParams p;
  const int h = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mmc::steady_state(p, h));
}
BENCHMARK(BM_SteadyState)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

static void BM_ImpedancePoint(benchmark::State& state) {
  const mmc::CircuitParams p;
  const int h = static_cast<int>(state.range(0));
  const auto op = mmc::steady_state(p, h);
  mmc::ControlConfig c;
  c.mode = mmc::ControlMode::AcVoltagePlusCirc;
  for (auto _ : state) benchmark::DoNotOptimize(impedance::impedance_at(p, c, op, 35.0, h));
}
BENCHMARK(BM_ImpedancePoint)->Arg(4)->Arg(8);

static void BM_Sweep(benchmark::State& state) {
  const mmc::CircuitParams p;
  mmc::ControlConfig c;
  c.mode = static_cast<mmc::ControlMode>(state.range(0));
  impedance::SweepOptions opt;
  opt.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(impedance::sweep(p, c, {}, 4, opt));
  state.SetItemsProcessed(state.iterations() * 496);
}
BENCHMARK(BM_Sweep)
    ->Arg(static_cast<int>(mmc::ControlMode::OpenLoop))
    ->Arg(static_cast<int>(mmc::ControlMode::AcVoltageLoop))
    ->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  const mmc::CircuitParams p;
  mmc::ControlConfig c;
  c.mode = static_cast<mmc::ControlMode>(state.range(0));
  sim::SimConfig s;
  s.settle_cycles = 10;
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate(p, c, s, std::nullopt));
  // integrated fundamental periods per second
  state.counters["cycles/s"] =
      benchmark::Counter(static_cast<double>(state.iterations()) * 11, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)
    ->Arg(static_cast<int>(mmc::ControlMode::OpenLoop))
    ->Arg(static_cast<int>(mmc::ControlMode::AcVoltagePlusCirc))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
