#include <benchmark/benchmark.h>

#include "sib/simulator.h"

using namespace sib::sim;

static void BM_TickHover(benchmark::State& state) {
  Simulator sim({}, static_cast<int>(state.range(0)));
  sim.send(cmd::TakeoffAll{1.0});
  for (int i = 0; i < 40; ++i) sim.tick();
  for (auto _ : state) benchmark::DoNotOptimize(sim.tick());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TickHover)->Arg(1)->Arg(10)->Arg(50)->Arg(256);

static void BM_TickWithLedEffect(benchmark::State& state) {
  Simulator sim({}, static_cast<int>(state.range(0)));
  sim.send(cmd::TakeoffAll{1.0});
  sim.send(cmd::SetLed{{Effect::Rainbow}});
  for (auto _ : state) benchmark::DoNotOptimize(sim.tick());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TickWithLedEffect)->Arg(10)->Arg(50);

static void BM_Snapshot(benchmark::State& state) {
  Simulator sim({}, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sim.snapshot());
}
BENCHMARK(BM_Snapshot)->Arg(10)->Arg(256);
