#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sib/avoidance.h"
#include "sib/error.h"

using namespace sib::avoid;

namespace {

std::vector<Trajectory> random_plan(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::vector<Trajectory> plan;
  for (int i = 0; i < n; ++i) plan.push_back({i, {u(rng), u(rng), 1.0}, {u(rng), u(rng), 1.0}, 1.0, 0.0});
  return plan;
}

}  // namespace

static void BM_Cpa(benchmark::State& state) {
  const Trajectory a{0, {0, 0, 1}, {10, 0, 1}, 1.0, 0.0};
  const Trajectory b{1, {5, -5, 1}, {5, 5, 1}, 0.8, 1.5};
  for (auto _ : state) benchmark::DoNotOptimize(cpa(a, b));
}
BENCHMARK(BM_Cpa);

static void BM_Detect(benchmark::State& state) {
  const auto plan = random_plan(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(detect(plan, kDefaultSafeDistance));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Detect)->RangeMultiplier(2)->Range(8, 256)->Complexity(benchmark::oNSquared);

// Dense random plans often end Unresolvable; the throw path is timed too.
static void BM_Resolve(benchmark::State& state) {
  const auto plan = random_plan(static_cast<int>(state.range(0)), 11);
  bool resolved = true;
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(resolve(plan, kDefaultSafeDistance));
    } catch (const sib::Error&) {
      resolved = false;
    }
  }
  state.counters["resolved"] = resolved ? 1.0 : 0.0;
}
BENCHMARK(BM_Resolve)->Arg(8)->Arg(32)->Arg(64);
