#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "sib/geometry.h"

using namespace sib::geom;

static void BM_GenerateSphere(benchmark::State& state) {
  const FormationSpec spec{FormationKind::Sphere, static_cast<int>(state.range(0)), 3.0, 0.0, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(generate(spec));
}
BENCHMARK(BM_GenerateSphere)->Arg(10)->Arg(100)->Arg(256);

static void BM_RotateScaleTranslate(benchmark::State& state) {
  const auto f = generate({FormationKind::Cube, static_cast<int>(state.range(0)), 2.0, 0.0, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(translate(scale(rotate(f, 0.7), 1.3), {1.0, -2.0, 0.5}));
}
BENCHMARK(BM_RotateScaleTranslate)->Arg(27)->Arg(216);

// Hungarian assignment is O(n^3); this tracks how far that reaches in practice.
static void BM_Assign(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::vector<Vec3> current(n);
  for (auto& p : current) p = {u(rng), u(rng), u(rng) * 0.2 + 2.0};
  const auto target = generate({FormationKind::Circle, n, 5.0, 0.0, 2.0});
  for (auto _ : state) benchmark::DoNotOptimize(assign(current, target));
  state.SetComplexityN(n);
}
BENCHMARK(BM_Assign)->RangeMultiplier(2)->Range(4, 256)->Complexity(benchmark::oNCubed);
