// Micro-benchmarks for the hot paths: ordered-median evaluation, interval
// bounds, open-set evaluation, and the small-instance exact solver.

#include <benchmark/benchmark.h>

#include "ompn/alloc.hpp"
#include "ompn/exact.hpp"
#include "ompn/heuristics.hpp"
#include "ompn/instance.hpp"
#include "ompn/om.hpp"
#include "ompn/rng.hpp"

namespace {

using namespace ompn;

std::vector<double> random_costs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> costs(n);
  for (double& c : costs) c = rng.uniform(0.0, 100.0);
  return costs;
}

void BM_EvaluateOm(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const LambdaVector lambda = LambdaVector::make(LambdaPreset::centdian, n);
  const std::vector<double> costs = random_costs(n, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_om(lambda, costs));
  }
}
BENCHMARK(BM_EvaluateOm)->Arg(49)->Arg(500);

void BM_ComputeBounds(benchmark::State& state) {
  const Instance instance =
      builtin_us49(1, 2, LambdaVector::make(LambdaPreset::center, 49));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_bounds(instance));
  }
}
BENCHMARK(BM_ComputeBounds);

void BM_EvaluateOpenSet(benchmark::State& state) {
  const Instance instance =
      builtin_us49(1, 2, LambdaVector::make(LambdaPreset::center, 49));
  const BoundsMatrix bounds = compute_bounds(instance);
  const FixingTable fixing = fix_assignments({46, 48}, instance, bounds);
  AllocParams params;
  params.starts = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        evaluate_open_set({46, 48}, instance, params, &fixing));
  }
}
BENCHMARK(BM_EvaluateOpenSet)->Arg(1)->Arg(20);

void BM_SolveExactSmall(benchmark::State& state) {
  const Instance instance = make_random_instance(
      static_cast<int>(state.range(0)), 2, 1, 2,
      LambdaVector::make(LambdaPreset::median, static_cast<std::size_t>(state.range(0))),
      11);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_exact(instance));
  }
}
BENCHMARK(BM_SolveExactSmall)->Arg(6)->Arg(8);

void BM_TwoPhaseUs49(benchmark::State& state) {
  const Instance instance =
      builtin_us49(1, 5, LambdaVector::make(LambdaPreset::center, 49));
  for (auto _ : state) {
    benchmark::DoNotOptimize(two_phase_search(instance));
  }
}
BENCHMARK(BM_TwoPhaseUs49)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
