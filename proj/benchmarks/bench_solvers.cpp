#include <benchmark/benchmark.h>

#include "dcopt/model.hpp"
#include "dcopt/qubo.hpp"
#include "dcopt/solvers.hpp"
#include "dcopt/topology.hpp"

using namespace dcopt;

namespace {

Proxytree tree_of(int depth) {
  TreeParams p;
  p.depth = depth;
  return build_proxytree(p);
}

void BM_BuildFullCqm(benchmark::State& state) {
  const Proxytree t = tree_of(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_full_cqm(t));
}
BENCHMARK(BM_BuildFullCqm)->Arg(2)->Arg(3)->Arg(4);

void BM_CqmToQubo(benchmark::State& state) {
  const CqmModel m = build_full_cqm(tree_of(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(cqm_to_qubo(m));
}
BENCHMARK(BM_CqmToQubo)->Arg(2)->Arg(3);

void BM_Exact(benchmark::State& state) {
  const Proxytree t = tree_of(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_exact(t, SolveBudget::exhaustive()).energy);
}
BENCHMARK(BM_Exact)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SplitExact(benchmark::State& state) {
  const Proxytree t = tree_of(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_split(t, SolverKind::kExact, SolveBudget::exhaustive()).energy);
  }
}
BENCHMARK(BM_SplitExact)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_AnnealDepthTwo(benchmark::State& state) {
  const QuboModel q = cqm_to_qubo(build_full_cqm(tree_of(2)));
  SaParams p;
  p.restarts = 1;
  p.sweeps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_sa(q, p).energy);
    ++p.seed;
  }
}
BENCHMARK(BM_AnnealDepthTwo)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DecomposedDepthTwo(benchmark::State& state) {
  const QuboModel q = cqm_to_qubo(build_full_cqm(tree_of(2)));
  DecompParams p;
  p.subproblem_size = static_cast<int>(state.range(0));
  p.rounds = 10;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_decomposed(q, p).energy);
    ++p.seed;
  }
}
BENCHMARK(BM_DecomposedDepthTwo)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
