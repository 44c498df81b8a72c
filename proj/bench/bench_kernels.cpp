// Serial reference kernels against the OpenMP ones. The range argument of the
// parallel variants is the thread count.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "isearch/baselines.hpp"
#include "isearch/cluster.hpp"
#include "isearch/isearch.hpp"
#include "isearch/solver.hpp"
#include "isearch/synthgen.hpp"

using namespace isearch;

namespace {

// 200 inliers in a 5-dim subspace of R^40 with 50 outliers, reduced.
const PreprocessedData& small_data() {
  static const PreprocessedData pre = [] {
    ModelSpec s;
    RandomSource rng(1);
    return preprocess(gen_dataset(s, rng).data);
  }();
  return pre;
}

// Larger reduced problem: r_d = 60, 1200 columns.
const PreprocessedData& wide_data() {
  static const PreprocessedData pre = [] {
    ModelSpec s;
    s.M1 = 60;
    s.n_i = 600;
    s.n_o = 600;
    s.inliers = UniformOnSubspace{6};
    RandomSource rng(2);
    return preprocess(gen_dataset(s, rng).data);
  }();
  return pre;
}

SolverOptions capped() {
  SolverOptions o;
  o.max_iters = 200;
  o.crossover = false;
  return o;
}

DirectionSet solve_tolerant(const DataMatrix& d, const SolverOptions& o, bool ref) {
  try {
    return ref ? reference::solve_all(d, o) : solve_all(d, o);
  } catch (const UnconvergedColumns& e) {
    return e.partial();
  }
}

void BM_SolveAllReference(benchmark::State& st) {
  const auto& pre = st.range(0) == 0 ? small_data() : wide_data();
  for (auto _ : st) benchmark::DoNotOptimize(solve_tolerant(pre.reduced, capped(), true));
}

void BM_SolveAllParallel(benchmark::State& st) {
  const auto& pre = st.range(0) == 0 ? small_data() : wide_data();
  omp_set_num_threads(static_cast<int>(st.range(1)));
  for (auto _ : st) benchmark::DoNotOptimize(solve_tolerant(pre.reduced, capped(), false));
}

void BM_AffinityReference(benchmark::State& st) {
  const auto& pre = wide_data();
  static const DirectionSet dirs = solve_tolerant(pre.reduced, capped(), false);
  for (auto _ : st) benchmark::DoNotOptimize(reference::affinity_from_directions(pre, dirs));
}

void BM_AffinityParallel(benchmark::State& st) {
  const auto& pre = wide_data();
  static const DirectionSet dirs = solve_tolerant(pre.reduced, capped(), false);
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(affinity_from_directions(pre, dirs));
}

void BM_CoherenceReference(benchmark::State& st) {
  const auto& pre = wide_data();
  for (auto _ : st) benchmark::DoNotOptimize(reference::coherence_values(pre.reduced));
}

void BM_CoherenceParallel(benchmark::State& st) {
  const auto& pre = wide_data();
  omp_set_num_threads(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(coherence_values(pre.reduced));
}

}  // namespace

BENCHMARK(BM_SolveAllReference)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveAllParallel)
    ->ArgsProduct({{0, 1}, {1, 2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_AffinityReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffinityParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CoherenceReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoherenceParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
