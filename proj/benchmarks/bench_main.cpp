#include <benchmark/benchmark.h>

#include <random>

#include <relaxoc/catalog.hpp>
#include <relaxoc/chatter.hpp>
#include <relaxoc/integrate.hpp>
#include <relaxoc/lp.hpp>
#include <relaxoc/mp.hpp>
#include <relaxoc/scenarios.hpp>

using namespace relaxoc;

static void BM_Rk4Relaxed(benchmark::State& state) {
  const auto prob = catalog_problem("example4");
  const auto grid = TimeGrid::uniform(0, 1, static_cast<int>(state.range(0)));
  const auto triple = example4_triple(prob, grid);
  const Vec xi = Vec::Zero(3);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_relaxed(prob, triple.rc, xi, grid));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rk4Relaxed)->Arg(1001)->Arg(10001);

static void BM_Adjoint(benchmark::State& state) {
  const auto prob = catalog_problem("example4");
  const auto grid = TimeGrid::uniform(0, 1, static_cast<int>(state.range(0)));
  const auto triple = example4_triple(prob, grid);
  RowVec p1(3);
  p1 << 1.0, -0.5, 0.25;
  for (auto _ : state) benchmark::DoNotOptimize(integrate_adjoint(prob, triple.rc, triple.x, p1));
}
BENCHMARK(BM_Adjoint)->Arg(1001)->Arg(10001);

static void BM_SimplexRandom(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  LinearProgram lp;
  lp.c = Vec::NullaryExpr(n, [&] { return d(rng); });
  lp.A_le = Mat::NullaryExpr(2 * n, n, [&] { return d(rng); });
  lp.b_le = Vec::Ones(2 * n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(lp));
}
BENCHMARK(BM_SimplexRandom)->Arg(10)->Arg(40)->Arg(100);

static void BM_BuildChattering(benchmark::State& state) {
  const auto prob = catalog_problem("example4");
  const auto grid = TimeGrid::uniform(0, 1, 2001);
  const auto triple = example4_triple(prob, grid);
  for (auto _ : state) benchmark::DoNotOptimize(build_chattering(triple.rc, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_BuildChattering)->Arg(64)->Arg(1024);

static void BM_MaximizeHamiltonianInterval(benchmark::State& state) {
  const auto prob = catalog_problem("example1");
  RowVec p(2);
  p << 0.3, -1.0;
  Vec x(2);
  x << 0.1, 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(maximize_hamiltonian(prob, p, 0.5, x));
}
BENCHMARK(BM_MaximizeHamiltonianInterval);

static void BM_Example4Regularity(benchmark::State& state) {
  const auto prob = catalog_problem("example4");
  const auto grid = TimeGrid::uniform(0, 1, 401);
  const auto triple = example4_triple(prob, grid);
  for (auto _ : state) benchmark::DoNotOptimize(regularity_check(prob, triple));
}
BENCHMARK(BM_Example4Regularity)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
