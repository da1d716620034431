#include <benchmark/benchmark.h>

#include <cmath>

#include "dkp/carleson.hpp"
#include "dkp/changevar.hpp"
#include "dkp/fixtures.hpp"
#include "dkp/mollify.hpp"
#include "dkp/pdelab.hpp"
#include "dkp/pipeline.hpp"

namespace {

using namespace dkp;

GridPtr bench_grid(int x_count) {
  const int m = 4;
  const int octaves = static_cast<int>(std::lround(std::log2(2.0 * x_count / 4.0)));
  return make_grid(2, x_count, 2.0, m, octaves * m);
}

void BM_TGradient(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field A = operator_fixture("dkp-generic").sample_A(g);
  for (auto _ : state) {
    Field tg = t_gradient(A);
    benchmark::DoNotOptimize(tg.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g->node_count()));
}
BENCHMARK(BM_TGradient)->Arg(32)->Arg(64)->Arg(128);

void BM_FsupField(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field f = field_fixture("t-cos", g);
  for (auto _ : state) {
    Field s = fsup_field(f);
    benchmark::DoNotOptimize(s.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g->node_count()));
}
BENCHMARK(BM_FsupField)->Arg(32)->Arg(64)->Arg(128);

void BM_CarlesonDyadic(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field f = field_fixture("t-cos", g);
  for (auto _ : state) {
    const CarlesonReport r = carleson_constant(f, BoxFamily::Dyadic);
    benchmark::DoNotOptimize(r.constant);
  }
}
BENCHMARK(BM_CarlesonDyadic)->Arg(32)->Arg(64)->Arg(128);

void BM_CarlesonDense(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field f = field_fixture("t-cos", g);
  for (auto _ : state) {
    const CarlesonReport r = carleson_constant(f, BoxFamily::Dense);
    benchmark::DoNotOptimize(r.constant);
  }
}
BENCHMARK(BM_CarlesonDense)->Arg(32)->Arg(64);

void BM_Mollify(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field A = operator_fixture("dkp-generic").sample_A(g);
  const BumpKernel k = make_bump();
  for (auto _ : state) {
    Field b = mollify(A, k);
    benchmark::DoNotOptimize(b.raw().data());
  }
}
BENCHMARK(BM_Mollify)->Arg(32)->Arg(64)->Arg(128);

void BM_Conjugate(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field A = operator_fixture("diag-b").sample_A(g);
  Field h = pow_field(block_decompose(A).b, 1.0 / 128, "h");
  Field v = Field::vector(g, 1, "v");
  const ChangeOfVariable rho = ChangeOfVariable::build(std::move(v), std::move(h));
  for (auto _ : state) {
    Field out = conjugate(A, rho);
    benchmark::DoNotOptimize(out.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g->node_count()));
}
BENCHMARK(BM_Conjugate)->Arg(32)->Arg(64)->Arg(128);

void BM_Pipeline(benchmark::State& state) {
  GridPtr g = bench_grid(static_cast<int>(state.range(0)));
  const Field A = operator_fixture("diag-b").sample_A(g);
  PipelineOptions opts;
  opts.with_carleson_diagnostics = state.range(1) != 0;
  for (auto _ : state) {
    const PipelineReport rep = run_pipeline(A, std::nullopt, opts);
    benchmark::DoNotOptimize(rep.N);
  }
}
BENCHMARK(BM_Pipeline)->Args({64, 0})->Args({64, 1})->Args({128, 1});

void BM_SolveDirichlet(benchmark::State& state) {
  const SolverGrid grid(1.0, 1.0 / state.range(0));
  const MatrixEval ident = [](double, double) { return MatN::identity(2); };
  const BoundaryData g =
      BoundaryData::bottom_only([](double x) { return std::sin(3.14159265358979 * x); });
  for (auto _ : state) {
    const DirichletSolution sol = solve_dirichlet(ident, g, grid);
    benchmark::DoNotOptimize(sol.u.data());
  }
}
BENCHMARK(BM_SolveDirichlet)->Arg(32)->Arg(64)->Arg(128);

void BM_NtmaxAvg(benchmark::State& state) {
  const SolverGrid grid(1.0, 1.0 / state.range(0));
  std::vector<double> u(grid.node_count());
  for (int j = 0; j < grid.nt(); ++j)
    for (int i = 0; i < grid.nx(); ++i) u[grid.node(i, j)] = grid.x(i) * grid.t(j);
  for (auto _ : state) {
    const auto nt = ntmax_avg(grid, u, 2.0);
    benchmark::DoNotOptimize(nt.data());
  }
}
BENCHMARK(BM_NtmaxAvg)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
