#include <benchmark/benchmark.h>

#include <random>

#include "smml/cell_quadrature.hpp"
#include "smml/grid_oracle.hpp"
#include "smml/solver.hpp"

using namespace smml;

namespace {

struct Fixture {
    ExponentialFamily family = make_gaussian_family(2);
    MarginalDensity marginal{make_gaussian_family(2),
                             Prior(GaussianPrior{Eigen::VectorXd::Zero(2), 3.0}),
                             TruncationOptions{1e-6}};
    Estimator estimator;

    explicit Fixture(int n) {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> unit(-4.0, 4.0);
        estimator.assertions.resize(n, 2);
        for (int i = 0; i < n; ++i) estimator.assertions.row(i) << unit(rng), unit(rng);
        estimator.coding_probs = Eigen::VectorXd::Constant(n, 1.0 / n);
    }
};

void BM_BuildCells(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        Partition p = build_cells(fx.estimator, fx.family, fx.marginal.box());
        benchmark::DoNotOptimize(p.n());
    }
}
BENCHMARK(BM_BuildCells)->Arg(4)->Arg(8)->Arg(16);

void BM_CellIntegrals(benchmark::State& state) {
    Fixture fx(static_cast<int>(state.range(0)));
    const Partition partition = build_cells(fx.estimator, fx.family, fx.marginal.box());
    for (auto _ : state) {
        CellIntegrals ints = cell_integrals(partition, fx.marginal);
        benchmark::DoNotOptimize(ints.mass.sum());
    }
}
BENCHMARK(BM_CellIntegrals)->Arg(4)->Arg(8);

void BM_LloydStep(benchmark::State& state) {
    Fixture fx(8);
    for (auto _ : state) {
        LloydOutcome out = lloyd_step(fx.estimator, fx.marginal, fx.family, fx.marginal.box());
        benchmark::DoNotOptimize(out.next.coding_probs.sum());
    }
}
BENCHMARK(BM_LloydStep);

void BM_GreedySweep(benchmark::State& state) {
    Fixture fx(8);
    const GridProblem problem = make_grid_problem(fx.marginal, 3000);
    for (auto _ : state) {
        GreedyResult run = greedy_descent(problem, fx.family, 8, 1);
        benchmark::DoNotOptimize(run.i1);
    }
}
BENCHMARK(BM_GreedySweep);

}  // namespace

BENCHMARK_MAIN();
