// Serial reference vs windowed OpenMP kernels on propensity-like data.

#include "mte/kernel.hpp"
#include "mte/locpoly.hpp"
#include "mte/normal.hpp"
#include "mte/rng.hpp"
#include "mte/smoother.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace {

struct Sample {
    Eigen::VectorXd p, y, grid;
    Eigen::MatrixXd targets;
};

Sample make_sample(Eigen::Index n) {
    mte::Philox4x32 rng(42, 0, 0);
    Sample s;
    s.p.resize(n);
    s.y.resize(n);
    s.targets.resize(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        s.p(i) = mte::norm_cdf(mte::norm_quantile(rng.uniform()));
        s.y(i) = std::sin(3.0 * s.p(i)) + 0.3 * mte::norm_quantile(rng.uniform());
        for (int j = 0; j < 4; ++j) s.targets(i, j) = s.y(i) * (j + 1);
    }
    s.grid = mte::make_grid(0.15, 0.85, 101);
    return s;
}

const mte::Kernel& gaussian() {
    static const mte::Kernel k = mte::Kernel::gaussian();
    return k;
}

template <bool Parallel>
void BM_LocalQuadratic(benchmark::State& state) {
    const auto s = make_sample(state.range(0));
    for (auto _ : state) {
        auto r = Parallel ? mte::parallel::local_quadratic(s.p, s.y, s.grid, 0.035, gaussian())
                          : mte::serial::local_quadratic(s.p, s.y, s.grid, 0.035, gaussian());
        benchmark::DoNotOptimize(r.data());
    }
}

// Residual refit: evaluation at every sample point.
template <bool Parallel>
void BM_LocalQuadraticAtPoints(benchmark::State& state) {
    const auto s = make_sample(state.range(0));
    for (auto _ : state) {
        auto r = Parallel ? mte::parallel::local_quadratic(s.p, s.y, s.p, 0.035, gaussian())
                          : mte::serial::local_quadratic(s.p, s.y, s.p, 0.035, gaussian());
        benchmark::DoNotOptimize(r.data());
    }
}

template <bool Parallel>
void BM_LocalLinearFirstStage(benchmark::State& state) {
    const auto s = make_sample(state.range(0));
    for (auto _ : state) {
        Eigen::MatrixXd r = Parallel ? mte::parallel::local_linear_at_points(s.p, s.targets, 0.05, gaussian())
                                     : mte::serial::local_linear_at_points(s.p, s.targets, 0.05, gaussian());
        benchmark::DoNotOptimize(r.data());
    }
}

template <bool Parallel>
void BM_KernelDensity(benchmark::State& state) {
    const auto s = make_sample(state.range(0));
    for (auto _ : state) {
        Eigen::VectorXd r = Parallel ? mte::parallel::kernel_density(s.p, s.grid, 0.05, gaussian())
                                     : mte::serial::kernel_density(s.p, s.grid, 0.05, gaussian());
        benchmark::DoNotOptimize(r.data());
    }
}

}  // namespace

BENCHMARK(BM_LocalQuadratic<false>)->Name("local_quadratic/serial")->Arg(3000)->Arg(50000);
BENCHMARK(BM_LocalQuadratic<true>)->Name("local_quadratic/parallel")->Arg(3000)->Arg(50000);
BENCHMARK(BM_LocalQuadraticAtPoints<false>)->Name("local_quadratic_at_points/serial")->Arg(3000);
BENCHMARK(BM_LocalQuadraticAtPoints<true>)->Name("local_quadratic_at_points/parallel")->Arg(3000)->Arg(10000);
BENCHMARK(BM_LocalLinearFirstStage<false>)->Name("local_linear_first_stage/serial")->Arg(3000);
BENCHMARK(BM_LocalLinearFirstStage<true>)->Name("local_linear_first_stage/parallel")->Arg(3000)->Arg(50000);
BENCHMARK(BM_KernelDensity<false>)->Name("kernel_density/serial")->Arg(3000)->Arg(50000);
BENCHMARK(BM_KernelDensity<true>)->Name("kernel_density/parallel")->Arg(3000)->Arg(50000);

BENCHMARK_MAIN();
