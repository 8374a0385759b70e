#include <benchmark/benchmark.h>

#include <memory>
#include <string>

#include "singvolt/forward_solver.hpp"
#include "singvolt/linear_resolvent.hpp"
#include "singvolt/pmp.hpp"
#include "singvolt/problem_file.hpp"
#include "singvolt/quadrature.hpp"

using namespace singvolt;

namespace {

ProblemFile load(const std::string& name) { return load_problem(std::string(SINGVOLT_PROBLEM_DIR) + "/" + name); }

MeshPtr uniform(std::size_t N) { return std::make_shared<const Mesh>(build_mesh(1.0, N, {0.0}, 1.0)); }

void BM_ProductWeights(benchmark::State& state) {
    const auto mesh =
        std::make_shared<const Mesh>(build_mesh(1.0, static_cast<std::size_t>(state.range(0)), {0.0, 0.4}, 2.0));
    const WeightSpec w{{0.4}, {0.7}};
    for (auto _ : state) benchmark::DoNotOptimize(product_weights(mesh, w, 0.5));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProductWeights)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SolveState(benchmark::State& state) {
    const ProblemFile pf = load("linear_two_state.ini");
    const Discretization disc = discretize(pf.spec, static_cast<std::size_t>(state.range(0)));
    const GridFunction u(disc.mesh, 0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_state(pf.spec, u, disc, pf.solve));
}
BENCHMARK(BM_SolveState)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond);

void BM_Resolvent(benchmark::State& state) {
    const auto mesh = uniform(static_cast<std::size_t>(state.range(0)));
    const WeightTable tab = product_weights(mesh, WeightSpec{}, 0.5);
    LinearKernel K;
    K.dim = 2;
    K.A = [](double t, double s) {
        Mat A(2, 2);
        A << -0.5, 0.2, std::sin(t - s), -0.3;
        return A;
    };
    for (auto _ : state) benchmark::DoNotOptimize(build_resolvent(K, tab));
}
BENCHMARK(BM_Resolvent)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
    const ProblemFile pf = load("lq_control.ini");
    const Discretization disc = discretize(pf.spec, 64);
    const auto intervals = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(brute_force(pf.spec, disc, intervals));
}
BENCHMARK(BM_BruteForce)->DenseRange(2, 4)->Unit(benchmark::kMillisecond);

void BM_Sweep(benchmark::State& state) {
    const ProblemFile pf = load("lq_control.ini");
    const auto disc = std::make_shared<const Discretization>(discretize(pf.spec, static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(fb_sweep(pf.spec, disc));
}
BENCHMARK(BM_Sweep)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
