#include <benchmark/benchmark.h>

#include "deeptrust/deeptrust.hpp"
#include "deeptrust/kernels.hpp"
#include "deeptrust/rng.hpp"

using namespace deeptrust;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.uniform(-1.0, 1.0);
    return m;
}

template <auto Forward>
void bm_affine_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(64, n, 1);
    const auto w = random_matrix(n, n, 2);
    const std::vector<double> bias(n, 0.1);
    Matrix y(64, n);
    for (auto _ : state) {
        Forward(x, w, bias, y);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 64 * static_cast<std::int64_t>(n * n));
}

template <auto Backward>
void bm_affine_backward_params(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_matrix(64, n, 3);
    const auto dy = random_matrix(64, n, 4);
    Matrix dw(n, n);
    std::vector<double> db(n);
    for (auto _ : state) {
        Backward(x, dy, dw, db);
        benchmark::DoNotOptimize(dw.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 64 * static_cast<std::int64_t>(n * n));
}

template <auto Backward>
void bm_affine_backward_input(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto dy = random_matrix(64, n, 5);
    const auto w = random_matrix(n, n, 6);
    Matrix dx(64, n);
    for (auto _ : state) {
        Backward(dy, w, dx);
        benchmark::DoNotOptimize(dx.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 64 * static_cast<std::int64_t>(n * n));
}

void bm_deeptrust_predict(benchmark::State& state) {
    const auto model = build_model(27, 250, 0.5, 0);
    const auto x = random_matrix(static_cast<std::size_t>(state.range(0)), 27, 7);
    for (auto _ : state) benchmark::DoNotOptimize(predict_probabilities(model, x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_affine_forward<kernels::serial::affine_forward>)->Name("affine_forward/serial")->Arg(64)->Arg(250);
BENCHMARK(bm_affine_forward<kernels::omp::affine_forward>)->Name("affine_forward/omp")->Arg(64)->Arg(250);
BENCHMARK(bm_affine_backward_params<kernels::serial::affine_backward_params>)
    ->Name("affine_backward_params/serial")
    ->Arg(64)
    ->Arg(250);
BENCHMARK(bm_affine_backward_params<kernels::omp::affine_backward_params>)
    ->Name("affine_backward_params/omp")
    ->Arg(64)
    ->Arg(250);
BENCHMARK(bm_affine_backward_input<kernels::serial::affine_backward_input>)
    ->Name("affine_backward_input/serial")
    ->Arg(64)
    ->Arg(250);
BENCHMARK(bm_affine_backward_input<kernels::omp::affine_backward_input>)
    ->Name("affine_backward_input/omp")
    ->Arg(64)
    ->Arg(250);
BENCHMARK(bm_deeptrust_predict)->Arg(1)->Arg(1000);

BENCHMARK_MAIN();
