// Parallel kernels vs. their single-threaded reference implementations.
// Both sides must produce identical output (asserted in the unit tests), so
// the only interesting number here is the speedup.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <cstdint>

#include "glitchhunter/embedstore.hpp"
#include "glitchhunter/simlab.hpp"
#include "glitchhunter/teg.hpp"

namespace gh = glitchhunter;

namespace {

gh::EmbeddingMatrix make_matrix(std::size_t n) {
    gh::simlab::SimSpec spec;
    spec.n = n;
    spec.m = 32;
    spec.glitch_count = n / 10;
    spec.seed = 7;
    return gh::simlab::generate(spec).bundle.embeddings;
}

constexpr std::uint32_t kNeighbors = 16;

void BM_knn_parallel(benchmark::State& state) {
    const auto matrix = make_matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto nn = gh::teg::knn(matrix, kNeighbors);
        benchmark::DoNotOptimize(nn.ids.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_knn_reference(benchmark::State& state) {
    const auto matrix = make_matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto nn = gh::teg::reference::knn(matrix, kNeighbors);
        benchmark::DoNotOptimize(nn.ids.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_smooth_all_parallel(benchmark::State& state) {
    const auto matrix = make_matrix(static_cast<std::size_t>(state.range(0)));
    const auto nn = gh::teg::knn(matrix, kNeighbors);
    for (auto _ : state) {
        auto params = gh::teg::smooth_all(nn);
        benchmark::DoNotOptimize(params.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_smooth_all_reference(benchmark::State& state) {
    const auto matrix = make_matrix(static_cast<std::size_t>(state.range(0)));
    const auto nn = gh::teg::knn(matrix, kNeighbors);
    for (auto _ : state) {
        auto params = gh::teg::reference::smooth_all(nn);
        benchmark::DoNotOptimize(params.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_build_teg(benchmark::State& state) {
    const auto matrix = make_matrix(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto graph = gh::teg::build_teg(matrix, kNeighbors);
        benchmark::DoNotOptimize(graph.edges.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_knn_parallel)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_knn_reference)->Arg(500)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smooth_all_parallel)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_smooth_all_reference)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_teg)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
