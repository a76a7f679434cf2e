#include <benchmark/benchmark.h>

#include <random>

#include "zsfuse/evaluation.hpp"

static void BM_Auroc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> grid(0, 1000);
    std::vector<double> pos(n), neg(n);
    for (auto& v : pos) v = grid(gen) / 1000.0;
    for (auto& v : neg) v = grid(gen) / 1200.0;
    for (auto _ : state) benchmark::DoNotOptimize(zsfuse::auroc(pos, neg));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(8)->Range(64, 1 << 18)->Complexity(benchmark::oNLogN);
