#include <benchmark/benchmark.h>

#include <random>

#include "zsfuse/fusion.hpp"

namespace {

std::vector<zsfuse::ScoreMatrix> random_scores(std::size_t rows, std::size_t cols) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> cosine(-1.0, 1.0);
    std::vector<zsfuse::ScoreMatrix> out;
    for (auto m : zsfuse::kAllMethods) {
        zsfuse::Table t{rows, cols, std::vector<double>(rows * cols)};
        for (auto& v : t.values) v = cosine(gen);
        out.push_back({m, std::move(t)});
    }
    return out;
}

void BM_CalibrateAndFuse(benchmark::State& state) {
    const auto scores = random_scores(10000, static_cast<std::size_t>(state.range(0)));
    const zsfuse::FusionConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(zsfuse::calibrate_and_fuse(scores, cfg));
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_CalibrateAndFuse)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
