#include <benchmark/benchmark.h>

#include "zsfuse/similarity.hpp"
#include "zsfuse/synthetic.hpp"

namespace {

zsfuse::DatasetBundle make_bundle(std::size_t classes, std::size_t refs) {
    zsfuse::SyntheticParams p;
    p.n_classes = classes;
    p.samples_per_class = 100;
    p.dim = 512;
    p.refs_per_class = refs;
    return zsfuse::generate_synthetic_bundle(p);
}

void BM_TextImage(benchmark::State& state) {
    const auto bundle = make_bundle(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(zsfuse::score_method(bundle, zsfuse::Method::text_image_clip));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(bundle.labels.size()));
}
BENCHMARK(BM_TextImage)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ImageImage(benchmark::State& state) {
    const auto bundle = make_bundle(10, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(zsfuse::score_method(bundle, zsfuse::Method::image_image_dino));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(bundle.labels.size()));
}
BENCHMARK(BM_ImageImage)->Arg(1)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace
