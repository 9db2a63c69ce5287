#include "bench_common.hpp"

#include "fsqkit/toymodel.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace fsqkit;

void BM_ToyEncode(benchmark::State &state) {
    toymodel::ModelSpec spec;
    spec.window = static_cast<std::size_t>(state.range(0));
    const auto model = toymodel::build(spec);
    const auto x = bench::noise(9, 81920, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(model.encode(x));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_ToyEncode)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ToyReconstruct(benchmark::State &state) {
    const auto model = toymodel::build(toymodel::ModelSpec{});
    const auto x = bench::noise(10, 81920, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(model.reconstruct(x));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_ToyReconstruct)->Unit(benchmark::kMillisecond);

void BM_ToyBuild(benchmark::State &state) {
    for (auto _ : state) benchmark::DoNotOptimize(toymodel::build(toymodel::ModelSpec{}));
}
BENCHMARK(BM_ToyBuild)->Unit(benchmark::kMillisecond);

}  // namespace
