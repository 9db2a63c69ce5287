#include "bench_common.hpp"

#include "fsqkit/quantizer.hpp"
#include "fsqkit/residual.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace fsqkit;

void BM_QuantizeScalar(benchmark::State &state) {
    const auto x = bench::noise(1, 4096);
    const int levels = static_cast<int>(state.range(0));
    for (auto _ : state) {
        double acc = 0.0;
        for (double v : x) acc += fsq::quantize_scalar(v, levels);
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_QuantizeScalar)->Arg(3)->Arg(17);

// One frame per item: 6 dimensions at 17 levels, as at 25 Hz.
void BM_QuantizeVector(benchmark::State &state) {
    const auto spec = fsq::QuantizerSpec::uniform(6, 17);
    const auto z = bench::noise(2, 6 * 1024);
    for (auto _ : state) {
        std::uint64_t acc = 0;
        for (std::size_t f = 0; f < 1024; ++f) acc += fsq::quantize_vector(std::span(z).subspan(6 * f, 6), spec).index;
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_QuantizeVector);

void BM_ResidualDecompose(benchmark::State &state) {
    const residual::ResidualSpec spec(5, static_cast<int>(state.range(0)));
    const auto z = bench::noise(3, 6 * 256);
    for (auto _ : state) {
        for (std::size_t f = 0; f < 256; ++f) {
            benchmark::DoNotOptimize(residual::residual_decompose(std::span(z).subspan(6 * f, 6), spec));
        }
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_ResidualDecompose)->Arg(2)->Arg(4);

}  // namespace
