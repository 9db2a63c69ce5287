#include "fsqkit/container.hpp"
#include "fsqkit/huffman.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

using namespace fsqkit::bitstream;

// Ten seconds at 25 Hz with a skewed (roughly Laplacian) digit distribution.
TokenStream skewed_stream(std::size_t frames) {
    TokenStream s;
    s.header.dims = 6;
    s.header.stage_levels = {std::vector<int>(6, 5)};
    std::mt19937_64 rng(7);
    std::geometric_distribution<int> geo(0.6);
    for (std::size_t f = 0; f < frames; ++f) {
        std::uint64_t t = 0;
        for (int d = 5; d >= 0; --d) {
            const int g = std::min(geo(rng), 2);
            t = t * 5 + static_cast<std::uint64_t>(rng() % 2 ? 2 + g : 2 - g);
        }
        s.tokens.push_back(t);
    }
    return s;
}

void BM_HuffmanBuild(benchmark::State &state) {
    const auto s = skewed_stream(static_cast<std::size_t>(state.range(0)));
    const auto h = pooled_histogram(s);
    for (auto _ : state) benchmark::DoNotOptimize(huffman_build(h));
}
BENCHMARK(BM_HuffmanBuild)->Arg(250)->Arg(25000);

void BM_Pack(benchmark::State &state) {
    const auto s = skewed_stream(25000);
    const auto mode = state.range(0) ? PackMode::huffman : PackMode::raw;
    std::size_t bytes = 0;
    for (auto _ : state) {
        const auto packed = pack_stream(s, mode);
        bytes = packed.size();
        benchmark::DoNotOptimize(packed.data());
    }
    state.counters["bytes"] = static_cast<double>(bytes);
    state.SetItemsProcessed(state.iterations() * 25000);
}
BENCHMARK(BM_Pack)->Arg(0)->Arg(1);

void BM_Unpack(benchmark::State &state) {
    const auto packed = pack_stream(skewed_stream(25000), state.range(0) ? PackMode::huffman : PackMode::raw);
    for (auto _ : state) benchmark::DoNotOptimize(unpack_stream(packed));
    state.SetItemsProcessed(state.iterations() * 25000);
}
BENCHMARK(BM_Unpack)->Arg(0)->Arg(1);

}  // namespace
