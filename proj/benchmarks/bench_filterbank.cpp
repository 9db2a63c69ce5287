#include "bench_common.hpp"

#include "fsqkit/filterbank.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace fsqkit;
using filterbank::FilterbankSpec;

constexpr std::size_t seconds_of_audio = 160000;  // 10 s at 16 kHz

void run_roundtrip(benchmark::State &state, const FilterbankSpec &spec) {
    const auto x = bench::noise(4, seconds_of_audio, 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(filterbank::roundtrip_report(x, spec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}

void BM_PatchRoundtrip(benchmark::State &state) { run_roundtrip(state, FilterbankSpec::patch(320)); }
BENCHMARK(BM_PatchRoundtrip);

void BM_StftRoundtrip(benchmark::State &state) {
    run_roundtrip(state, FilterbankSpec::stft(static_cast<std::size_t>(state.range(0)),
                                              static_cast<std::size_t>(state.range(0) / 4), filterbank::Window::hann));
}
BENCHMARK(BM_StftRoundtrip)->Arg(640)->Arg(2048);

void BM_MdctRoundtrip(benchmark::State &state) {
    run_roundtrip(state, FilterbankSpec::mdct(static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_MdctRoundtrip)->Arg(512)->Arg(640);

void BM_PqmfRoundtrip(benchmark::State &state) {
    run_roundtrip(state, FilterbankSpec::pqmf(static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_PqmfRoundtrip)->Arg(4)->Arg(16);

void BM_PqmfPrototype(benchmark::State &state) {
    for (auto _ : state) benchmark::DoNotOptimize(filterbank::pqmf_prototype(16, 1024, 100.0));
}
BENCHMARK(BM_PqmfPrototype);

}  // namespace
