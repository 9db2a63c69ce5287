#include "bench_common.hpp"

#include "fsqkit/analysis.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace fsqkit;

void BM_MultiresLoss(benchmark::State &state) {
    const auto x = bench::noise(5, 16000);
    const auto r = bench::noise(6, 16000);
    const auto plan = analysis::fft_plan(39, analysis::golden_ratio, 8);
    for (auto _ : state) benchmark::DoNotOptimize(analysis::multires_stft_l1(x, r, plan));
}
BENCHMARK(BM_MultiresLoss)->Unit(benchmark::kMillisecond);

void BM_SensitivityMap(benchmark::State &state) {
    const auto x = bench::noise(7, static_cast<std::size_t>(state.range(0)));
    const auto r = bench::noise(8, static_cast<std::size_t>(state.range(0)));
    const auto probe = filterbank::FilterbankSpec::stft(64, 16, filterbank::Window::hann);
    const auto plan = analysis::fft_plan(32, analysis::golden_ratio, 5);
    for (auto _ : state) benchmark::DoNotOptimize(analysis::sensitivity_map(x, r, probe, plan));
}
BENCHMARK(BM_SensitivityMap)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_RatioSearch(benchmark::State &state) {
    for (auto _ : state) benchmark::DoNotOptimize(analysis::ratio_search(39, 8, 1000));
}
BENCHMARK(BM_RatioSearch);

}  // namespace
