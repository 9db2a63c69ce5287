#include "fsqkit/analysis.hpp"

#include "fsqkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsqkit::analysis {

std::string to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::transposed_conv: return "transposed-conv";
    case LayerKind::attention: return "attention";
    case LayerKind::pointwise: return "pointwise";
    }
    return "conv";
}

LayerKind parse_layer_kind(const std::string &name) {
    for (auto k : {LayerKind::conv, LayerKind::transposed_conv, LayerKind::attention, LayerKind::pointwise}) {
        if (name == to_string(k)) return k;
    }
    throw Error(ErrorKind::invalid_config, "unknown layer kind '" + name + "'");
}

ReceptiveField receptive_field(std::span<const LayerSpec> layers) {
    if (layers.empty()) throw Error(ErrorKind::invalid_config, "receptive field needs at least one layer");
    ReceptiveField rf;
    for (const auto &l : layers) {
        if (!(l.rate > 0.0) || !std::isfinite(l.rate)) throw Error(ErrorKind::invalid_config, "layer rate must be positive");
        if (l.extent < 1 || l.stride < 1 || l.dilation < 1) {
            throw Error(ErrorKind::invalid_config, "layer extent, stride and dilation must be positive");
        }
        double seconds = 0.0;
        if (l.kind != LayerKind::pointwise) {
            const double steps = static_cast<double>(l.dilation * (l.extent - 1) + 1);
            seconds = steps / l.rate;
        }
        rf.per_layer_seconds.push_back(seconds);
        rf.max_per_layer = std::max(rf.max_per_layer, seconds);
        rf.total += seconds;
    }
    return rf;
}

std::vector<LayerSpec> taae_layers(std::size_t window, bool causal, std::size_t fine_layers,
                                   std::size_t coarse_layers, double fine_rate) {
    const double coarse_rate = fine_rate / 2.0;
    const LayerSpec fine{LayerKind::attention, window, 1, 1, causal, fine_rate};
    const LayerSpec coarse{LayerKind::attention, window, 1, 1, causal, coarse_rate};
    std::vector<LayerSpec> layers(fine_layers, fine);
    layers.push_back({LayerKind::conv, 2, 2, 1, causal, fine_rate});
    layers.insert(layers.end(), 2 * coarse_layers, coarse);
    layers.push_back({LayerKind::transposed_conv, 2, 2, 1, causal, fine_rate});
    layers.insert(layers.end(), fine_layers, fine);
    return layers;
}

double latency(double latent_rate, const LatencyMode &mode) {
    if (mode.chunked) {
        if (!(mode.chunk_seconds > 0.0)) throw Error(ErrorKind::invalid_config, "chunk length must be positive");
        return 2.0 * mode.chunk_seconds;
    }
    if (!(latent_rate > 0.0)) throw Error(ErrorKind::invalid_config, "latent rate must be positive");
    return 1.0 / latent_rate;
}

FftPlan plan_from_sizes(std::vector<std::size_t> sizes) {
    FftPlan plan;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 2 || sizes[i] % 2 != 0) throw Error(ErrorKind::invalid_config, "FFT sizes must be even and >= 2");
        if (i > 0 && sizes[i] <= sizes[i - 1]) throw Error(ErrorKind::invalid_config, "FFT sizes must increase strictly");
        plan.hops.push_back(sizes[i] / 2);
    }
    plan.sizes = std::move(sizes);
    return plan;
}

FftPlan fft_plan(std::size_t base_hop, double ratio, std::size_t count) {
    if (base_hop < 1) throw Error(ErrorKind::invalid_config, "base hop must be >= 1");
    if (!(ratio > 1.0) || !std::isfinite(ratio)) throw Error(ErrorKind::invalid_config, "ratio must exceed 1");
    if (count < 1) throw Error(ErrorKind::invalid_config, "count must be >= 1");
    constexpr double limit = 4503599627370496.0;  // 2^52: exact in a double and far below size_t overflow
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < count; ++i) {
        const double hop = std::floor(static_cast<double>(base_hop) * std::pow(ratio, static_cast<double>(i)) + 0.5);
        if (!(hop < limit)) throw Error(ErrorKind::capacity_error, "FFT plan hop overflows");
        const auto size = 2 * static_cast<std::size_t>(hop);
        if (sizes.empty() || sizes.back() != size) sizes.push_back(size);
    }
    return plan_from_sizes(std::move(sizes));
}

FftPlan reference_fft_plan() { return plan_from_sizes({78, 126, 206, 334, 542, 876, 1418, 2296}); }

double inharmonicity_score(const FftPlan &plan) {
    if (plan.hops.size() < 2) throw Error(ErrorKind::invalid_config, "inharmonicity needs at least two resolutions");
    double score = 0.0;
    for (std::size_t i = 0; i < plan.hops.size(); ++i) {
        for (std::size_t j = i + 1; j < plan.hops.size(); ++j) {
            const double a = static_cast<double>(std::min(plan.hops[i], plan.hops[j]));
            const double b = static_cast<double>(std::max(plan.hops[i], plan.hops[j]));
            const double r = b / a;
            const double closeness = std::max(0.0, 1.0 - 2.0 * std::abs(r - std::round(r)));
            score += closeness * closeness;
        }
    }
    return score;
}

namespace {

double plan_score_or_inf(std::size_t base_hop, double ratio, std::size_t count) {
    const auto plan = fft_plan(base_hop, ratio, count);
    return plan.hops.size() < 2 ? std::numeric_limits<double>::infinity() : inharmonicity_score(plan);
}

}  // namespace

std::vector<RatioCandidate> ratio_search(std::size_t base_hop, std::size_t count, std::size_t grid_points) {
    if (grid_points < 1) throw Error(ErrorKind::invalid_config, "ratio search needs grid points");
    std::vector<RatioCandidate> out;
    out.reserve(grid_points);
    for (std::size_t i = 1; i <= grid_points; ++i) {
        const double r = 1.0 + static_cast<double>(i) / static_cast<double>(grid_points);
        out.push_back({r, plan_score_or_inf(base_hop, r, count)});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.score < b.score; });
    return out;
}

double ratio_rank_fraction(std::span<const RatioCandidate> candidates, std::size_t base_hop, std::size_t count,
                           double ratio) {
    if (candidates.empty()) return 0.0;
    const double s = plan_score_or_inf(base_hop, ratio, count);
    const auto better = std::count_if(candidates.begin(), candidates.end(), [&](const auto &c) { return c.score < s; });
    return static_cast<double>(better) / static_cast<double>(candidates.size());
}

double peak_to_mean(std::span<const double> values, std::size_t skip) {
    if (values.size() <= 2 * skip) throw Error(ErrorKind::invalid_input, "not enough values after trimming edges");
    const auto inner = values.subspan(skip, values.size() - 2 * skip);
    double sum = 0.0;
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : inner) {
        sum += v;
        peak = std::max(peak, v);
    }
    const double mean = sum / static_cast<double>(inner.size());
    return mean > 0.0 ? peak / mean : 0.0;
}

std::vector<std::complex<double>> magnitude_power_scale(std::span<const std::complex<double>> bins, double alpha) {
    if (!(alpha >= 0.0)) throw Error(ErrorKind::invalid_input, "power-law exponent must be non-negative");
    std::vector<std::complex<double>> out(bins.begin(), bins.end());
    if (alpha == 0.0) return out;
    for (auto &z : out) z *= std::pow(std::abs(z), alpha);
    return out;
}

double layernorm_gain_cap(double eps) {
    if (!(eps > 0.0)) throw Error(ErrorKind::invalid_input, "epsilon must be positive");
    return -20.0 * std::log10(eps);
}

}  // namespace fsqkit::analysis
