#pragma once

// Receptive-field and latency bookkeeping, multi-resolution FFT plans, loss
// sensitivity probing and a few closed-form normalization facts.

#include "fsqkit/filterbank.hpp"

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fsqkit::analysis {

enum class LayerKind { conv, transposed_conv, attention, pointwise };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    std::size_t extent = 1;    // kernel length or attention window, in steps
    std::size_t stride = 1;
    std::size_t dilation = 1;
    bool causal = false;
    double rate = 25.0;        // steps per second at which the layer operates
};

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string &name);

struct ReceptiveField {
    std::vector<double> per_layer_seconds;
    double max_per_layer = 0.0;
    double total = 0.0;
};

// Per-layer span is dilation*(extent-1)+1 steps divided by the layer rate;
// pointwise layers span nothing. The total is the plain sum.
ReceptiveField receptive_field(std::span<const LayerSpec> layers);

// Transformer layer list of the reference autoencoder: `fine_layers`
// attention layers at `fine_rate`, `coarse_layers` at half that rate, each
// with the given window, mirrored for the decoder.
std::vector<LayerSpec> taae_layers(std::size_t window, bool causal, std::size_t fine_layers = 8,
                                   std::size_t coarse_layers = 20, double fine_rate = 50.0);

struct LatencyMode {
    bool chunked = false;
    double chunk_seconds = 0.0;
    double overlap_seconds = 0.0;

    static LatencyMode causal() { return {}; }
    static LatencyMode chunks(double chunk_s, double overlap_s = 0.0) { return {true, chunk_s, overlap_s}; }
};

// Causal: one latent frame. Chunked: two chunks.
double latency(double latent_rate, const LatencyMode &mode);

struct FftPlan {
    std::vector<std::size_t> sizes;  // strictly increasing, even
    std::vector<std::size_t> hops;   // size / 2
    filterbank::Window window = filterbank::Window::hann;
};

// hop_i = round(base_hop * ratio^i), size_i = 2 hop_i, repeated hops dropped.
FftPlan fft_plan(std::size_t base_hop, double ratio, std::size_t count);

// The size list published with the reference discriminator.
FftPlan reference_fft_plan();

FftPlan plan_from_sizes(std::vector<std::size_t> sizes);

inline constexpr double golden_ratio = 1.6180339887498948482;

// Sum over hop pairs (r = larger/smaller) of max(0, 1 - 2 dist(r, Z))^2.
double inharmonicity_score(const FftPlan &plan);

struct RatioCandidate {
    double ratio = 0.0;
    double score = 0.0;
};

// Scores ratio = 1 + i/grid_points for i = 1..grid_points, best first
// (ties by smaller ratio).
std::vector<RatioCandidate> ratio_search(std::size_t base_hop, std::size_t count, std::size_t grid_points);

// Fraction of candidates scoring strictly better than `ratio` would.
double ratio_rank_fraction(std::span<const RatioCandidate> candidates, std::size_t base_hop, std::size_t count,
                           double ratio);

// Sum over resolutions of the mean absolute STFT magnitude difference.
double multires_stft_l1(std::span<const double> x, std::span<const double> reference, const FftPlan &plan);

struct SensitivityMap {
    filterbank::FilterbankSpec probe;
    std::size_t frames = 0;
    std::size_t bins = 0;
    double fd_step = 0.0;
    std::vector<double> values;  // frames x bins

    double at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
    std::vector<double> time_marginal() const;
    std::vector<double> frequency_marginal() const;
};

// |dL/dX_{n,f}| for every probe STFT bin, where L = multires_stft_l1(x, reference)
// and x is resynthesized from the perturbed probe spectrum. Uses central
// differences on the real and imaginary parts.
SensitivityMap sensitivity_map(std::span<const double> signal, std::span<const double> reference,
                               const filterbank::FilterbankSpec &probe, const FftPlan &loss, double fd_step = 1e-3);

// max / mean of `values[skip .. size-skip)`.
double peak_to_mean(std::span<const double> values, std::size_t skip = 0);

// X * |X|^alpha, bin by bin.
std::vector<std::complex<double>> magnitude_power_scale(std::span<const std::complex<double>> bins,
                                                        double alpha = 0.5);

// 20 log10(1/eps): the largest gain (x - mean)/(std + eps) can apply.
double layernorm_gain_cap(double eps);

}  // namespace fsqkit::analysis
