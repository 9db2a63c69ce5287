#pragma once

// Time-frequency transforms used for patching audio into frames, with exact
// (patch, STFT, MDCT) or near (PQMF) perfect reconstruction.
//
// Padding policy: signals are zero-padded so every input sample is covered by
// a complete set of overlapping frames, and inverses truncate back to the
// original length.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fsqkit::filterbank {

enum class Family { patch, stft, mdct, pqmf };
enum class Window { rectangular, hann, sine };

struct FilterbankSpec {
    Family family = Family::patch;
    std::size_t size = 320;      // patch size / FFT size / MDCT block (2*hop) / PQMF channels
    std::size_t hop = 320;
    Window window = Window::rectangular;
    std::size_t taps = 0;        // PQMF prototype length (0 = 64 * channels)
    double stopband_db = 100.0;  // PQMF prototype design target

    static FilterbankSpec patch(std::size_t patch_size);
    static FilterbankSpec stft(std::size_t fft_size, std::size_t hop, Window window);
    static FilterbankSpec mdct(std::size_t block_size);
    static FilterbankSpec pqmf(std::size_t channels, std::size_t taps = 0, double stopband_db = 100.0);

    // Throws invalid_config on an inconsistent spec.
    void validate() const;

    // Real coefficients per frame divided by hop: 1 for critically sampled
    // families, size/hop for the STFT.
    double sampling_ratio() const;
};

// Periodic window of the given length.
std::vector<double> make_window(Window window, std::size_t length);

struct RealFrames {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t original_length = 0;
    std::vector<double> data;  // frames x channels, row-major

    std::span<double> row(std::size_t f) { return {data.data() + f * channels, channels}; }
    std::span<const double> row(std::size_t f) const { return {data.data() + f * channels, channels}; }
};

struct ComplexFrames {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::size_t original_length = 0;
    std::vector<std::complex<double>> data;  // frames x bins, row-major

    std::span<std::complex<double>> row(std::size_t f) { return {data.data() + f * bins, bins}; }
    std::span<const std::complex<double>> row(std::size_t f) const { return {data.data() + f * bins, bins}; }
};

RealFrames patch_forward(std::span<const double> x, std::size_t patch_size);
std::vector<double> patch_inverse(const RealFrames &frames);

// STFT with frames starting at -(size - hop) so the first sample already
// sees a full overlap. Forward is unnormalized.
ComplexFrames stft_forward(std::span<const double> x, const FilterbankSpec &spec);
std::vector<double> stft_inverse(const ComplexFrames &frames, const FilterbankSpec &spec);

// Constant overlap-add sum of the analysis window; throws
// non_invertible_config if the window does not overlap-add to a constant.
double cola_constant(const FilterbankSpec &spec);

// Sample index (relative to the signal start) of frame f's first sample.
std::ptrdiff_t stft_frame_start(const FilterbankSpec &spec, std::size_t frame);

RealFrames mdct_forward(std::span<const double> x, std::size_t block_size);
std::vector<double> mdct_inverse(const RealFrames &frames);

// Cosine-modulated K-channel bank over a circular (periodic) extension of
// the zero-padded signal, so each channel holds exactly length/K samples.
RealFrames pqmf_forward(std::span<const double> x, const FilterbankSpec &spec);
std::vector<double> pqmf_inverse(const RealFrames &frames, const FilterbankSpec &spec);

// Kaiser-windowed sinc prototype whose cutoff is tuned for power
// complementarity between neighbouring channels.
std::vector<double> pqmf_prototype(std::size_t channels, std::size_t taps, double stopband_db);

struct RoundtripReport {
    double relative_l2 = 0.0;
    double relative_db = 0.0;   // 20 log10(relative_l2), -inf when exact
    double max_abs = 0.0;
    double sampling_ratio = 1.0;
};

RoundtripReport roundtrip_report(std::span<const double> x, const FilterbankSpec &spec);

// Linear forward/inverse through whichever family the spec names; complex
// STFT bins are flattened as (re, im) pairs.
std::vector<double> forward_flat(std::span<const double> x, const FilterbankSpec &spec);

struct SpreadStats {
    double boundary_ratio = 0.0;   // mean squared error jump at frame boundaries / elsewhere
    double envelope_peak = 0.0;    // max / mean of error energy folded on position within hop
};

// Applies a relative per-coefficient perturbation of the given size (seeded
// Gaussian, multiplicative) and measures where the reconstruction error lands.
SpreadStats error_spread(std::span<const double> x, const FilterbankSpec &spec, double relative_noise,
                         unsigned seed);

}  // namespace fsqkit::filterbank
