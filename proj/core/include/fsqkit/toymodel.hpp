#pragma once

// Forward-only miniature of the transformer audio autoencoder: patching,
// strided/transposed convolutions, sliding-window attention blocks and an
// FSQ bottleneck. Weights are random but fully determined by the seed.

#include "fsqkit/analysis.hpp"
#include "fsqkit/container.hpp"
#include "fsqkit/quantizer.hpp"
#include "fsqkit/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fsqkit::toymodel {

struct BlockSpec {
    std::size_t layers = 0;  // transformer layers in the block
    std::size_t stride = 1;  // downsampling factor at the block input (encoder)

    friend bool operator==(const BlockSpec &, const BlockSpec &) = default;
};

struct ModelSpec {
    std::size_t patch_size = 320;
    std::vector<BlockSpec> blocks{{2, 1}, {4, 2}};
    std::size_t dim = 64;
    std::size_t head_dim = 16;
    std::size_t window = 16;        // total key extent of the attention window
    bool causal = false;
    double eps = 1e-2;              // LayerNorm floor added to the standard deviation
    std::size_t ff_expansion = 2;
    std::vector<int> levels{17, 17, 17, 17, 17, 17};
    std::uint64_t seed = 0;
    std::uint32_t sample_rate = 16000;

    // Throws invalid_config.
    void validate() const;

    // Input samples per latent frame: patch size times every stride.
    std::size_t hop() const;
    Rational frame_rate() const;

    // Block layout of the reference model (8 layers, then 20 layers after a
    // x2 stride, window 128) at a reduced width.
    static ModelSpec reference_shape(std::size_t dim = 64);

    friend bool operator==(const ModelSpec &, const ModelSpec &) = default;
};

struct LatentSequence {
    std::size_t frames = 0;
    std::size_t dims = 0;
    Rational frame_rate{25};
    std::vector<double> values;  // frames x dims, each in (-1, 1)

    std::span<const double> row(std::size_t f) const { return {values.data() + f * dims, dims}; }
};

struct Encoded {
    LatentSequence latents;
    bitstream::TokenStream tokens;  // single stage
};

struct ActivationStats {
    double input_rms = 0.0;
    double max_rms = 0.0;          // largest per-frame RMS over every intermediate activation
    double max_gain_db = 0.0;      // 20 log10(max_rms / input_rms)
    std::string max_stage;         // where the maximum occurred
    bool finite = true;
};

class Model {
public:
    explicit Model(const ModelSpec &spec);
    ~Model();
    Model(Model &&) noexcept;
    Model &operator=(Model &&) noexcept;

    const ModelSpec &spec() const;
    const fsq::QuantizerSpec &quantizer() const;

    // Zero-pads x to a multiple of hop(), then runs the encoder.
    Encoded encode(std::span<const double> x) const;
    LatentSequence encode_latents(std::span<const double> x) const;

    // Throws decode_error if the stream does not match the quantizer.
    std::vector<double> decode(const bitstream::TokenStream &tokens) const;
    std::vector<double> decode_latents(const LatentSequence &latents) const;

    // Continuous round trip through the tanh bottleneck (no quantization).
    std::vector<double> reconstruct(std::span<const double> x) const;

    // All effective weights, in a fixed order.
    std::vector<double> parameters() const;

    // Sum over linear maps of max(0, 20 log10 of an operator-norm upper
    // bound), plus 6.02 dB per residual addition.
    double linear_gain_bound_db() const;

    ActivationStats activation_stats(std::span<const double> x) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Model build(const ModelSpec &spec);

// Encoder and decoder layers as the receptive-field calculus sees them.
std::vector<analysis::LayerSpec> layer_specs(const ModelSpec &spec);
double analytic_receptive_field(const ModelSpec &spec);

struct RfMeasurement {
    double seconds = 0.0;
    std::size_t support_samples = 0;
    std::size_t first = 0;  // first and last output sample that moved
    std::size_t last = 0;
    std::size_t probe = 0;  // perturbed input sample
};

// Width of the output region that responds (above 1e-7) to an impulse at the
// centre of a length-T seeded noise input. Throws saturated_measurement when
// T is not above twice the analytic field or the response reaches an edge.
RfMeasurement measure_receptive_field(const Model &model, std::size_t length);

struct CausalityReport {
    std::size_t probe = 0;              // perturbed input sample
    std::size_t frame_start = 0;        // first sample of the latent frame containing the probe
    std::size_t latency_samples = 0;    // one latent frame
    double latency_seconds = 0.0;
    double max_leakage = 0.0;           // max |change| before frame_start
    double leakage_before_probe = 0.0;  // max |change| before the probe sample itself
    bool causal = false;                // max_leakage == 0 exactly
};

// Perturbs one input sample inside the signal and compares outputs before it.
CausalityReport check_causality(const Model &model, std::size_t length = 0);

}  // namespace fsqkit::toymodel
