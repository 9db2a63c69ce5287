#pragma once

// Symmetric tanh-bounded finite scalar quantization (FSQ).
//
// Every dimension is squashed with tanh and snapped to one of L evenly spaced
// levels in [-1, 1]. A tuple of levels is packed into a single token with a
// mixed-radix code, dimension 0 being the least significant digit.

#include "fsqkit/rational.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fsqkit::fsq {

struct LevelSet {
    int levels = 0;
    std::vector<double> positions;  // strictly increasing, -1 .. +1
};

// Levels {2i/(L-1) - 1 : i = 0..L-1}. Throws invalid_level_count for L < 2.
LevelSet level_positions(int levels);

// Q_L(x) = 2/(L-1) * floor((L-1)(tanh x + 1)/2 + 1/2) - 1.
// Exact midpoints round up (mathematical floor), so odd symmetry holds only
// away from the thresholds.
double quantize_scalar(double x, int levels);

// Noise surrogate used during training: tanh x + u/(L-1), u in [-1, 1].
double noisy_quantize(double x, int levels, double u);

// Level digit of an on-lattice value; throws off_lattice when value is not
// exactly one of the L positions.
int level_digit(double value, int levels);

double digit_value(int digit, int levels);

class QuantizerSpec {
public:
    QuantizerSpec(std::vector<int> levels, Rational frame_rate = Rational(25));

    // Same level count on every one of `dims` dimensions.
    static QuantizerSpec uniform(int dims, int levels, Rational frame_rate = Rational(25));

    int dims() const noexcept { return static_cast<int>(levels_.size()); }
    const std::vector<int> &levels() const noexcept { return levels_; }
    const Rational &frame_rate() const noexcept { return frame_rate_; }

    // Product of the level counts.
    std::uint64_t codebook_size() const noexcept { return codebook_size_; }

    friend bool operator==(const QuantizerSpec &, const QuantizerSpec &) = default;

private:
    std::vector<int> levels_;
    Rational frame_rate_;
    std::uint64_t codebook_size_ = 1;
};

struct QuantizedFrame {
    std::vector<double> values;
    std::uint64_t index = 0;
};

QuantizedFrame quantize_vector(std::span<const double> z, const QuantizerSpec &spec);

std::uint64_t token_index(std::span<const double> values, const QuantizerSpec &spec);
std::vector<double> token_to_values(std::uint64_t index, const QuantizerSpec &spec);

// Mixed-radix pack/unpack of raw level digits.
std::uint64_t pack_digits(std::span<const int> digits, std::span<const int> levels);
std::vector<int> unpack_digits(std::uint64_t index, std::span<const int> levels);

// Uniform draw from `choices` (the training-time level-count set). Rejection
// sampling on the raw engine output keeps the sequence identical across
// standard libraries.
int sample_level_config(std::mt19937_64 &rng, std::span<const int> choices);

enum class TrainingMode { uniform_noise, straight_through };

// The hybrid scheme picks noise or straight-through with equal probability.
TrainingMode sample_training_mode(std::mt19937_64 &rng);

// Continuous uniform noise in [-1, 1].
double sample_uniform_noise(std::mt19937_64 &rng);

}  // namespace fsqkit::fsq
