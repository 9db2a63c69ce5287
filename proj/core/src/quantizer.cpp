#include "fsqkit/quantizer.hpp"

#include "fsqkit/error.hpp"

#include <cmath>
#include <string>

namespace fsqkit::fsq {

namespace {

void require_levels(int levels) {
    if (levels < 2) {
        throw Error(ErrorKind::invalid_level_count,
                    "level count must be at least 2, got " + std::to_string(levels));
    }
}

std::uint64_t bounded_draw(std::mt19937_64 &rng, std::uint64_t n) {
    // 2^64 - threshold is a multiple of n, so accepted draws are unbiased mod n.
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t r = rng();
    while (r < threshold) r = rng();
    return r % n;
}

}  // namespace

LevelSet level_positions(int levels) {
    require_levels(levels);
    LevelSet set{levels, {}};
    set.positions.reserve(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        set.positions.push_back(digit_value(i, levels));
    }
    return set;
}

double digit_value(int digit, int levels) {
    // Written so the middle digit of odd L is exactly 0 and the ends exactly +-1.
    return static_cast<double>(2 * digit - (levels - 1)) / static_cast<double>(levels - 1);
}

double quantize_scalar(double x, int levels) {
    require_levels(levels);
    if (!std::isfinite(x)) {
        throw Error(ErrorKind::invalid_input, "quantizer input is not finite");
    }
    const double steps = static_cast<double>(levels - 1);
    double digit = std::floor(steps * (std::tanh(x) + 1.0) / 2.0 + 0.5);
    // tanh saturates to exactly 1.0 in floating point, which lands on digit L-1.
    if (digit > steps) digit = steps;
    if (digit < 0.0) digit = 0.0;
    return digit_value(static_cast<int>(digit), levels);
}

double noisy_quantize(double x, int levels, double u) {
    require_levels(levels);
    if (!(u >= -1.0 && u <= 1.0)) {
        throw Error(ErrorKind::invalid_noise, "noise sample must lie in [-1, 1]");
    }
    if (!std::isfinite(x)) {
        throw Error(ErrorKind::invalid_input, "quantizer input is not finite");
    }
    return std::tanh(x) + u / static_cast<double>(levels - 1);
}

int level_digit(double value, int levels) {
    require_levels(levels);
    if (!std::isfinite(value) || value < -1.0 || value > 1.0) {
        throw Error(ErrorKind::off_lattice, "value outside [-1, 1]");
    }
    const double d = std::round(static_cast<double>(levels - 1) * (value + 1.0) / 2.0);
    const int digit = static_cast<int>(d);
    if (digit_value(digit, levels) != value) {
        throw Error(ErrorKind::off_lattice,
                    "value is not on the " + std::to_string(levels) + "-level lattice");
    }
    return digit;
}

QuantizerSpec::QuantizerSpec(std::vector<int> levels, Rational frame_rate)
    : levels_(std::move(levels)), frame_rate_(frame_rate) {
    if (levels_.empty()) {
        throw Error(ErrorKind::invalid_config, "quantizer needs at least one dimension");
    }
    if (frame_rate_ <= Rational(0)) {
        throw Error(ErrorKind::invalid_config, "frame rate must be positive");
    }
    for (int l : levels_) {
        require_levels(l);
        if (__builtin_mul_overflow(codebook_size_, static_cast<std::uint64_t>(l), &codebook_size_)) {
            throw Error(ErrorKind::capacity_error, "codebook size overflows 64 bits");
        }
    }
}

QuantizerSpec QuantizerSpec::uniform(int dims, int levels, Rational frame_rate) {
    if (dims < 1) {
        throw Error(ErrorKind::invalid_config, "quantizer needs at least one dimension");
    }
    return QuantizerSpec(std::vector<int>(static_cast<std::size_t>(dims), levels), frame_rate);
}

std::uint64_t pack_digits(std::span<const int> digits, std::span<const int> levels) {
    if (digits.size() != levels.size()) {
        throw Error(ErrorKind::shape_error, "digit count does not match dimension count");
    }
    std::uint64_t index = 0;
    for (std::size_t j = digits.size(); j-- > 0;) {
        if (digits[j] < 0 || digits[j] >= levels[j]) {
            throw Error(ErrorKind::out_of_range, "digit outside its level range");
        }
        index = index * static_cast<std::uint64_t>(levels[j]) + static_cast<std::uint64_t>(digits[j]);
    }
    return index;
}

std::vector<int> unpack_digits(std::uint64_t index, std::span<const int> levels) {
    std::vector<int> digits(levels.size());
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const auto radix = static_cast<std::uint64_t>(levels[j]);
        digits[j] = static_cast<int>(index % radix);
        index /= radix;
    }
    if (index != 0) {
        throw Error(ErrorKind::out_of_range, "token index exceeds codebook size");
    }
    return digits;
}

std::uint64_t token_index(std::span<const double> values, const QuantizerSpec &spec) {
    if (values.size() != spec.levels().size()) {
        throw Error(ErrorKind::shape_error, "value count does not match quantizer dimensions");
    }
    std::vector<int> digits(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        digits[j] = level_digit(values[j], spec.levels()[j]);
    }
    return pack_digits(digits, spec.levels());
}

std::vector<double> token_to_values(std::uint64_t index, const QuantizerSpec &spec) {
    if (index >= spec.codebook_size()) {
        throw Error(ErrorKind::out_of_range, "token index " + std::to_string(index) +
                                                 " exceeds codebook size " +
                                                 std::to_string(spec.codebook_size()));
    }
    const auto digits = unpack_digits(index, spec.levels());
    std::vector<double> values(digits.size());
    for (std::size_t j = 0; j < digits.size(); ++j) {
        values[j] = digit_value(digits[j], spec.levels()[j]);
    }
    return values;
}

QuantizedFrame quantize_vector(std::span<const double> z, const QuantizerSpec &spec) {
    if (z.size() != spec.levels().size()) {
        throw Error(ErrorKind::shape_error, "latent has " + std::to_string(z.size()) +
                                                " dimensions, quantizer expects " +
                                                std::to_string(spec.dims()));
    }
    QuantizedFrame frame;
    frame.values.resize(z.size());
    std::vector<int> digits(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        frame.values[j] = quantize_scalar(z[j], spec.levels()[j]);
        digits[j] = level_digit(frame.values[j], spec.levels()[j]);
    }
    frame.index = pack_digits(digits, spec.levels());
    return frame;
}

int sample_level_config(std::mt19937_64 &rng, std::span<const int> choices) {
    if (choices.empty()) {
        throw Error(ErrorKind::invalid_config, "level choice set is empty");
    }
    for (int c : choices) require_levels(c);
    return choices[bounded_draw(rng, choices.size())];
}

TrainingMode sample_training_mode(std::mt19937_64 &rng) {
    return (rng() >> 63) ? TrainingMode::straight_through : TrainingMode::uniform_noise;
}

double sample_uniform_noise(std::mt19937_64 &rng) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    return 2.0 * unit - 1.0;
}

}  // namespace fsqkit::fsq
