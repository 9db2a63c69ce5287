#include "fsqkit/bitrate.hpp"

#include "fsqkit/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace fsqkit::bitstream {

int bits_per_token(std::uint64_t codebook_size) {
    if (codebook_size < 2) {
        throw Error(ErrorKind::invalid_codebook,
                    "codebook size must be at least 2, got " + std::to_string(codebook_size));
    }
    return std::bit_width(codebook_size - 1);
}

Rational bps(const Rational &frame_rate, std::span<const std::uint64_t> codebook_sizes) {
    if (frame_rate <= Rational(0)) {
        throw Error(ErrorKind::invalid_config, "frame rate must be positive");
    }
    std::int64_t bits = 0;
    for (auto k : codebook_sizes) bits += bits_per_token(k);
    return frame_rate * Rational(bits);
}

std::uint64_t codebook_size(int levels, int dims) {
    if (levels < 2 || dims < 1) {
        throw Error(ErrorKind::invalid_codebook, "need levels >= 2 and dims >= 1");
    }
    std::uint64_t k = 1;
    for (int i = 0; i < dims; ++i) {
        if (__builtin_mul_overflow(k, static_cast<std::uint64_t>(levels), &k)) {
            throw Error(ErrorKind::capacity_error, "codebook size overflows 64 bits");
        }
    }
    return k;
}

CodebookHistogram::CodebookHistogram(std::uint64_t codebook_size) : size_(codebook_size) {
    if (codebook_size < 2) {
        throw Error(ErrorKind::invalid_codebook, "codebook size must be at least 2");
    }
}

void CodebookHistogram::add(std::uint64_t symbol, std::uint64_t count) {
    if (symbol >= size_) {
        throw Error(ErrorKind::out_of_range, "symbol " + std::to_string(symbol) + " outside codebook");
    }
    if (count == 0) return;
    counts_[symbol] += count;
    total_ += count;
}

void CodebookHistogram::merge(const CodebookHistogram &other) {
    if (other.size_ != size_) {
        throw Error(ErrorKind::shape_error, "cannot merge histograms over different codebooks");
    }
    for (const auto &[symbol, count] : other.counts_) add(symbol, count);
}

double CodebookHistogram::probability(std::uint64_t symbol) const {
    if (total_ == 0) return 0.0;
    auto it = counts_.find(symbol);
    return it == counts_.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total_);
}

double entropy_bits(const CodebookHistogram &h) {
    if (h.total() == 0) {
        throw Error(ErrorKind::no_data, "histogram is empty");
    }
    const double total = static_cast<double>(h.total());
    double H = 0.0;
    for (const auto &[symbol, count] : h.counts()) {
        const double p = static_cast<double>(count) / total;
        H -= p * std::log2(p);
    }
    return H;
}

double normalized_entropy(const CodebookHistogram &h) {
    const double H = entropy_bits(h);
    return std::clamp(H / std::log2(static_cast<double>(h.codebook_size())), 0.0, 1.0);
}

}  // namespace fsqkit::bitstream
