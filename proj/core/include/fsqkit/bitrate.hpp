#pragma once

#include "fsqkit/rational.hpp"

#include <cstdint>
#include <map>
#include <span>

namespace fsqkit::bitstream {

// ceil(log2 k) for k >= 2, computed on integers.
int bits_per_token(std::uint64_t codebook_size);

// f_r * sum_i ceil(log2 k_i), exact.
Rational bps(const Rational &frame_rate, std::span<const std::uint64_t> codebook_sizes);

// Codebook size L^d with overflow checking.
std::uint64_t codebook_size(int levels, int dims);

// Sparse token counts over a codebook of size N. Unobserved symbols still
// count towards N when normalizing entropy.
class CodebookHistogram {
public:
    explicit CodebookHistogram(std::uint64_t codebook_size);

    void add(std::uint64_t symbol, std::uint64_t count = 1);
    void merge(const CodebookHistogram &other);

    std::uint64_t codebook_size() const noexcept { return size_; }
    std::uint64_t total() const noexcept { return total_; }
    const std::map<std::uint64_t, std::uint64_t> &counts() const noexcept { return counts_; }
    double probability(std::uint64_t symbol) const;

private:
    std::uint64_t size_;
    std::uint64_t total_ = 0;
    std::map<std::uint64_t, std::uint64_t> counts_;
};

// Shannon entropy in bits of the observed distribution.
double entropy_bits(const CodebookHistogram &h);

// entropy / log2 N, in [0, 1].
double normalized_entropy(const CodebookHistogram &h);

}  // namespace fsqkit::bitstream
