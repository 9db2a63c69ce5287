#pragma once

#include "fsqkit/bitrate.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fsqkit::bitstream {

class BitWriter;
class BitReader;
class HuffmanTable;

HuffmanTable huffman_build(const CodebookHistogram &h);

// Canonical prefix code. Only code lengths are stored; codewords follow from
// sorting symbols by (length, symbol) and counting upwards.
class HuffmanTable {
public:
    HuffmanTable() = default;

    // Builds the canonical table from explicit lengths (0 = no code).
    // Throws coverage_error when the lengths violate the Kraft inequality.
    static HuffmanTable from_lengths(std::span<const std::uint8_t> lengths_by_symbol);

    int length(std::uint64_t symbol) const;   // 0 when the symbol has no code
    bool has_code(std::uint64_t symbol) const { return length(symbol) > 0; }

    std::uint64_t codeword(std::uint64_t symbol) const;

    // Dense length array indexed by symbol, size = max coded symbol + 1.
    std::vector<std::uint8_t> dense_lengths() const;

    // (symbol, length) in canonical order.
    const std::vector<std::pair<std::uint64_t, int>> &canonical() const noexcept { return order_; }

    double kraft_sum() const;
    std::size_t symbol_count() const noexcept { return order_.size(); }

    void encode(std::uint64_t symbol, BitWriter &out) const;
    std::uint64_t decode(BitReader &in) const;

private:
    friend HuffmanTable huffman_build(const CodebookHistogram &h);

    void finalize();
    std::ptrdiff_t find(std::uint64_t symbol) const;

    std::vector<std::pair<std::uint64_t, int>> order_;
    std::vector<std::uint64_t> codes_;             // parallel to order_
    std::vector<std::pair<std::uint64_t, std::size_t>> by_symbol_;
    std::vector<std::uint64_t> first_code_;        // per length
    std::vector<std::size_t> first_index_;         // per length, into order_
    std::vector<std::size_t> count_;               // per length
};

// Optimal prefix code over the observed symbols. A histogram with a single
// observed symbol gets a 1-bit code.
HuffmanTable huffman_build(const CodebookHistogram &h);

// sum_x p(x) l(x) in bits per token.
double average_code_length(const CodebookHistogram &h, const HuffmanTable &table);

// tokens_per_second * sum_x p(x) l(x).
double huffman_bitrate(const CodebookHistogram &h, const HuffmanTable &table,
                       const Rational &tokens_per_second);

}  // namespace fsqkit::bitstream
