#pragma once

// FSQB token container.
//
// Layout (integers little-endian, payload bits MSB-first):
//
//   "FSQB" | u8 version=1 | u8 mode (0 raw, 1 huffman) | u8 d | u8 n_stages
//   | per stage: u8 n_levels, n_levels x u32 level count
//   | u32 frame_rate numerator | u32 frame_rate denominator | u64 frame count
//   | huffman mode only: u32 symbol count, symbol count x u8 code length
//   | payload, zero-padded to a byte boundary
//   | u32 CRC-32 of every preceding byte
//
// Tokens are stored frame-major (frame 0 stage 0, frame 0 stage 1, ...).
// Raw mode writes each token with ceil(log2 k_stage) bits; huffman mode uses a
// single canonical code shared by all stages.

#include "fsqkit/bitrate.hpp"
#include "fsqkit/huffman.hpp"
#include "fsqkit/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fsqkit::bitstream {

inline constexpr std::uint8_t container_version = 1;

enum class PackMode : std::uint8_t { raw = 0, huffman = 1 };

struct StreamHeader {
    Rational frame_rate{25};
    int dims = 0;
    std::vector<std::vector<int>> stage_levels;  // level counts per stage

    std::size_t stage_count() const noexcept { return stage_levels.size(); }
    std::uint64_t stage_codebook(std::size_t stage) const;

    friend bool operator==(const StreamHeader &, const StreamHeader &) = default;
};

struct TokenStream {
    StreamHeader header;
    std::vector<std::uint64_t> tokens;  // frame-major, stage_count() per frame

    std::uint64_t frame_count() const;
    std::uint64_t token(std::uint64_t frame, std::size_t stage) const;

    // Checks the header and every token against its stage codebook.
    void validate() const;

    friend bool operator==(const TokenStream &, const TokenStream &) = default;
};

std::vector<std::uint8_t> pack_stream(const TokenStream &stream, PackMode mode);

// Throws parse_error (with byte offset) on any malformed or corrupted input.
TokenStream unpack_stream(std::span<const std::uint8_t> bytes);

struct PackedLayout {
    std::size_t header_bytes = 0;   // up to and including the Huffman table
    std::size_t payload_bytes = 0;
    std::size_t trailer_bytes = 4;
};

// Section sizes of a packed buffer (parses it fully).
PackedLayout packed_layout(std::span<const std::uint8_t> bytes);

// One histogram per stage, and all stages pooled over the largest codebook.
std::vector<CodebookHistogram> stage_histograms(const TokenStream &stream);
CodebookHistogram pooled_histogram(const TokenStream &stream);

}  // namespace fsqkit::bitstream
