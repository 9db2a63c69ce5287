#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fsqkit::bitstream {

// Most-significant-bit-first bit packing.
class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t> &out) : out_(out) {}

    void write(std::uint64_t value, int bits);
    // Zero-pads the final partial byte.
    void flush();
    std::uint64_t bits_written() const noexcept { return written_; }

private:
    std::vector<std::uint8_t> &out_;
    std::uint8_t pending_ = 0;
    int pending_bits_ = 0;
    std::uint64_t written_ = 0;
};

class BitReader {
public:
    // `base_offset` is the position of data[0] in the enclosing buffer, used
    // to report byte offsets in errors.
    BitReader(std::span<const std::uint8_t> data, std::size_t base_offset = 0)
        : data_(data), base_(base_offset) {}

    std::uint64_t read(int bits);
    int read_bit();

    std::uint64_t bit_position() const noexcept { return pos_; }
    std::size_t byte_offset() const noexcept { return base_ + static_cast<std::size_t>(pos_ / 8); }
    std::uint64_t bits_remaining() const noexcept { return data_.size() * 8 - pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t base_;
    std::uint64_t pos_ = 0;
};

}  // namespace fsqkit::bitstream
