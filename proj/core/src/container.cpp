#include "fsqkit/container.hpp"

#include "fsqkit/bitio.hpp"
#include "fsqkit/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <string>

namespace fsqkit::bitstream {

namespace {

constexpr std::array<std::uint8_t, 4> magic{'F', 'S', 'Q', 'B'};

void put_u8(std::vector<std::uint8_t> &out, std::uint8_t v) { out.push_back(v); }

void put_le(std::vector<std::uint8_t> &out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t le(int n, const char *what) {
        if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
            throw Error(ErrorKind::parse_error, std::string("truncated while reading ") + what, pos_);
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct Parsed {
    TokenStream stream;
    PackedLayout layout;
};

void check_header(const StreamHeader &h) {
    if (h.dims < 1 || h.dims > 255) {
        throw Error(ErrorKind::invalid_config, "latent dimension must be in [1, 255]");
    }
    if (h.stage_levels.empty() || h.stage_levels.size() > 255) {
        throw Error(ErrorKind::invalid_config, "stage count must be in [1, 255]");
    }
    if (h.frame_rate <= Rational(0) || h.frame_rate.num() > 0xFFFFFFFFll || h.frame_rate.den() > 0xFFFFFFFFll) {
        throw Error(ErrorKind::invalid_config, "frame rate must be a positive u32/u32 rational");
    }
    for (std::size_t s = 0; s < h.stage_levels.size(); ++s) {
        const auto &levels = h.stage_levels[s];
        if (levels.size() != static_cast<std::size_t>(h.dims)) {
            throw Error(ErrorKind::invalid_config, "stage " + std::to_string(s) + " lists " +
                                                       std::to_string(levels.size()) + " level counts for " +
                                                       std::to_string(h.dims) + " dimensions");
        }
        (void)h.stage_codebook(s);
    }
}

Parsed parse(std::span<const std::uint8_t> bytes) {
    Cursor in(bytes);
    for (std::size_t i = 0; i < magic.size(); ++i) {
        if (in.le(1, "magic") != magic[i]) {
            throw Error(ErrorKind::parse_error, "bad magic", i);
        }
    }
    if (const auto version = in.le(1, "version"); version != container_version) {
        throw Error(ErrorKind::parse_error, "unsupported version " + std::to_string(version), in.pos() - 1);
    }
    const auto mode_byte = in.le(1, "mode");
    if (mode_byte > 1) {
        throw Error(ErrorKind::parse_error, "unknown mode " + std::to_string(mode_byte), in.pos() - 1);
    }
    const auto mode = static_cast<PackMode>(mode_byte);

    Parsed out;
    StreamHeader &h = out.stream.header;
    h.dims = static_cast<int>(in.le(1, "dimension"));
    if (h.dims == 0) throw Error(ErrorKind::parse_error, "zero latent dimension", in.pos() - 1);
    const auto stages = in.le(1, "stage count");
    if (stages == 0) throw Error(ErrorKind::parse_error, "zero stages", in.pos() - 1);

    std::vector<int> stage_bits;
    std::uint64_t bits_per_frame = 0;
    for (std::uint64_t s = 0; s < stages; ++s) {
        const auto n = in.le(1, "stage level count");
        if (n != static_cast<std::uint64_t>(h.dims)) {
            throw Error(ErrorKind::parse_error, "stage level list does not match the dimension", in.pos() - 1);
        }
        std::vector<int> levels;
        std::uint64_t k = 1;
        for (std::uint64_t j = 0; j < n; ++j) {
            const auto at = in.pos();
            const auto l = in.le(4, "level count");
            if (l < 2 || l > 0x7FFFFFFF) {
                throw Error(ErrorKind::parse_error, "invalid level count " + std::to_string(l), at);
            }
            if (__builtin_mul_overflow(k, l, &k)) {
                throw Error(ErrorKind::parse_error, "stage codebook overflows 64 bits", at);
            }
            levels.push_back(static_cast<int>(l));
        }
        h.stage_levels.push_back(std::move(levels));
        stage_bits.push_back(bits_per_token(k));
        bits_per_frame += static_cast<std::uint64_t>(stage_bits.back());
    }

    const auto rate_at = in.pos();
    const auto num = in.le(4, "frame rate numerator");
    const auto den = in.le(4, "frame rate denominator");
    if (num == 0 || den == 0) {
        throw Error(ErrorKind::parse_error, "frame rate must be positive", rate_at);
    }
    h.frame_rate = Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
    if (h.frame_rate.num() != static_cast<std::int64_t>(num)) {
        throw Error(ErrorKind::parse_error, "frame rate not in lowest terms", rate_at);
    }
    const auto frames_at = in.pos();
    const auto frames = in.le(8, "frame count");
    if (in.remaining() < 4) {
        throw Error(ErrorKind::parse_error, "missing checksum trailer", in.pos());
    }
    std::uint64_t token_total = 0;
    if (__builtin_mul_overflow(frames, stages, &token_total)) {
        throw Error(ErrorKind::parse_error, "frame count overflows", frames_at);
    }

    HuffmanTable table;
    if (mode == PackMode::huffman) {
        const auto count_at = in.pos();
        const auto symbols = in.le(4, "symbol count");
        if (symbols > in.remaining()) {
            throw Error(ErrorKind::parse_error, "symbol table truncated", count_at);
        }
        if (frames > 0 && symbols == 0) {
            throw Error(ErrorKind::parse_error, "empty code table for non-empty stream", count_at);
        }
        if (frames == 0 && symbols != 0) {
            throw Error(ErrorKind::parse_error, "code table present for empty stream", count_at);
        }
        try {
            table = HuffmanTable::from_lengths(bytes.subspan(in.pos(), static_cast<std::size_t>(symbols)));
        } catch (const Error &e) {
            throw Error(ErrorKind::parse_error, std::string("bad code table: ") + e.what(), in.pos());
        }
        if (frames > 0 && table.symbol_count() == 0) {
            throw Error(ErrorKind::parse_error, "code table has no symbols", in.pos());
        }
        in.skip(static_cast<std::size_t>(symbols));
    }
    out.layout.header_bytes = in.pos();

    const std::size_t payload_avail = in.remaining() - 4;
    const std::uint64_t avail_bits = static_cast<std::uint64_t>(payload_avail) * 8;
    if (mode == PackMode::raw) {
        std::uint64_t need = 0;
        if (__builtin_mul_overflow(frames, bits_per_frame, &need) || need > avail_bits) {
            throw Error(ErrorKind::parse_error, "payload shorter than frame count implies", in.pos());
        }
    } else if (token_total > avail_bits) {
        throw Error(ErrorKind::parse_error, "payload shorter than frame count implies", in.pos());
    }

    std::vector<std::uint64_t> codebooks;
    for (std::size_t s = 0; s < h.stage_levels.size(); ++s) codebooks.push_back(h.stage_codebook(s));

    BitReader reader(bytes.subspan(in.pos(), payload_avail), in.pos());
    auto &tokens = out.stream.tokens;
    tokens.reserve(static_cast<std::size_t>(token_total));
    for (std::uint64_t f = 0; f < frames; ++f) {
        for (std::size_t s = 0; s < stage_bits.size(); ++s) {
            const auto at = reader.byte_offset();
            const auto token = mode == PackMode::raw ? reader.read(stage_bits[s]) : table.decode(reader);
            if (token >= codebooks[s]) {
                throw Error(ErrorKind::parse_error,
                            "token " + std::to_string(token) + " outside stage " + std::to_string(s) +
                                " codebook",
                            at);
            }
            tokens.push_back(token);
        }
    }
    const std::uint64_t used_bits = reader.bit_position();
    const auto pad = static_cast<int>((8 - used_bits % 8) % 8);
    if (pad > 0 && reader.read(pad) != 0) {
        throw Error(ErrorKind::parse_error, "non-zero padding bits", reader.byte_offset());
    }
    const std::size_t payload_bytes = static_cast<std::size_t>((used_bits + 7) / 8);
    out.layout.payload_bytes = payload_bytes;
    in.skip(payload_bytes);
    if (in.remaining() != 4) {
        throw Error(ErrorKind::parse_error, "unexpected bytes after payload", in.pos());
    }
    const auto stored = static_cast<std::uint32_t>(in.le(4, "checksum"));
    if (stored != crc_of(bytes.first(bytes.size() - 4))) {
        throw Error(ErrorKind::parse_error, "checksum mismatch", bytes.size() - 4);
    }
    return out;
}

}  // namespace

std::uint64_t StreamHeader::stage_codebook(std::size_t stage) const {
    std::uint64_t k = 1;
    for (int l : stage_levels.at(stage)) {
        if (l < 2) throw Error(ErrorKind::invalid_config, "level count below 2");
        if (__builtin_mul_overflow(k, static_cast<std::uint64_t>(l), &k)) {
            throw Error(ErrorKind::capacity_error, "stage codebook overflows 64 bits");
        }
    }
    return k;
}

std::uint64_t TokenStream::frame_count() const {
    const auto stages = header.stage_count();
    return stages == 0 ? 0 : tokens.size() / stages;
}

std::uint64_t TokenStream::token(std::uint64_t frame, std::size_t stage) const {
    return tokens.at(static_cast<std::size_t>(frame) * header.stage_count() + stage);
}

void TokenStream::validate() const {
    check_header(header);
    const auto stages = header.stage_count();
    if (tokens.size() % stages != 0) {
        throw Error(ErrorKind::shape_error, "token count is not a multiple of the stage count");
    }
    std::vector<std::uint64_t> codebooks;
    for (std::size_t s = 0; s < stages; ++s) codebooks.push_back(header.stage_codebook(s));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] >= codebooks[i % stages]) {
            throw Error(ErrorKind::out_of_range, "token " + std::to_string(tokens[i]) +
                                                     " outside stage codebook");
        }
    }
}

std::vector<std::uint8_t> pack_stream(const TokenStream &stream, PackMode mode) {
    stream.validate();
    const auto &h = stream.header;
    std::vector<std::uint8_t> out(magic.begin(), magic.end());
    put_u8(out, container_version);
    put_u8(out, static_cast<std::uint8_t>(mode));
    put_u8(out, static_cast<std::uint8_t>(h.dims));
    put_u8(out, static_cast<std::uint8_t>(h.stage_count()));
    std::vector<int> stage_bits;
    for (std::size_t s = 0; s < h.stage_count(); ++s) {
        put_u8(out, static_cast<std::uint8_t>(h.stage_levels[s].size()));
        for (int l : h.stage_levels[s]) put_le(out, static_cast<std::uint64_t>(l), 4);
        stage_bits.push_back(bits_per_token(h.stage_codebook(s)));
    }
    put_le(out, static_cast<std::uint64_t>(h.frame_rate.num()), 4);
    put_le(out, static_cast<std::uint64_t>(h.frame_rate.den()), 4);
    put_le(out, stream.frame_count(), 8);

    BitWriter bits(out);
    if (mode == PackMode::raw) {
        for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
            bits.write(stream.tokens[i], stage_bits[i % stage_bits.size()]);
        }
    } else {
        HuffmanTable table;
        if (!stream.tokens.empty()) {
            const auto hist = pooled_histogram(stream);
            table = huffman_build(hist);
        }
        const auto lengths = table.dense_lengths();
        if (lengths.size() > 0xFFFFFFFFu) {
            throw Error(ErrorKind::capacity_error, "symbol table too large for the container");
        }
        put_le(out, lengths.size(), 4);
        out.insert(out.end(), lengths.begin(), lengths.end());
        for (auto t : stream.tokens) table.encode(t, bits);
    }
    bits.flush();
    put_le(out, crc_of(out), 4);
    return out;
}

TokenStream unpack_stream(std::span<const std::uint8_t> bytes) {
    return parse(bytes).stream;
}

PackedLayout packed_layout(std::span<const std::uint8_t> bytes) {
    return parse(bytes).layout;
}

std::vector<CodebookHistogram> stage_histograms(const TokenStream &stream) {
    std::vector<CodebookHistogram> hists;
    const auto stages = stream.header.stage_count();
    for (std::size_t s = 0; s < stages; ++s) hists.emplace_back(stream.header.stage_codebook(s));
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) hists[i % stages].add(stream.tokens[i]);
    return hists;
}

CodebookHistogram pooled_histogram(const TokenStream &stream) {
    std::uint64_t largest = 2;
    for (std::size_t s = 0; s < stream.header.stage_count(); ++s) {
        largest = std::max(largest, stream.header.stage_codebook(s));
    }
    CodebookHistogram hist(largest);
    for (auto t : stream.tokens) hist.add(t);
    return hist;
}

}  // namespace fsqkit::bitstream
