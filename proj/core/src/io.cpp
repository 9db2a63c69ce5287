#include "fsqkit/io.hpp"

#include "fsqkit/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fsqkit::io {

namespace {

constexpr std::uint16_t tag_pcm = 1;
constexpr std::uint16_t tag_float = 3;
constexpr std::uint16_t tag_extensible = 0xFFFE;

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint64_t le(std::size_t n, const char *what) {
        if (remaining() < n) throw Error(ErrorKind::parse_error, std::string("truncated ") + what, pos_);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }

    std::string tag() {
        if (remaining() < 4) throw Error(ErrorKind::parse_error, "truncated chunk tag", pos_);
        std::string t(reinterpret_cast<const char *>(bytes_.data() + pos_), 4);
        pos_ += 4;
        return t;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char *what) {
        if (remaining() < n) throw Error(ErrorKind::parse_error, std::string("truncated ") + what, pos_);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void put_le(std::vector<std::uint8_t> &out, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t> &out, const char *tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t float_bits(float f) { return std::bit_cast<std::uint32_t>(f); }
float bits_float(std::uint32_t u) { return std::bit_cast<float>(u); }

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::io_error, "error reading '" + path.string() + "'");
    return bytes;
}

void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io_error, "cannot create '" + path.string() + "'");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io_error, "error writing '" + path.string() + "'");
}

WavAudio wav_parse(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    if (in.tag() != "RIFF") throw Error(ErrorKind::parse_error, "missing RIFF tag", 0);
    const auto riff_size = in.le(4, "RIFF size");
    if (riff_size + 8 > bytes.size()) throw Error(ErrorKind::parse_error, "RIFF size exceeds file length", 4);
    if (in.tag() != "WAVE") throw Error(ErrorKind::parse_error, "missing WAVE tag", 8);

    WavAudio audio;
    bool have_fmt = false;
    std::uint16_t bits = 0;
    std::uint16_t block_align = 0;
    while (in.remaining() > 0) {
        const auto chunk_at = in.offset();
        const auto id = in.tag();
        const auto size = static_cast<std::size_t>(in.le(4, "chunk size"));
        if (id == "fmt ") {
            if (size < 16) throw Error(ErrorKind::parse_error, "fmt chunk too short", chunk_at);
            Reader fmt(in.take(size, "fmt chunk"));
            auto tag = static_cast<std::uint16_t>(fmt.le(2, "format tag"));
            audio.channels = static_cast<std::uint16_t>(fmt.le(2, "channel count"));
            audio.sample_rate = static_cast<std::uint32_t>(fmt.le(4, "sample rate"));
            fmt.le(4, "byte rate");
            block_align = static_cast<std::uint16_t>(fmt.le(2, "block align"));
            bits = static_cast<std::uint16_t>(fmt.le(2, "bits per sample"));
            if (tag == tag_extensible) {
                if (size < 40) throw Error(ErrorKind::parse_error, "extensible fmt chunk too short", chunk_at);
                fmt.le(2, "extension size");
                fmt.le(2, "valid bits");
                fmt.le(4, "channel mask");
                tag = static_cast<std::uint16_t>(fmt.le(2, "sub-format"));
            }
            if (tag == tag_pcm && bits == 16) {
                audio.format = SampleFormat::pcm16;
            } else if (tag == tag_float && bits == 32) {
                audio.format = SampleFormat::float32;
            } else {
                throw Error(ErrorKind::unsupported_format, "only PCM-16 and float-32 WAV are supported (tag " +
                                                               std::to_string(tag) + ", " + std::to_string(bits) +
                                                               " bits)");
            }
            if (audio.channels < 1 || audio.channels > 2) {
                throw Error(ErrorKind::unsupported_format, "only mono and stereo WAV are supported");
            }
            if (audio.sample_rate == 0) throw Error(ErrorKind::parse_error, "zero sample rate", chunk_at + 12);
            if (block_align != audio.channels * bits / 8) {
                throw Error(ErrorKind::parse_error, "inconsistent block alignment", chunk_at + 20);
            }
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw Error(ErrorKind::parse_error, "data chunk before fmt chunk", chunk_at);
            const auto data = in.take(size, "data chunk");
            if (size % block_align != 0) throw Error(ErrorKind::parse_error, "partial sample frame in data chunk", chunk_at);
            const std::size_t width = bits / 8;
            audio.samples.resize(size / width);
            for (std::size_t i = 0; i < audio.samples.size(); ++i) {
                const auto *p = data.data() + i * width;
                if (audio.format == SampleFormat::pcm16) {
                    const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
                    audio.samples[i] = static_cast<double>(v) / 32768.0;
                } else {
                    const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                            (static_cast<std::uint32_t>(p[2]) << 16) |
                                            (static_cast<std::uint32_t>(p[3]) << 24);
                    const float f = bits_float(u);
                    if (!std::isfinite(f)) throw Error(ErrorKind::parse_error, "non-finite float sample", chunk_at + 8 + i * 4);
                    audio.samples[i] = static_cast<double>(f);
                }
            }
            return audio;
        } else {
            in.take(size, "chunk body");
        }
        if (size % 2 == 1 && in.remaining() > 0) in.take(1, "chunk padding");
    }
    throw Error(ErrorKind::parse_error, have_fmt ? "missing data chunk" : "missing fmt chunk", bytes.size());
}

WavAudio wav_read(const std::filesystem::path &path) { return wav_parse(read_file(path)); }

std::vector<std::uint8_t> wav_serialize(const WavAudio &audio, WavWriteStats *stats) {
    if (audio.channels < 1 || audio.channels > 2) throw Error(ErrorKind::unsupported_format, "only mono and stereo WAV are supported");
    if (audio.samples.size() % audio.channels != 0) throw Error(ErrorKind::shape_error, "sample count not a multiple of channels");
    const bool pcm = audio.format == SampleFormat::pcm16;
    const std::uint16_t bits = pcm ? 16 : 32;
    const std::uint32_t block = audio.channels * bits / 8;
    const auto data_bytes = audio.samples.size() * bits / 8;
    if (data_bytes > 0xFFFFFFFFull - 36) throw Error(ErrorKind::capacity_error, "audio too long for a RIFF file");

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_le(out, 36 + data_bytes, 4);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_le(out, 16, 4);
    put_le(out, pcm ? tag_pcm : tag_float, 2);
    put_le(out, audio.channels, 2);
    put_le(out, audio.sample_rate, 4);
    put_le(out, static_cast<std::uint64_t>(audio.sample_rate) * block, 4);
    put_le(out, block, 2);
    put_le(out, bits, 2);
    put_tag(out, "data");
    put_le(out, data_bytes, 4);
    std::size_t clipped = 0;
    for (double s : audio.samples) {
        if (pcm) {
            double v = std::nearbyint(s * 32768.0);
            if (!(v >= -32768.0 && v <= 32767.0)) {
                ++clipped;
                v = std::isnan(v) ? 0.0 : std::clamp(v, -32768.0, 32767.0);
            }
            put_le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), 2);
        } else {
            put_le(out, float_bits(static_cast<float>(s)), 4);
        }
    }
    if (stats) stats->clipped = clipped;
    return out;
}

WavWriteStats wav_write(const std::filesystem::path &path, const WavAudio &audio) {
    WavWriteStats stats;
    write_file(path, wav_serialize(audio, &stats));
    return stats;
}

std::vector<double> downmix(const WavAudio &audio) {
    if (audio.channels <= 1) return audio.samples;
    std::vector<double> mono(audio.frames());
    for (std::size_t i = 0; i < mono.size(); ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < audio.channels; ++c) acc += audio.samples[i * audio.channels + c];
        mono[i] = acc / static_cast<double>(audio.channels);
    }
    return mono;
}

void require_rate(const WavAudio &audio, std::uint32_t rate) {
    if (audio.sample_rate != rate) {
        throw Error(ErrorKind::resample_required, "audio is at " + std::to_string(audio.sample_rate) +
                                                      " Hz; resample to " + std::to_string(rate) +
                                                      " Hz first (no implicit resampling)");
    }
}

std::vector<std::uint8_t> latent_serialize(const LatentFile &l) {
    if (l.dims == 0) throw Error(ErrorKind::invalid_input, "latent dimension must be positive");
    if (l.values.size() != l.frames * l.dims) throw Error(ErrorKind::shape_error, "latent value count does not match header");
    if (l.frame_rate <= Rational(0) || l.frame_rate.num() > 0xFFFFFFFFll || l.frame_rate.den() > 0xFFFFFFFFll) {
        throw Error(ErrorKind::invalid_input, "frame rate must be a positive u32/u32 rational");
    }
    if (l.bounded) {
        for (float v : l.values) {
            if (!(v >= -1.0f && v <= 1.0f)) throw Error(ErrorKind::invalid_input, "bounded latent value outside [-1, 1]");
        }
    }
    std::vector<std::uint8_t> out{'F', 'S', 'Q', 'L', latent_version, static_cast<std::uint8_t>(l.bounded ? 1 : 0), 0, 0};
    put_le(out, l.dims, 4);
    put_le(out, static_cast<std::uint64_t>(l.frame_rate.num()), 4);
    put_le(out, static_cast<std::uint64_t>(l.frame_rate.den()), 4);
    put_le(out, l.frames, 8);
    for (float v : l.values) put_le(out, float_bits(v), 4);
    return out;
}

LatentFile latent_parse(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    if (in.tag() != "FSQL") throw Error(ErrorKind::parse_error, "bad latent magic", 0);
    if (in.le(1, "version") != latent_version) throw Error(ErrorKind::parse_error, "unsupported latent version", 4);
    LatentFile l;
    const auto flags = in.le(1, "flags");
    if (flags > 1) throw Error(ErrorKind::parse_error, "unknown latent flags", 5);
    l.bounded = flags == 1;
    if (in.le(2, "reserved") != 0) throw Error(ErrorKind::parse_error, "reserved bytes must be zero", 6);
    l.dims = static_cast<std::uint32_t>(in.le(4, "dims"));
    if (l.dims == 0) throw Error(ErrorKind::parse_error, "zero latent dimension", 8);
    const auto num = static_cast<std::int64_t>(in.le(4, "rate numerator"));
    const auto den = static_cast<std::int64_t>(in.le(4, "rate denominator"));
    if (num == 0 || den == 0) throw Error(ErrorKind::parse_error, "frame rate must be positive", 12);
    l.frame_rate = Rational(num, den);
    l.frames = in.le(8, "frame count");
    if (l.frames > in.remaining() / 4 / l.dims) throw Error(ErrorKind::parse_error, "truncated latent data", in.offset());
    const auto count = static_cast<std::size_t>(l.frames * l.dims);
    l.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto at = in.offset();
        l.values[i] = bits_float(static_cast<std::uint32_t>(in.le(4, "latent value")));
        if (!std::isfinite(l.values[i])) throw Error(ErrorKind::parse_error, "non-finite latent value", at);
        if (l.bounded && std::abs(l.values[i]) > 1.0f) throw Error(ErrorKind::parse_error, "bounded latent value outside [-1, 1]", at);
    }
    if (in.remaining() != 0) throw Error(ErrorKind::parse_error, "trailing bytes after latent data", in.offset());
    return l;
}

std::string format_token_listing(const bitstream::TokenStream &stream) {
    stream.validate();
    const auto &h = stream.header;
    std::ostringstream out;
    out << "fsqkit-tokens 1\n";
    out << "rate " << h.frame_rate.to_string() << "\n";
    out << "dims " << h.dims << "\n";
    for (const auto &levels : h.stage_levels) {
        out << "stage ";
        for (std::size_t i = 0; i < levels.size(); ++i) out << (i ? "," : "") << levels[i];
        out << "\n";
    }
    out << "frames " << stream.frame_count() << "\n";
    const auto stages = h.stage_count();
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
        out << stream.tokens[i] << ((i + 1) % stages == 0 ? "\n" : " ");
    }
    return out.str();
}

bitstream::TokenStream parse_token_listing(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string &m) {
        throw Error(ErrorKind::parse_error, "token listing line " + std::to_string(line_no) + ": " + m);
    };
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };
    auto keyed = [&](const std::string &key) -> std::string {
        if (!next()) fail("missing '" + key + "' line");
        if (line.rfind(key + " ", 0) != 0) fail("expected '" + key + "'");
        return line.substr(key.size() + 1);
    };
    auto to_u64 = [&](const std::string &s) -> std::uint64_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) fail("expected an unsigned integer, got '" + s + "'");
        try {
            return std::stoull(s);
        } catch (const std::exception &) {
            fail("integer out of range: '" + s + "'");
        }
        return 0;
    };

    if (!next() || line != "fsqkit-tokens 1") fail("missing 'fsqkit-tokens 1' header");
    bitstream::TokenStream stream;
    try {
        stream.header.frame_rate = Rational::parse(keyed("rate"));
    } catch (const Error &e) {
        fail(e.what());
    }
    const auto dims = to_u64(keyed("dims"));
    if (dims < 1 || dims > 255) fail("dims must be in [1, 255]");
    stream.header.dims = static_cast<int>(dims);
    std::uint64_t frames = 0;
    while (true) {
        if (!next()) fail("missing 'frames' line");
        if (line.rfind("stage ", 0) == 0) {
            std::vector<int> levels;
            std::stringstream ss(line.substr(6));
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto v = to_u64(item);
                if (v > 0x7FFFFFFF) fail("level count too large");
                levels.push_back(static_cast<int>(v));
            }
            stream.header.stage_levels.push_back(std::move(levels));
        } else if (line.rfind("frames ", 0) == 0) {
            frames = to_u64(line.substr(7));
            break;
        } else {
            fail("expected 'stage' or 'frames'");
        }
    }
    const auto stages = stream.header.stage_count();
    if (stages == 0) fail("no stages declared");
    for (std::uint64_t f = 0; f < frames; ++f) {
        if (!next()) fail("expected " + std::to_string(frames) + " frame lines");
        std::istringstream ss(line);
        std::string tok;
        std::size_t n = 0;
        while (ss >> tok) {
            stream.tokens.push_back(to_u64(tok));
            ++n;
        }
        if (n != stages) fail("expected " + std::to_string(stages) + " tokens per frame");
    }
    if (next()) fail("unexpected content after the last frame");
    try {
        stream.validate();
    } catch (const Error &e) {
        fail(e.what());
    }
    return stream;
}

}  // namespace fsqkit::io
