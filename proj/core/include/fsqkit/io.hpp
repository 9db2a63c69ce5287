#pragma once

// File formats used by the command-line tool: RIFF/WAVE audio, the flat
// latent file and a plain-text token listing.
//
// Latent file layout (little-endian):
//   "FSQL" | u8 version=1 | u8 flags | 2 reserved zero bytes | u32 dims
//   | u32 frame_rate numerator | u32 frame_rate denominator | u64 frames
//   | frames x dims f32 values, frame-major
// Flag bit 0 marks bounded values (already passed through tanh, in [-1, 1]);
// otherwise values are raw pre-tanh encoder outputs. Other flag bits must be 0.
//
// Token listing:
//   fsqkit-tokens 1
//   rate <rational>
//   dims <d>
//   stage <L0>,<L1>,...        (one line per stage)
//   frames <n>
//   <token stage 0> <token stage 1> ...   (one line per frame)

#include "fsqkit/container.hpp"
#include "fsqkit/rational.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fsqkit::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

enum class SampleFormat { pcm16, float32 };

struct WavAudio {
    std::uint32_t sample_rate = 16000;
    std::uint16_t channels = 1;
    SampleFormat format = SampleFormat::pcm16;
    std::vector<double> samples;  // interleaved, PCM scaled by 1/32768

    std::size_t frames() const { return channels ? samples.size() / channels : 0; }
};

// Throws parse_error (with byte offset) on malformed or truncated input and
// unsupported_format for codecs other than PCM-16 and float-32 or more than
// two channels.
WavAudio wav_parse(std::span<const std::uint8_t> bytes);
WavAudio wav_read(const std::filesystem::path &path);

struct WavWriteStats {
    std::size_t clipped = 0;  // PCM samples saturated to the i16 range
};

std::vector<std::uint8_t> wav_serialize(const WavAudio &audio, WavWriteStats *stats = nullptr);
WavWriteStats wav_write(const std::filesystem::path &path, const WavAudio &audio);

// Channel average; returns the samples unchanged for mono input.
std::vector<double> downmix(const WavAudio &audio);

// Throws resample_required unless the audio is at `rate` Hz.
void require_rate(const WavAudio &audio, std::uint32_t rate);

inline constexpr std::uint8_t latent_version = 1;

struct LatentFile {
    Rational frame_rate{25};
    std::uint32_t dims = 0;
    std::uint64_t frames = 0;
    bool bounded = false;
    std::vector<float> values;  // frames x dims
};

std::vector<std::uint8_t> latent_serialize(const LatentFile &latents);
LatentFile latent_parse(std::span<const std::uint8_t> bytes);

std::string format_token_listing(const bitstream::TokenStream &stream);
bitstream::TokenStream parse_token_listing(const std::string &text);

}  // namespace fsqkit::io
