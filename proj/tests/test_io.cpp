#include "fsqkit/io.hpp"

#include "fsqkit/quantizer.hpp"

#include "support.hpp"

#include <cstring>
#include <filesystem>

namespace fsqkit::io {
namespace {

using testing::noise;

void put(std::vector<std::uint8_t> &b, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put(std::vector<std::uint8_t> &b, const char *tag) { b.insert(b.end(), tag, tag + 4); }

// Hand-assembled canonical 44-byte-header WAV.
std::vector<std::uint8_t> make_wav(std::uint16_t tag, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                                   const std::vector<std::uint8_t> &data) {
    std::vector<std::uint8_t> b;
    put(b, "RIFF");
    put(b, 36 + data.size(), 4);
    put(b, "WAVE");
    put(b, "fmt ");
    put(b, 16, 4);
    put(b, tag, 2);
    put(b, channels, 2);
    put(b, rate, 4);
    put(b, rate * channels * bits / 8, 4);
    put(b, channels * bits / 8, 2);
    put(b, bits, 2);
    put(b, "data");
    put(b, data.size(), 4);
    b.insert(b.end(), data.begin(), data.end());
    return b;
}

std::vector<std::uint8_t> pcm_bytes(const std::vector<std::int16_t> &s) {
    std::vector<std::uint8_t> b;
    for (auto v : s) put(b, static_cast<std::uint16_t>(v), 2);
    return b;
}

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("fsqkit_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }
    std::filesystem::path dir_;
};

// ---- WAV ----

TEST(Wav, ParsesHandBuiltPcm16) {
    const auto bytes = make_wav(1, 1, 16000, 16, pcm_bytes({0, 16384, -32768, 32767}));
    const auto a = wav_parse(bytes);
    EXPECT_EQ(a.sample_rate, 16000u);
    EXPECT_EQ(a.channels, 1u);
    EXPECT_EQ(a.format, SampleFormat::pcm16);
    EXPECT_EQ(a.samples, (std::vector<double>{0.0, 0.5, -1.0, 32767.0 / 32768.0}));
}

TEST(Wav, SerializeMatchesHandBuiltBytes) {
    WavAudio a;
    a.samples = {0.0, 0.5, -1.0, 32767.0 / 32768.0};
    EXPECT_EQ(wav_serialize(a), make_wav(1, 1, 16000, 16, pcm_bytes({0, 16384, -32768, 32767})));
}

TEST(Wav, Pcm16RoundTripIsExactOnTheGrid) {
    std::mt19937_64 rng(1);
    WavAudio a;
    a.channels = 2;
    a.sample_rate = 22050;
    for (int i = 0; i < 2000; ++i) a.samples.push_back(static_cast<double>(static_cast<std::int16_t>(rng())) / 32768.0);
    const auto b = wav_parse(wav_serialize(a));
    EXPECT_EQ(b.samples, a.samples);
    EXPECT_EQ(b.channels, 2u);
    EXPECT_EQ(b.sample_rate, 22050u);
    EXPECT_EQ(b.frames(), 1000u);
}

TEST(Wav, Pcm16QuantizationErrorBounded) {
    WavAudio a;
    a.samples = noise(2, 1000, 0.2);
    const auto b = wav_parse(wav_serialize(a));
    for (std::size_t i = 0; i < a.samples.size(); ++i) ASSERT_LE(std::abs(a.samples[i] - b.samples[i]), 0.5 / 32768.0);
}

TEST(Wav, Float32RoundTrip) {
    WavAudio a;
    a.format = SampleFormat::float32;
    for (double v : noise(3, 500)) a.samples.push_back(static_cast<float>(v));
    const auto bytes = wav_serialize(a);
    const auto b = wav_parse(bytes);
    EXPECT_EQ(b.format, SampleFormat::float32);
    EXPECT_EQ(b.samples, a.samples);
    std::uint16_t tag = 0;
    std::memcpy(&tag, bytes.data() + 20, 2);
    EXPECT_EQ(tag, 3u);
}

TEST(Wav, ClippingIsCounted) {
    WavAudio a;
    a.samples = {1.5, -2.0, 0.25, 1.0};
    WavWriteStats stats;
    const auto b = wav_parse(wav_serialize(a, &stats));
    EXPECT_EQ(stats.clipped, 3u);  // 1.0 maps to 32768 and saturates too
    EXPECT_EQ(b.samples[0], 32767.0 / 32768.0);
    EXPECT_EQ(b.samples[1], -1.0);
    EXPECT_EQ(b.samples[2], 0.25);
}

TEST(Wav, SkipsUnknownChunks) {
    auto bytes = make_wav(1, 1, 16000, 16, pcm_bytes({7, -7}));
    std::vector<std::uint8_t> list;
    put(list, "LIST");
    put(list, 3, 4);
    list.insert(list.end(), {'a', 'b', 'c', 0});  // odd size plus pad byte
    bytes.insert(bytes.begin() + 36, list.begin(), list.end());
    const std::uint32_t riff = static_cast<std::uint32_t>(bytes.size() - 8);
    std::memcpy(bytes.data() + 4, &riff, 4);
    EXPECT_EQ(wav_parse(bytes).samples.size(), 2u);
}

TEST(Wav, TruncationIsParseErrorWithOffset) {
    const auto bytes = make_wav(1, 1, 16000, 16, pcm_bytes({1, 2, 3, 4}));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        try {
            wav_parse(std::span(bytes).first(cut));
            ADD_FAILURE() << "accepted a file cut at " << cut;
        } catch (const Error &e) {
            ASSERT_EQ(e.kind(), ErrorKind::parse_error) << cut;
            ASSERT_TRUE(e.offset().has_value()) << cut;
        }
    }
}

TEST(Wav, UnsupportedFormats) {
    EXPECT_FSQ_ERROR(wav_parse(make_wav(1, 1, 16000, 8, {1, 2})), ErrorKind::unsupported_format);
    EXPECT_FSQ_ERROR(wav_parse(make_wav(6, 1, 16000, 8, {1, 2})), ErrorKind::unsupported_format);  // A-law
    EXPECT_FSQ_ERROR(wav_parse(make_wav(1, 3, 16000, 16, pcm_bytes({1, 2, 3}))), ErrorKind::unsupported_format);
    auto bad = make_wav(1, 1, 16000, 16, pcm_bytes({1}));
    bad[0] = 'X';
    EXPECT_FSQ_ERROR(wav_parse(bad), ErrorKind::parse_error);
}

TEST(Wav, DownmixAndRate) {
    WavAudio a;
    a.channels = 2;
    a.samples = {1.0, 0.0, -0.5, 0.5};
    EXPECT_EQ(downmix(a), (std::vector<double>{0.5, 0.0}));
    WavAudio m;
    m.samples = {0.1, 0.2};
    EXPECT_EQ(downmix(m), m.samples);
    EXPECT_NO_THROW(require_rate(m, 16000));
    m.sample_rate = 44100;
    EXPECT_FSQ_ERROR(require_rate(m, 16000), ErrorKind::resample_required);
}

TEST_F(TempDir, FileRoundTrip) {
    WavAudio a;
    a.samples = {0.0, 0.5};
    wav_write(dir_ / "a.wav", a);
    EXPECT_EQ(wav_read(dir_ / "a.wav").samples, a.samples);
    EXPECT_FSQ_ERROR(read_file(dir_ / "missing.wav"), ErrorKind::io_error);
    EXPECT_FSQ_ERROR(write_file(dir_ / "no" / "such" / "dir.bin", std::vector<std::uint8_t>{1}), ErrorKind::io_error);
}

// ---- latents ----

LatentFile sample_latents(bool bounded) {
    LatentFile l;
    l.frame_rate = Rational(75, 2);
    l.dims = 3;
    l.frames = 4;
    l.bounded = bounded;
    for (double v : noise(4, 12, 0.5)) l.values.push_back(static_cast<float>(bounded ? std::tanh(v) : 4.0 * v));
    return l;
}

TEST(Latents, LayoutAndRoundTrip) {
    const auto l = sample_latents(true);
    const auto bytes = latent_serialize(l);
    ASSERT_EQ(bytes.size(), 28u + 12u * 4u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FSQL");
    EXPECT_EQ(bytes[4], 1u);
    EXPECT_EQ(bytes[5], 1u);
    std::uint32_t num = 0, den = 0;
    std::memcpy(&num, bytes.data() + 12, 4);
    std::memcpy(&den, bytes.data() + 16, 4);
    EXPECT_EQ(num, 75u);
    EXPECT_EQ(den, 2u);
    const auto r = latent_parse(bytes);
    EXPECT_EQ(r.frame_rate, l.frame_rate);
    EXPECT_EQ(r.dims, 3u);
    EXPECT_EQ(r.frames, 4u);
    EXPECT_TRUE(r.bounded);
    EXPECT_EQ(r.values, l.values);
    const auto u = latent_parse(latent_serialize(sample_latents(false)));
    EXPECT_FALSE(u.bounded);
    EXPECT_EQ(u.values, sample_latents(false).values);
}

TEST(Latents, RejectsMalformedInput) {
    const auto bytes = latent_serialize(sample_latents(true));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        EXPECT_FSQ_ERROR(latent_parse(std::span(bytes).first(cut)), ErrorKind::parse_error);
    }
    auto extra = bytes;
    extra.push_back(0);
    EXPECT_FSQ_ERROR(latent_parse(extra), ErrorKind::parse_error);
    auto flags = bytes;
    flags[5] = 2;
    EXPECT_FSQ_ERROR(latent_parse(flags), ErrorKind::parse_error);
    auto out_of_range = bytes;
    const float big = 1.5f;
    std::memcpy(out_of_range.data() + 28, &big, 4);
    EXPECT_FSQ_ERROR(latent_parse(out_of_range), ErrorKind::parse_error);
    LatentFile bad = sample_latents(true);
    bad.values.pop_back();
    EXPECT_FSQ_ERROR(latent_serialize(bad), ErrorKind::shape_error);
}

// ---- token listing ----

bitstream::TokenStream sample_stream() {
    bitstream::TokenStream s;
    s.header.dims = 2;
    s.header.frame_rate = Rational(25);
    s.header.stage_levels = {{3, 5}, {3, 5}};
    s.tokens = {0, 14, 7, 3, 1, 1};
    return s;
}

TEST(TokenListing, ExactText) {
    EXPECT_EQ(format_token_listing(sample_stream()),
              "fsqkit-tokens 1\nrate 25\ndims 2\nstage 3,5\nstage 3,5\nframes 3\n0 14\n7 3\n1 1\n");
}

TEST(TokenListing, RoundTrip) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        bitstream::TokenStream s;
        s.header.dims = 1 + static_cast<int>(rng() % 4);
        s.header.frame_rate = Rational(static_cast<std::int64_t>(1 + rng() % 100), static_cast<std::int64_t>(1 + rng() % 7));
        const std::size_t stages = 1 + rng() % 3;
        std::uint64_t space = 1;
        std::vector<int> levels;
        for (int d = 0; d < s.header.dims; ++d) {
            levels.push_back(2 + static_cast<int>(rng() % 16));
            space *= static_cast<std::uint64_t>(levels.back());
        }
        s.header.stage_levels.assign(stages, levels);
        const std::size_t frames = rng() % 20;
        for (std::size_t i = 0; i < frames * stages; ++i) s.tokens.push_back(rng() % space);
        const auto back = parse_token_listing(format_token_listing(s));
        ASSERT_EQ(back.header, s.header);
        ASSERT_EQ(back.tokens, s.tokens);
    }
}

TEST(TokenListing, StrictParsing) {
    const auto good = format_token_listing(sample_stream());
    EXPECT_NO_THROW(parse_token_listing(good));
    auto replace = [&](const std::string &from, const std::string &to) {
        auto t = good;
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    for (const auto &bad : {replace("fsqkit-tokens 1", "fsqkit-tokens 2"), replace("frames 3", "frames 4"),
                            replace("frames 3", "frames 2"), replace("7 3", "7"), replace("7 3", "7 3 1"),
                            replace("7 3", "7 x"), replace("7 3", "7 -3"), replace("0 14", "0 15"),
                            replace("rate 25", "rate 0"), replace("dims 2", "dims 3"), std::string("")}) {
        EXPECT_FSQ_ERROR(parse_token_listing(bad), ErrorKind::parse_error);
    }
    EXPECT_NO_THROW(parse_token_listing(replace("0 14\n", "0 14\r\n")));
}

}  // namespace
}  // namespace fsqkit::io
