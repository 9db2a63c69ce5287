#include "cli.hpp"

#include "fsqkit/io.hpp"

#include "support.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fsqkit::cli {
namespace {

using Json = nlohmann::json;

struct Result {
    int code = 0;
    std::string out, err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("fsqkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string path(const std::string &name) const { return (dir_ / name).string(); }

    std::string write_text(const std::string &name, const std::string &text) const {
        std::ofstream(path(name)) << text;
        return path(name);
    }

    std::string write_wav(const std::string &name, std::vector<double> samples, std::uint32_t rate = 16000) const {
        io::WavAudio a;
        a.sample_rate = rate;
        a.samples = std::move(samples);
        io::wav_write(path(name), a);
        return path(name);
    }

    static std::string slurp(const std::string &p) {
        std::ifstream in(p);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    std::filesystem::path dir_;
};

const char *listing = "fsqkit-tokens 1\nrate 25\ndims 2\nstage 3,5\nframes 4\n0\n14\n7\n7\n";

TEST_F(Cli, BpsPrintsExactValue) {
    auto r = invoke({"bps", "--rate", "25", "--codebooks", "46656"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "400\n");
    r = invoke({"bps", "--rate", "75/2", "--codebooks", "1024", "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["command"], "bps");
    EXPECT_EQ(j["bps"], "375");
    EXPECT_EQ(invoke({"bps", "--rate", "25", "--codebooks", "17^6,17^6"}).out, "1250\n");
}

TEST_F(Cli, PackUnpackIsLossless) {
    const auto in = write_text("t.txt", listing);
    for (const std::string mode : {"raw", "huffman"}) {
        ASSERT_EQ(invoke({"pack", in, "-o", path("t.fsqb"), "--mode", mode}).code, 0);
        const auto r = invoke({"unpack", path("t.fsqb")});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(r.out, listing) << mode;
    }
    const auto s = invoke({"stats", path("t.fsqb")});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto j = Json::parse(s.out);
    EXPECT_EQ(j["frames"], 4);
    EXPECT_EQ(j["raw_bps"], "100");
}

TEST_F(Cli, QuantizeDequantizeRoundTrip) {
    io::LatentFile l;
    l.dims = 2;
    l.frames = 3;
    l.bounded = true;
    l.values = {-1.0f, 0.0f, 0.5f, 1.0f, 0.0f, -0.5f};
    io::write_file(path("z.fsql"), io::latent_serialize(l));
    auto r = invoke({"quantize", path("z.fsql"), "--levels", "3,5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "fsqkit-tokens 1\nrate 25\ndims 2\nstage 3,5\nframes 3\n6\n14\n4\n");  // 0.5 is a 3-level midpoint and rounds up
    write_text("q.txt", r.out);
    ASSERT_EQ(invoke({"dequantize", path("q.txt"), "-o", path("back.fsql")}).code, 0);
    const auto back = io::latent_parse(io::read_file(path("back.fsql")));
    EXPECT_EQ(back.values, (std::vector<float>{-1.0f, 0.0f, 1.0f, 1.0f, 0.0f, -0.5f}));
}

TEST_F(Cli, ResidualCheckReportsSuperset) {
    const auto r = invoke({"residual", "check", "--levels", "3", "--stages", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["fine_levels"], 5);
    EXPECT_EQ(j["violations"], 0);
    EXPECT_TRUE(j["covers_fine_lattice"].get<bool>());
}

TEST_F(Cli, MetricsOnIdenticalFiles) {
    std::vector<double> x(4000);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.3 * std::sin(0.05 * static_cast<double>(i));
    const auto ref = write_wav("ref.wav", x);
    const auto r = invoke({"metrics", ref, ref});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["si_sdr_db"], 300.0);
    EXPECT_EQ(j["mel_distance"], 0.0);
    EXPECT_EQ(j["stft_distance"], 0.0);
}

TEST_F(Cli, RfPresetAndLayerFile) {
    auto r = invoke({"rf", "--preset", "taae"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(Json::parse(r.out)["total_seconds"].get<double>(), 245.84, 1e-9);
    const auto layers = write_text("l.json", R"({"latent_rate": 25, "layers": [{"kind": "conv", "extent": 3, "rate": 50}]})");
    r = invoke({"rf", layers});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["total_seconds"].get<double>(), 0.06);
    EXPECT_DOUBLE_EQ(j["latency_seconds"].get<double>(), 0.04);
}

TEST_F(Cli, FbankReportsRoundTrip) {
    const auto r = invoke({"fbank", "--family", "mdct", "--size", "512", "--length", "4096"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LE(Json::parse(r.out)["relative_l2"].get<double>(), 1e-10);
    EXPECT_EQ(invoke({"fbank", "--family", "stft", "--size", "512", "--hop", "384"}).code, 1);
}

TEST_F(Cli, ToyModelEncodeDecode) {
    const auto cfg = write_text("m.json", R"({"patch_size": 32, "blocks": [[1, 1], [1, 2]], "dim": 16,
                                             "head_dim": 8, "window": 4, "levels": [5, 5, 5, 5]})");
    auto r = invoke({"toymodel", "build", "--config", cfg});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(Json::parse(r.out)["hop_samples"], 64);
    const auto wav = write_wav("x.wav", testing::noise(1, 640, 0.1));
    r = invoke({"toymodel", "encode", "--config", cfg, "--input", wav});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::parse_token_listing(r.out).frame_count(), 10u);
    write_text("t.txt", r.out);
    r = invoke({"toymodel", "decode", "--config", cfg, "--input", path("t.txt"), "-o", path("y.wav")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(io::wav_read(path("y.wav")).samples.size(), 640u);
    r = invoke({"toymodel", "causality", "--config", cfg});
    ASSERT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(invoke({"--help"}).code, 0);
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"nonsense"}).code, 1);
    EXPECT_EQ(invoke({"bps", "--codebooks", "7"}).code, 0);
    EXPECT_EQ(invoke({"bps", "--codebooks", "1"}).code, 1);

    const auto unknown_key = write_text("bad.json", R"({"dims": 64})");
    auto r = invoke({"toymodel", "build", "--config", unknown_key});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("dims"), std::string::npos);

    const auto bad_json = write_text("broken.json", "{");
    EXPECT_EQ(invoke({"toymodel", "build", "--config", bad_json}).code, 2);

    const auto in = write_text("t.txt", listing);
    ASSERT_EQ(invoke({"pack", in, "-o", path("t.fsqb")}).code, 0);
    auto bytes = io::read_file(path("t.fsqb"));
    bytes.resize(bytes.size() - 3);
    io::write_file(path("cut.fsqb"), bytes);
    r = invoke({"unpack", path("cut.fsqb")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("parse-error"), std::string::npos) << r.err;

    const auto cd = write_wav("cd.wav", std::vector<double>(100, 0.0), 44100);
    r = invoke({"metrics", cd, cd});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("resample-required"), std::string::npos) << r.err;

    EXPECT_EQ(invoke({"unpack", path("missing.fsqb")}).code, 2);
}

}  // namespace
}  // namespace fsqkit::cli
