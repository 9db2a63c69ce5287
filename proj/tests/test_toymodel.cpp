#include "fsqkit/toymodel.hpp"

#include "fsqkit/analysis.hpp"

#include "support.hpp"

namespace fsqkit::toymodel {
namespace {

using testing::noise;

ModelSpec small_spec(std::size_t window, bool causal, std::uint64_t seed = 0) {
    ModelSpec s;
    s.patch_size = 32;
    s.blocks = {{1, 1}, {1, 2}};
    s.dim = 16;
    s.head_dim = 8;
    s.window = window;
    s.causal = causal;
    s.levels = {5, 5, 5, 5};
    s.seed = seed;
    return s;
}

std::size_t rf_length(const ModelSpec &s) {
    const double analytic = analytic_receptive_field(s) * s.sample_rate;
    return (static_cast<std::size_t>(2.0 * analytic / static_cast<double>(s.hop())) + 2) * s.hop();
}

bool all_finite(const std::vector<double> &v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

TEST(Spec, DefaultsAndFrameRate) {
    const ModelSpec s;
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.hop(), 640u);
    EXPECT_EQ(s.frame_rate(), Rational(25));
    const auto p = ModelSpec::reference_shape();
    EXPECT_EQ(p.blocks, (std::vector<BlockSpec>{{8, 1}, {20, 2}}));
    EXPECT_EQ(p.window, 128u);
}

TEST(Spec, FrameRateFormulaHolds) {
    for (std::size_t P : {16u, 320u}) {
        for (std::size_t s1 : {1u, 2u, 3u}) {
            for (std::size_t s2 : {1u, 2u, 4u}) {
                ModelSpec s;
                s.patch_size = P;
                s.blocks = {{1, s1}, {1, s2}};
                EXPECT_EQ(s.frame_rate(), Rational(16000, static_cast<std::int64_t>(P * s1 * s2)));
            }
        }
    }
}

TEST(Spec, InvalidConfigs) {
    auto bad = [](auto mutate) {
        ModelSpec s;
        mutate(s);
        EXPECT_FSQ_ERROR(build(s), ErrorKind::invalid_config);
    };
    bad([](ModelSpec &s) { s.dim = 60; });
    bad([](ModelSpec &s) { s.head_dim = 15; s.dim = 45; });
    bad([](ModelSpec &s) { s.window = 0; });
    bad([](ModelSpec &s) { s.eps = 0.0; });
    bad([](ModelSpec &s) { s.levels.clear(); });
    bad([](ModelSpec &s) { s.blocks = {{1, 0}}; });
    bad([](ModelSpec &s) { s.patch_size = 0; });
}

TEST(Build, DeterministicPerSeed) {
    const auto a = build(small_spec(4, false, 7)).parameters();
    const auto b = build(small_spec(4, false, 7)).parameters();
    const auto c = build(small_spec(4, false, 8)).parameters();
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
}

TEST(Build, ReferenceShapeAndDegenerateWindow) {
    EXPECT_NO_THROW(build(ModelSpec::reference_shape(64)));
    EXPECT_NO_THROW(build(small_spec(1, false)));
}

TEST(Encode, DefaultShapeGives128Frames) {
    const auto model = build(ModelSpec{});
    const auto x = noise(1, 81920, 0.1);
    const auto enc = model.encode(x);
    EXPECT_EQ(enc.latents.frames, 128u);
    EXPECT_EQ(enc.latents.dims, 6u);
    EXPECT_EQ(enc.latents.frame_rate, Rational(25));
    EXPECT_EQ(enc.tokens.frame_count(), 128u);
    for (double v : enc.latents.values) {
        ASSERT_GT(v, -1.0);
        ASSERT_LT(v, 1.0);
    }
    for (std::size_t f = 0; f < enc.latents.frames; ++f) {
        const auto q = fsq::quantize_vector(enc.latents.row(f), model.quantizer());
        ASSERT_EQ(q.index, enc.tokens.tokens[f]);
    }
}

TEST(Encode, SilenceStaysFinite) {
    const auto model = build(ModelSpec{});
    const std::vector<double> silent(16000, 0.0);
    const auto enc = model.encode_latents(silent);
    EXPECT_TRUE(all_finite(enc.values));
    const auto y = model.reconstruct(silent);
    EXPECT_TRUE(all_finite(y));
    const auto stats = model.activation_stats(silent);
    EXPECT_TRUE(stats.finite);
}

TEST(Encode, DoublingLengthDoublesFrames) {
    const auto model = build(small_spec(4, false));
    const auto a = model.encode_latents(noise(2, 64 * 10, 0.1));
    const auto b = model.encode_latents(noise(2, 64 * 20, 0.1));
    EXPECT_EQ(b.frames, 2 * a.frames);
}

TEST(Encode, PadsPartialFrames) {
    const auto model = build(small_spec(4, false));
    EXPECT_EQ(model.encode_latents(noise(3, 64 * 5 + 1, 0.1)).frames, 6u);
}

TEST(Decode, LengthAndDeterminism) {
    const auto model = build(small_spec(4, false));
    const auto x = noise(4, 64 * 12, 0.1);
    const auto enc = model.encode(x);
    const auto y = model.decode(enc.tokens);
    EXPECT_EQ(y.size(), x.size());
    EXPECT_EQ(y, model.decode(enc.tokens));
    EXPECT_TRUE(all_finite(y));
}

TEST(Decode, CenterTokensAndSeedDependence) {
    const auto a = build(small_spec(4, false, 1));
    const auto b = build(small_spec(4, false, 2));
    bitstream::TokenStream t;
    t.header.dims = 4;
    t.header.frame_rate = a.spec().frame_rate();
    t.header.stage_levels = {a.spec().levels};
    // The network has no biases, so the all-center latent decodes to silence.
    t.tokens.assign(10, fsq::pack_digits(std::vector<int>{2, 2, 2, 2}, a.spec().levels));
    const auto silent = a.decode(t);
    EXPECT_EQ(silent.size(), 640u);
    EXPECT_TRUE(std::all_of(silent.begin(), silent.end(), [](double v) { return v == 0.0; }));
    t.tokens.assign(10, fsq::pack_digits(std::vector<int>{0, 4, 1, 3}, a.spec().levels));
    const auto ya = a.decode(t);
    EXPECT_TRUE(all_finite(ya));
    EXPECT_NE(ya, b.decode(t));
}

TEST(Decode, MismatchedStreamRejected) {
    const auto model = build(small_spec(4, false));
    bitstream::TokenStream t;
    t.header.dims = 3;
    t.header.stage_levels = {{5, 5, 5}};
    t.tokens = {0};
    EXPECT_FSQ_ERROR(model.decode(t), ErrorKind::decode_error);
    LatentSequence l;
    l.dims = 2;
    l.frames = 1;
    l.values = {0.0, 0.0};
    EXPECT_FSQ_ERROR(model.decode_latents(l), ErrorKind::decode_error);
}

TEST(LayerSpecs, AnalyticReceptiveFieldSumsLayers) {
    const auto s = small_spec(4, false);
    const auto layers = layer_specs(s);
    const auto rf = analysis::receptive_field(layers);
    EXPECT_DOUBLE_EQ(analytic_receptive_field(s), rf.total);
    // patch, in-conv, 2x(stride conv + attention), 2 latent convs, mirrored decoder, out-conv, unpatch
    EXPECT_EQ(layers.size(), 12u);
}

TEST(ReceptiveFieldProbe, EmpiricalWithinAnalytic) {
    for (std::size_t window : {1u, 4u, 8u}) {
        for (bool causal : {false, true}) {
            const auto model = build(small_spec(window, causal));
            const auto m = measure_receptive_field(model, rf_length(model.spec()));
            EXPECT_GT(m.seconds, 0.0);
            EXPECT_LE(m.seconds, analytic_receptive_field(model.spec())) << window << " causal=" << causal;
        }
    }
}

TEST(ReceptiveFieldProbe, UnitWindowCloseToConvOnlyField) {
    auto s = small_spec(1, false);
    s.blocks = {{1, 1}};
    const auto model = build(s);
    // Composed support of the frame-rate convolutions: one frame plus (extent - 1) per layer.
    const double patch_frame = static_cast<double>(s.patch_size) / s.sample_rate;
    double conv_only = patch_frame;
    for (const auto &l : layer_specs(s)) {
        if (l.kind == analysis::LayerKind::conv && l.stride == 1) conv_only += static_cast<double>(l.extent - 1) / l.rate;
    }
    const auto m = measure_receptive_field(model, rf_length(s));
    EXPECT_LE(std::abs(m.seconds - conv_only), patch_frame) << m.seconds << " vs " << conv_only;
}

TEST(ReceptiveFieldProbe, GrowsWithWindow) {
    double prev = 0.0;
    for (std::size_t window : {1u, 3u, 6u, 12u}) {
        const auto model = build(small_spec(window, false));
        const auto m = measure_receptive_field(model, rf_length(model.spec()));
        EXPECT_GT(m.seconds, prev) << window;
        prev = m.seconds;
    }
}

TEST(ReceptiveFieldProbe, ShortInputIsSaturated) {
    const auto model = build(small_spec(4, false));
    EXPECT_FSQ_ERROR(measure_receptive_field(model, 256), ErrorKind::saturated_measurement);
}

TEST(Causality, CausalModelHasNoLeakageBeforeItsFrame) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const auto model = build(small_spec(4, true, seed));
        const auto r = check_causality(model);
        EXPECT_TRUE(r.causal);
        EXPECT_EQ(r.max_leakage, 0.0);
        EXPECT_LE(r.frame_start, r.probe);
        EXPECT_LT(r.probe - r.frame_start, model.spec().hop());
    }
}

TEST(Causality, DefaultCausalModelLatencyIsOneFrame) {
    auto s = ModelSpec{};
    s.causal = true;
    const auto model = build(s);
    const auto r = check_causality(model);
    EXPECT_TRUE(r.causal);
    EXPECT_DOUBLE_EQ(r.latency_seconds, 0.04);
    EXPECT_DOUBLE_EQ(r.latency_seconds, analysis::latency(25.0, analysis::LatencyMode::causal()));
}

TEST(Causality, NonCausalModelLeaks) {
    const auto r = check_causality(build(small_spec(4, false)));
    EXPECT_FALSE(r.causal);
    EXPECT_GT(r.max_leakage, 0.0);
}

// ---- properties ----

TEST(ToyModelProperty, FiniteOnExtremeInputs) {
    const auto model = build(small_spec(4, false));
    std::vector<double> square(64 * 16);
    for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 37) % 2 ? 1.0 : -1.0;
    const std::vector<double> zeros(64 * 16, 0.0);
    const std::vector<double> ones(64 * 16, 1.0);
    for (const auto *x : std::vector<const std::vector<double> *>{&square, &zeros, &ones}) {
        EXPECT_TRUE(all_finite(model.reconstruct(*x)));
        EXPECT_TRUE(model.activation_stats(*x).finite);
    }
}

TEST(ToyModelProperty, NormAmplificationWithinBound) {
    for (double eps : {1e-2, 1e-5}) {
        auto s = small_spec(4, false);
        s.eps = eps;
        const auto model = build(s);
        const auto x = noise(5, 64 * 16, 1e-4);  // -80 dBFS floor
        const auto stats = model.activation_stats(x);
        EXPECT_TRUE(stats.finite);
        EXPECT_LE(stats.max_gain_db, analysis::layernorm_gain_cap(eps) + model.linear_gain_bound_db()) << stats.max_stage;
    }
}

}  // namespace
}  // namespace fsqkit::toymodel
