#include "fsqkit/metrics.hpp"

#include "support.hpp"

#include <complex>
#include <numbers>

namespace fsqkit::metrics {
namespace {

using testing::noise;

std::vector<double> tone(std::size_t n, double hz, double sr = 16000.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
    return x;
}

// ---- oracles ----

double si_sdr_oracle(const std::vector<double> &s, const std::vector<double> &e) {
    // Through the normalized correlation: SI-SDR = rho^2 / (1 - rho^2).
    double ss = 0.0, ee = 0.0, se = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        ss += s[i] * s[i];
        ee += e[i] * e[i];
        se += s[i] * e[i];
    }
    const double rho2 = se * se / (ss * ee);
    return 10.0 * std::log10(rho2 / (1.0 - rho2));
}

// Naive-DFT magnitudes with zero-padded frames starting at n*hop - (size - hop).
std::vector<std::vector<double>> dft_magnitudes(const std::vector<double> &x, std::size_t size, std::size_t hop) {
    const auto len = static_cast<std::ptrdiff_t>(x.size());
    const auto pad = static_cast<std::ptrdiff_t>(size - hop);
    const std::size_t frames = (static_cast<std::size_t>(pad) + x.size() + hop - 1) / hop;
    std::vector<std::vector<double>> out(frames, std::vector<double>(size / 2 + 1));
    std::vector<double> buf(size);
    for (std::size_t f = 0; f < frames; ++f) {
        const auto start = static_cast<std::ptrdiff_t>(f * hop) - pad;
        for (std::size_t i = 0; i < size; ++i) {
            const auto t = start + static_cast<std::ptrdiff_t>(i);
            const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size));
            buf[i] = t >= 0 && t < len ? w * x[static_cast<std::size_t>(t)] : 0.0;
        }
        for (std::size_t k = 0; k <= size / 2; ++k) {
            std::complex<double> acc;
            for (std::size_t i = 0; i < size; ++i) {
                acc += buf[i] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((k * i) % size) /
                                                    static_cast<double>(size));
            }
            out[f][k] = std::abs(acc);
        }
    }
    return out;
}

std::vector<std::vector<double>> mel_oracle(const std::vector<std::vector<double>> &lin, double sr, std::size_t size,
                                            std::size_t n_mels) {
    auto mel = [](double hz) { return 1127.0 * std::log1p(hz / 700.0); };
    auto hz = [](double m) { return 700.0 * std::expm1(m / 1127.0); };
    const double top = mel(sr / 2.0);
    std::vector<std::vector<double>> out(lin.size(), std::vector<double>(n_mels, 0.0));
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = hz(top * static_cast<double>(m) / static_cast<double>(n_mels + 1));
        const double mid = hz(top * static_cast<double>(m + 1) / static_cast<double>(n_mels + 1));
        const double hi = hz(top * static_cast<double>(m + 2) / static_cast<double>(n_mels + 1));
        const double height = 2.0 / (hi - lo);  // unit area triangle
        for (std::size_t k = 0; k <= size / 2; ++k) {
            const double f = static_cast<double>(k) * sr / static_cast<double>(size);
            double w = 0.0;
            if (f > lo && f <= mid) w = height * (f - lo) / (mid - lo);
            else if (f > mid && f < hi) w = height * (hi - f) / (hi - mid);
            for (std::size_t t = 0; t < lin.size(); ++t) out[t][m] += w * lin[t][k];
        }
    }
    return out;
}

double distance_oracle(const std::vector<std::vector<double>> &a, const std::vector<std::vector<double>> &b) {
    double log_sum = 0.0, num = 0.0, den = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        for (std::size_t k = 0; k < a[t].size(); ++k) {
            log_sum += std::abs(std::log(std::max(a[t][k], 1e-5)) - std::log(std::max(b[t][k], 1e-5)));
            num += (a[t][k] - b[t][k]) * (a[t][k] - b[t][k]);
            den += a[t][k] * a[t][k];
            ++n;
        }
    }
    return log_sum / static_cast<double>(n) + std::sqrt(num / den);
}

FeatureLayer layer(std::size_t rows, std::size_t cols, std::vector<double> values) { return {rows, cols, std::move(values)}; }

FeatureStack random_stack(std::mt19937_64 &rng, std::size_t layers) {
    FeatureStack s;
    for (std::size_t m = 0; m < layers; ++m) {
        const std::size_t rows = 3 + m, cols = 2 + m;
        std::vector<double> v(rows * cols);
        for (auto &x : v) x = standard_normal(rng);
        s.push_back(layer(rows, cols, std::move(v)));
    }
    return s;
}

// ---- SI-SDR ----

TEST(SiSdr, MatchesCorrelationFormula) {
    const auto s = noise(1, 4000);
    // The oracle loses digits in 1 - rho^2 as the noise shrinks.
    for (auto [level, tol] : {std::pair{1e-1, 1e-9}, std::pair{1e-3, 1e-7}}) {
        auto e = s;
        const auto n = noise(2, 4000, level);
        for (std::size_t i = 0; i < e.size(); ++i) e[i] += n[i];
        EXPECT_NEAR(si_sdr(s, e), si_sdr_oracle(s, e), tol) << level;
    }
}

TEST(SiSdr, ScaleInvarianceIsExact) {
    const auto s = noise(3, 3000);
    auto e = s;
    const auto n = noise(4, 3000, 0.2);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += n[i];
    const double base = si_sdr(s, e);
    for (double c : {2.0, 0.25, 1024.0}) {
        auto es = e;
        for (auto &v : es) v *= c;
        EXPECT_EQ(si_sdr(s, es), base) << c;
    }
    for (double c : {0.3, 7.1}) {
        auto es = e;
        for (auto &v : es) v *= c;
        EXPECT_NEAR(si_sdr(s, es), base, 1e-9) << c;
    }
}

TEST(SiSdr, IdenticalAndEdgeCases) {
    const auto s = noise(5, 100);
    EXPECT_EQ(si_sdr(s, s), si_sdr_cap_db);
    const std::vector<double> zero(100, 0.0);
    EXPECT_EQ(si_sdr(s, zero), -si_sdr_cap_db);
    EXPECT_FSQ_ERROR(si_sdr(zero, s), ErrorKind::undefined_reference);
    EXPECT_FSQ_ERROR(si_sdr(s, std::vector<double>(99, 0.0)), ErrorKind::shape_error);
}

// ---- spectral ----

TEST(SpectralConvergence, Examples) {
    const std::vector<double> ref{3.0, 4.0};
    EXPECT_EQ(spectral_convergence(ref, ref), 0.0);
    EXPECT_EQ(spectral_convergence(ref, std::vector<double>{0.0, 0.0}), 1.0);
    EXPECT_EQ(spectral_convergence(ref, std::vector<double>{6.0, 8.0}), 1.0);
    EXPECT_DOUBLE_EQ(spectral_convergence(ref, std::vector<double>{3.0, 0.0}), 0.8);
    EXPECT_FSQ_ERROR(spectral_convergence(std::vector<double>{0.0}, std::vector<double>{1.0}),
                     ErrorKind::undefined_reference);
}

TEST(LogL1, FloorAndNaturalLog) {
    EXPECT_DOUBLE_EQ(log_l1(std::vector<double>{std::exp(1.0)}, std::vector<double>{1.0}), 1.0);
    EXPECT_EQ(log_l1(std::vector<double>{0.0}, std::vector<double>{1e-9}), 0.0);
    EXPECT_NEAR(log_l1(std::vector<double>{0.0}, std::vector<double>{1.0}), -std::log(1e-5), 1e-12);
}

TEST(MelFilterbank, UnitAreaTriangles) {
    const double sr = 16000.0;
    const std::size_t n = 2048;
    const auto fb = mel_filterbank(sr, n, 128);
    ASSERT_EQ(fb.size(), 128u * (n / 2 + 1));
    const double df = sr / static_cast<double>(n);
    // Narrow low bands fall between bins; wide ones integrate to 1 over Hz.
    for (std::size_t m = 64; m < 128; ++m) {
        double area = 0.0;
        for (std::size_t b = 0; b <= n / 2; ++b) area += fb[m * (n / 2 + 1) + b] * df;
        EXPECT_NEAR(area, 1.0, 0.02) << m;
    }
}

TEST(Magnitudes, MatchNaiveDft) {
    auto x = tone(3000, 440.0);
    const auto n = noise(6, 3000, 0.05);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += n[i];
    const auto lin = stft_magnitudes(x, 2048, 512);
    const auto oracle = dft_magnitudes(x, 2048, 512);
    ASSERT_EQ(lin.frames, oracle.size());
    for (std::size_t t = 0; t < lin.frames; ++t) {
        for (std::size_t k = 0; k < lin.bins; ++k) ASSERT_NEAR(lin.values[t * lin.bins + k], oracle[t][k], 1e-9);
    }
    const auto mel = mel_magnitudes(x, 16000.0);
    const auto mel_ref = mel_oracle(dft_magnitudes(x, 2048, 256), 16000.0, 2048, 128);
    ASSERT_EQ(mel.frames, mel_ref.size());
    for (std::size_t t = 0; t < mel.frames; ++t) {
        for (std::size_t k = 0; k < 128; ++k) ASSERT_NEAR(mel.values[t * 128 + k], mel_ref[t][k], 1e-9);
    }
}

TEST(Distances, MatchOracleAndVanishOnIdenticalInputs) {
    const auto ref = tone(2500, 1000.0);
    auto est = ref;
    const auto n = noise(7, 2500, 0.01);
    for (std::size_t i = 0; i < est.size(); ++i) est[i] += n[i];
    const double mel = mel_distance(ref, est);
    const double mel_ref = distance_oracle(mel_oracle(dft_magnitudes(ref, 2048, 256), 16000.0, 2048, 128),
                                           mel_oracle(dft_magnitudes(est, 2048, 256), 16000.0, 2048, 128));
    EXPECT_NEAR(mel, mel_ref, 1e-6);
    EXPECT_NEAR(stft_distance(ref, est),
                distance_oracle(dft_magnitudes(ref, 2048, 512), dft_magnitudes(est, 2048, 512)), 1e-6);
    EXPECT_EQ(mel_distance(ref, ref), 0.0);
    EXPECT_EQ(stft_distance(ref, ref), 0.0);
    const auto r = evaluate(ref, ref);
    EXPECT_EQ(r.si_sdr_db, si_sdr_cap_db);
    EXPECT_EQ(r.mel_distance, 0.0);
    EXPECT_EQ(r.stft_distance, 0.0);
}

TEST(Distances, GrowWithNoise) {
    const auto ref = tone(4000, 700.0);
    double prev_mel = 0.0, prev_stft = 0.0;
    for (double level : {1e-3, 1e-2, 1e-1}) {
        auto est = ref;
        const auto n = noise(8, 4000, level);
        for (std::size_t i = 0; i < est.size(); ++i) est[i] += n[i];
        const double m = mel_distance(ref, est), s = stft_distance(ref, est);
        EXPECT_GT(m, prev_mel);
        EXPECT_GT(s, prev_stft);
        prev_mel = m;
        prev_stft = s;
    }
}

// ---- feature matching ----

TEST(FeatureMatching, SimpleExample) {
    const std::vector<FeatureStack> ref{{layer(1, 2, {1.0, 1.0})}};
    const std::vector<FeatureStack> est{{layer(1, 2, {0.0, 0.0})}};
    EXPECT_EQ(feature_matching_loss(ref, est), 1.0);
    EXPECT_EQ(feature_matching_loss(ref, ref), 0.0);
}

TEST(FeatureMatching, MatchesExplicitSum) {
    std::mt19937_64 rng(11);
    std::vector<FeatureStack> ref, est;
    for (int n = 0; n < 3; ++n) {
        ref.push_back(random_stack(rng, 4));
        est.push_back(random_stack(rng, 4));
    }
    double expected = 0.0;
    for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t m = 0; m < 4; ++m) {
            double diff = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < ref[n][m].values.size(); ++i) {
                diff += std::abs(ref[n][m].values[i] - est[n][m].values[i]);
                norm += std::abs(ref[n][m].values[i]);
            }
            expected += diff / norm;
        }
    }
    expected /= 12.0;
    EXPECT_NEAR(feature_matching_loss(ref, est), expected, 1e-9);
}

TEST(FeatureMatching, PerLayerScaleInvariance) {
    std::mt19937_64 rng(12);
    std::vector<FeatureStack> ref{random_stack(rng, 3), random_stack(rng, 3)};
    std::vector<FeatureStack> est{random_stack(rng, 3), random_stack(rng, 3)};
    const double base = feature_matching_loss(ref, est);
    auto scale = [](FeatureLayer &l, double c) {
        for (auto &v : l.values) v *= c;
    };
    scale(ref[1][2], 4.0);
    scale(est[1][2], 4.0);
    EXPECT_EQ(feature_matching_loss(ref, est), base);
    scale(ref[0][0], 3.7);
    scale(est[0][0], 3.7);
    EXPECT_NEAR(feature_matching_loss(ref, est), base, 1e-12);
}

TEST(FeatureMatching, BatchUsesRatioOfMeans) {
    const std::vector<std::vector<FeatureStack>> ref{{{layer(1, 1, {1.0})}}, {{layer(1, 1, {3.0})}}};
    const std::vector<std::vector<FeatureStack>> est{{{layer(1, 1, {0.0})}}, {{layer(1, 1, {3.0})}}};
    // mean diff 0.5 over mean norm 2, not the mean of per-example ratios (0.5)
    EXPECT_DOUBLE_EQ(feature_matching_loss_batch(ref, est), 0.25);
}

TEST(FeatureMatching, ShapeAndReferenceErrors) {
    const std::vector<FeatureStack> a{{layer(1, 2, {1.0, 1.0})}};
    const std::vector<FeatureStack> b{{layer(2, 1, {1.0, 1.0})}};
    EXPECT_FSQ_ERROR(feature_matching_loss(a, b), ErrorKind::shape_error);
    const std::vector<FeatureStack> two{{layer(1, 2, {1.0, 1.0}), layer(1, 1, {1.0})}};
    EXPECT_FSQ_ERROR(feature_matching_loss(a, two), ErrorKind::shape_error);
    EXPECT_FSQ_ERROR(feature_matching_loss(std::vector<FeatureStack>{}, std::vector<FeatureStack>{}), ErrorKind::shape_error);
    const std::vector<FeatureStack> zero{{layer(1, 2, {0.0, 0.0})}};
    EXPECT_FSQ_ERROR(feature_matching_loss(zero, a), ErrorKind::undefined_reference);
}

// ---- training objectives ----

TEST(Objectives, PretrainDecay) {
    const auto x = noise(13, 4096, 0.3);
    const auto y = noise(14, 4096, 0.3);
    std::mt19937_64 rng(15);
    const std::vector<FeatureStack> dr{random_stack(rng, 2)}, de{random_stack(rng, 2)};
    const double disc = feature_matching_loss(dr, de);
    const double recon = l1_loss(x, y) + stft_magnitude_l1(x, y);
    EXPECT_NEAR(pretrain_loss(x, y, 0.0, 0.9, dr, de), disc + recon, 1e-12);
    EXPECT_EQ(pretrain_loss(x, y, 0.0, 1.0, dr, de), pretrain_loss(x, y, 1e6, 1.0, dr, de));
    EXPECT_NEAR(pretrain_loss(x, y, 10.0, 0.5, dr, de), disc + std::pow(0.5, 10.0) * recon, 1e-12);
    EXPECT_EQ(pretrain_loss(x, y, 1e6, 0.5, dr, de), disc);
    EXPECT_FSQ_ERROR(pretrain_loss(x, y, 0.0, 0.0, dr, de), ErrorKind::invalid_input);
    EXPECT_FSQ_ERROR(pretrain_loss(x, y, 0.0, 1.5, dr, de), ErrorKind::invalid_input);
}

TEST(Objectives, FinetuneIsDiscPlusPerceptual) {
    std::mt19937_64 rng(16);
    const std::vector<FeatureStack> dr{random_stack(rng, 2)}, de{random_stack(rng, 2)};
    const auto pr = random_stack(rng, 3), pe = random_stack(rng, 3);
    EXPECT_DOUBLE_EQ(finetune_loss(dr, de, pr, pe), feature_matching_loss(dr, de) + perceptual_loss(pr, pe));
    EXPECT_EQ(finetune_loss(dr, dr, pr, pr), 0.0);
}

TEST(Objectives, L1Losses) {
    EXPECT_DOUBLE_EQ(l1_loss(std::vector<double>{1.0, -1.0}, std::vector<double>{0.0, 1.0}), 1.5);
    const auto x = noise(17, 3000);
    EXPECT_EQ(stft_magnitude_l1(x, x), 0.0);
    EXPECT_FSQ_ERROR(l1_loss(x, std::vector<double>(2)), ErrorKind::shape_error);
}

}  // namespace
}  // namespace fsqkit::metrics
