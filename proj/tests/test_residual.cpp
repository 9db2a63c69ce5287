#include "fsqkit/residual.hpp"

#include "support.hpp"

#include <algorithm>

namespace fsqkit::residual {
namespace {

// Straight transcription of the stage recursion, one scalar at a time.
std::vector<double> oracle_stages(double z, int levels, int stages) {
    const double steps = levels - 1;
    std::vector<double> q;
    double sum = 0.0;
    double scale = 1.0;
    for (int k = 0; k < stages; ++k) {
        const double t = std::tanh(scale * (z - sum));
        const double level = -1.0 + 2.0 * std::floor(steps * (t + 1.0) / 2.0 + 0.5) / steps;
        q.push_back(level / scale);
        sum += level / scale;
        scale *= steps;
    }
    return q;
}

bool on_lattice(double v, std::int64_t levels) {
    const double pos = (v + 1.0) * static_cast<double>(levels - 1) / 2.0;
    return std::abs(pos - std::round(pos)) < 1e-9 && v >= -1.0 && v <= 1.0;
}

TEST(ValidateResidualLevels, PowersOfTwoPlusOne) {
    EXPECT_EQ(validate_residual_levels(3), 1);
    EXPECT_EQ(validate_residual_levels(5), 2);
    EXPECT_EQ(validate_residual_levels(17), 4);
    EXPECT_FSQ_ERROR(validate_residual_levels(6), ErrorKind::residual_unsupported);
    EXPECT_FSQ_ERROR(validate_residual_levels(2), ErrorKind::residual_unsupported);
    EXPECT_FSQ_ERROR(ResidualSpec(5, 0), ErrorKind::invalid_config);
}

TEST(ResidualSpec, ScalesAndFineLevels) {
    const ResidualSpec s3(3, 2);
    EXPECT_EQ(s3.n(), 1);
    EXPECT_EQ(s3.stage_scale(1), 2.0);
    EXPECT_EQ(s3.fine_levels(), 5);
    const ResidualSpec s5(5, 2);
    EXPECT_EQ(s5.stage_scale(1), 4.0);
    EXPECT_EQ(s5.fine_levels(), 17);
}

TEST(ResidualDecompose, ZeroInputGivesZeroStages) {
    const ResidualSpec spec(5, 3);
    const auto frame = residual_decompose(std::vector<double>(4, 0.0), spec);
    ASSERT_EQ(frame.stage_values.size(), 3u);
    for (const auto &q : frame.stage_values) {
        for (double v : q) EXPECT_EQ(v, 0.0);
    }
}

TEST(ResidualDecompose, WorkedExamples) {
    const ResidualSpec spec(3, 2);
    const auto a = residual_decompose(std::vector<double>{0.5}, spec);
    EXPECT_EQ(a.stage_values[0][0], 0.0);
    EXPECT_EQ(a.stage_values[1][0], 0.5);
    EXPECT_EQ(a.reconstruction[0], 0.5);
    const auto b = residual_decompose(std::vector<double>{0.9}, spec);
    EXPECT_EQ(b.stage_values[0][0], 1.0);
    EXPECT_EQ(b.stage_values[1][0], 0.0);
    EXPECT_EQ(b.reconstruction[0], 1.0);
}

TEST(ResidualDecompose, MatchesScalarOracle) {
    std::mt19937_64 rng(8);
    for (int levels : {3, 5, 9}) {
        for (int stages : {1, 2, 3}) {
            const ResidualSpec spec(levels, stages);
            for (int i = 0; i < 2000; ++i) {
                const double z = 4.0 * uniform01(rng) - 2.0;
                const auto frame = residual_decompose(std::vector<double>{z}, spec);
                const auto expect = oracle_stages(z, levels, stages);
                for (int k = 0; k < stages; ++k) ASSERT_DOUBLE_EQ(frame.stage_values[k][0], expect[k]) << z;
            }
        }
    }
}

TEST(ResidualDecompose, RejectsNonFinite) {
    EXPECT_FSQ_ERROR(residual_decompose(std::vector<double>{std::nan("")}, ResidualSpec(3, 2)),
                     ErrorKind::invalid_input);
}

TEST(ResidualReconstruct, ClipsOutOfRangeCombination) {
    const ResidualSpec spec(3, 2);
    // Stage digits 2 (value 1) and 2 (value 1, scaled to 0.5) on both dims.
    const std::vector<std::uint64_t> tokens{2 + 3 * 2, 2 + 3 * 2};
    const auto z = residual_reconstruct(tokens, spec, 2);
    EXPECT_EQ(z, (std::vector<double>{1.0, 1.0}));
}

TEST(ResidualReconstruct, CenterTokenIsZero) {
    const ResidualSpec spec(5, 1);
    EXPECT_EQ(residual_reconstruct(std::vector<std::uint64_t>{2 + 5 * 2}, spec, 2), (std::vector<double>{0.0, 0.0}));
}

TEST(ResidualReconstruct, Errors) {
    const ResidualSpec spec(3, 2);
    EXPECT_FSQ_ERROR(residual_reconstruct(std::vector<std::uint64_t>{0, 9}, spec, 2), ErrorKind::decode_error);
    EXPECT_FSQ_ERROR(residual_reconstruct(std::vector<std::uint64_t>{0}, spec, 2), ErrorKind::decode_error);
}

TEST(ResidualRoundTrip, TokensReproduceStoredReconstruction) {
    std::mt19937_64 rng(10);
    const int dims = 4;
    for (int levels : {3, 5}) {
        const ResidualSpec spec(levels, 2);
        for (int i = 0; i < 10000; ++i) {
            std::vector<double> z(dims);
            for (auto &v : z) v = 4.0 * uniform01(rng) - 2.0;
            const auto frame = residual_decompose(z, spec);
            ASSERT_EQ(residual_reconstruct(frame.stage_tokens, spec, dims), frame.reconstruction);
        }
    }
}

TEST(SupersetCheck, SmallConfigsExhaustive) {
    const auto a = superset_check(3, 2);
    EXPECT_EQ(a.combinations, 9u);
    EXPECT_EQ(a.violations, 0u);
    EXPECT_EQ(a.distinct_sums, (std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0}));
    EXPECT_TRUE(a.covers_fine_lattice);

    const auto b = superset_check(5, 2);
    EXPECT_EQ(b.combinations, 25u);
    EXPECT_EQ(b.violations, 0u);
    EXPECT_EQ(b.fine_levels, 17);
    for (double v : b.distinct_sums) EXPECT_TRUE(on_lattice(v, 17)) << v;

    const auto c = superset_check(3, 1);
    EXPECT_EQ(c.distinct_sums, (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(SupersetCheck, BruteForceAgreesForDeeperStacks) {
    for (int levels : {3, 5, 9}) {
        for (int stages : {2, 3}) {
            const auto r = superset_check(levels, stages);
            const std::int64_t fine = static_cast<std::int64_t>(std::pow(levels - 1, stages)) + 1;
            EXPECT_EQ(r.fine_levels, fine);
            EXPECT_EQ(r.violations, 0u);
            for (double v : r.distinct_sums) EXPECT_TRUE(on_lattice(v, fine)) << levels << "/" << stages << ": " << v;
        }
    }
}

TEST(SupersetCheck, GuardsEnumerationSize) {
    EXPECT_FSQ_ERROR(superset_check(65537, 3), ErrorKind::capacity_error);
}

TEST(GapSweep, ReportsStatistics) {
    const auto g = residual_gap_sweep(ResidualSpec(3, 2), -1.0, 1.0, 2001);
    EXPECT_EQ(g.samples, 2001u);
    EXPECT_LE(g.exact_matches, g.samples);
    EXPECT_GE(g.max_gap_steps, g.mean_gap_steps);
    EXPECT_GE(g.mean_gap_steps, 0.0);
}

TEST(Partition, SplitsDimensions) {
    const auto spec = fsq::QuantizerSpec({3, 5, 3, 5});
    const std::vector<int> groups{2, 2};
    const auto parts = partition_spec(spec, groups);
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0].levels(), (std::vector<int>{3, 5}));
    const std::vector<double> v{1.0, -0.5, -1.0, 1.0};
    const auto t = partition_tokens(v, spec, groups);
    EXPECT_EQ(t, (std::vector<std::uint64_t>{2 + 3 * 1, 0 + 3 * 4}));
    EXPECT_FSQ_ERROR(partition_spec(spec, std::vector<int>{3}), ErrorKind::shape_error);
}

// ---- properties ----

TEST(ResidualProperty, StageValuesAreScaledLatticeMultiples) {
    std::mt19937_64 rng(12);
    for (int levels : {3, 5, 9}) {
        const ResidualSpec spec(levels, 3);
        for (int i = 0; i < 3000; ++i) {
            const auto frame = residual_decompose(std::vector<double>{4.0 * uniform01(rng) - 2.0}, spec);
            for (int k = 0; k < 3; ++k) {
                const double unit = 2.0 / (levels - 1) / spec.stage_scale(k);
                const double m = frame.stage_values[k][0] / unit;
                ASSERT_NEAR(m, std::round(m), 1e-9);
            }
            ASSERT_GE(frame.reconstruction[0], -1.0);
            ASSERT_LE(frame.reconstruction[0], 1.0);
        }
    }
}

TEST(ResidualProperty, ClippedSumsStayOnFineLattice) {
    std::mt19937_64 rng(13);
    for (int levels : {3, 5}) {
        for (int stages : {2, 3}) {
            const ResidualSpec spec(levels, stages);
            for (int i = 0; i < 5000; ++i) {
                const auto frame = residual_decompose(std::vector<double>{6.0 * uniform01(rng) - 3.0}, spec);
                ASSERT_TRUE(on_lattice(frame.reconstruction[0], spec.fine_levels())) << frame.reconstruction[0];
            }
        }
    }
}

TEST(ResidualProperty, WeakErrorMonotonicityOnDenseGrid) {
    struct Config {
        int levels;
        int extra;
    };
    for (const auto c : {Config{3, 1}, Config{3, 2}, Config{5, 1}}) {
        const ResidualSpec base(c.levels, 1);
        const ResidualSpec deep(c.levels, 1 + c.extra);
        std::size_t violations = 0;
        for (int i = 0; i <= 20000; ++i) {
            const double z = -1.0 + i * 1e-4;
            const double e0 = std::abs(z - residual_decompose(std::vector<double>{z}, base).reconstruction[0]);
            const double ek = std::abs(z - residual_decompose(std::vector<double>{z}, deep).reconstruction[0]);
            violations += ek > e0 + 1e-12;
        }
        EXPECT_EQ(violations, 0u) << "L=" << c.levels << " K=" << c.extra;
    }
}

}  // namespace
}  // namespace fsqkit::residual
