#include "fsqkit/residual.hpp"

#include "fsqkit/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace fsqkit::residual {

int validate_residual_levels(int levels) {
    if (levels < 3) {
        throw Error(ErrorKind::residual_unsupported,
                    "residual decomposition needs L = 2^n + 1 >= 3, got " + std::to_string(levels));
    }
    const unsigned steps = static_cast<unsigned>(levels - 1);
    if ((steps & (steps - 1)) != 0) {
        throw Error(ErrorKind::residual_unsupported,
                    "L - 1 = " + std::to_string(steps) + " is not a power of two");
    }
    return std::countr_zero(steps);
}

ResidualSpec::ResidualSpec(int levels, int stages)
    : levels_(levels), n_(validate_residual_levels(levels)), stages_(stages) {
    if (stages < 1) {
        throw Error(ErrorKind::invalid_config, "residual decomposition needs at least one stage");
    }
    if (static_cast<long>(n_) * stages > 52) {
        throw Error(ErrorKind::capacity_error, "stage scales exceed double precision");
    }
}

double ResidualSpec::stage_scale(int stage) const {
    return std::ldexp(1.0, n_ * stage);
}

std::int64_t ResidualSpec::fine_levels() const {
    return (std::int64_t{1} << (n_ * stages_)) + 1;
}

fsq::QuantizerSpec ResidualSpec::stage_quantizer(int dims, Rational frame_rate) const {
    return fsq::QuantizerSpec::uniform(dims, levels_, frame_rate);
}

ResidualFrame residual_decompose(std::span<const double> z, const ResidualSpec &spec) {
    for (double v : z) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::invalid_input, "latent contains non-finite values");
        }
    }
    const int L = spec.levels();
    const std::vector<int> radices(z.size(), L);
    ResidualFrame frame;
    std::vector<double> residual(z.begin(), z.end());
    std::vector<double> sum(z.size(), 0.0);
    std::vector<int> digits(z.size());

    for (int k = 0; k < spec.stages(); ++k) {
        const double scale = spec.stage_scale(k);
        std::vector<double> q(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            const double level = fsq::quantize_scalar(scale * residual[j], L);
            digits[j] = fsq::level_digit(level, L);
            q[j] = level / scale;
            sum[j] += q[j];
            residual[j] = z[j] - sum[j];
        }
        frame.stage_tokens.push_back(fsq::pack_digits(digits, radices));
        frame.stage_values.push_back(std::move(q));
    }
    frame.reconstruction.resize(z.size());
    std::transform(sum.begin(), sum.end(), frame.reconstruction.begin(),
                   [](double s) { return std::clamp(s, -1.0, 1.0); });
    return frame;
}

std::vector<double> residual_reconstruct(std::span<const std::uint64_t> stage_tokens,
                                         const ResidualSpec &spec, int dims) {
    if (stage_tokens.size() != static_cast<std::size_t>(spec.stages())) {
        throw Error(ErrorKind::decode_error, "expected " + std::to_string(spec.stages()) +
                                                 " stage tokens, got " +
                                                 std::to_string(stage_tokens.size()));
    }
    const auto quantizer = spec.stage_quantizer(dims);
    std::vector<double> sum(static_cast<std::size_t>(dims), 0.0);
    for (int k = 0; k < spec.stages(); ++k) {
        const auto token = stage_tokens[static_cast<std::size_t>(k)];
        if (token >= quantizer.codebook_size()) {
            throw Error(ErrorKind::decode_error, "stage " + std::to_string(k) + " token " +
                                                     std::to_string(token) + " outside codebook");
        }
        const auto values = fsq::token_to_values(token, quantizer);
        const double scale = spec.stage_scale(k);
        for (std::size_t j = 0; j < values.size(); ++j) sum[j] += values[j] / scale;
    }
    for (double &s : sum) s = std::clamp(s, -1.0, 1.0);
    return sum;
}

SupersetReport superset_check(int levels, int stages) {
    const ResidualSpec spec(levels, stages);
    SupersetReport report;
    report.levels = levels;
    report.stages = stages;
    report.fine_levels = spec.fine_levels();

    std::uint64_t combos = 1;
    for (int k = 0; k < stages; ++k) {
        combos *= static_cast<std::uint64_t>(levels);
        if (combos > (std::uint64_t{1} << 24)) {
            throw Error(ErrorKind::capacity_error, "more than 2^24 stage combinations");
        }
    }
    report.combinations = combos;

    // Work on the integer grid of the fine lattice: a stage-k digit d
    // contributes (2d - (L-1)) * (L-1)^(K-1-k) fine half-steps.
    const std::int64_t steps = levels - 1;
    const std::int64_t fine_steps = report.fine_levels - 1;
    std::vector<std::int64_t> weight(static_cast<std::size_t>(stages));
    for (int k = 0; k < stages; ++k) {
        std::int64_t w = 1;
        for (int i = k + 1; i < stages; ++i) w *= steps;
        weight[static_cast<std::size_t>(k)] = w;
    }

    std::vector<bool> reached(static_cast<std::size_t>(report.fine_levels), false);
    std::vector<int> digit(static_cast<std::size_t>(stages), 0);
    for (std::uint64_t c = 0; c < combos; ++c) {
        std::uint64_t rest = c;
        std::int64_t numer = 0;  // sum in units of 1/fine_steps, range [-fine..fine]
        double as_double = 0.0;
        for (int k = 0; k < stages; ++k) {
            const int d = static_cast<int>(rest % static_cast<std::uint64_t>(levels));
            rest /= static_cast<std::uint64_t>(levels);
            numer += (2 * d - steps) * weight[static_cast<std::size_t>(k)];
            as_double += fsq::digit_value(d, levels) / spec.stage_scale(k);
        }
        numer = std::clamp(numer, -fine_steps, fine_steps);
        const double clipped = std::clamp(as_double, -1.0, 1.0);
        // On the fine lattice iff numer has the parity of fine_steps, and the
        // floating-point route agrees with the integer route.
        const bool on_grid = ((numer + fine_steps) % 2) == 0;
        const std::int64_t fine_digit = (numer + fine_steps) / 2;
        const bool agrees = on_grid && fsq::digit_value(static_cast<int>(fine_digit),
                                                        static_cast<int>(report.fine_levels)) == clipped;
        if (!agrees) {
            ++report.violations;
            continue;
        }
        reached[static_cast<std::size_t>(fine_digit)] = true;
    }
    report.covers_fine_lattice = std::all_of(reached.begin(), reached.end(), [](bool b) { return b; });
    for (std::size_t i = 0; i < reached.size(); ++i) {
        if (reached[i]) {
            report.distinct_sums.push_back(
                fsq::digit_value(static_cast<int>(i), static_cast<int>(report.fine_levels)));
        }
    }
    return report;
}

GapStats residual_gap_sweep(const ResidualSpec &spec, double lo, double hi, std::size_t count) {
    if (count < 2 || !(hi > lo)) {
        throw Error(ErrorKind::invalid_config, "gap sweep needs count >= 2 and hi > lo");
    }
    const auto fine = spec.fine_levels();
    if (fine > (std::int64_t{1} << 30)) {
        throw Error(ErrorKind::capacity_error, "fine lattice too large for a direct quantizer");
    }
    const int fine_levels = static_cast<int>(fine);
    const double fine_step = 2.0 / static_cast<double>(fine_levels - 1);
    GapStats stats;
    double total = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        const double direct = fsq::quantize_scalar(z, fine_levels);
        const double zz[1] = {z};
        const double decomposed = residual_decompose(zz, spec).reconstruction[0];
        const double gap = std::abs(decomposed - direct) / fine_step;
        stats.exact_matches += (decomposed == direct);
        stats.max_gap_steps = std::max(stats.max_gap_steps, gap);
        total += gap;
    }
    stats.samples = count;
    stats.mean_gap_steps = total / static_cast<double>(count);
    return stats;
}

std::vector<fsq::QuantizerSpec> partition_spec(const fsq::QuantizerSpec &spec,
                                               std::span<const int> group_sizes) {
    std::vector<fsq::QuantizerSpec> groups;
    std::size_t offset = 0;
    for (int size : group_sizes) {
        if (size < 1 || offset + static_cast<std::size_t>(size) > spec.levels().size()) {
            throw Error(ErrorKind::shape_error, "partition groups do not tile the dimensions");
        }
        groups.emplace_back(std::vector<int>(spec.levels().begin() + static_cast<long>(offset),
                                             spec.levels().begin() + static_cast<long>(offset) + size),
                            spec.frame_rate());
        offset += static_cast<std::size_t>(size);
    }
    if (offset != spec.levels().size()) {
        throw Error(ErrorKind::shape_error, "partition groups do not tile the dimensions");
    }
    return groups;
}

std::vector<std::uint64_t> partition_tokens(std::span<const double> values,
                                            const fsq::QuantizerSpec &spec,
                                            std::span<const int> group_sizes) {
    const auto groups = partition_spec(spec, group_sizes);
    if (values.size() != spec.levels().size()) {
        throw Error(ErrorKind::shape_error, "value count does not match quantizer dimensions");
    }
    std::vector<std::uint64_t> tokens;
    std::size_t offset = 0;
    for (const auto &g : groups) {
        tokens.push_back(fsq::token_index(values.subspan(offset, static_cast<std::size_t>(g.dims())), g));
        offset += static_cast<std::size_t>(g.dims());
    }
    return tokens;
}

}  // namespace fsqkit::residual
