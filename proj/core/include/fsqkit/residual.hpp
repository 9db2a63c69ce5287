#pragma once

// Post-hoc residual decomposition of an FSQ bottleneck.
//
// With L = 2^n + 1 levels, stage k quantizes the running residual at a grid
// (L-1)^k times finer than stage 0:
//
//     q_0 = kappa_0(z),  q_k = kappa_k(z - sum_{i<k} q_i),
//     kappa_k(v) = Q_L((L-1)^k v) / (L-1)^k
//
// and the decoded latent is clip(sum_k q_k, -1, 1). Clipped sums always land
// on the single-stage lattice with (L-1)^(K+1) + 1 levels.

#include "fsqkit/quantizer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fsqkit::residual {

// Returns n for L = 2^n + 1 (n >= 1); throws residual_unsupported otherwise.
int validate_residual_levels(int levels);

class ResidualSpec {
public:
    ResidualSpec(int levels, int stages);

    int levels() const noexcept { return levels_; }
    int n() const noexcept { return n_; }
    int stages() const noexcept { return stages_; }

    // (L-1)^k as an exact power of two.
    double stage_scale(int stage) const;

    // (L-1)^stages + 1, the level count reachable by the clipped sum.
    std::int64_t fine_levels() const;

    // Per-stage quantizer over `dims` dimensions (all with L levels).
    fsq::QuantizerSpec stage_quantizer(int dims, Rational frame_rate = Rational(25)) const;

private:
    int levels_;
    int n_;
    int stages_;
};

struct ResidualFrame {
    std::vector<std::vector<double>> stage_values;  // q_k, already scaled
    std::vector<std::uint64_t> stage_tokens;        // mixed-radix of unscaled digits
    std::vector<double> reconstruction;             // clip(sum q_k, -1, 1)
};

ResidualFrame residual_decompose(std::span<const double> z, const ResidualSpec &spec);

std::vector<double> residual_reconstruct(std::span<const std::uint64_t> stage_tokens,
                                         const ResidualSpec &spec, int dims);

struct SupersetReport {
    int levels = 0;
    int stages = 0;
    std::int64_t fine_levels = 0;
    std::uint64_t combinations = 0;
    std::uint64_t violations = 0;
    bool covers_fine_lattice = false;       // every fine level is reachable
    std::vector<double> distinct_sums;      // sorted clipped sums
};

// Exhaustive check over every per-dimension stage-digit combination.
// Throws capacity_error above 2^24 combinations.
SupersetReport superset_check(int levels, int stages);

struct GapStats {
    std::size_t samples = 0;
    std::size_t exact_matches = 0;   // decomposition hits Q_fine(z)
    double max_gap_steps = 0.0;      // in units of the fine lattice spacing
    double mean_gap_steps = 0.0;
};

// Compares the residual decomposition with direct quantization on the fine
// lattice over an even grid of scalar latents in [lo, hi].
GapStats residual_gap_sweep(const ResidualSpec &spec, double lo, double hi, std::size_t count);

// Parallel partitioning: the d dimensions are split into consecutive groups,
// each emitting its own token. No ordering between the groups is implied.
std::vector<fsq::QuantizerSpec> partition_spec(const fsq::QuantizerSpec &spec,
                                               std::span<const int> group_sizes);
std::vector<std::uint64_t> partition_tokens(std::span<const double> values,
                                            const fsq::QuantizerSpec &spec,
                                            std::span<const int> group_sizes);

}  // namespace fsqkit::residual
