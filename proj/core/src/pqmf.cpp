#include "fft.hpp"
#include "fsqkit/error.hpp"
#include "fsqkit/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace fsqkit::filterbank {

namespace {

constexpr std::size_t kGridHalf = 8192;

std::vector<double> kaiser_sinc(std::size_t taps, double cutoff, double beta) {
    std::vector<double> p(taps);
    const double centre = (static_cast<double>(taps) - 1.0) / 2.0;
    const double i0_beta = std::cyl_bessel_i(0.0, beta);
    for (std::size_t i = 0; i < taps; ++i) {
        const double t = static_cast<double>(i) - centre;
        const double sinc = t == 0.0 ? cutoff / std::numbers::pi : std::sin(cutoff * t) / (std::numbers::pi * t);
        const double r = taps > 1 ? 2.0 * static_cast<double>(i) / (static_cast<double>(taps) - 1.0) - 1.0 : 0.0;
        const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        p[i] = sinc * win;
    }
    return p;
}

// |P(w)|^2 + |P(pi/K - w)|^2 sampled on [0, pi/K].
std::vector<double> complementarity(const std::vector<double> &p, std::size_t channels) {
    const std::size_t n = 2 * kGridHalf;
    const auto &fft = detail::real_fft(n);
    std::vector<double> buf(n, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) buf[i % n] += p[i];
    std::vector<std::complex<double>> spec(fft.bins());
    fft.forward(buf, spec);
    const std::size_t step = kGridHalf / channels;
    std::vector<double> s(step + 1);
    for (std::size_t i = 0; i <= step; ++i) s[i] = std::norm(spec[i]) + std::norm(spec[step - i]);
    return s;
}

double ripple(const std::vector<double> &s) {
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    return (*hi - *lo) / mean;
}

std::vector<double> design(std::size_t channels, std::size_t taps, double stopband_db) {
    const double beta = 0.1102 * (stopband_db - 8.7);
    const double K = static_cast<double>(channels);
    auto objective = [&](double wc) { return ripple(complementarity(kaiser_sinc(taps, wc, beta), channels)); };

    const double lo = std::numbers::pi / (4.0 * K);
    const double hi = std::numbers::pi / K;
    constexpr int grid = 401;
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
        const double v = objective(lo + (hi - lo) * i / (grid - 1));
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = lo + (hi - lo) * std::max(best - 1, 0) / (grid - 1);
    double b = lo + (hi - lo) * std::min(best + 1, grid - 1) / (grid - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
        const double c = b - gr * (b - a);
        const double d = a + gr * (b - a);
        if (objective(c) < objective(d)) {
            b = d;
        } else {
            a = c;
        }
    }
    auto p = kaiser_sinc(taps, (a + b) / 2.0, beta);
    const auto s = complementarity(p, channels);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    const double norm = 1.0 / std::sqrt(mean);
    for (auto &v : p) v *= norm;
    return p;
}

struct Bank {
    std::vector<double> analysis;   // channels x taps
    std::vector<double> synthesis;  // channels x taps
};

const Bank &cached_bank(const FilterbankSpec &spec) {
    static std::mutex mutex;
    static std::map<std::tuple<std::size_t, std::size_t, double>, Bank> cache;
    const std::size_t K = spec.size;
    const std::size_t N = spec.taps;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find({K, N, spec.stopband_db});
        if (it != cache.end()) return it->second;
    }
    const auto p = pqmf_prototype(K, N, spec.stopband_db);
    Bank bank;
    bank.analysis.resize(K * N);
    bank.synthesis.resize(K * N);
    const double centre = (static_cast<double>(N) - 1.0) / 2.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double theta = (k % 2 == 0 ? 1.0 : -1.0) * std::numbers::pi / 4.0;
        const double freq = (2.0 * static_cast<double>(k) + 1.0) * std::numbers::pi / (2.0 * static_cast<double>(K));
        for (std::size_t n = 0; n < N; ++n) {
            const double phase = freq * (static_cast<double>(n) - centre);
            bank.analysis[k * N + n] = 2.0 * p[n] * std::cos(phase + theta);
            bank.synthesis[k * N + n] = 2.0 * p[n] * std::cos(phase - theta);
        }
    }
    std::lock_guard lock(mutex);
    return cache.emplace(std::make_tuple(K, N, spec.stopband_db), std::move(bank)).first->second;
}

void check_pqmf(const FilterbankSpec &spec) {
    if (spec.family != Family::pqmf) throw Error(ErrorKind::invalid_config, "not a PQMF spec");
    spec.validate();
}

}  // namespace

std::vector<double> pqmf_prototype(std::size_t channels, std::size_t taps, double stopband_db) {
    FilterbankSpec::pqmf(channels, taps, stopband_db).validate();
    return design(channels, taps, stopband_db);
}

RealFrames pqmf_forward(std::span<const double> x, const FilterbankSpec &spec) {
    check_pqmf(spec);
    const auto &bank = cached_bank(spec);
    const std::size_t K = spec.size;
    const std::size_t N = spec.taps;
    RealFrames out;
    out.channels = K;
    out.original_length = x.size();
    out.frames = (x.size() + K - 1) / K;
    const std::size_t L = out.frames * K;
    out.data.assign(L, 0.0);
    if (L == 0) return out;
    std::vector<double> xp(L, 0.0);
    std::copy(x.begin(), x.end(), xp.begin());
    for (std::size_t m = 0; m < out.frames; ++m) {
        // Gather x[(mK - n) mod L] once per output frame and reuse it for every channel.
        std::vector<double> seg(N);
        for (std::size_t n = 0; n < N; ++n) seg[n] = xp[(m * K + L - (n % L)) % L];
        for (std::size_t k = 0; k < K; ++k) {
            const double *h = &bank.analysis[k * N];
            double acc = 0.0;
            for (std::size_t n = 0; n < N; ++n) acc += h[n] * seg[n];
            out.data[m * K + k] = acc;
        }
    }
    return out;
}

std::vector<double> pqmf_inverse(const RealFrames &frames, const FilterbankSpec &spec) {
    check_pqmf(spec);
    const std::size_t K = spec.size;
    const std::size_t N = spec.taps;
    if (frames.channels != K || frames.data.size() != frames.frames * K ||
        frames.original_length > frames.frames * K) {
        throw Error(ErrorKind::shape_error, "subband matrix does not match the PQMF spec");
    }
    const auto &bank = cached_bank(spec);
    const std::size_t L = frames.frames * K;
    std::vector<double> y(L, 0.0);
    std::vector<double> mix(N);
    for (std::size_t m = 0; m < frames.frames; ++m) {
        std::fill(mix.begin(), mix.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const double u = frames.data[m * K + k];
            if (u == 0.0) continue;
            const double *f = &bank.synthesis[k * N];
            for (std::size_t n = 0; n < N; ++n) mix[n] += u * f[n];
        }
        for (std::size_t n = 0; n < N; ++n) y[(m * K + n) % L] += mix[n];
    }
    std::vector<double> out(frames.original_length);
    const double scale = static_cast<double>(K);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = scale * y[(j + N - 1) % L];
    return out;
}

}  // namespace fsqkit::filterbank
