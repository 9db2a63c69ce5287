#include "fsqkit/filterbank.hpp"

#include "fft.hpp"
#include "fsqkit/error.hpp"
#include "fsqkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace fsqkit::filterbank {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Cosine table for the MDCT of half-size M, shared across calls.
const std::vector<double> &mdct_table(std::size_t M) {
    static std::mutex mutex;
    static std::map<std::size_t, std::vector<double>> tables;
    std::lock_guard lock(mutex);
    auto &t = tables[M];
    if (t.empty()) {
        const std::size_t N = 2 * M;
        t.resize(N * M);
        const double base = std::numbers::pi / static_cast<double>(M);
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t k = 0; k < M; ++k) {
                t[n * M + k] = std::cos(base * (static_cast<double>(n) + 0.5 + static_cast<double>(M) / 2.0) *
                                        (static_cast<double>(k) + 0.5));
            }
        }
    }
    return t;
}

}  // namespace

FilterbankSpec FilterbankSpec::patch(std::size_t patch_size) {
    return {Family::patch, patch_size, patch_size, Window::rectangular, 0, 100.0};
}

FilterbankSpec FilterbankSpec::stft(std::size_t fft_size, std::size_t hop, Window window) {
    return {Family::stft, fft_size, hop, window, 0, 100.0};
}

FilterbankSpec FilterbankSpec::mdct(std::size_t block_size) {
    return {Family::mdct, block_size, block_size / 2, Window::sine, 0, 100.0};
}

FilterbankSpec FilterbankSpec::pqmf(std::size_t channels, std::size_t taps, double stopband_db) {
    return {Family::pqmf, channels, channels, Window::rectangular, taps == 0 ? 64 * channels : taps, stopband_db};
}

void FilterbankSpec::validate() const {
    auto fail = [](const std::string &m) { throw Error(ErrorKind::invalid_config, m); };
    switch (family) {
    case Family::patch:
        if (size < 1 || hop != size) fail("patch transform needs hop == patch size >= 1");
        break;
    case Family::stft:
        if (size < 1 || hop < 1 || hop > size) fail("STFT needs 1 <= hop <= size");
        break;
    case Family::mdct:
        if (size < 2 || size % 2 != 0) fail("MDCT block size must be even");
        if (hop != size / 2) fail("MDCT hop must be half the block size");
        break;
    case Family::pqmf:
        if (size < 2) fail("PQMF needs at least two channels");
        if (hop != size) fail("PQMF hop must equal the channel count");
        if (taps < size || taps % size != 0) fail("PQMF prototype length must be a multiple of the channel count");
        if (!(stopband_db > 20.0)) fail("PQMF stopband attenuation must exceed 20 dB");
        break;
    }
}

double FilterbankSpec::sampling_ratio() const {
    validate();
    return family == Family::stft ? static_cast<double>(size) / static_cast<double>(hop) : 1.0;
}

std::vector<double> make_window(Window window, std::size_t length) {
    std::vector<double> w(length, 1.0);
    const double N = static_cast<double>(length);
    for (std::size_t n = 0; n < length; ++n) {
        const double t = static_cast<double>(n);
        switch (window) {
        case Window::rectangular: break;
        case Window::hann: w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / N); break;
        case Window::sine: w[n] = std::sin(std::numbers::pi * (t + 0.5) / N); break;
        }
    }
    return w;
}

RealFrames patch_forward(std::span<const double> x, std::size_t patch_size) {
    FilterbankSpec::patch(patch_size).validate();
    RealFrames out;
    out.channels = patch_size;
    out.original_length = x.size();
    out.frames = ceil_div(x.size(), patch_size);
    out.data.assign(out.frames * patch_size, 0.0);
    std::copy(x.begin(), x.end(), out.data.begin());
    return out;
}

std::vector<double> patch_inverse(const RealFrames &frames) {
    if (frames.original_length > frames.data.size()) {
        throw Error(ErrorKind::shape_error, "frame matrix shorter than the recorded signal length");
    }
    return {frames.data.begin(), frames.data.begin() + static_cast<std::ptrdiff_t>(frames.original_length)};
}

double cola_constant(const FilterbankSpec &spec) {
    spec.validate();
    const auto w = make_window(spec.window, spec.size);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t n = 0; n < spec.hop; ++n) {
        double s = 0.0;
        for (std::size_t i = n; i < spec.size; i += spec.hop) s += w[i];
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (!(lo > 0.0) || hi - lo > 1e-10 * hi) {
        throw Error(ErrorKind::non_invertible_config,
                    "window does not overlap-add to a constant at hop " + std::to_string(spec.hop));
    }
    return 0.5 * (lo + hi);
}

std::ptrdiff_t stft_frame_start(const FilterbankSpec &spec, std::size_t frame) {
    return static_cast<std::ptrdiff_t>(frame * spec.hop) - static_cast<std::ptrdiff_t>(spec.size - spec.hop);
}

ComplexFrames stft_forward(std::span<const double> x, const FilterbankSpec &spec) {
    if (spec.family != Family::stft) throw Error(ErrorKind::invalid_config, "not an STFT spec");
    spec.validate();
    const auto &fft = detail::real_fft(spec.size);
    const auto w = make_window(spec.window, spec.size);
    ComplexFrames out;
    out.bins = fft.bins();
    out.original_length = x.size();
    out.frames = x.empty() ? 0 : ceil_div(spec.size - spec.hop + x.size(), spec.hop);
    out.data.resize(out.frames * out.bins);
    std::vector<double> buf(spec.size);
    const auto len = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t f = 0; f < out.frames; ++f) {
        const auto start = stft_frame_start(spec, f);
        for (std::size_t n = 0; n < spec.size; ++n) {
            const auto i = start + static_cast<std::ptrdiff_t>(n);
            buf[n] = (i >= 0 && i < len) ? w[n] * x[static_cast<std::size_t>(i)] : 0.0;
        }
        fft.forward(buf, out.row(f));
    }
    return out;
}

std::vector<double> stft_inverse(const ComplexFrames &frames, const FilterbankSpec &spec) {
    if (spec.family != Family::stft) throw Error(ErrorKind::invalid_config, "not an STFT spec");
    const double c = cola_constant(spec);
    const auto &fft = detail::real_fft(spec.size);
    if (frames.bins != fft.bins()) throw Error(ErrorKind::shape_error, "bin count does not match FFT size");
    std::vector<double> out(frames.original_length, 0.0);
    std::vector<double> buf(spec.size);
    const double scale = 1.0 / (static_cast<double>(spec.size) * c);
    const auto len = static_cast<std::ptrdiff_t>(out.size());
    for (std::size_t f = 0; f < frames.frames; ++f) {
        fft.inverse(frames.row(f), buf);
        const auto start = stft_frame_start(spec, f);
        for (std::size_t n = 0; n < spec.size; ++n) {
            const auto i = start + static_cast<std::ptrdiff_t>(n);
            if (i >= 0 && i < len) out[static_cast<std::size_t>(i)] += buf[n] * scale;
        }
    }
    return out;
}

RealFrames mdct_forward(std::span<const double> x, std::size_t block_size) {
    FilterbankSpec::mdct(block_size).validate();
    const std::size_t M = block_size / 2;
    const auto &table = mdct_table(M);
    const auto w = make_window(Window::sine, block_size);
    RealFrames out;
    out.channels = M;
    out.original_length = x.size();
    out.frames = x.empty() ? 0 : ceil_div(x.size(), M) + 1;
    out.data.assign(out.frames * M, 0.0);
    std::vector<double> buf(block_size);
    const auto len = static_cast<std::ptrdiff_t>(x.size());
    for (std::size_t t = 0; t < out.frames; ++t) {
        const auto start = static_cast<std::ptrdiff_t>(t * M) - static_cast<std::ptrdiff_t>(M);
        for (std::size_t n = 0; n < block_size; ++n) {
            const auto i = start + static_cast<std::ptrdiff_t>(n);
            buf[n] = (i >= 0 && i < len) ? w[n] * x[static_cast<std::size_t>(i)] : 0.0;
        }
        auto row = out.row(t);
        for (std::size_t n = 0; n < block_size; ++n) {
            if (buf[n] == 0.0) continue;
            const double *c = &table[n * M];
            for (std::size_t k = 0; k < M; ++k) row[k] += buf[n] * c[k];
        }
    }
    return out;
}

std::vector<double> mdct_inverse(const RealFrames &frames) {
    const std::size_t M = frames.channels;
    if (M == 0) return std::vector<double>(frames.original_length, 0.0);
    const std::size_t N = 2 * M;
    const auto &table = mdct_table(M);
    const auto w = make_window(Window::sine, N);
    std::vector<double> out(frames.original_length, 0.0);
    const auto len = static_cast<std::ptrdiff_t>(out.size());
    const double scale = 2.0 / static_cast<double>(M);
    for (std::size_t t = 0; t < frames.frames; ++t) {
        const auto row = frames.row(t);
        const auto start = static_cast<std::ptrdiff_t>(t * M) - static_cast<std::ptrdiff_t>(M);
        for (std::size_t n = 0; n < N; ++n) {
            const auto i = start + static_cast<std::ptrdiff_t>(n);
            if (i < 0 || i >= len) continue;
            const double *c = &table[n * M];
            double acc = 0.0;
            for (std::size_t k = 0; k < M; ++k) acc += row[k] * c[k];
            out[static_cast<std::size_t>(i)] += scale * w[n] * acc;
        }
    }
    return out;
}

std::vector<double> forward_flat(std::span<const double> x, const FilterbankSpec &spec) {
    spec.validate();
    switch (spec.family) {
    case Family::patch: return patch_forward(x, spec.size).data;
    case Family::mdct: return mdct_forward(x, spec.size).data;
    case Family::pqmf: return pqmf_forward(x, spec).data;
    case Family::stft: {
        const auto frames = stft_forward(x, spec);
        std::vector<double> flat;
        flat.reserve(2 * frames.data.size());
        for (const auto &c : frames.data) {
            flat.push_back(c.real());
            flat.push_back(c.imag());
        }
        return flat;
    }
    }
    return {};
}

namespace {

// Applies `perturb` to the coefficients of `x` and returns the reconstruction.
template <typename Perturb>
std::vector<double> perturbed_roundtrip(std::span<const double> x, const FilterbankSpec &spec, Perturb perturb) {
    switch (spec.family) {
    case Family::patch: {
        auto f = patch_forward(x, spec.size);
        for (auto &v : f.data) v = perturb(v);
        return patch_inverse(f);
    }
    case Family::mdct: {
        auto f = mdct_forward(x, spec.size);
        for (auto &v : f.data) v = perturb(v);
        return mdct_inverse(f);
    }
    case Family::pqmf: {
        auto f = pqmf_forward(x, spec);
        for (auto &v : f.data) v = perturb(v);
        return pqmf_inverse(f, spec);
    }
    case Family::stft: {
        auto f = stft_forward(x, spec);
        for (auto &c : f.data) c = {perturb(c.real()), perturb(c.imag())};
        return stft_inverse(f, spec);
    }
    }
    return {};
}

}  // namespace

RoundtripReport roundtrip_report(std::span<const double> x, const FilterbankSpec &spec) {
    spec.validate();
    const auto y = perturbed_roundtrip(x, spec, [](double v) { return v; });
    RoundtripReport r;
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = y[i] - x[i];
        err += d * d;
        ref += x[i] * x[i];
        r.max_abs = std::max(r.max_abs, std::abs(d));
    }
    r.relative_l2 = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
    r.relative_db = r.relative_l2 > 0.0 ? 20.0 * std::log10(r.relative_l2)
                                        : -std::numeric_limits<double>::infinity();
    r.sampling_ratio = spec.sampling_ratio();
    return r;
}

SpreadStats error_spread(std::span<const double> x, const FilterbankSpec &spec, double relative_noise,
                         unsigned seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    const auto y = perturbed_roundtrip(x, spec, [&](double v) { return v * (1.0 + relative_noise * standard_normal(rng)); });

    const std::size_t hop = spec.hop;
    std::size_t offset = 0;
    if (spec.family == Family::stft) {
        const auto s = stft_frame_start(spec, 0);
        offset = static_cast<std::size_t>(((s % static_cast<std::ptrdiff_t>(hop)) + static_cast<std::ptrdiff_t>(hop)) %
                                          static_cast<std::ptrdiff_t>(hop));
    }
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = y[i] - x[i];

    double jump_b = 0.0, jump_i = 0.0;
    std::size_t nb = 0, ni = 0;
    std::vector<double> fold(hop, 0.0);
    std::vector<std::size_t> fold_n(hop, 0);
    for (std::size_t n = 0; n < e.size(); ++n) {
        const std::size_t phase = (n + hop - offset) % hop;
        fold[phase] += e[n] * e[n];
        ++fold_n[phase];
        if (n == 0) continue;
        const double d = (e[n] - e[n - 1]) * (e[n] - e[n - 1]);
        if (phase == 0) {
            jump_b += d;
            ++nb;
        } else {
            jump_i += d;
            ++ni;
        }
    }
    SpreadStats s;
    if (nb > 0 && ni > 0 && jump_i > 0.0) s.boundary_ratio = (jump_b / static_cast<double>(nb)) / (jump_i / static_cast<double>(ni));
    double mean = 0.0, peak = 0.0;
    for (std::size_t p = 0; p < hop; ++p) {
        const double v = fold_n[p] ? fold[p] / static_cast<double>(fold_n[p]) : 0.0;
        mean += v;
        peak = std::max(peak, v);
    }
    mean /= static_cast<double>(hop);
    s.envelope_peak = mean > 0.0 ? peak / mean : 0.0;
    return s;
}

}  // namespace fsqkit::filterbank
