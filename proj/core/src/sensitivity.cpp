#include "fft.hpp"
#include "fsqkit/analysis.hpp"
#include "fsqkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace fsqkit::analysis {

namespace {

using filterbank::FilterbankSpec;
using filterbank::Window;

// One loss resolution with cached spectra of the current signal and the
// magnitudes of the reference.
struct Resolution {
    FilterbankSpec spec;
    std::vector<double> window;
    filterbank::ComplexFrames base;
    std::vector<double> ref_mag;
    std::vector<double> frame_loss;
    double weight = 0.0;
};

Resolution make_resolution(std::span<const double> x, std::span<const double> reference, std::size_t size,
                           std::size_t hop, Window window) {
    Resolution r;
    r.spec = FilterbankSpec::stft(size, hop, window);
    r.window = filterbank::make_window(window, size);
    r.base = filterbank::stft_forward(x, r.spec);
    const auto ref = filterbank::stft_forward(reference, r.spec);
    r.ref_mag.resize(ref.data.size());
    for (std::size_t i = 0; i < ref.data.size(); ++i) r.ref_mag[i] = std::abs(ref.data[i]);
    r.frame_loss.assign(r.base.frames, 0.0);
    for (std::size_t f = 0; f < r.base.frames; ++f) {
        double acc = 0.0;
        for (std::size_t b = 0; b < r.base.bins; ++b) {
            acc += std::abs(std::abs(r.base.data[f * r.base.bins + b]) - r.ref_mag[f * r.base.bins + b]);
        }
        r.frame_loss[f] = acc;
    }
    r.weight = r.base.data.empty() ? 0.0 : 1.0 / static_cast<double>(r.base.data.size());
    return r;
}

std::vector<Resolution> make_resolutions(std::span<const double> x, std::span<const double> reference,
                                         const FftPlan &plan) {
    if (plan.sizes.empty() || plan.sizes.size() != plan.hops.size()) {
        throw Error(ErrorKind::invalid_config, "loss plan has no resolutions");
    }
    std::vector<Resolution> res;
    for (std::size_t i = 0; i < plan.sizes.size(); ++i) {
        res.push_back(make_resolution(x, reference, plan.sizes[i], plan.hops[i], plan.window));
    }
    return res;
}

}  // namespace

double multires_stft_l1(std::span<const double> x, std::span<const double> reference, const FftPlan &plan) {
    if (x.size() != reference.size()) throw Error(ErrorKind::shape_error, "signal and reference lengths differ");
    double total = 0.0;
    for (const auto &r : make_resolutions(x, reference, plan)) {
        double acc = 0.0;
        for (double v : r.frame_loss) acc += v;
        total += acc * r.weight;
    }
    return total;
}

std::vector<double> SensitivityMap::time_marginal() const {
    std::vector<double> m(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t b = 0; b < bins; ++b) m[f] += at(f, b);
    }
    return m;
}

std::vector<double> SensitivityMap::frequency_marginal() const {
    std::vector<double> m(bins, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t b = 0; b < bins; ++b) m[b] += at(f, b);
    }
    return m;
}

SensitivityMap sensitivity_map(std::span<const double> signal, std::span<const double> reference,
                               const FilterbankSpec &probe, const FftPlan &loss, double fd_step) {
    if (signal.size() != reference.size()) throw Error(ErrorKind::shape_error, "signal and reference lengths differ");
    if (!(fd_step > 0.0)) throw Error(ErrorKind::invalid_input, "finite-difference step must be positive");
    if (probe.family != filterbank::Family::stft) throw Error(ErrorKind::invalid_config, "probe must be an STFT");
    double cola = 0.0;
    try {
        cola = filterbank::cola_constant(probe);
    } catch (const Error &e) {
        throw Error(ErrorKind::invalid_config, std::string("probe STFT is not invertible: ") + e.what());
    }

    auto res = make_resolutions(signal, reference, loss);
    const auto probe_frames = filterbank::stft_forward(signal, probe);
    const auto &probe_fft = detail::real_fft(probe.size);

    SensitivityMap map;
    map.probe = probe;
    map.frames = probe_frames.frames;
    map.bins = probe_frames.bins;
    map.fd_step = fd_step;
    map.values.assign(map.frames * map.bins, 0.0);

    const auto len = static_cast<std::ptrdiff_t>(signal.size());
    const double synth_scale = 1.0 / (static_cast<double>(probe.size) * cola);
    std::vector<std::complex<double>> unit(probe_fft.bins());
    std::vector<double> delta_re(probe.size), delta_im(probe.size);
    std::vector<double> frame_buf;
    std::vector<std::complex<double>> spec_re, spec_im;

    for (std::size_t n = 0; n < map.frames; ++n) {
        const auto p_start = filterbank::stft_frame_start(probe, n);
        const auto lo = std::max<std::ptrdiff_t>(p_start, 0);
        const auto hi = std::min<std::ptrdiff_t>(p_start + static_cast<std::ptrdiff_t>(probe.size), len);
        for (std::size_t f = 0; f < map.bins; ++f) {
            std::fill(unit.begin(), unit.end(), std::complex<double>{});
            unit[f] = {1.0, 0.0};
            probe_fft.inverse(unit, delta_re);
            unit[f] = {0.0, 1.0};
            probe_fft.inverse(unit, delta_im);

            double g_re = 0.0;
            double g_im = 0.0;
            for (auto &r : res) {
                const auto &fft = detail::real_fft(r.spec.size);
                const auto size = static_cast<std::ptrdiff_t>(r.spec.size);
                const auto hop = static_cast<std::ptrdiff_t>(r.spec.hop);
                const auto first_start = filterbank::stft_frame_start(r.spec, 0);
                // Loss frames j with start_j < hi and start_j + size > lo.
                const auto j_lo = std::max<std::ptrdiff_t>(0, (lo - size - first_start) / hop);
                const auto j_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r.base.frames) - 1,
                                                          (hi - 1 - first_start) / hop);
                frame_buf.assign(r.spec.size, 0.0);
                spec_re.resize(r.base.bins);
                spec_im.resize(r.base.bins);
                for (auto j = j_lo; j <= j_hi; ++j) {
                    const auto start = first_start + j * hop;
                    if (start >= hi || start + size <= lo) continue;
                    for (int part = 0; part < 2; ++part) {
                        const auto &delta = part == 0 ? delta_re : delta_im;
                        std::fill(frame_buf.begin(), frame_buf.end(), 0.0);
                        for (auto t = std::max(start, lo); t < std::min(start + size, hi); ++t) {
                            frame_buf[static_cast<std::size_t>(t - start)] =
                                r.window[static_cast<std::size_t>(t - start)] *
                                delta[static_cast<std::size_t>(t - p_start)] * synth_scale;
                        }
                        fft.forward(frame_buf, part == 0 ? spec_re : spec_im);
                    }
                    const auto row = r.base.row(static_cast<std::size_t>(j));
                    const double *ref = &r.ref_mag[static_cast<std::size_t>(j) * r.base.bins];
                    double plus_re = 0.0, minus_re = 0.0, plus_im = 0.0, minus_im = 0.0;
                    for (std::size_t b = 0; b < r.base.bins; ++b) {
                        const auto x = row[b];
                        const auto dr = fd_step * spec_re[b];
                        const auto di = fd_step * spec_im[b];
                        plus_re += std::abs(std::abs(x + dr) - ref[b]);
                        minus_re += std::abs(std::abs(x - dr) - ref[b]);
                        plus_im += std::abs(std::abs(x + di) - ref[b]);
                        minus_im += std::abs(std::abs(x - di) - ref[b]);
                    }
                    g_re += r.weight * (plus_re - minus_re);
                    g_im += r.weight * (plus_im - minus_im);
                }
            }
            g_re /= 2.0 * fd_step;
            g_im /= 2.0 * fd_step;
            map.values[n * map.bins + f] = std::sqrt(g_re * g_re + g_im * g_im);
        }
    }
    return map;
}

}  // namespace fsqkit::analysis
