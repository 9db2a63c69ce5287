#include "fsqkit/metrics.hpp"

#include "fsqkit/error.hpp"
#include "fsqkit/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fsqkit::metrics {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char *what) {
    if (a != b) {
        throw Error(ErrorKind::shape_error,
                    std::string(what) + ": lengths differ (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double layer_l1(const FeatureLayer &l) {
    double s = 0.0;
    for (double v : l.values) s += std::abs(v);
    return s;
}

double layer_diff_l1(const FeatureLayer &a, const FeatureLayer &b) {
    if (a.rows != b.rows || a.cols != b.cols || a.values.size() != b.values.size() ||
        a.values.size() != a.rows * a.cols) {
        throw Error(ErrorKind::shape_error, "feature layer shapes differ");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s;
}

}  // namespace

double si_sdr(std::span<const double> ref, std::span<const double> est) {
    require_same_length(ref.size(), est.size(), "si_sdr");
    double ref_energy = 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        ref_energy += ref[i] * ref[i];
        dot += ref[i] * est[i];
    }
    if (ref_energy == 0.0) throw Error(ErrorKind::undefined_reference, "si_sdr: reference is all zeros");
    const double alpha = dot / ref_energy;
    double target = 0.0;
    double noise = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double t = alpha * ref[i];
        const double e = est[i] - t;
        target += t * t;
        noise += e * e;
    }
    if (noise == 0.0) return target == 0.0 ? -si_sdr_cap_db : si_sdr_cap_db;
    if (target == 0.0) return -si_sdr_cap_db;
    return std::clamp(10.0 * std::log10(target / noise), -si_sdr_cap_db, si_sdr_cap_db);
}

double spectral_convergence(std::span<const double> ref_mag, std::span<const double> est_mag) {
    require_same_length(ref_mag.size(), est_mag.size(), "spectral_convergence");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < ref_mag.size(); ++i) {
        const double d = ref_mag[i] - est_mag[i];
        num += d * d;
        den += ref_mag[i] * ref_mag[i];
    }
    if (den == 0.0) throw Error(ErrorKind::undefined_reference, "spectral convergence: reference is all zeros");
    return std::sqrt(num / den);
}

Magnitudes stft_magnitudes(std::span<const double> x, std::size_t fft_size, std::size_t hop) {
    const auto spec = filterbank::FilterbankSpec::stft(fft_size, hop, filterbank::Window::hann);
    const auto frames = filterbank::stft_forward(x, spec);
    Magnitudes m;
    m.frames = frames.frames;
    m.bins = frames.bins;
    m.values.resize(frames.data.size());
    for (std::size_t i = 0; i < frames.data.size(); ++i) m.values[i] = std::abs(frames.data[i]);
    return m;
}

std::vector<double> mel_filterbank(double sample_rate, std::size_t fft_size, std::size_t n_mels) {
    if (!(sample_rate > 0.0) || fft_size < 2 || n_mels < 1) {
        throw Error(ErrorKind::invalid_config, "mel filterbank needs a positive rate, FFT size >= 2 and >= 1 band");
    }
    const std::size_t bins = fft_size / 2 + 1;
    const double top = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    }
    std::vector<double> fb(n_mels * bins, 0.0);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
        const double norm = 2.0 / (hi - lo);
        for (std::size_t b = 0; b < bins; ++b) {
            const double f = static_cast<double>(b) * sample_rate / static_cast<double>(fft_size);
            const double rise = (f - lo) / (centre - lo);
            const double fall = (hi - f) / (hi - centre);
            fb[m * bins + b] = norm * std::max(0.0, std::min(rise, fall));
        }
    }
    return fb;
}

Magnitudes mel_magnitudes(std::span<const double> x, double sample_rate, std::size_t fft_size, std::size_t hop,
                          std::size_t n_mels) {
    const auto lin = stft_magnitudes(x, fft_size, hop);
    const auto fb = mel_filterbank(sample_rate, fft_size, n_mels);
    Magnitudes m;
    m.frames = lin.frames;
    m.bins = n_mels;
    m.values.assign(m.frames * n_mels, 0.0);
    for (std::size_t t = 0; t < lin.frames; ++t) {
        for (std::size_t k = 0; k < n_mels; ++k) {
            double acc = 0.0;
            for (std::size_t b = 0; b < lin.bins; ++b) acc += fb[k * lin.bins + b] * lin.values[t * lin.bins + b];
            m.values[t * n_mels + k] = acc;
        }
    }
    return m;
}

double log_l1(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size(), "log_l1");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(std::log(std::max(a[i], log_floor)) - std::log(std::max(b[i], log_floor)));
    }
    return s / static_cast<double>(a.size());
}

double mel_distance(std::span<const double> ref, std::span<const double> est, double sample_rate) {
    require_same_length(ref.size(), est.size(), "mel_distance");
    const auto r = mel_magnitudes(ref, sample_rate);
    const auto e = mel_magnitudes(est, sample_rate);
    return log_l1(r.values, e.values) + spectral_convergence(r.values, e.values);
}

double stft_distance(std::span<const double> ref, std::span<const double> est) {
    require_same_length(ref.size(), est.size(), "stft_distance");
    const auto r = stft_magnitudes(ref, 2048, 512);
    const auto e = stft_magnitudes(est, 2048, 512);
    return log_l1(r.values, e.values) + spectral_convergence(r.values, e.values);
}

MetricReport evaluate(std::span<const double> ref, std::span<const double> est, double sample_rate) {
    return {si_sdr(ref, est), mel_distance(ref, est, sample_rate), stft_distance(ref, est)};
}

double feature_matching_loss_batch(std::span<const std::vector<FeatureStack>> ref,
                                   std::span<const std::vector<FeatureStack>> est) {
    if (ref.empty()) throw Error(ErrorKind::shape_error, "feature matching needs at least one example");
    if (ref.size() != est.size()) throw Error(ErrorKind::shape_error, "batch sizes differ");
    const std::size_t n_stacks = ref.front().size();
    if (n_stacks == 0) throw Error(ErrorKind::shape_error, "feature matching needs at least one stack");
    const std::size_t n_layers = ref.front().front().size();
    if (n_layers == 0) throw Error(ErrorKind::shape_error, "feature stacks must not be empty");
    for (std::size_t b = 0; b < ref.size(); ++b) {
        if (ref[b].size() != n_stacks || est[b].size() != n_stacks) throw Error(ErrorKind::shape_error, "stack counts differ");
        for (std::size_t n = 0; n < n_stacks; ++n) {
            if (ref[b][n].size() != n_layers || est[b][n].size() != n_layers) {
                throw Error(ErrorKind::shape_error, "every stack must have the same number of layers");
            }
        }
    }
    const double batch = static_cast<double>(ref.size());
    double total = 0.0;
    for (std::size_t n = 0; n < n_stacks; ++n) {
        for (std::size_t m = 0; m < n_layers; ++m) {
            double diff = 0.0;
            double norm = 0.0;
            for (std::size_t b = 0; b < ref.size(); ++b) {
                diff += layer_diff_l1(ref[b][n][m], est[b][n][m]);
                norm += layer_l1(ref[b][n][m]);
            }
            if (norm == 0.0) {
                throw Error(ErrorKind::undefined_reference,
                            "reference features of stack " + std::to_string(n) + " layer " + std::to_string(m) +
                                " are all zero");
            }
            total += (diff / batch) / (norm / batch);
        }
    }
    return total / static_cast<double>(n_stacks * n_layers);
}

double feature_matching_loss(std::span<const FeatureStack> ref, std::span<const FeatureStack> est) {
    const std::vector<std::vector<FeatureStack>> r{{ref.begin(), ref.end()}};
    const std::vector<std::vector<FeatureStack>> e{{est.begin(), est.end()}};
    return feature_matching_loss_batch(r, e);
}

double perceptual_loss(const FeatureStack &ref, const FeatureStack &est) {
    return feature_matching_loss(std::span(&ref, 1), std::span(&est, 1));
}

double l1_loss(std::span<const double> x, std::span<const double> x_hat) {
    require_same_length(x.size(), x_hat.size(), "l1_loss");
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - x_hat[i]);
    return s / static_cast<double>(x.size());
}

double stft_magnitude_l1(std::span<const double> x, std::span<const double> x_hat) {
    require_same_length(x.size(), x_hat.size(), "stft_magnitude_l1");
    const auto a = stft_magnitudes(x, 2048, 512);
    const auto b = stft_magnitudes(x_hat, 2048, 512);
    if (a.values.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += std::abs(a.values[i] - b.values[i]);
    return s / static_cast<double>(a.values.size());
}

double pretrain_loss(std::span<const double> x, std::span<const double> x_hat, double step, double gamma,
                     std::span<const FeatureStack> disc_ref, std::span<const FeatureStack> disc_est) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::invalid_input, "decay coefficient must lie in (0, 1]");
    if (!(step >= 0.0)) throw Error(ErrorKind::invalid_input, "step must be non-negative");
    const double disc = feature_matching_loss(disc_ref, disc_est);
    const double weight = std::pow(gamma, step);
    if (weight == 0.0) return disc;
    return disc + weight * l1_loss(x, x_hat) + weight * stft_magnitude_l1(x, x_hat);
}

double finetune_loss(std::span<const FeatureStack> disc_ref, std::span<const FeatureStack> disc_est,
                     const FeatureStack &perc_ref, const FeatureStack &perc_est) {
    return feature_matching_loss(disc_ref, disc_est) + perceptual_loss(perc_ref, perc_est);
}

}  // namespace fsqkit::metrics
