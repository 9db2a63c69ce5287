#pragma once

// Objective reconstruction metrics and the training-loss formulas of the
// autoencoder, evaluated on signals or caller-supplied feature stacks.

#include <cstddef>
#include <span>
#include <vector>

namespace fsqkit::metrics {

inline constexpr double si_sdr_cap_db = 300.0;
inline constexpr double log_floor = 1e-5;

// Scale-invariant SDR in dB, clamped to [-cap, cap]. Throws shape_error on a
// length mismatch and undefined_reference on an all-zero reference.
double si_sdr(std::span<const double> ref, std::span<const double> est);

// ||ref - est||_F / ||ref||_F over equally shaped magnitude arrays.
double spectral_convergence(std::span<const double> ref_mag, std::span<const double> est_mag);

struct Magnitudes {
    std::size_t frames = 0;
    std::size_t bins = 0;
    std::vector<double> values;  // frames x bins
};

// |STFT| with a periodic Hann window of `fft_size` and the given hop.
Magnitudes stft_magnitudes(std::span<const double> x, std::size_t fft_size, std::size_t hop);

// Triangular HTK-mel filters from 0 Hz to Nyquist, each scaled to unit area
// in Hz (2 / bandwidth). Returned as n_mels x (fft_size/2 + 1).
std::vector<double> mel_filterbank(double sample_rate, std::size_t fft_size, std::size_t n_mels);

Magnitudes mel_magnitudes(std::span<const double> x, double sample_rate, std::size_t fft_size = 2048,
                          std::size_t hop = 256, std::size_t n_mels = 128);

// Mean |log max(a, floor) - log max(b, floor)| (natural log).
double log_l1(std::span<const double> a, std::span<const double> b);

// log L1 + spectral convergence on 128-bin mel magnitudes (2048 Hann, hop 256).
double mel_distance(std::span<const double> ref, std::span<const double> est, double sample_rate = 16000.0);

// log L1 + spectral convergence on linear magnitudes (2048 Hann, hop 512).
double stft_distance(std::span<const double> ref, std::span<const double> est);

struct MetricReport {
    double si_sdr_db = 0.0;
    double mel_distance = 0.0;
    double stft_distance = 0.0;
};

MetricReport evaluate(std::span<const double> ref, std::span<const double> est, double sample_rate = 16000.0);

struct FeatureLayer {
    std::size_t rows = 0;  // time
    std::size_t cols = 0;  // channels
    std::vector<double> values;
};

using FeatureStack = std::vector<FeatureLayer>;  // one network's layers

// Normalized feature-matching L1 over N stacks of M layers for one example:
// (1/MN) sum_m sum_n ||D - D^||_1 / ||D||_1.
double feature_matching_loss(std::span<const FeatureStack> ref, std::span<const FeatureStack> est);

// Same over a batch (outer index): each term is mean_b ||D_b - D^_b||_1
// divided by mean_b ||D_b||_1.
double feature_matching_loss_batch(std::span<const std::vector<FeatureStack>> ref,
                                   std::span<const std::vector<FeatureStack>> est);

// Single-network variant used for the perceptual term.
double perceptual_loss(const FeatureStack &ref, const FeatureStack &est);

// Mean absolute sample error.
double l1_loss(std::span<const double> x, std::span<const double> x_hat);

// Mean absolute difference of 2048-point Hann STFT magnitudes at hop 512.
double stft_magnitude_l1(std::span<const double> x, std::span<const double> x_hat);

// L_disc + gamma^k (L1 + STFT magnitude L1).
double pretrain_loss(std::span<const double> x, std::span<const double> x_hat, double step, double gamma,
                     std::span<const FeatureStack> disc_ref, std::span<const FeatureStack> disc_est);

// L_disc + L_perc.
double finetune_loss(std::span<const FeatureStack> disc_ref, std::span<const FeatureStack> disc_est,
                     const FeatureStack &perc_ref, const FeatureStack &perc_est);

}  // namespace fsqkit::metrics
