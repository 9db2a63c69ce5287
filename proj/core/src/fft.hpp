#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace fsqkit::detail {

// Real-input FFT of a fixed size backed by FFTW. Plans and aligned work
// buffers are cached per thread, so results do not depend on caller buffer
// alignment and concurrent callers never share a plan.
class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft &) = delete;
    RealFft &operator=(const RealFft &) = delete;

    std::size_t size() const noexcept { return size_; }
    std::size_t bins() const noexcept { return size_ / 2 + 1; }

    // Unnormalized forward transform; `out` has bins() entries.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

    // Unnormalized inverse (no 1/N); the imaginary parts of the DC and
    // Nyquist bins are ignored.
    void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
    std::size_t size_;
    double *real_ = nullptr;
    void *spec_ = nullptr;
    void *forward_plan_ = nullptr;
    void *inverse_plan_ = nullptr;
};

const RealFft &real_fft(std::size_t size);

}  // namespace fsqkit::detail
