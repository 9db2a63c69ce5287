#include "fft.hpp"

#include "fsqkit/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace fsqkit::detail {

namespace {

std::mutex &planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
    if (size == 0) {
        throw Error(ErrorKind::invalid_config, "FFT size must be positive");
    }
    std::lock_guard lock(planner_mutex());
    real_ = fftw_alloc_real(size);
    auto *spec = fftw_alloc_complex(size / 2 + 1);
    spec_ = spec;
    const int n = static_cast<int>(size);
    forward_plan_ = fftw_plan_dft_r2c_1d(n, real_, spec, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_1d(n, spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
    fftw_free(real_);
    fftw_free(static_cast<fftw_complex *>(spec_));
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(size_), real_);
    fftw_execute(static_cast<fftw_plan>(forward_plan_));
    const auto *spec = static_cast<const fftw_complex *>(spec_);
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {spec[k][0], spec[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    auto *spec = static_cast<fftw_complex *>(spec_);
    for (std::size_t k = 0; k < bins(); ++k) {
        spec[k][0] = in[k].real();
        spec[k][1] = in[k].imag();
    }
    spec[0][1] = 0.0;
    if (size_ % 2 == 0) spec[size_ / 2][1] = 0.0;
    fftw_execute(static_cast<fftw_plan>(inverse_plan_));
    std::copy(real_, real_ + size_, out.begin());
}

const RealFft &real_fft(std::size_t size) {
    thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    auto &slot = cache[size];
    if (!slot) slot = std::make_unique<RealFft>(size);
    return *slot;
}

}  // namespace fsqkit::detail
