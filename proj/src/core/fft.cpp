#include "kpzlab/core/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct RealFft::Impl {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), impl_(std::make_unique<Impl>()) {
    if (n < 2) throw UsageError("fft: length must be >= 2");
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->real = fftw_alloc_real(n);
    impl_->spec = fftw_alloc_complex(n / 2 + 1);
    impl_->fwd = fftw_plan_dft_r2c_1d(int(n), impl_->real, impl_->spec, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_c2r_1d(int(n), impl_->spec, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->inv);
    fftw_free(impl_->real);
    fftw_free(impl_->spec);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::fill(impl_->real, impl_->real + n_, 0.0);
    std::copy_n(in.begin(), std::min(in.size(), n_), impl_->real);
    fftw_execute(impl_->fwd);
    std::memcpy(static_cast<void*>(out.data()), impl_->spec, sizeof(fftw_complex) * spectrum_size());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    std::memcpy(impl_->spec, static_cast<const void*>(in.data()), sizeof(fftw_complex) * spectrum_size());
    fftw_execute(impl_->inv);
    std::copy_n(impl_->real, std::min(out.size(), n_), out.begin());
}

std::size_t good_fft_size(std::size_t n) {
    std::size_t best = 1;
    while (best < n) best *= 2;
    for (std::size_t a = 1; a <= best; a *= 2)
        for (std::size_t b = a; b <= best; b *= 3)
            for (std::size_t c = b; c <= best; c *= 5)
                if (c >= n && c < best) best = c;
    return best;
}

}  // namespace kpzlab
