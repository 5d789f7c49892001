#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace kpzlab {

// Real-to-complex FFT of fixed length (FFTW underneath). Planning is serialized
// internally; execution on distinct objects is thread safe.
class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return n_; }
    std::size_t spectrum_size() const { return n_ / 2 + 1; }

    // unnormalized forward transform
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    // unnormalized inverse (caller divides by n)
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    struct Impl;
    std::size_t n_;
    std::unique_ptr<Impl> impl_;
};

// smallest 2^a 3^b 5^c >= n
std::size_t good_fft_size(std::size_t n);

}  // namespace kpzlab
