#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace respirfi {

/// Exact-length DFT plan. Power-of-two lengths run a plain iterative
/// radix-2 transform; other lengths go through Bluestein's chirp-z
/// identity so bin frequencies stay at k*fs/n for the caller's n.
/// Plans are immutable after construction and reusable across calls.
class FftPlan {
public:
    explicit FftPlan(std::size_t n);

    std::size_t size() const { return n_; }

    /// Forward DFT of a real input of length size().
    std::vector<std::complex<double>> transform(std::span<const double> x) const;

    /// Forward DFT of a complex input of length size().
    std::vector<std::complex<double>> transform(
        std::span<const std::complex<double>> x) const;

private:
    void pow2_forward(std::vector<std::complex<double>>& a, bool inverse) const;

    std::size_t n_ = 0;
    std::size_t m_ = 0;  // padded power-of-two length (== n_ when n_ is pow2)
    std::vector<std::complex<double>> twiddle_;       // for the length-m_ radix-2 core
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> chirp_;         // Bluestein chirp, length n_
    std::vector<std::complex<double>> kernel_fft_;    // FFT of the Bluestein kernel
};

} // namespace respirfi
