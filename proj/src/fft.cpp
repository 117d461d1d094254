#include "respirfi/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace respirfi {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

} // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("FftPlan: zero length");
    m_ = is_pow2(n) ? n : next_pow2(2 * n - 1);

    // Radix-2 tables for the length-m_ core.
    twiddle_.resize(m_ / 2);
    for (std::size_t k = 0; k < m_ / 2; ++k) {
        double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m_);
        twiddle_[k] = {std::cos(ang), std::sin(ang)};
    }
    bitrev_.resize(m_);
    std::size_t log2m = 0;
    while ((std::size_t{1} << log2m) < m_) ++log2m;
    for (std::size_t i = 0; i < m_; ++i) {
        std::size_t r = 0;
        for (std::size_t b = 0; b < log2m; ++b)
            if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2m - 1 - b);
        bitrev_[i] = r;
    }

    if (!is_pow2(n_)) {
        // Bluestein: X_k = conj(c_k) * IFFT(FFT(x*conj(c)) . FFT(kernel))
        // with c_j = exp(i*pi*j^2/n) and kernel_j = c_j extended circularly.
        chirp_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            // j^2 mod 2n keeps the angle argument small for large n.
            std::size_t j2 = (j * j) % (2 * n_);
            double ang = std::numbers::pi * static_cast<double>(j2) / static_cast<double>(n_);
            chirp_[j] = {std::cos(ang), std::sin(ang)};
        }
        std::vector<std::complex<double>> kernel(m_, {0.0, 0.0});
        kernel[0] = chirp_[0];
        for (std::size_t j = 1; j < n_; ++j) {
            kernel[j] = chirp_[j];
            kernel[m_ - j] = chirp_[j];
        }
        pow2_forward(kernel, false);
        kernel_fft_ = std::move(kernel);
    }
}

void FftPlan::pow2_forward(std::vector<std::complex<double>>& a, bool inverse) const {
    const std::size_t m = m_;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = bitrev_[i];
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= m; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = m / len;
        for (std::size_t start = 0; start < m; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> w = twiddle_[k * step];
                if (inverse) w = std::conj(w);
                std::complex<double> u = a[start + k];
                std::complex<double> v = a[start + k + half] * w;
                a[start + k] = u + v;
                a[start + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(m);
        for (auto& z : a) z *= inv;
    }
}

std::vector<std::complex<double>> FftPlan::transform(std::span<const double> x) const {
    std::vector<std::complex<double>> cx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
    return transform(std::span<const std::complex<double>>(cx));
}

std::vector<std::complex<double>> FftPlan::transform(
    std::span<const std::complex<double>> x) const {
    if (x.size() != n_) throw std::invalid_argument("FftPlan: input length mismatch");

    if (is_pow2(n_)) {
        std::vector<std::complex<double>> a(x.begin(), x.end());
        pow2_forward(a, false);
        return a;
    }

    std::vector<std::complex<double>> a(m_, {0.0, 0.0});
    for (std::size_t j = 0; j < n_; ++j) a[j] = x[j] * std::conj(chirp_[j]);
    pow2_forward(a, false);
    for (std::size_t j = 0; j < m_; ++j) a[j] *= kernel_fft_[j];
    pow2_forward(a, true);
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * std::conj(chirp_[k]);
    return out;
}

} // namespace respirfi
