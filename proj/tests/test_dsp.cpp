#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "respirfi/dsp.hpp"
#include "respirfi/fft.hpp"

using namespace respirfi;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

} // namespace

// --- FFT core ----------------------------------------------------------------

TEST_CASE("FftPlan matches the naive DFT for pow2 and odd lengths") {
    for (std::size_t n : {64u, 100u, 127u, 150u}) {
        const std::vector<double> x = randn(n, 1000 + n);
        FftPlan plan(n);
        const auto fast = plan.transform(std::span<const double>(x));
        const auto slow = oracle::dft(x);
        for (std::size_t k = 0; k < n; ++k)
            CHECK(std::abs(fast[k] - slow[k]) < 1e-8 * (1.0 + std::abs(slow[k])));
    }
}

// --- Savitzky-Golay -----------------------------------------------------------

TEST_CASE("sg_filter reproduces constants exactly") {
    const std::vector<double> x(64, 3.25);
    const auto y = sg_filter(x);
    for (double v : y) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("sg_filter reproduces cubics on interior points") {
    std::vector<double> x(50);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) + 1.0;
        x[i] = t * t * t;
    }
    const auto y = sg_filter(x, 11, 3);
    for (std::size_t i = 5; i + 5 < x.size(); ++i)
        CHECK(std::abs(y[i] - x[i]) < 1e-9 * std::abs(x[i]));
}

TEST_CASE("sg_filter polynomial reproduction property, all points") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int order = 1 + static_cast<int>(rng() % 4);
        const int window = order + 3 + 2 * static_cast<int>(rng() % 4);
        const int w = (window % 2 == 0) ? window + 1 : window;
        std::vector<double> c(static_cast<std::size_t>(order) + 1);
        for (double& v : c) v = coef(rng);
        std::vector<double> x(60);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double acc = 0.0, p = 1.0;
            const double t = static_cast<double>(i) / 10.0;
            for (double cv : c) {
                acc += cv * p;
                p *= t;
            }
            x[i] = acc;
        }
        const auto y = sg_filter(x, w, order);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(y[i] - x[i]) < 1e-8 * (1.0 + std::abs(x[i])));
    }
}

TEST_CASE("sg_filter attenuates white noise") {
    for (int trial = 0; trial < 10000; ++trial) {
        const std::vector<double> x = randn(64, 20000 + trial);
        const auto y = sg_filter(x);
        CHECK(vec_population_variance(y) < vec_population_variance(x));
    }
}

TEST_CASE("sg_filter validates its window") {
    const std::vector<double> x(32, 0.0);
    CHECK_THROWS_AS(sg_filter(x, 10, 3), Error);   // even window
    CHECK_THROWS_AS(sg_filter(x, 11, 11), Error);  // order >= window
    const std::vector<double> tiny(5, 0.0);
    CHECK_THROWS_AS(sg_filter(tiny, 11, 3), Error);
}

// --- LOWESS --------------------------------------------------------------------

TEST_CASE("lowess keeps constants and straight lines") {
    std::vector<double> c(200, -1.5);
    for (double v : lowess(c, 0.05)) CHECK(v == doctest::Approx(-1.5).epsilon(1e-12));

    std::vector<double> ramp(200);
    for (std::size_t i = 0; i < ramp.size(); ++i)
        ramp[i] = 0.7 * static_cast<double>(i) + 2.0;
    const auto y = lowess(ramp, 0.1);
    for (std::size_t i = 0; i < ramp.size(); ++i)
        CHECK(std::abs(y[i] - ramp[i]) < 1e-9 * (1.0 + std::abs(ramp[i])));
}

TEST_CASE("lowess pulls an impulse outlier toward the local trend") {
    std::vector<double> x(400);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 100.0);
    const double clean = x[200];
    x[200] += 5.0;
    const auto y = lowess(x, 0.05);
    CHECK(std::abs(y[200] - clean) < std::abs(x[200] - clean));
}

TEST_CASE("lowess is shift and scale equivariant") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(300);
    for (double& v : x) v = u(rng);
    const double alpha = 2.5, beta = -4.0;
    std::vector<double> ax(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) ax[i] = alpha * x[i] + beta;
    const auto y = lowess(x, 0.07);
    const auto ay = lowess(ax, 0.07);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(ay[i] == doctest::Approx(alpha * y[i] + beta).epsilon(1e-9));
}

TEST_CASE("lowess rejects spans that leave fewer than 3 points") {
    const std::vector<double> x(100, 1.0);
    CHECK_THROWS_AS(lowess(x, 0.01), Error);
    CHECK_THROWS_AS(lowess(x, 1.5), Error);
}

// --- zscore ---------------------------------------------------------------------

TEST_CASE("zscore basics") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const auto z = zscore(x);
    CHECK(std::abs(vec_mean(z)) < 1e-12);
    CHECK(std::abs(std::sqrt(vec_population_variance(z)) - 1.0) < 1e-12);

    const std::vector<double> c(10, 4.0);
    CHECK_THROWS_AS(zscore(c), Error);

    const std::vector<double> r = randn(500, 77);
    const auto zr = zscore(r);
    const double mu = oracle::mean(r);
    const double sd = oracle::pop_std(r);
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(zr[i] == doctest::Approx((r[i] - mu) / sd).epsilon(1e-10));
}

// --- power spectrum ---------------------------------------------------------------

TEST_CASE("power_spectrum of zero input is zero") {
    const std::vector<double> x(128, 0.0);
    const Spectrum s = power_spectrum(x, 10.0);
    for (double p : s.power) CHECK(p == 0.0);
}

TEST_CASE("on-bin sinusoid concentrates its power") {
    const double fs = 100.0;
    const std::size_t n = 6000;  // 60 s
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * 0.25 * static_cast<double>(i) / fs);
    const Spectrum s = power_spectrum(x, fs);
    double total = 0.0, at_peak = 0.0;
    std::size_t peak_bin = 0;
    for (std::size_t k = 0; k < s.power.size(); ++k) {
        total += s.power[k];
        if (s.power[k] > at_peak) {
            at_peak = s.power[k];
            peak_bin = k;
        }
    }
    CHECK(s.freqs_hz[peak_bin] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(at_peak / total > 0.99);
}

TEST_CASE("Parseval holds for zero-mean input") {
    for (std::size_t n : {128u, 1500u, 333u}) {
        std::vector<double> x = randn(n, 500 + n);
        const double mu = vec_mean(x);
        for (double& v : x) v -= mu;
        const Spectrum s = power_spectrum(x, 50.0);
        double total = 0.0;
        for (double p : s.power) total += p;
        const double expected = static_cast<double>(n) * vec_population_variance(x);
        CHECK(std::abs(total - expected) < 1e-9 * expected);
    }
}

TEST_CASE("power_spectrum rejects short input") {
    const std::vector<double> x(15, 1.0);
    CHECK_THROWS_AS(power_spectrum(x, 10.0), Error);
}

// --- cosine similarity -------------------------------------------------------------

TEST_CASE("cosine similarity basics and invariances") {
    const std::vector<double> a = randn(64, 9);
    std::vector<double> na(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) na[i] = -a[i];
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine_similarity(a, na) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
    CHECK(cosine_similarity(e1, e2) == doctest::Approx(0.0));

    const std::vector<double> b = randn(64, 10);
    CHECK(cosine_similarity(a, b) == doctest::Approx(cosine_similarity(b, a)));
    std::vector<double> sa(a.size()), sb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa[i] = 3.0 * a[i];
        sb[i] = -2.0 * b[i];
    }
    CHECK(cosine_similarity(sa, sb) ==
          doctest::Approx(-cosine_similarity(a, b)).epsilon(1e-10));

    const std::vector<double> zero(64, 0.0);
    CHECK_THROWS_AS(cosine_similarity(a, zero), Error);
}

// --- gaussian smoothing ---------------------------------------------------------------

TEST_CASE("gaussian_smooth identity, normalization and impulse response") {
    const std::vector<double> x = randn(50, 21);
    CHECK(gaussian_smooth(x, 0.0) == x);

    const std::vector<double> c(40, 2.0);
    for (double v : gaussian_smooth(c, 3.0))
        CHECK(v == doctest::Approx(2.0).epsilon(1e-12));

    std::vector<double> impulse(101, 0.0);
    impulse[50] = 1.0;
    const double sigma = 2.0;
    const auto resp = gaussian_smooth(impulse, sigma);
    double sum = 0.0;
    for (double v : resp) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Analytic kernel shape at the center.
    double norm = 0.0;
    const long r = static_cast<long>(std::ceil(4.0 * sigma));
    for (long j = -r; j <= r; ++j) norm += std::exp(-0.5 * (j / sigma) * (j / sigma));
    for (long j = -r; j <= r; ++j)
        CHECK(resp[static_cast<std::size_t>(50 + j)] ==
              doctest::Approx(std::exp(-0.5 * (j / sigma) * (j / sigma)) / norm)
                  .epsilon(1e-10));
}

TEST_CASE("gaussian_smooth preserves the mean") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const std::vector<double> x = randn(200, 3000 + seed);
        for (double sigma : {0.5, 2.0, 8.0}) {
            const auto y = gaussian_smooth(x, sigma);
            CHECK(std::abs(vec_mean(y) - vec_mean(x)) < 1e-9);
        }
    }
}

// --- linear fit -----------------------------------------------------------------------

TEST_CASE("linfit recovers exact and noisy lines") {
    const std::vector<double> c(25, 5.5);
    const LineFit f0 = linfit(c);
    CHECK(f0.slope == doctest::Approx(0.0));
    CHECK(f0.intercept == doctest::Approx(5.5));

    std::vector<double> line(40);
    for (std::size_t k = 0; k < line.size(); ++k)
        line[k] = 2.0 * static_cast<double>(k) + 3.0;
    const LineFit f1 = linfit(line);
    CHECK(f1.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f1.intercept == doctest::Approx(3.0).epsilon(1e-12));

    // Normal-equations oracle on a noisy line.
    std::vector<double> noisy(60);
    const std::vector<double> noise = randn(noisy.size(), 31);
    for (std::size_t k = 0; k < noisy.size(); ++k)
        noisy[k] = -0.7 * static_cast<double>(k) + 1.3 + 0.05 * noise[k];
    const LineFit f2 = linfit(noisy);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(noisy.size());
    for (std::size_t k = 0; k < noisy.size(); ++k) {
        sx += static_cast<double>(k);
        sy += noisy[k];
        sxx += static_cast<double>(k) * static_cast<double>(k);
        sxy += static_cast<double>(k) * noisy[k];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    CHECK(f2.slope == doctest::Approx(slope).epsilon(1e-9));
    CHECK(f2.intercept == doctest::Approx(intercept).epsilon(1e-9));
}

TEST_CASE("hann taper suppresses leakage for an off-bin tone") {
    const double fs = 50.0;
    const std::size_t n = 1000;
    std::vector<double> x(n);
    // 1.337 Hz is far from any bin of a 20 s window.
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * std::numbers::pi * 1.337 * static_cast<double>(i) / fs);
    const Spectrum plain = power_spectrum(x, fs);
    const Spectrum hann = power_spectrum(x, fs, SpectralWindow::hann);

    auto far_fraction = [&](const Spectrum& s) {
        double total = 0.0, far = 0.0;
        for (std::size_t k = 0; k < s.power.size(); ++k) {
            total += s.power[k];
            if (std::abs(s.freqs_hz[k] - 1.337) > 0.5) far += s.power[k];
        }
        return far / total;
    };
    CHECK(far_fraction(hann) < far_fraction(plain));
}
