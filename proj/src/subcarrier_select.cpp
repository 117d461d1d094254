#include "respirfi/subcarrier_select.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace respirfi {

namespace {

// In-band DFT bin indices for a closed [lo, hi] Hz band, DC excluded.
std::pair<std::size_t, std::size_t> band_bins(std::size_t n, double fs, double lo, double hi) {
    const double scale = static_cast<double>(n) / fs;
    auto k_lo = static_cast<std::size_t>(std::max(1.0, std::ceil(lo * scale - 1e-9)));
    auto k_hi = static_cast<std::size_t>(std::floor(hi * scale + 1e-9));
    k_hi = std::min(k_hi, n / 2);
    return {k_lo, k_hi};
}

} // namespace

double percentile_linear(std::span<const double> values, double p) {
    if (values.empty())
        throw Error(Err::too_few, "percentile of empty set");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double rank = (p / 100.0) * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(rank));
    if (i + 1 >= v.size()) return v.back();
    const double frac = rank - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
}

double bnr(std::span<const double> row, double fs_hz, double band_lo, double band_hi) {
    const std::size_t n = row.size();
    if (n < 16)
        throw Error(Err::too_short, "bnr: need at least 16 samples");

    const auto [k_lo, k_hi] = band_bins(n, fs_hz, band_lo, band_hi);

    // Two-sided in-band power via per-bin Goertzel. A fold factor of 2
    // accounts for the conjugate bins (the Nyquist bin has none).
    double inband2 = 0.0;
    if (k_lo <= k_hi) {
        const std::size_t nb = k_hi - k_lo + 1;
        std::vector<double> coeff(nb), s1(nb, 0.0), s2(nb, 0.0);
        for (std::size_t j = 0; j < nb; ++j)
            coeff[j] = 2.0 * std::cos(2.0 * std::numbers::pi *
                                      static_cast<double>(k_lo + j) / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const double x = row[i];
            for (std::size_t j = 0; j < nb; ++j) {
                const double s0 = x + coeff[j] * s1[j] - s2[j];
                s2[j] = s1[j];
                s1[j] = s0;
            }
        }
        for (std::size_t j = 0; j < nb; ++j) {
            const double p = s1[j] * s1[j] + s2[j] * s2[j] - coeff[j] * s1[j] * s2[j];
            const double fold = (n % 2 == 0 && k_lo + j == n / 2) ? 1.0 : 2.0;
            inband2 += fold * std::max(p, 0.0);
        }
    }

    // Parseval total and the DC bin close the out-of-band sum.
    long double sum = 0.0L, sumsq = 0.0L;
    for (double x : row) {
        sum += x;
        sumsq += static_cast<long double>(x) * x;
    }
    const double total2 = static_cast<double>(static_cast<long double>(n) * sumsq);
    const double dc = static_cast<double>(sum * sum);
    const double total_nondc = std::max(total2 - dc, 0.0);
    if (total_nondc <= 0.0) return 0.0;

    const double out = std::max(total_nondc - inband2, 1e-12 * total_nondc);
    return inband2 / out;
}

std::vector<double> bnr_all(const WaveformMatrix& gm, double band_lo, double band_hi) {
    std::vector<double> out(gm.n_rows());
    for (std::size_t r = 0; r < gm.n_rows(); ++r)
        out[r] = bnr(gm.rows[r], gm.sample_rate_hz, band_lo, band_hi);
    return out;
}

BnrTable select(std::span<const double> bnrs, double percentile, double floor) {
    if (bnrs.size() < 8)
        throw Error(Err::too_few, "select: need at least 8 subcarriers");

    BnrTable table;
    table.bnr.assign(bnrs.begin(), bnrs.end());
    table.threshold_used = std::max(percentile_linear(bnrs, percentile), floor);
    for (std::size_t i = 0; i < bnrs.size(); ++i)
        if (bnrs[i] >= table.threshold_used)
            table.retained.push_back(static_cast<int>(i));
    if (table.retained.empty())
        throw Error(Err::no_viable_subcarriers,
                    "no subcarrier clears the breathing-band threshold");
    return table;
}

} // namespace respirfi
