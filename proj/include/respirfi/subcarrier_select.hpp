#pragma once

#include <span>
#include <vector>

#include "respirfi/preprocess.hpp"

namespace respirfi {

/// Outcome of the breathing-band screening stage.
struct BnrTable {
    std::vector<double> bnr;     // one ratio per input row
    double threshold_used = 0.0;
    std::vector<int> retained;   // row indices with bnr >= threshold_used
};

/// Breathing-to-noise ratio: spectral power inside [band_lo, band_hi] Hz
/// divided by power outside it, DC excluded from both sums. The
/// denominator is floored at 1e-12 of the non-DC total. Band sums are
/// exact DFT bin values (per-bin Goertzel plus a Parseval total), so they
/// match a full-spectrum computation.
double bnr(std::span<const double> row, double fs_hz, double band_lo = 0.16,
           double band_hi = 0.5);

/// bnr() for every row of a waveform matrix.
std::vector<double> bnr_all(const WaveformMatrix& gm, double band_lo = 0.16,
                            double band_hi = 0.5);

/// Hybrid-threshold screening: eta = max(Pp(bnrs), floor) with Pp the
/// linear-interpolation percentile; rows with bnr >= eta are retained
/// (ties kept). Throws NoViableSubcarriers when nothing passes.
BnrTable select(std::span<const double> bnrs, double percentile = 80.0, double floor = 2.0);

/// Linear-interpolation percentile (rank = p/100 * (n-1) on sorted data).
double percentile_linear(std::span<const double> values, double p);

} // namespace respirfi
