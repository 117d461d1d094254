#pragma once

#include <span>
#include <vector>

#include "respirfi/trace_model.hpp"

namespace respirfi {

double mae(std::span<const double> est, std::span<const double> truth);
double mse(std::span<const double> est, std::span<const double> truth);

/// Pearson correlation coefficient. Throws ZeroVariance when either input
/// is constant.
double pcc(std::span<const double> x, std::span<const double> y);

/// Bland-Altman agreement: bias and 1.96-sigma limits of agreement of the
/// pairwise differences a - b (sample standard deviation), plus the
/// percentage of differences falling inside the limits.
struct AgreementStats {
    double mean_bias = 0.0;
    double sd_diff = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    double pct_within_loa = 0.0;
};

AgreementStats bland_altman(std::span<const double> a, std::span<const double> b);

/// Waveform-vs-truth preparation: the truth is linearly resampled onto the
/// waveform's sample grid over the overlapping time range, the integer
/// lag within +-1 s that maximizes the correlation is applied, and both
/// sides are z-scored.
struct AlignedPair {
    std::vector<double> x;  // waveform
    std::vector<double> y;  // truth, resampled and lag-compensated
    double lag_s = 0.0;
};

AlignedPair align_for_pcc(const Waveform& w, double w_start_s,
                          const GroundTruthTrace& truth);

} // namespace respirfi
