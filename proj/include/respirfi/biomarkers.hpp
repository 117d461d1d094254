#pragma once

#include <span>
#include <vector>

#include "respirfi/trace_model.hpp"

namespace respirfi {

/// Alternating peak/trough segmentation of a respiratory waveform.
/// A breath is a trough -> peak -> next-trough triple; partial leading and
/// trailing half-breaths are excluded.
struct BreathSegmentation {
    struct Breath {
        double trough0_s;
        double peak_s;
        double trough1_s;
    };

    std::vector<double> peak_times_s;
    std::vector<double> trough_times_s;
    std::vector<Breath> breaths;
};

/// Peak/trough detection with a minimum spacing and a prominence gate at
/// prominence_frac of the window's peak-to-peak range; alternation is
/// enforced by dropping the lesser of adjacent same-kind extrema. Throws
/// NoBreathsFound when fewer than 2 peaks survive.
BreathSegmentation detect_breaths(const Waveform& w, double min_dist_s = 2.0,
                                  double prominence_frac = 0.10);

/// 60 / mean peak-to-peak interval, in breaths per minute.
double respiratory_rate(const BreathSegmentation& seg);

/// Mean of per-breath inhale/exhale duration ratios. Requires an oriented
/// waveform (throws PhaseUnresolved otherwise) and at least one breath.
double ie_ratio(const Waveform& w, const BreathSegmentation& seg);

/// Population variance of per-breath excursion (peak value minus the mean
/// of its flanking trough values). Requires at least 2 breaths.
double tv_variability(const Waveform& w, const BreathSegmentation& seg);

/// Approximate entropy: embedding m, tolerance r_frac times the series'
/// population standard deviation, Chebyshev distance, self-matches
/// included, natural log. Needs at least 50 samples.
double apen(std::span<const double> x, int m = 2, double r_frac = 0.2);

} // namespace respirfi
