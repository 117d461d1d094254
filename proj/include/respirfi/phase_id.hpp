#pragma once

#include <span>
#include <vector>

#include "respirfi/group_fuse.hpp"
#include "respirfi/simulator.hpp"

namespace respirfi {

/// Longest run of consecutive original subcarrier indices drawn entirely
/// from one group. rows index the partitioned matrix; original_indices are
/// the mapped subcarrier numbers. Ties prefer the lower starting index,
/// and group1 over group2.
struct ContiguousRun {
    std::vector<int> rows;
    std::vector<int> original_indices;
    int source_group = 1;  // 1 or 2
};

ContiguousRun longest_contiguous(const Partition& part, std::span<const int> index_map);

/// Mean cross-subcarrier amplitude profile: Gaussian-smooth the
/// per-time-point profile across subcarriers, then average over time.
/// amp_rows holds the SG-filtered raw amplitudes of the run's subcarriers
/// in frequency order, one row per subcarrier. Needs at least 3 rows.
std::vector<double> frequency_profile(const std::vector<std::vector<double>>& amp_rows,
                                      double sigma);

/// How the ambiguous waveform was mapped onto the inhalation-up convention.
struct PhaseDecision {
    std::vector<int> contiguous_set;  // original subcarrier indices of the run
    double slope_a1 = 0.0;
    double intercept_a2 = 0.0;
    int source_group = 1;
    CaseLabel case_label = CaseLabel::case1;
    bool flipped = false;
};

/// Resolve the breathing phase from the run's amplitude-vs-frequency trend
/// and orient the fused waveform (rising = inhalation). A rising profile
/// marks the run as Case 2, a falling one as Case 1; the waveform is
/// flipped when the run's group trend opposes inhalation. Throws
/// AmbiguousTrend when the fitted slope is indistinguishable from zero.
std::pair<Waveform, PhaseDecision> identify_and_orient(const Waveform& fused,
                                                       const ContiguousRun& run,
                                                       std::span<const double> mean_profile);

} // namespace respirfi
