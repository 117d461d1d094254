#pragma once

#include <span>
#include <vector>

#include "respirfi/trace_model.hpp"

namespace respirfi {

/// Per-subcarrier preliminary waveforms after smoothing and normalization.
/// Rows are ordered by frequency; each row has zero mean and unit
/// population variance. subcarrier_index_map[r] is the original
/// subcarrier index of row r (subcarriers dropped during preprocessing
/// leave gaps).
struct WaveformMatrix {
    std::vector<std::vector<double>> rows;
    std::vector<int> subcarrier_index_map;
    std::vector<double> freqs_hz;
    double sample_rate_hz = 0.0;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_samples() const { return rows.empty() ? 0 : rows.front().size(); }

    /// New matrix containing only the given rows (indices into rows),
    /// with the index map composed accordingly.
    WaveformMatrix subset(std::span<const int> row_ids) const;
};

/// SG filter -> LOWESS -> z-score, per subcarrier. Subcarriers whose
/// smoothed series has zero variance are dropped and recorded as gaps in
/// the index map. Throws AllSubcarriersDegenerate when nothing survives.
WaveformMatrix extract_preliminary(const CsiTrace& trace, int sg_window = 11,
                                   int sg_order = 3, double lowess_span = 0.05);

} // namespace respirfi
