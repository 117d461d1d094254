#include "respirfi/preprocess.hpp"

#include <cmath>

#include "respirfi/dsp.hpp"

namespace respirfi {

WaveformMatrix WaveformMatrix::subset(std::span<const int> row_ids) const {
    WaveformMatrix out;
    out.sample_rate_hz = sample_rate_hz;
    out.rows.reserve(row_ids.size());
    out.subcarrier_index_map.reserve(row_ids.size());
    out.freqs_hz.reserve(row_ids.size());
    for (int r : row_ids) {
        out.rows.push_back(rows[static_cast<std::size_t>(r)]);
        out.subcarrier_index_map.push_back(subcarrier_index_map[static_cast<std::size_t>(r)]);
        out.freqs_hz.push_back(freqs_hz[static_cast<std::size_t>(r)]);
    }
    return out;
}

WaveformMatrix extract_preliminary(const CsiTrace& trace, int sg_window, int sg_order,
                                   double lowess_span) {
    trace.validate();
    const std::size_t k = trace.n_subcarriers();
    const std::size_t l = trace.n_samples();
    if (l < static_cast<std::size_t>(sg_window))
        throw Error(Err::bad_window, "trace shorter than the SG window");
    if (std::ceil(lowess_span * static_cast<double>(l)) < 3.0)
        throw Error(Err::span_too_small, "trace too short for the LOWESS span");

    WaveformMatrix out;
    out.sample_rate_hz = trace.sample_rate_hz;

    std::vector<double> column(l);
    for (std::size_t sc = 0; sc < k; ++sc) {
        for (std::size_t i = 0; i < l; ++i) column[i] = trace.amplitudes[i][sc];
        std::vector<double> smooth = lowess(sg_filter(column, sg_window, sg_order), lowess_span);
        const double mu = vec_mean(smooth);
        // Rounding residue on a flat column is ~1e-32; real respiration
        // variance is many orders above this floor.
        if (vec_population_variance(smooth) <= 1e-24 * (1.0 + mu * mu))
            continue;  // dead subcarrier: drop, keep the gap in the index map
        out.rows.push_back(zscore(smooth));
        out.subcarrier_index_map.push_back(static_cast<int>(sc));
        out.freqs_hz.push_back(trace.subcarrier_freqs_hz[sc]);
    }
    if (out.rows.empty())
        throw Error(Err::all_subcarriers_degenerate,
                    "every subcarrier is constant after smoothing");
    return out;
}

} // namespace respirfi
