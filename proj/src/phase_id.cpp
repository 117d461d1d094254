#include "respirfi/phase_id.hpp"

#include <algorithm>
#include <cmath>

#include "respirfi/dsp.hpp"

namespace respirfi {

namespace {

struct Run {
    std::size_t start = 0;  // position within the sorted group row list
    std::size_t len = 0;
    int first_original = 0;
};

// Maximal runs of consecutive original indices within one group.
std::vector<Run> runs_of(const std::vector<std::pair<int, int>>& rows_by_orig) {
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < rows_by_orig.size()) {
        std::size_t j = i + 1;
        while (j < rows_by_orig.size() &&
               rows_by_orig[j].first == rows_by_orig[j - 1].first + 1)
            ++j;
        runs.push_back({i, j - i, rows_by_orig[i].first});
        i = j;
    }
    return runs;
}

} // namespace

ContiguousRun longest_contiguous(const Partition& part, std::span<const int> index_map) {
    if (part.group1.empty() && part.group2.empty())
        throw Error(Err::empty_partition, "longest_contiguous: no kept subcarriers");

    auto best_in_group = [&](const std::vector<int>& group) {
        std::vector<std::pair<int, int>> rows_by_orig;  // (original index, row)
        rows_by_orig.reserve(group.size());
        for (int r : group)
            rows_by_orig.emplace_back(index_map[static_cast<std::size_t>(r)], r);
        std::sort(rows_by_orig.begin(), rows_by_orig.end());
        Run best{};
        for (const Run& run : runs_of(rows_by_orig)) {
            if (run.len > best.len ||
                (run.len == best.len && run.first_original < best.first_original))
                best = run;
        }
        return std::make_pair(best, rows_by_orig);
    };

    const auto [run1, rows1] = best_in_group(part.group1);
    const auto [run2, rows2] = best_in_group(part.group2);

    bool use_group1 = run1.len >= run2.len;  // group1 wins cross-group ties
    const Run& run = use_group1 ? run1 : run2;
    const auto& rows = use_group1 ? rows1 : rows2;

    ContiguousRun out;
    out.source_group = use_group1 ? 1 : 2;
    for (std::size_t i = run.start; i < run.start + run.len; ++i) {
        out.original_indices.push_back(rows[i].first);
        out.rows.push_back(rows[i].second);
    }
    return out;
}

std::vector<double> frequency_profile(const std::vector<std::vector<double>>& amp_rows,
                                      double sigma) {
    const std::size_t k = amp_rows.size();
    if (k < 3)
        throw Error(Err::set_too_small, "frequency_profile: need at least 3 subcarriers");
    const std::size_t l = amp_rows.front().size();
    for (const auto& row : amp_rows)
        if (row.size() != l)
            throw Error(Err::dimension_mismatch, "frequency_profile: ragged rows");

    std::vector<double> profile(k), accum(k, 0.0);
    for (std::size_t t = 0; t < l; ++t) {
        for (std::size_t i = 0; i < k; ++i) profile[i] = amp_rows[i][t];
        const std::vector<double> smoothed = gaussian_smooth(profile, sigma);
        for (std::size_t i = 0; i < k; ++i) accum[i] += smoothed[i];
    }
    const double inv_l = 1.0 / static_cast<double>(l);
    for (double& v : accum) v *= inv_l;
    return accum;
}

std::pair<Waveform, PhaseDecision> identify_and_orient(const Waveform& fused,
                                                       const ContiguousRun& run,
                                                       std::span<const double> mean_profile) {
    if (fused.sign_convention != SignConvention::ambiguous)
        throw Error(Err::invalid_value, "identify_and_orient: waveform already oriented");
    if (mean_profile.size() != run.original_indices.size())
        throw Error(Err::dimension_mismatch, "identify_and_orient: profile/run size mismatch");

    const LineFit fit = linfit(mean_profile);
    double mean_abs = 0.0;
    for (double v : mean_profile) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(mean_profile.size());
    if (std::abs(fit.slope) < 1e-6 * mean_abs)
        throw Error(Err::ambiguous_trend, "identify_and_orient: flat amplitude trend");

    PhaseDecision decision;
    decision.contiguous_set = run.original_indices;
    decision.slope_a1 = fit.slope;
    decision.intercept_a2 = fit.intercept;
    decision.source_group = run.source_group;
    decision.case_label = fit.slope > 0.0 ? CaseLabel::case2 : CaseLabel::case1;
    decision.flipped = (fit.slope > 0.0 && run.source_group == 1) ||
                       (fit.slope < 0.0 && run.source_group == 2);

    Waveform oriented;
    oriented.sample_rate_hz = fused.sample_rate_hz;
    oriented.sign_convention = SignConvention::oriented;
    oriented.samples.resize(fused.samples.size());
    const double sign = decision.flipped ? -1.0 : 1.0;
    for (std::size_t i = 0; i < fused.samples.size(); ++i)
        oriented.samples[i] = sign * fused.samples[i];
    return {std::move(oriented), std::move(decision)};
}

} // namespace respirfi
