#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "respirfi/errors.hpp"

namespace respirfi {

/// Amplitude-only CSI capture: L time samples by K subcarriers of
/// linear-magnitude values, plus the RF metadata needed to interpret them.
/// All types in this header are immutable once constructed and safe to
/// share across threads.
struct CsiTrace {
    double sample_rate_hz = 0.0;
    double center_freq_hz = 0.0;
    double bandwidth_hz = 0.0;
    std::vector<double> subcarrier_freqs_hz;       // strictly increasing, K >= 8
    std::vector<double> timestamps_s;              // uniform grid, L >= 10 s of data
    std::vector<std::vector<double>> amplitudes;   // L rows of K values, finite, >= 0

    std::size_t n_subcarriers() const { return subcarrier_freqs_hz.size(); }
    std::size_t n_samples() const { return timestamps_s.size(); }

    /// Throws Error if any invariant is violated.
    void validate() const;

    /// Copy of the samples [first_sample, first_sample + count) with
    /// timestamps rebased so the slice is a standalone trace.
    CsiTrace slice(std::size_t first_sample, std::size_t count) const;
};

enum class BreathPhaseMark { inhale_start, exhale_start };

/// Reference chest-displacement signal, rising during inhalation.
struct GroundTruthTrace {
    std::vector<double> timestamps_s;
    std::vector<double> displacement;
    std::vector<std::pair<double, BreathPhaseMark>> breath_marks; // optional, not serialized

    void validate() const;
};

enum class SignConvention { ambiguous, oriented };

/// Dimensionless respiratory waveform. When oriented, rising segments
/// denote inhalation.
struct Waveform {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
    SignConvention sign_convention = SignConvention::ambiguous;

    double duration_s() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

/// Per-window biomarker estimates. ie_ratio is absent when the breathing
/// phase could not be resolved for the window.
struct BiomarkerReport {
    double window_start_s = 0.0;
    double window_len_s = 0.0;
    std::optional<double> rr_bpm;          // (0, 60]
    std::optional<double> ie_ratio;        // > 0
    std::optional<double> tv_variability;  // >= 0
    std::optional<double> apen;            // >= 0
    int n_breaths = 0;

    void validate() const;
};

// --- On-disk formats -------------------------------------------------------
//
// Trace CSV:   "# respirfi-trace v1" magic, then key=value header comments,
//              a "t,amp_0,..." column header and one row per sample.
// Truth CSV:   "t,displacement" header plus rows.
// Report JSON: object with a "windows" array of BiomarkerReport fields.
//
// Floats are written with 17 significant digits so every format
// round-trips doubles exactly.

CsiTrace read_trace(const std::filesystem::path& path);
void write_trace(const CsiTrace& trace, const std::filesystem::path& path);

GroundTruthTrace read_truth(const std::filesystem::path& path);
void write_truth(const GroundTruthTrace& truth, const std::filesystem::path& path);

std::vector<BiomarkerReport> read_report(const std::filesystem::path& path);
void write_report(const std::vector<BiomarkerReport>& windows,
                  const std::filesystem::path& path);

} // namespace respirfi
