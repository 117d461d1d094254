#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "respirfi/biomarkers.hpp"
#include "respirfi/group_fuse.hpp"
#include "respirfi/phase_id.hpp"
#include "respirfi/simulator.hpp"
#include "respirfi/subcarrier_select.hpp"
#include "respirfi/trace_model.hpp"

namespace respirfi {

struct PipelineConfig {
    double window_s = 30.0;     // [15, 60]
    double hop_s = 1.0;         // <= window_s
    int sg_window = 11;
    int sg_order = 3;
    double lowess_span = 0.05;
    double bnr_band_lo_hz = 0.16;
    double bnr_band_hi_hz = 0.5;
    double bnr_floor = 2.0;
    double bnr_percentile = 80.0;
    double sim_threshold = 0.5;
    double keep_fraction = 0.5;
    double gaussian_sigma = 2.0;
    double min_breath_dist_s = 2.0;
    double prominence_frac = 0.10;
    int apen_m = 2;
    double apen_r_frac = 0.2;
    double apen_downsample_hz = 10.0;  // breathing content is < 1 Hz
    int degraded_min_retained = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

PipelineConfig config_from_json_file(const std::filesystem::path& path);
SceneSpec scene_from_json_file(const std::filesystem::path& path);

enum class ReasonCode {
    ok,
    no_viable_subcarriers,
    ambiguous_trend,
    no_breaths,
    degenerate_input,
};

const char* reason_name(ReasonCode r);

struct WindowDiagnostics {
    int n_subcarriers = 0;
    int n_rows = 0;        // rows surviving preprocessing
    int n_retained = 0;    // rows passing the BNR threshold
    int group1_size = 0;
    int group2_size = 0;
    int n_discarded = 0;   // dropped by refinement
    double bnr_threshold = 0.0;
    bool degraded = false;  // too few retained subcarriers to trust the window
    std::optional<PhaseDecision> phase;
};

/// One window's outputs. On stage failures the waveform and the affected
/// biomarkers are absent and reason records why; the run never aborts.
struct WindowResult {
    double window_start_s = 0.0;
    double window_len_s = 0.0;
    ReasonCode reason = ReasonCode::ok;
    std::optional<Waveform> waveform;
    BiomarkerReport report;
    WindowDiagnostics diag;
};

/// Screening ratios for the rows of a preprocessed matrix: BNR of the
/// z-scored, SG-filtered raw amplitude of each row's subcarrier. The
/// broadband series keeps the quality floor meaningful; the heavily
/// smoothed waveforms would concentrate even pure noise into the
/// breathing band.
std::vector<double> screening_ratios(const CsiTrace& slice, const WaveformMatrix& gm,
                                     const PipelineConfig& cfg);

/// Full pipeline on one window-sized trace slice:
/// preprocess -> BNR select -> group/fuse -> phase id -> biomarkers.
WindowResult run_window(const CsiTrace& slice, const PipelineConfig& cfg);

/// Sliding windows at hop_s over the whole trace, each processed
/// independently.
std::vector<WindowResult> run_stream(const CsiTrace& trace, const PipelineConfig& cfg);

/// Stitch per-window waveforms into one trace-covering series: each window
/// contributes its hop-advance prefix, the last window its full remainder.
/// Windows without a waveform contribute zeros.
struct StitchedWaveform {
    std::vector<double> timestamps_s;
    std::vector<double> samples;
    bool all_oriented = true;
};

StitchedWaveform stitch_waveforms(const std::vector<WindowResult>& windows,
                                  const PipelineConfig& cfg, double sample_rate_hz);

struct BenchReport {
    int n_subcarriers = 0;
    std::size_t window_samples = 0;
    double preprocess_ms = 0.0;
    double select_ms = 0.0;
    double group_ms = 0.0;
    double phase_ms = 0.0;
    double biomarker_ms = 0.0;
    double total_ms = 0.0;
    double select_ms_2k = 0.0;       // select stage with subcarrier count doubled
    double group_ms_empty = 0.0;     // grouping when nothing is retained
};

/// Wall-clock per pipeline stage on a synthetic scene of n_subcarriers,
/// window_s seconds at sample_rate_hz.
BenchReport bench(const PipelineConfig& cfg, int n_subcarriers = 2000,
                  double window_s = 15.0, double sample_rate_hz = 100.0);

// Window report serialization (BiomarkerReport fields plus reason and
// diagnostics, under a top-level "windows" array).
void write_window_reports(const std::vector<WindowResult>& windows,
                          const std::filesystem::path& path);

void write_waveform_csv(const StitchedWaveform& w, double sample_rate_hz,
                        const std::filesystem::path& path);

struct WaveformFile {
    Waveform waveform;
    double start_s = 0.0;
};

WaveformFile read_waveform_csv(const std::filesystem::path& path);

} // namespace respirfi
