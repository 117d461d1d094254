#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "respirfi/trace_model.hpp"

namespace respirfi {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// One propagation path: complex attenuation and one-way... total path
/// length in meters.
struct PathSpec {
    std::complex<double> attenuation{1.0, 0.0};  // |.| > 0
    double length_m = 1.0;                       // > 0
};

/// Chest displacement profile b(t) in [0, 1]; b rising means inhalation.
/// The asymmetric raised cosine realizes ie_ratio by scaling the inhale
/// and exhale half-cycles separately; "sinusoid" is the symmetric special
/// case and ignores ie_ratio.
struct BreathProfile {
    enum class Shape { sinusoid, asymmetric_raised_cosine };

    double rate_bpm = 15.0;   // [9.6, 30]
    double ie_ratio = 1.0;    // inhale/exhale duration, [0.3, 3]
    std::vector<double> amplitude_modulation{1.0};  // per-breath scale, each in (0, 1]
    Shape shape = Shape::asymmetric_raised_cosine;
};

/// Which monotonicity regime a subcarrier's breath-swept phase interval
/// falls into. Case 1: inside [0, pi), amplitude rises on inhalation.
/// Case 2: inside (pi, 2pi], amplitude falls on inhalation. Case 3:
/// straddles a multiple of pi, non-monotonic and frequency-doubled.
enum class CaseLabel { case1, case2, case3 };

struct SceneSpec {
    PathSpec los;
    PathSpec chest_rest;  // chest path at end-exhalation; its attenuation
                          // phase is derived from vartheta_rad (see below)
    std::vector<PathSpec> extra_static_paths;
    double vartheta_rad = 0.0;   // phase of alpha_los * conj(alpha_chest)
    double chest_delta_m = 0.005;  // one-way peak displacement, [0, 0.02]
    BreathProfile breath;
    std::optional<double> noise_snr_db;  // nullopt = noiseless

    void validate() const;
};

/// Phase lead of the chest path over the LoS path at frequency f:
/// 2*pi*f*(d_bre - d_los)/c + vartheta. Not reduced mod 2*pi.
double path_phase(double f_hz, double d_bre_m, double d_los_m, double vartheta_rad);

/// Two-path amplitude sqrt(a1^2 + a2^2 + 2 a1 a2 cos(theta)).
double csi_amplitude(double a_los_mag, double a_bre_mag, double theta_rad);

/// Upper bound on the phase span swept by one breath: 4*pi*delta_d*f/c.
double max_breath_phase_span(double delta_d_m, double f_hz);

/// Classify a phase interval of span < pi. Throws SpanTooWide otherwise.
CaseLabel classify_case(double theta_min_rad, double theta_max_rad);

/// Minimum chest/LoS path-length difference for which a bandwidth-B sweep
/// is guaranteed to reach a monotonic phase interval: 0.255 * c / B.
double min_path_delta_for_band(double bandwidth_hz);

/// Chest displacement state b(t) for each time point, in [0, 1].
std::vector<double> breath_state(const BreathProfile& breath, std::span<const double> t);

/// Breath phase-change marks (trough = inhale start, peak = exhale start)
/// over [0, duration).
std::vector<std::pair<double, BreathPhaseMark>> breath_marks(const BreathProfile& breath,
                                                             double duration_s);

struct SimResult {
    CsiTrace trace;
    GroundTruthTrace truth;
};

/// Synthesize an amplitude trace from the two-path-plus-clutter model.
/// The chest path length at time t is chest_rest.length_m - 2*chest_delta_m*b(t),
/// so inhalation shortens the chest path. Optional complex AWGN is added to
/// h before taking magnitudes; its SNR is referenced to the mean
/// respiration-induced amplitude swing across subcarriers. Identical
/// (scene, seed) inputs give bit-identical traces.
SimResult simulate_trace(const SceneSpec& scene, double duration_s, double sample_rate_hz,
                         int n_subcarriers, std::uint64_t seed,
                         double center_freq_hz = 6.025e9, double bandwidth_hz = 160e6);

/// Phase interval swept by one full breath at frequency f, classified.
CaseLabel case_of_subcarrier(const SceneSpec& scene, double f_hz);

/// Uniform subcarrier grid of spacing bandwidth/n centered on center_freq.
std::vector<double> subcarrier_grid(double center_freq_hz, double bandwidth_hz, int n);

} // namespace respirfi
