#include "respirfi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace respirfi {

namespace {

constexpr double kPi = std::numbers::pi;

// splitmix64: deterministic, platform-independent stream for noise draws.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform01() {  // in (0, 1)
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
};

// Box-Muller pair, consumed one value at a time.
struct GaussianStream {
    SplitMix64 rng;
    double spare = 0.0;
    bool have_spare = false;

    explicit GaussianStream(std::uint64_t seed) : rng(seed) {}

    double next() {
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double u1 = rng.uniform01();
        const double u2 = rng.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare = r * std::sin(2.0 * kPi * u2);
        have_spare = true;
        return r * std::cos(2.0 * kPi * u2);
    }
};

double breath_amp(const BreathProfile& b, std::size_t breath_index) {
    if (b.amplitude_modulation.empty()) return 1.0;
    return b.amplitude_modulation[breath_index % b.amplitude_modulation.size()];
}

} // namespace

void SceneSpec::validate() const {
    if (std::abs(los.attenuation) <= 0.0 || los.length_m <= 0.0)
        throw Error(Err::invalid_scene, "LoS path needs |attenuation| > 0 and length > 0");
    if (std::abs(chest_rest.attenuation) <= 0.0 || chest_rest.length_m <= 0.0)
        throw Error(Err::invalid_scene, "chest path needs |attenuation| > 0 and length > 0");
    for (const auto& p : extra_static_paths)
        if (std::abs(p.attenuation) <= 0.0 || p.length_m <= 0.0)
            throw Error(Err::invalid_scene, "static path needs |attenuation| > 0 and length > 0");
    if (chest_delta_m < 0.0 || chest_delta_m > 0.02)
        throw Error(Err::invalid_scene, "chest_delta_m outside [0, 0.02]");
    if (breath.rate_bpm < 9.6 || breath.rate_bpm > 30.0)
        throw Error(Err::invalid_scene, "rate_bpm outside [9.6, 30]");
    if (breath.ie_ratio < 0.3 || breath.ie_ratio > 3.0)
        throw Error(Err::invalid_scene, "ie_ratio outside [0.3, 3]");
    for (double a : breath.amplitude_modulation)
        if (!(a > 0.0) || a > 1.0)
            throw Error(Err::invalid_scene, "amplitude_modulation factors must be in (0, 1]");
}

double path_phase(double f_hz, double d_bre_m, double d_los_m, double vartheta_rad) {
    if (f_hz <= 0.0)
        throw Error(Err::invalid_value, "path_phase: frequency must be positive");
    return 2.0 * kPi * f_hz * (d_bre_m - d_los_m) / kSpeedOfLight + vartheta_rad;
}

double csi_amplitude(double a_los_mag, double a_bre_mag, double theta_rad) {
    if (a_los_mag < 0.0 || a_bre_mag < 0.0)
        throw Error(Err::invalid_value, "csi_amplitude: magnitudes must be >= 0");
    const double s = a_los_mag * a_los_mag + a_bre_mag * a_bre_mag +
                     2.0 * a_los_mag * a_bre_mag * std::cos(theta_rad);
    return std::sqrt(std::max(s, 0.0));
}

double max_breath_phase_span(double delta_d_m, double f_hz) {
    if (delta_d_m < 0.0 || f_hz <= 0.0)
        throw Error(Err::invalid_value, "max_breath_phase_span: inputs must be positive");
    return 4.0 * kPi * delta_d_m * f_hz / kSpeedOfLight;
}

CaseLabel classify_case(double theta_min_rad, double theta_max_rad) {
    const double span = theta_max_rad - theta_min_rad;
    if (span < 0.0)
        throw Error(Err::invalid_value, "classify_case: theta_max < theta_min");
    if (span >= kPi)
        throw Error(Err::span_too_wide, "classify_case: interval spans >= pi");

    double a = std::fmod(theta_min_rad, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    const double b = a + span;

    if (span == 0.0) return a < kPi ? CaseLabel::case1 : CaseLabel::case2;
    if (b < kPi) return CaseLabel::case1;
    if (a > kPi && b <= 2.0 * kPi) return CaseLabel::case2;
    return CaseLabel::case3;
}

double min_path_delta_for_band(double bandwidth_hz) {
    if (bandwidth_hz <= 0.0)
        throw Error(Err::invalid_value, "min_path_delta_for_band: bandwidth must be positive");
    return 0.255 * kSpeedOfLight / bandwidth_hz;
}

std::vector<double> breath_state(const BreathProfile& breath, std::span<const double> t) {
    const double period = 60.0 / breath.rate_bpm;
    const bool sinus = breath.shape == BreathProfile::Shape::sinusoid;
    const double ie = sinus ? 1.0 : breath.ie_ratio;
    const double t_in = period * ie / (1.0 + ie);
    const double t_ex = period - t_in;

    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double cycles = t[i] / period;
        const auto breath_index = static_cast<std::size_t>(std::floor(cycles));
        const double tau = t[i] - static_cast<double>(breath_index) * period;
        const double amp = breath_amp(breath, breath_index);
        double b;
        if (tau < t_in)
            b = 0.5 * (1.0 - std::cos(kPi * tau / t_in));     // trough -> peak
        else
            b = 0.5 * (1.0 + std::cos(kPi * (tau - t_in) / t_ex));  // peak -> trough
        out[i] = amp * b;
    }
    return out;
}

std::vector<std::pair<double, BreathPhaseMark>> breath_marks(const BreathProfile& breath,
                                                             double duration_s) {
    const double period = 60.0 / breath.rate_bpm;
    const bool sinus = breath.shape == BreathProfile::Shape::sinusoid;
    const double ie = sinus ? 1.0 : breath.ie_ratio;
    const double t_in = period * ie / (1.0 + ie);

    std::vector<std::pair<double, BreathPhaseMark>> marks;
    for (double t0 = 0.0; t0 < duration_s; t0 += period) {
        marks.emplace_back(t0, BreathPhaseMark::inhale_start);
        if (t0 + t_in < duration_s)
            marks.emplace_back(t0 + t_in, BreathPhaseMark::exhale_start);
    }
    return marks;
}

std::vector<double> subcarrier_grid(double center_freq_hz, double bandwidth_hz, int n) {
    const double spacing = bandwidth_hz / static_cast<double>(n);
    std::vector<double> freqs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        freqs[static_cast<std::size_t>(k)] =
            center_freq_hz + (static_cast<double>(k) - 0.5 * static_cast<double>(n - 1)) * spacing;
    return freqs;
}

SimResult simulate_trace(const SceneSpec& scene, double duration_s, double sample_rate_hz,
                         int n_subcarriers, std::uint64_t seed,
                         double center_freq_hz, double bandwidth_hz) {
    scene.validate();
    if (n_subcarriers < 8)
        throw Error(Err::invalid_scene, "need at least 8 subcarriers");
    if (duration_s < 10.0 || sample_rate_hz <= 0.0)
        throw Error(Err::invalid_scene, "need >= 10 s of data and a positive rate");

    const auto l = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
    const auto k = static_cast<std::size_t>(n_subcarriers);

    SimResult res;
    res.trace.sample_rate_hz = sample_rate_hz;
    res.trace.center_freq_hz = center_freq_hz;
    res.trace.bandwidth_hz = bandwidth_hz;
    res.trace.subcarrier_freqs_hz = subcarrier_grid(center_freq_hz, bandwidth_hz, n_subcarriers);

    res.trace.timestamps_s.resize(l);
    for (std::size_t i = 0; i < l; ++i)
        res.trace.timestamps_s[i] = static_cast<double>(i) / sample_rate_hz;

    const std::vector<double> b = breath_state(scene.breath, res.trace.timestamps_s);
    res.truth.timestamps_s = res.trace.timestamps_s;
    res.truth.displacement = b;
    res.truth.breath_marks = breath_marks(scene.breath, duration_s);

    // The relative LoS/chest phase is set by vartheta: the chest path
    // attenuation keeps its configured magnitude but takes the phase
    // arg(alpha_los) - vartheta.
    const std::complex<double> a_los = scene.los.attenuation;
    const double chest_mag = std::abs(scene.chest_rest.attenuation);
    const std::complex<double> a_chest =
        std::polar(chest_mag, std::arg(a_los) - scene.vartheta_rad);

    res.trace.amplitudes.assign(l, std::vector<double>(k, 0.0));

    // Per-subcarrier synthesis. The static part of h is constant in t;
    // only the chest phasor moves, by s_k * b(t) radians.
    std::vector<std::complex<double>> column(l);
    std::vector<double> swing_sq(k, 0.0);
    std::vector<std::vector<std::complex<double>>> h_cols;
    const bool noisy = scene.noise_snr_db.has_value();
    if (noisy) h_cols.assign(k, {});

    for (std::size_t sc = 0; sc < k; ++sc) {
        const double f = res.trace.subcarrier_freqs_hz[sc];
        const double w = 2.0 * kPi * f / kSpeedOfLight;
        std::complex<double> statics = a_los * std::polar(1.0, -w * scene.los.length_m);
        for (const auto& p : scene.extra_static_paths)
            statics += p.attenuation * std::polar(1.0, -w * p.length_m);
        const std::complex<double> chest_rest_phasor =
            a_chest * std::polar(1.0, -w * scene.chest_rest.length_m);
        const double s_k = w * 2.0 * scene.chest_delta_m;  // phase retreat per unit b

        double amin = std::numeric_limits<double>::infinity();
        double amax = -amin;
        for (std::size_t i = 0; i < l; ++i) {
            // d_bre(t) = rest - 2*delta*b  =>  extra phase +s_k*b on the phasor
            const std::complex<double> h =
                statics + chest_rest_phasor * std::polar(1.0, s_k * b[i]);
            column[i] = h;
            const double a = std::abs(h);
            res.trace.amplitudes[i][sc] = a;
            amin = std::min(amin, a);
            amax = std::max(amax, a);
        }
        const double half_swing = 0.5 * (amax - amin);
        swing_sq[sc] = half_swing * half_swing;
        if (noisy) h_cols[sc] = column;
    }

    if (noisy) {
        // Reference power: squared peak-to-peak respiration swing averaged
        // over subcarriers. Noise is complex white Gaussian, identical
        // variance on every subcarrier.
        double p_ref = 0.0;
        for (double s : swing_sq) p_ref += 4.0 * s;
        p_ref /= static_cast<double>(k);
        const double noise_var = p_ref * std::pow(10.0, -(*scene.noise_snr_db) / 10.0);
        const double sd = std::sqrt(0.5 * noise_var);

        for (std::size_t sc = 0; sc < k; ++sc) {
            GaussianStream g(seed ^ (0x9E3779B97F4A7C15ull * (sc + 1)));
            for (std::size_t i = 0; i < l; ++i) {
                const std::complex<double> n{sd * g.next(), sd * g.next()};
                res.trace.amplitudes[i][sc] = std::abs(h_cols[sc][i] + n);
            }
        }
    }

    return res;
}

CaseLabel case_of_subcarrier(const SceneSpec& scene, double f_hz) {
    scene.validate();
    double amax = 0.0;
    for (double a : scene.breath.amplitude_modulation) amax = std::max(amax, a);
    if (scene.breath.amplitude_modulation.empty()) amax = 1.0;

    const double d_rest = scene.chest_rest.length_m;
    const double d_full = d_rest - 2.0 * scene.chest_delta_m * amax;
    const double theta_hi = path_phase(f_hz, d_rest, scene.los.length_m, scene.vartheta_rad);
    const double theta_lo = path_phase(f_hz, d_full, scene.los.length_m, scene.vartheta_rad);
    return classify_case(theta_lo, theta_hi);
}

} // namespace respirfi
