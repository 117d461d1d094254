// Scene construction helpers shared by the simulator-driven test suites.
#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "respirfi/simulator.hpp"

namespace scenes {

inline constexpr double kPi = std::numbers::pi;

// vartheta that centers the breath-swept phase interval of the subcarrier
// at frequency f on the angle `center` (radians).
inline double anchor_vartheta(double f_hz, double path_delta_m, double chest_delta_m,
                              double center_rad, double mod_max = 1.0) {
    const double span = respirfi::max_breath_phase_span(chest_delta_m, f_hz) * mod_max;
    const double theta_rest =
        2.0 * kPi * f_hz * path_delta_m / respirfi::kSpeedOfLight;
    double v = center_rad + span / 2.0 - theta_rest;
    v = std::fmod(v, 2.0 * kPi);
    if (v < 0.0) v += 2.0 * kPi;
    return v;
}

inline respirfi::SceneSpec basic_scene(double path_delta_m, double vartheta_rad,
                                       double rate_bpm = 15.0, double ie = 1.0,
                                       double chest_delta_m = 0.005,
                                       double chest_mag = 0.35) {
    respirfi::SceneSpec s;
    s.los = {std::complex<double>(1.0, 0.0), 2.0};
    s.chest_rest = {std::complex<double>(chest_mag, 0.0), 2.0 + path_delta_m};
    s.vartheta_rad = vartheta_rad;
    s.chest_delta_m = chest_delta_m;
    s.breath.rate_bpm = rate_bpm;
    s.breath.ie_ratio = ie;
    return s;
}

// Scene whose band-center subcarrier sweeps an interval centered on
// `center_rad`; the classic placements are pi/2 (clean case 1), 3*pi/2
// (clean case 2) and pi (worst case, frequency doubled).
inline respirfi::SceneSpec centered_scene(double center_rad, double f_center_hz,
                                          double path_delta_m = 1.2,
                                          double rate_bpm = 15.0,
                                          double chest_delta_m = 0.005) {
    return basic_scene(path_delta_m,
                       anchor_vartheta(f_center_hz, path_delta_m, chest_delta_m, center_rad),
                       rate_bpm, 1.0, chest_delta_m);
}

// Geometry draw used by the closed-loop suites: path delta in
// [0.6, 3] m (above the 160 MHz feasibility bound), free phase offset,
// physiological breath parameters.
//
// min_rate_bpm matters for noiseless runs: the frequency-doubled response
// of straddling subcarriers leaves the [0.16, 0.5] Hz screening band only
// for rates above 15 bpm, and without a noise floor the band screen has
// nothing else to reject them by.
inline respirfi::SceneSpec random_feasible_scene(std::mt19937_64& rng,
                                                 double min_rate_bpm = 10.0) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    respirfi::SceneSpec s;
    s.los = {std::complex<double>(1.0, 0.0), 1.5 + u01(rng)};
    const double path_delta = 0.6 + 2.4 * u01(rng);
    const double chest_mag = 0.2 + 0.3 * u01(rng);
    s.chest_rest = {std::complex<double>(chest_mag, 0.0), s.los.length_m + path_delta};
    s.vartheta_rad = 2.0 * kPi * u01(rng);
    s.chest_delta_m = 0.0042 + 0.0012 * u01(rng);
    s.breath.rate_bpm = min_rate_bpm + (30.0 - min_rate_bpm) * u01(rng);
    s.breath.ie_ratio = 0.5 + 1.5 * u01(rng);
    return s;
}

} // namespace scenes
