#include "respirfi/biomarkers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "respirfi/dsp.hpp"

namespace respirfi {

namespace {

struct Extremum {
    std::size_t index;
    double value;   // signed waveform value
    bool is_peak;
};

// Topographic prominence of a local maximum of x at position i.
double prominence_at(std::span<const double> x, std::size_t i) {
    double left_base = x[i];
    for (std::size_t j = i; j-- > 0;) {
        if (x[j] > x[i]) break;
        left_base = std::min(left_base, x[j]);
    }
    double right_base = x[i];
    for (std::size_t j = i + 1; j < x.size(); ++j) {
        if (x[j] > x[i]) break;
        right_base = std::min(right_base, x[j]);
    }
    return x[i] - std::max(left_base, right_base);
}

// Local maxima passing the prominence gate, then thinned so surviving
// peaks are at least min_dist samples apart (taller peaks win).
std::vector<std::size_t> gated_peaks(std::span<const double> x, double min_prominence,
                                     std::size_t min_dist) {
    std::vector<std::size_t> cand;
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
        if (x[i] > x[i - 1] && x[i] >= x[i + 1] && prominence_at(x, i) >= min_prominence)
            cand.push_back(i);

    std::vector<std::size_t> order(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[cand[a]] != x[cand[b]]) return x[cand[a]] > x[cand[b]];
        return cand[a] < cand[b];
    });

    std::vector<std::size_t> kept;
    for (std::size_t oi : order) {
        const std::size_t pos = cand[oi];
        bool ok = true;
        for (std::size_t kp : kept) {
            const std::size_t gap = pos > kp ? pos - kp : kp - pos;
            if (gap < min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(pos);
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

double sample_at(const Waveform& w, double t_s) {
    auto i = static_cast<std::size_t>(std::llround(t_s * w.sample_rate_hz));
    i = std::min(i, w.samples.size() - 1);
    return w.samples[i];
}

} // namespace

BreathSegmentation detect_breaths(const Waveform& w, double min_dist_s,
                                  double prominence_frac) {
    if (w.duration_s() < 10.0)
        throw Error(Err::too_short, "detect_breaths: need at least 10 s");

    const auto& x = w.samples;
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double min_prom = prominence_frac * (*hi_it - *lo_it);
    const auto min_dist =
        static_cast<std::size_t>(std::llround(min_dist_s * w.sample_rate_hz));

    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];

    std::vector<Extremum> events;
    for (std::size_t i : gated_peaks(x, min_prom, min_dist))
        events.push_back({i, x[i], true});
    for (std::size_t i : gated_peaks(neg, min_prom, min_dist))
        events.push_back({i, x[i], false});
    std::sort(events.begin(), events.end(),
              [](const Extremum& a, const Extremum& b) { return a.index < b.index; });

    // Enforce strict peak/trough alternation: of two adjacent same-kind
    // extrema keep the more extreme one.
    std::vector<Extremum> alt;
    for (const Extremum& e : events) {
        if (!alt.empty() && alt.back().is_peak == e.is_peak) {
            const bool replace = e.is_peak ? e.value > alt.back().value
                                           : e.value < alt.back().value;
            if (replace) alt.back() = e;
        } else {
            alt.push_back(e);
        }
    }

    BreathSegmentation seg;
    const double dt = 1.0 / w.sample_rate_hz;
    for (const Extremum& e : alt)
        (e.is_peak ? seg.peak_times_s : seg.trough_times_s)
            .push_back(static_cast<double>(e.index) * dt);

    if (seg.peak_times_s.size() < 2)
        throw Error(Err::no_breaths_found, "detect_breaths: fewer than 2 peaks");

    for (std::size_t i = 0; i + 2 < alt.size(); ++i)
        if (!alt[i].is_peak && alt[i + 1].is_peak && !alt[i + 2].is_peak)
            seg.breaths.push_back({static_cast<double>(alt[i].index) * dt,
                                   static_cast<double>(alt[i + 1].index) * dt,
                                   static_cast<double>(alt[i + 2].index) * dt});
    return seg;
}

double respiratory_rate(const BreathSegmentation& seg) {
    const auto& p = seg.peak_times_s;
    if (p.size() < 2)
        throw Error(Err::no_breaths_found, "respiratory_rate: fewer than 2 peaks");
    const double mean_pp = (p.back() - p.front()) / static_cast<double>(p.size() - 1);
    return 60.0 / mean_pp;
}

double ie_ratio(const Waveform& w, const BreathSegmentation& seg) {
    if (w.sign_convention != SignConvention::oriented)
        throw Error(Err::phase_unresolved, "ie_ratio: waveform phase unresolved");
    if (seg.breaths.empty())
        throw Error(Err::no_breaths_found, "ie_ratio: no complete breath");
    double acc = 0.0;
    for (const auto& b : seg.breaths) {
        const double inhale = b.peak_s - b.trough0_s;
        const double exhale = b.trough1_s - b.peak_s;
        acc += inhale / exhale;
    }
    return acc / static_cast<double>(seg.breaths.size());
}

double tv_variability(const Waveform& w, const BreathSegmentation& seg) {
    if (seg.breaths.size() < 2)
        throw Error(Err::no_breaths_found, "tv_variability: need at least 2 breaths");
    std::vector<double> excursions;
    excursions.reserve(seg.breaths.size());
    for (const auto& b : seg.breaths) {
        const double peak = sample_at(w, b.peak_s);
        const double troughs = 0.5 * (sample_at(w, b.trough0_s) + sample_at(w, b.trough1_s));
        excursions.push_back(peak - troughs);
    }
    return vec_population_variance(excursions);
}

double apen(std::span<const double> x, int m, double r_frac) {
    const std::size_t n = x.size();
    if (n < 50)
        throw Error(Err::too_short, "apen: need at least 50 samples");
    if (m < 1)
        throw Error(Err::invalid_value, "apen: m must be >= 1");

    const double r = r_frac * std::sqrt(vec_population_variance(x));

    auto phi = [&](std::size_t mm) {
        const std::size_t count = n - mm + 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t matches = 0;
            for (std::size_t j = 0; j < count; ++j) {
                bool ok = true;
                for (std::size_t k = 0; k < mm; ++k) {
                    if (std::abs(x[i + k] - x[j + k]) > r) {
                        ok = false;
                        break;
                    }
                }
                matches += ok ? 1 : 0;
            }
            acc += std::log(static_cast<double>(matches) / static_cast<double>(count));
        }
        return acc / static_cast<double>(count);
    };

    return phi(static_cast<std::size_t>(m)) - phi(static_cast<std::size_t>(m) + 1);
}

} // namespace respirfi
