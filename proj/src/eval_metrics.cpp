#include "respirfi/eval_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "respirfi/dsp.hpp"

namespace respirfi {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(Err::dimension_mismatch, "metric inputs differ in length");
    if (a.empty())
        throw Error(Err::too_few, "metric inputs are empty");
}

// Linear interpolation of (t, v) at query time q; t strictly increasing.
double interp(std::span<const double> t, std::span<const double> v, double q) {
    const auto it = std::lower_bound(t.begin(), t.end(), q);
    if (it == t.begin()) return v.front();
    if (it == t.end()) return v.back();
    const std::size_t hi = static_cast<std::size_t>(it - t.begin());
    const std::size_t lo = hi - 1;
    const double f = (q - t[lo]) / (t[hi] - t[lo]);
    return v[lo] + f * (v[hi] - v[lo]);
}

double pcc_raw(const std::vector<double>& x, const std::vector<double>& y,
               std::size_t off_x, std::size_t off_y, std::size_t len) {
    long double sx = 0, sy = 0;
    for (std::size_t i = 0; i < len; ++i) {
        sx += x[off_x + i];
        sy += y[off_y + i];
    }
    const double mx = static_cast<double>(sx) / static_cast<double>(len);
    const double my = static_cast<double>(sy) / static_cast<double>(len);
    long double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const double dx = x[off_x + i] - mx;
        const double dy = y[off_y + i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0L || syy <= 0.0L) return 0.0;
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

} // namespace

double mae(std::span<const double> est, std::span<const double> truth) {
    check_pair(est, truth);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < est.size(); ++i) acc += std::abs(est[i] - truth[i]);
    return static_cast<double>(acc / static_cast<long double>(est.size()));
}

double mse(std::span<const double> est, std::span<const double> truth) {
    check_pair(est, truth);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < est.size(); ++i) {
        const double d = est[i] - truth[i];
        acc += static_cast<long double>(d) * d;
    }
    return static_cast<double>(acc / static_cast<long double>(est.size()));
}

double pcc(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const double mx = vec_mean(x), my = vec_mean(y);
    long double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0L || syy <= 0.0L)
        throw Error(Err::zero_variance, "pcc: constant input");
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

AgreementStats bland_altman(std::span<const double> a, std::span<const double> b) {
    check_pair(a, b);
    if (a.size() < 3)
        throw Error(Err::too_few, "bland_altman: need at least 3 pairs");

    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];

    AgreementStats s;
    s.mean_bias = vec_mean(diffs);
    long double acc = 0.0L;
    for (double d : diffs) acc += (d - s.mean_bias) * (d - s.mean_bias);
    s.sd_diff = std::sqrt(static_cast<double>(acc / static_cast<long double>(diffs.size() - 1)));
    s.loa_low = s.mean_bias - 1.96 * s.sd_diff;
    s.loa_high = s.mean_bias + 1.96 * s.sd_diff;
    std::size_t inside = 0;
    for (double d : diffs)
        if (d >= s.loa_low && d <= s.loa_high) ++inside;
    s.pct_within_loa = 100.0 * static_cast<double>(inside) / static_cast<double>(diffs.size());
    return s;
}

AlignedPair align_for_pcc(const Waveform& w, double w_start_s,
                          const GroundTruthTrace& truth) {
    truth.validate();
    if (w.samples.size() < 2 || truth.timestamps_s.size() < 2)
        throw Error(Err::too_few, "align_for_pcc: inputs too short");

    const double fs = w.sample_rate_hz;
    const double w_end_s = w_start_s + static_cast<double>(w.samples.size() - 1) / fs;
    const double lo = std::max(w_start_s, truth.timestamps_s.front());
    const double hi = std::min(w_end_s, truth.timestamps_s.back());
    if (hi - lo < 10.0)
        throw Error(Err::no_overlap, "align_for_pcc: overlap shorter than 10 s");

    const auto i0 = static_cast<std::size_t>(std::ceil((lo - w_start_s) * fs - 1e-9));
    const auto i1 = static_cast<std::size_t>(std::floor((hi - w_start_s) * fs + 1e-9));
    const std::size_t n = i1 - i0 + 1;

    std::vector<double> wx(n), ty(n);
    for (std::size_t i = 0; i < n; ++i) {
        wx[i] = w.samples[i0 + i];
        const double t = w_start_s + static_cast<double>(i0 + i) / fs;
        ty[i] = interp(truth.timestamps_s, truth.displacement, t);
    }

    // Best integer-sample lag in +-1 s; positive lag means the waveform
    // trails the truth.
    const auto max_lag = static_cast<long>(std::llround(fs));
    long best_lag = 0;
    double best_r = -2.0;
    for (long lag = -max_lag; lag <= max_lag; ++lag) {
        const std::size_t shift = static_cast<std::size_t>(std::abs(lag));
        if (shift >= n) continue;
        const std::size_t len = n - shift;
        const double r = lag >= 0 ? pcc_raw(wx, ty, shift, 0, len)
                                  : pcc_raw(wx, ty, 0, shift, len);
        if (r > best_r) {
            best_r = r;
            best_lag = lag;
        }
    }

    const std::size_t shift = static_cast<std::size_t>(std::abs(best_lag));
    const std::size_t len = n - shift;
    AlignedPair out;
    out.lag_s = static_cast<double>(best_lag) / fs;
    std::vector<double> xa(len), ya(len);
    for (std::size_t i = 0; i < len; ++i) {
        xa[i] = wx[(best_lag >= 0 ? shift : 0) + i];
        ya[i] = ty[(best_lag >= 0 ? 0 : shift) + i];
    }
    out.x = zscore(xa);
    out.y = zscore(ya);
    return out;
}

} // namespace respirfi
