#include "respirfi/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "respirfi/fft.hpp"

namespace respirfi {

namespace {

// Solve the small SPD system (A^T W A) beta = A^T W y arising from
// weighted polynomial fits. Gaussian elimination with partial pivoting in
// long double; systems here are at most (order+1) x (order+1).
std::vector<long double> solve_dense(std::vector<std::vector<long double>> m,
                                     std::vector<long double> rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        std::swap(rhs[col], rhs[piv]);
        const long double d = m[col][col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = m[r][col] / d;
            for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<long double> out(n);
    for (std::size_t i = n; i-- > 0;) {
        long double acc = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= m[i][c] * out[c];
        out[i] = acc / m[i][i];
    }
    return out;
}

// Row of the hat matrix for an unweighted polynomial LS fit over abscissas
// u[0..w), evaluated at u_eval: fitted(u_eval) = sum_j row[j] * y[j].
std::vector<double> poly_fit_row(std::span<const double> u, int order, double u_eval) {
    const std::size_t w = u.size();
    const std::size_t p = static_cast<std::size_t>(order) + 1;
    std::vector<std::vector<long double>> ata(p, std::vector<long double>(p, 0.0L));
    for (std::size_t j = 0; j < w; ++j) {
        long double pw_a = 1.0L;
        std::vector<long double> pows(2 * p - 1);
        for (std::size_t q = 0; q < 2 * p - 1; ++q) {
            pows[q] = pw_a;
            pw_a *= u[j];
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) ata[a][b] += pows[a + b];
    }
    // row = e(u_eval)^T (A^T A)^{-1} A^T, computed one column at a time.
    std::vector<double> row(w);
    // First get c = (A^T A)^{-1} e-basis applied to eval powers:
    // fitted(u_eval) = sum_a beta_a u_eval^a, beta = (A^T A)^{-1} A^T y
    //               = [powvec^T (A^T A)^{-1}] A^T y
    std::vector<long double> powvec(p);
    long double pw = 1.0L;
    for (std::size_t a = 0; a < p; ++a) {
        powvec[a] = pw;
        pw *= u_eval;
    }
    // Solve (A^T A)^T z = powvec; symmetric, so same matrix.
    std::vector<long double> z = solve_dense(ata, powvec);
    for (std::size_t j = 0; j < w; ++j) {
        long double acc = 0.0L;
        long double uj = 1.0L;
        for (std::size_t a = 0; a < p; ++a) {
            acc += z[a] * uj;
            uj *= u[j];
        }
        row[j] = static_cast<double>(acc);
    }
    return row;
}

double tricube(double u) {
    if (u >= 1.0) return 0.0;
    const double t = 1.0 - u * u * u;
    return t * t * t;
}

// Weighted linear fit of y[j0..j0+w) against index j, evaluated at index i.
double weighted_linear_at(std::span<const double> y, std::size_t j0, std::size_t w,
                          std::size_t i, double d_max) {
    long double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = j0; j < j0 + w; ++j) {
        const double d = std::abs(static_cast<double>(j) - static_cast<double>(i));
        const double wt = tricube(d / d_max);
        const double xj = static_cast<double>(j) - static_cast<double>(i);
        sw += wt;
        sx += wt * xj;
        sy += wt * y[j];
        sxx += wt * xj * xj;
        sxy += wt * xj * y[j];
    }
    const long double det = sw * sxx - sx * sx;
    if (std::abs(static_cast<double>(det)) < 1e-300)
        return static_cast<double>(sy / sw);  // all weight on one abscissa
    const long double a = (sxx * sy - sx * sxy) / det;  // value at xj = 0, i.e. at i
    return static_cast<double>(a);
}

} // namespace

double vec_mean(std::span<const double> x) {
    long double s = 0.0L;
    for (double v : x) s += v;
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

double vec_population_variance(std::span<const double> x) {
    const double mu = vec_mean(x);
    long double s = 0.0L;
    for (double v : x) s += (v - mu) * (v - mu);
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

std::vector<double> sg_filter(std::span<const double> x, int window, int order) {
    if (window < 3 || window % 2 == 0 || order < 0 || order >= window)
        throw Error(Err::bad_window, "sg_filter: window must be odd and > order");
    const std::size_t n = x.size();
    const std::size_t w = static_cast<std::size_t>(window);
    if (n < w)
        throw Error(Err::bad_window, "sg_filter: input shorter than window");
    const std::size_t h = w / 2;

    // Interior convolution kernel: centered fit evaluated at its midpoint.
    std::vector<double> u(w);
    for (std::size_t j = 0; j < w; ++j)
        u[j] = static_cast<double>(j) - static_cast<double>(h);
    const std::vector<double> kernel = poly_fit_row(u, order, 0.0);

    std::vector<double> out(n);
    for (std::size_t i = h; i + h < n; ++i) {
        double acc = 0.0;
        const double* src = x.data() + (i - h);
        for (std::size_t j = 0; j < w; ++j) acc += kernel[j] * src[j];
        out[i] = acc;
    }

    // Head and tail: evaluate the end-window fits at the edge positions.
    for (std::size_t i = 0; i < h; ++i) {
        const std::vector<double> row =
            poly_fit_row(u, order, static_cast<double>(i) - static_cast<double>(h));
        double head = 0.0, tail = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            head += row[j] * x[j];
            tail += row[j] * x[n - 1 - j];  // mirrored abscissas, reversed samples
        }
        out[i] = head;
        out[n - 1 - i] = tail;
    }
    return out;
}

std::vector<double> lowess(std::span<const double> x, double span) {
    if (!(span > 0.0) || span > 1.0)
        throw Error(Err::span_too_small, "lowess: span must be in (0, 1]");
    const std::size_t n = x.size();
    std::size_t w = static_cast<std::size_t>(std::ceil(span * static_cast<double>(n)));
    if (w < 3)
        throw Error(Err::span_too_small, "lowess: ceil(span*len) must be >= 3");
    if (w % 2 == 0) ++w;                       // symmetric neighborhoods
    if (w > n) w = (n % 2 == 1) ? n : n - 1;
    const std::size_t h = w / 2;

    std::vector<double> out(n);

    // On a uniform grid the interior weighted linear fit evaluated at the
    // window center collapses to a fixed normalized-tricube average.
    std::vector<double> kernel(w);
    double ksum = 0.0;
    for (std::size_t j = 0; j < w; ++j) {
        const double d = std::abs(static_cast<double>(j) - static_cast<double>(h));
        kernel[j] = tricube(d / static_cast<double>(h));
        ksum += kernel[j];
    }
    for (double& k : kernel) k /= ksum;

    // Tap-outer, chunked convolution: every inner loop is an independent
    // multiply-add over contiguous data, which vectorizes cleanly and keeps
    // the working set in L1.
    constexpr std::size_t kChunk = 1024;
    for (std::size_t c0 = h; c0 + h < n; c0 += kChunk) {
        const std::size_t c1 = std::min(c0 + kChunk, n - h);
        double* dst = out.data() + c0;
        const std::size_t len = c1 - c0;
        for (std::size_t i = 0; i < len; ++i) dst[i] = 0.0;
        for (std::size_t j = 0; j < w; ++j) {
            const double kj = kernel[j];
            const double* src = x.data() + (c0 - h + j);
            for (std::size_t i = 0; i < len; ++i) dst[i] += kj * src[i];
        }
    }
    for (std::size_t i = 0; i < h; ++i) {
        out[i] = weighted_linear_at(x, 0, w, i, static_cast<double>(w - 1 - i));
        const std::size_t t = n - 1 - i;
        out[t] = weighted_linear_at(x, n - w, w, t, static_cast<double>(w - 1 - i));
    }
    return out;
}

std::vector<double> zscore(std::span<const double> x) {
    if (x.size() < 2)
        throw Error(Err::too_short, "zscore: need at least 2 samples");
    const double mu = vec_mean(x);
    const double var = vec_population_variance(x);
    if (var <= 0.0)
        throw Error(Err::zero_variance, "zscore: zero variance input");
    const double inv_sd = 1.0 / std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) * inv_sd;
    return out;
}

Spectrum power_spectrum(std::span<const double> x, double fs_hz,
                        SpectralWindow window) {
    const std::size_t n = x.size();
    if (n < 16)
        throw Error(Err::too_short, "power_spectrum: need at least 16 samples");
    FftPlan plan(n);
    std::vector<std::complex<double>> spec;
    if (window == SpectralWindow::hann) {
        std::vector<double> tapered(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                                  static_cast<double>(i) /
                                                  static_cast<double>(n - 1));
            tapered[i] = h * x[i];
        }
        spec = plan.transform(std::span<const double>(tapered));
    } else {
        spec = plan.transform(x);
    }

    const std::size_t half = n / 2;  // last one-sided bin index
    Spectrum out;
    out.freqs_hz.resize(half + 1);
    out.power.resize(half + 1);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k <= half; ++k) {
        out.freqs_hz[k] = fs_hz * static_cast<double>(k) * inv_n;
        double p = std::norm(spec[k]) * inv_n;
        const bool fold = k != 0 && !(n % 2 == 0 && k == half);
        out.power[k] = fold ? 2.0 * p : p;
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error(Err::dimension_mismatch, "cosine_similarity: length mismatch");
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    if (na <= 0.0L || nb <= 0.0L)
        throw Error(Err::zero_norm, "cosine_similarity: zero-norm vector");
    return static_cast<double>(dot / std::sqrt(na * nb));
}

std::vector<double> gaussian_smooth(std::span<const double> v, double sigma) {
    if (sigma < 0.0)
        throw Error(Err::invalid_value, "gaussian_smooth: sigma must be >= 0");
    const std::size_t n = v.size();
    if (sigma == 0.0 || n == 0) return {v.begin(), v.end()};

    const long r = static_cast<long>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (long j = -r; j <= r; ++j) {
        const double e = std::exp(-0.5 * (static_cast<double>(j) / sigma) *
                                  (static_cast<double>(j) / sigma));
        kernel[static_cast<std::size_t>(j + r)] = e;
        sum += e;
    }
    for (double& k : kernel) k /= sum;

    // Reflect padding with edge repetition: ... v1 v0 | v0 v1 ... vn-1 | vn-1 ...
    auto fold = [n](long i) -> std::size_t {
        const long period = 2 * static_cast<long>(n);
        long m = i % period;
        if (m < 0) m += period;
        if (m >= static_cast<long>(n)) m = period - 1 - m;
        return static_cast<std::size_t>(m);
    };

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long j = -r; j <= r; ++j)
            acc += kernel[static_cast<std::size_t>(j + r)] * v[fold(static_cast<long>(i) + j)];
        out[i] = acc;
    }
    return out;
}

LineFit linfit(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 2)
        throw Error(Err::too_short, "linfit: need at least 2 samples");
    const double xbar = 0.5 * static_cast<double>(n - 1);
    const double ybar = vec_mean(y);
    long double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = static_cast<double>(k) - xbar;
        sxx += dx * dx;
        sxy += dx * (y[k] - ybar);
    }
    LineFit fit;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = ybar - fit.slope * xbar;
    return fit;
}

} // namespace respirfi
