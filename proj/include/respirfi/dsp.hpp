#pragma once

#include <span>
#include <vector>

#include "respirfi/errors.hpp"

namespace respirfi {

/// One-sided power spectrum: power[k] is the folded periodogram at
/// freqs_hz[k] = k * fs / n, scaled so that sum(power) equals the signal's
/// mean-square times n... i.e. Parseval holds as sum(power) == sum(x^2).
struct Spectrum {
    std::vector<double> freqs_hz;
    std::vector<double> power;
};

/// Savitzky-Golay smoothing. Interior points use the centered
/// least-squares convolution; the first and last half-windows are filled
/// by evaluating the polynomial fitted to the end windows.
/// window must be odd, order < window, len(x) >= window.
std::vector<double> sg_filter(std::span<const double> x, int window = 11, int order = 3);

/// Locally weighted linear regression with tricube weights over the
/// nearest ceil(span*len) points, zero robustness iterations. The sample
/// grid is uniform, so interior fits reduce to a fixed symmetric kernel;
/// edge points get explicit weighted fits.
std::vector<double> lowess(std::span<const double> x, double span = 0.05);

/// (x - mean) / population std. Throws ZeroVariance on constant input.
std::vector<double> zscore(std::span<const double> x);

/// Optional taper for power_spectrum. The default is no taper: analysis
/// windows here are tens of seconds and the band-ratio consumers divide
/// like by like, so leakage largely cancels.
enum class SpectralWindow { none, hann };

Spectrum power_spectrum(std::span<const double> x, double fs_hz,
                        SpectralWindow window = SpectralWindow::none);

/// a.b / (|a||b|). Throws ZeroNorm when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Convolution with a normalized Gaussian kernel truncated at +-4 sigma,
/// reflect padding (edge value repeated). sigma == 0 is the identity.
/// sigma is in index units.
std::vector<double> gaussian_smooth(std::span<const double> v, double sigma);

struct LineFit {
    double slope = 0.0;      // per index
    double intercept = 0.0;  // value at index 0
};

/// Ordinary least squares of y against its index.
LineFit linfit(std::span<const double> y);

// Shared helpers used by several pipeline stages.
double vec_mean(std::span<const double> x);
double vec_population_variance(std::span<const double> x);

} // namespace respirfi
