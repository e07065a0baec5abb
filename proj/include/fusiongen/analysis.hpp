#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "fusiongen/trial.hpp"

namespace fusiongen {

struct PsdResult {
    std::vector<double> freqs;  // Hz
    std::vector<double> power;  // density, units^2/Hz
};

/// Welch power spectral density: mean of Hann-windowed periodograms over
/// 1-second segments with 50% overlap (segment length capped at the signal
/// length). One-sided density normalization, so sum(power)*df approximates
/// the signal variance.
PsdResult welch_psd(const double* x, int n, double sample_rate_hz);
PsdResult welch_psd(const Vec& row, double sample_rate_hz);

/// Integrated power in [lo_hz, hi_hz] (inclusive bin centers).
double band_power(const PsdResult& psd, double lo_hz, double hi_hz);

/// Mean PSD across all channels of all trials.
PsdResult mean_psd(const std::vector<const Trial*>& trials, double sample_rate_hz);

/// Principal-component projection of per-trial vectorized covariances onto
/// the top two axes. Point order follows trial order.
std::vector<std::array<double, 2>> project_2d(const std::vector<const Trial*>& trials);
std::vector<std::array<double, 2>> project_2d(const Dataset& ds);

// Minimal standalone SVG writers used for the spectrum and projection plots.
struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};
void write_svg_lines(const std::filesystem::path& path, const std::string& title,
                     const std::vector<SvgSeries>& series, const std::string& x_label,
                     const std::string& y_label);
void write_svg_scatter(const std::filesystem::path& path, const std::string& title,
                       const std::vector<std::array<double, 2>>& points,
                       const std::vector<int>& groups);

}  // namespace fusiongen
