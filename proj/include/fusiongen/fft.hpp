#pragma once

#include <complex>
#include <vector>

namespace fusiongen {

// Thin wrappers over FFTW's real transforms. Plan creation is serialized
// internally, so these are safe to call from parallel benchmark folds.

/// Forward real FFT: n samples -> n/2+1 complex bins (unnormalized).
std::vector<std::complex<double>> rfft(const double* x, int n);

/// Inverse of rfft, normalized by 1/n. `bins` must hold n/2+1 entries.
std::vector<double> irfft(const std::vector<std::complex<double>>& bins, int n);

}  // namespace fusiongen
