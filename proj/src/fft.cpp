#include "fusiongen/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace fusiongen {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

std::vector<std::complex<double>> rfft(const double* x, int n) {
    if (n < 1) throw std::runtime_error("rfft: empty input");
    const int nbins = n / 2 + 1;
    std::vector<double> in(x, x + n);
    std::vector<std::complex<double>> out(static_cast<std::size_t>(nbins));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& bins, int n) {
    if (n < 1) throw std::runtime_error("irfft: empty output size");
    if (static_cast<int>(bins.size()) != n / 2 + 1)
        throw std::runtime_error("irfft: bin count does not match output length");
    std::vector<std::complex<double>> in(bins);  // c2r destroys its input
    std::vector<double> out(static_cast<std::size_t>(n));
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace fusiongen
