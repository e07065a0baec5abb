#include "fusiongen/preprocess.hpp"

#include <cmath>

#include "fusiongen/fft.hpp"

namespace fusiongen {

Trial bandpass_filter(const Trial& trial, const PreprocessConfig& cfg) {
    const int T = trial.length();
    const double rate = trial.sample_rate_hz;
    if (T < 2) throw std::runtime_error("bandpass: trial too short");
    if (!(cfg.band_low_hz > 0.0 && cfg.band_low_hz < cfg.band_high_hz))
        throw std::runtime_error("bandpass: invalid band");
    if (cfg.band_high_hz >= rate / 2.0)
        throw std::runtime_error("bandpass: band outside Nyquist");

    Trial out = trial;
    const double df = rate / static_cast<double>(T);
    for (int c = 0; c < trial.channels(); ++c) {
        std::vector<double> row(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) row[static_cast<std::size_t>(t)] = trial.samples(c, t);
        auto bins = rfft(row.data(), T);
        for (std::size_t k = 0; k < bins.size(); ++k) {
            const double f = static_cast<double>(k) * df;
            if (f < cfg.band_low_hz || f > cfg.band_high_hz) bins[k] = 0.0;
        }
        auto filtered = irfft(bins, T);
        for (int t = 0; t < T; ++t) out.samples(c, t) = filtered[static_cast<std::size_t>(t)];
    }
    return out;
}

Trial resample(const Trial& trial, double target_rate_hz) {
    if (target_rate_hz <= 0.0) throw std::runtime_error("resample: target rate must be positive");
    const int T = trial.length();
    const double rate = trial.sample_rate_hz;
    if (target_rate_hz == rate) return trial;

    const int T_new = static_cast<int>(
        std::llround(static_cast<double>(T) * target_rate_hz / rate));
    if (T_new < 1) throw std::runtime_error("resample: output would be empty");

    Trial out = trial;
    out.samples.resize(trial.channels(), T_new);
    out.sample_rate_hz = target_rate_hz;
    const int nb_new = T_new / 2 + 1;
    const double gain = static_cast<double>(T_new) / static_cast<double>(T);
    for (int c = 0; c < trial.channels(); ++c) {
        std::vector<double> row(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) row[static_cast<std::size_t>(t)] = trial.samples(c, t);
        auto bins = rfft(row.data(), T);
        std::vector<std::complex<double>> shifted(static_cast<std::size_t>(nb_new), 0.0);
        const int keep = std::min<int>(static_cast<int>(bins.size()), nb_new);
        for (int k = 0; k < keep; ++k) shifted[static_cast<std::size_t>(k)] = bins[static_cast<std::size_t>(k)] * gain;
        // Real-transform boundary bins carry no phase.
        shifted[0] = shifted[0].real();
        if (T_new % 2 == 0) shifted.back() = shifted.back().real();
        auto resampled = irfft(shifted, T_new);
        for (int t = 0; t < T_new; ++t) out.samples(c, t) = resampled[static_cast<std::size_t>(t)];
    }
    return out;
}

Trial crop(const Trial& trial, double seconds) {
    const double exact = seconds * trial.sample_rate_hz;
    const int keep = static_cast<int>(std::floor(exact + 1e-9));
    if (keep < 1 || exact > static_cast<double>(trial.length()) + 1e-9)
        throw std::runtime_error("crop: requested window outside trial");
    Trial out = trial;
    out.samples = trial.samples.leftCols(keep).eval();
    return out;
}

Trial preprocess_trial(const Trial& trial, const PreprocessConfig& cfg) {
    Trial t = resample(trial, cfg.target_rate_hz);
    t = bandpass_filter(t, cfg);
    return crop(t, cfg.crop_seconds);
}

Dataset preprocess_dataset(const Dataset& ds, const PreprocessConfig& cfg) {
    Dataset out = ds;
    out.sample_rate_hz = cfg.target_rate_hz;
    for (auto& tr : out.trials) tr = preprocess_trial(tr, cfg);
    validate_dataset(out);
    return out;
}

}  // namespace fusiongen
