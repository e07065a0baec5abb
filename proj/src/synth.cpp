#include "fusiongen/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "fusiongen/fft.hpp"
#include "fusiongen/rng.hpp"

namespace fusiongen {

namespace {

void validate(const SynthConfig& cfg, const std::vector<double>& freqs) {
    if (cfg.n_subjects < 1 || cfg.n_classes < 1 || cfg.trials_per_class < 1 ||
        cfg.channels < 1 || cfg.samples < 2 || cfg.sample_rate_hz <= 0.0)
        throw std::runtime_error("synth: invalid dimensions");
    if (cfg.mixing_strength < 0.0 || cfg.mixing_strength > 1.0)
        throw std::runtime_error("synth: mixing_strength must be in [0,1]");
    if (cfg.noise_floor < 0.0) throw std::runtime_error("synth: noise_floor must be >= 0");
    if (static_cast<int>(freqs.size()) != cfg.n_classes)
        throw std::runtime_error("synth: need one carrier frequency per class");
    std::set<double> uniq(freqs.begin(), freqs.end());
    if (static_cast<int>(uniq.size()) != cfg.n_classes)
        throw std::runtime_error("synth: carrier frequencies must be distinct");
    for (double f : freqs)
        if (f <= 0.0 || f >= cfg.sample_rate_hz / 2.0)
            throw std::runtime_error("synth: carrier frequency outside (0, Nyquist)");
}

Mat mixing_matrix(int C, double strength, Rng& rng) {
    if (strength == 0.0) return Mat::Identity(C, C);
    Mat g(C, C);
    for (int i = 0; i < C; ++i)
        for (int j = 0; j < C; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    const Vec rdiag = qr.matrixQR().diagonal();
    for (int j = 0; j < C; ++j)
        if (rdiag(j) < 0.0) q.col(j) = -q.col(j);
    return (1.0 - strength) * Mat::Identity(C, C) + strength * q;
}

/// 1/f-shaped noise with population std scaled to `floor_std`.
std::vector<double> pink_noise(int T, double rate, double floor_std, Rng& rng) {
    const int nbins = T / 2 + 1;
    std::vector<std::complex<double>> bins(static_cast<std::size_t>(nbins), 0.0);
    const double df = rate / static_cast<double>(T);
    for (int k = 1; k < nbins; ++k) {
        const double amp = 1.0 / std::sqrt(static_cast<double>(k) * df);
        bins[static_cast<std::size_t>(k)] = {rng.normal() * amp, rng.normal() * amp};
    }
    if (T % 2 == 0) bins.back() = bins.back().real();
    auto x = irfft(bins, T);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(T);
    const double scale = var > 0.0 ? floor_std / std::sqrt(var) : 0.0;
    for (double& v : x) v = (v - mean) * scale;
    return x;
}

}  // namespace

Dataset synthesize_dataset(const SynthConfig& cfg) {
    std::vector<double> freqs = cfg.class_freqs_hz;
    if (freqs.empty()) {
        // Spread carriers evenly across 10..30 Hz.
        for (int c = 0; c < cfg.n_classes; ++c)
            freqs.push_back(cfg.n_classes == 1
                                ? 12.0
                                : 10.0 + 20.0 * static_cast<double>(c) /
                                             static_cast<double>(cfg.n_classes - 1));
    }
    validate(cfg, freqs);

    const int C = cfg.channels;
    const int T = cfg.samples;
    Dataset ds;
    ds.sample_rate_hz = cfg.sample_rate_hz;
    for (int c = 0; c < C; ++c) ds.channel_names.push_back("ch" + std::to_string(c));
    for (int k = 0; k < cfg.n_classes; ++k) ds.class_names.push_back("class" + std::to_string(k));

    const int per_subject = cfg.n_classes * cfg.trials_per_class;
    for (int s = 0; s < cfg.n_subjects; ++s) {
        Rng mix_rng(derive_seed(cfg.seed, 0x5u, static_cast<std::uint64_t>(s)));
        const Mat mix = mixing_matrix(C, cfg.mixing_strength, mix_rng);
        char sid[16];
        std::snprintf(sid, sizeof(sid), "s%02d", s);
        for (int i = 0; i < per_subject; ++i) {
            const int label = i % cfg.n_classes;
            Rng rng(derive_seed(cfg.seed, 0x7u,
                                static_cast<std::uint64_t>(s) * 1000003u +
                                    static_cast<std::uint64_t>(i)));
            Mat src = Mat::Zero(C, T);
            const int carrier = label % C;
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double w = 2.0 * std::numbers::pi * freqs[static_cast<std::size_t>(label)];
            for (int t = 0; t < T; ++t)
                src(carrier, t) = std::sin(w * static_cast<double>(t) / cfg.sample_rate_hz + phase);
            if (cfg.noise_floor > 0.0) {
                for (int c = 0; c < C; ++c) {
                    const auto noise = pink_noise(T, cfg.sample_rate_hz, cfg.noise_floor, rng);
                    for (int t = 0; t < T; ++t) src(c, t) += noise[static_cast<std::size_t>(t)];
                }
            }
            Trial tr;
            tr.samples = mix * src;
            tr.label = label;
            tr.subject_id = sid;
            tr.session_id = "0";
            tr.sample_rate_hz = cfg.sample_rate_hz;
            ds.trials.push_back(std::move(tr));
        }
    }
    validate_dataset(ds);
    return ds;
}

}  // namespace fusiongen
