#pragma once

#include <filesystem>

#include "fusiongen/rng.hpp"
#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Mirrored channel pairs plus the class-index involution applied when
/// channels are reflected (e.g. left hand <-> right hand).
struct ChannelPairMap {
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> label_swap;  // size K, an involution

    void validate(int n_channels) const;
};

/// Reads {"pairs": [["C3","C4"], ...], "label_swap": [[0,1], ...]} and
/// resolves channel names against the dataset.
ChannelPairMap load_pair_map(const std::filesystem::path& path, const Dataset& ds);

/// x + sigma*G, sigma = sigma_rel * std(x).
Trial aug_noise(const Trial& x, double sigma_rel, Rng& rng);

/// s*x with s drawn uniformly from [factor_lo, factor_hi].
Trial aug_scale(const Trial& x, double factor_lo, double factor_hi, Rng& rng);

/// Time reversal per channel. With sign_flip, negates amplitudes instead.
Trial aug_flip(const Trial& x, bool sign_flip = false);

/// Cuts a random contiguous segment of relative length in [ratio_lo, ratio_hi]
/// and linearly interpolates it back to the full length.
Trial aug_cut_resize(const Trial& x, double ratio_lo, double ratio_hi, Rng& rng);

/// Circularly shifts the positive-frequency spectrum by a uniform draw from
/// [shift_lo_hz, shift_hi_hz]; output stays real by construction.
Trial aug_fshift(const Trial& x, double shift_lo_hz, double shift_hi_hz, Rng& rng);

/// Swaps paired channel rows and maps the label through the involution.
Trial aug_channel_reflection(const Trial& x, const ChannelPairMap& map);

/// Single-level orthonormal Haar recombination: approximation coefficients
/// from `a`, detail coefficients from `b`. Labels must match; T must be even.
Trial aug_dwt(const Trial& a, const Trial& b);

// Haar helpers (exposed for direct verification).
void haar_analyze(const std::vector<double>& x, std::vector<double>& approx,
                  std::vector<double>& detail);
std::vector<double> haar_synthesize(const std::vector<double>& approx,
                                    const std::vector<double>& detail);

/// Default parameter set used by the benchmark harness.
struct BaselineParams {
    double noise_sigma_rel = 0.05;
    double scale_lo = 0.8, scale_hi = 1.2;
    double cut_lo = 0.7, cut_hi = 0.95;
    double fshift_lo_hz = -2.0, fshift_hi_hz = 2.0;
    bool flip_sign = false;
};

/// Applies one named baseline ("noise", "scale", "flip", "cutresize",
/// "fshift", "cr", "dwt") to a trial drawn from `pool`.
Trial apply_baseline(const std::string& name, const std::vector<const Trial*>& pool,
                     const BaselineParams& params, const ChannelPairMap* pair_map, Rng& rng);

}  // namespace fusiongen
