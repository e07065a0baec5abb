#include "fusiongen/augment.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "fusiongen/fft.hpp"
#include "json.hpp"

namespace fusiongen {

void ChannelPairMap::validate(int n_channels) const {
    std::vector<bool> used(static_cast<std::size_t>(n_channels), false);
    for (const auto& [l, r] : pairs) {
        if (l < 0 || r < 0 || l >= n_channels || r >= n_channels || l == r)
            throw std::runtime_error("pair map: channel index out of range or self-pair");
        if (used[static_cast<std::size_t>(l)] || used[static_cast<std::size_t>(r)])
            throw std::runtime_error("pair map: channel appears in more than one pair");
        used[static_cast<std::size_t>(l)] = used[static_cast<std::size_t>(r)] = true;
    }
    const int k = static_cast<int>(label_swap.size());
    for (int i = 0; i < k; ++i) {
        const int j = label_swap[static_cast<std::size_t>(i)];
        if (j < 0 || j >= k || label_swap[static_cast<std::size_t>(j)] != i)
            throw std::runtime_error("pair map: label_swap is not an involution");
    }
}

ChannelPairMap load_pair_map(const std::filesystem::path& path, const Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("pair map: cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    ChannelPairMap map;
    std::map<std::string, int> name_to_idx;
    for (std::size_t i = 0; i < ds.channel_names.size(); ++i)
        name_to_idx[ds.channel_names[i]] = static_cast<int>(i);
    for (const auto& pair : j.at("pairs")) {
        const auto a = pair.at(0).get<std::string>();
        const auto b = pair.at(1).get<std::string>();
        if (!name_to_idx.count(a) || !name_to_idx.count(b))
            throw std::runtime_error("pair map: unknown channel name '" + a + "'/'" + b + "'");
        map.pairs.emplace_back(name_to_idx[a], name_to_idx[b]);
    }
    map.label_swap.resize(ds.class_names.size());
    for (std::size_t i = 0; i < map.label_swap.size(); ++i)
        map.label_swap[i] = static_cast<int>(i);
    if (j.contains("label_swap")) {
        for (const auto& pair : j["label_swap"]) {
            const int a = pair.at(0).get<int>();
            const int b = pair.at(1).get<int>();
            if (a < 0 || b < 0 || a >= ds.n_classes() || b >= ds.n_classes())
                throw std::runtime_error("pair map: label_swap class out of range");
            map.label_swap[static_cast<std::size_t>(a)] = b;
            map.label_swap[static_cast<std::size_t>(b)] = a;
        }
    }
    map.validate(ds.n_channels());
    return map;
}

Trial aug_noise(const Trial& x, double sigma_rel, Rng& rng) {
    if (sigma_rel < 0.0) throw std::runtime_error("aug_noise: sigma_rel must be >= 0");
    if (sigma_rel == 0.0) return x;
    const double sigma = sigma_rel * matrix_std(x.samples);
    Trial out = x;
    for (int c = 0; c < x.channels(); ++c)
        for (int t = 0; t < x.length(); ++t) out.samples(c, t) += sigma * rng.normal();
    return out;
}

Trial aug_scale(const Trial& x, double factor_lo, double factor_hi, Rng& rng) {
    if (factor_lo > factor_hi) throw std::runtime_error("aug_scale: empty factor range");
    const double s = rng.uniform(factor_lo, factor_hi);
    Trial out = x;
    out.samples *= s;
    return out;
}

Trial aug_flip(const Trial& x, bool sign_flip) {
    Trial out = x;
    if (sign_flip) {
        out.samples = -x.samples;
    } else {
        out.samples = x.samples.rowwise().reverse().eval();
    }
    return out;
}

Trial aug_cut_resize(const Trial& x, double ratio_lo, double ratio_hi, Rng& rng) {
    if (!(ratio_lo > 0.0 && ratio_lo <= ratio_hi && ratio_hi <= 1.0))
        throw std::runtime_error("aug_cut_resize: ratio range must lie in (0,1]");
    const int T = x.length();
    const double rho = rng.uniform(ratio_lo, ratio_hi);
    const int len = std::max(2, static_cast<int>(std::llround(rho * T)));
    const int max_start = T - len;
    const int start = max_start > 0 ? static_cast<int>(rng.uniform_int(
                                          static_cast<std::uint64_t>(max_start + 1)))
                                    : 0;
    Trial out = x;
    for (int c = 0; c < x.channels(); ++c) {
        for (int t = 0; t < T; ++t) {
            // Map output grid [0, T-1] onto segment grid [0, len-1].
            const double pos = T > 1 ? static_cast<double>(t) * (len - 1) / (T - 1) : 0.0;
            const int lo = static_cast<int>(std::floor(pos));
            const int hi = std::min(lo + 1, len - 1);
            const double frac = pos - lo;
            out.samples(c, t) = (1.0 - frac) * x.samples(c, start + lo) +
                                frac * x.samples(c, start + hi);
        }
    }
    return out;
}

Trial aug_fshift(const Trial& x, double shift_lo_hz, double shift_hi_hz, Rng& rng) {
    if (shift_lo_hz > shift_hi_hz) throw std::runtime_error("aug_fshift: empty shift range");
    const int T = x.length();
    const double delta = rng.uniform(shift_lo_hz, shift_hi_hz);
    const int shift_bins = static_cast<int>(std::llround(delta * T / x.sample_rate_hz));
    if (shift_bins == 0) return x;

    Trial out = x;
    // Rotate bins 1..last-1; DC (and Nyquist for even T) stay put so the
    // conjugate-symmetric reconstruction remains real.
    const int nbins = T / 2 + 1;
    const int hi = (T % 2 == 0) ? nbins - 1 : nbins;
    const int block = hi - 1;
    if (block < 1) return x;
    for (int c = 0; c < x.channels(); ++c) {
        std::vector<double> row(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) row[static_cast<std::size_t>(t)] = x.samples(c, t);
        auto bins = rfft(row.data(), T);
        std::vector<std::complex<double>> rotated(bins);
        for (int k = 1; k < hi; ++k) {
            int src = k - shift_bins;
            src = 1 + ((src - 1) % block + block) % block;
            rotated[static_cast<std::size_t>(k)] = bins[static_cast<std::size_t>(src)];
        }
        auto shifted = irfft(rotated, T);
        for (int t = 0; t < T; ++t) out.samples(c, t) = shifted[static_cast<std::size_t>(t)];
    }
    return out;
}

Trial aug_channel_reflection(const Trial& x, const ChannelPairMap& map) {
    map.validate(x.channels());
    Trial out = x;
    for (const auto& [l, r] : map.pairs) out.samples.row(l).swap(out.samples.row(r));
    if (x.label >= 0 && x.label < static_cast<int>(map.label_swap.size()))
        out.label = map.label_swap[static_cast<std::size_t>(x.label)];
    return out;
}

void haar_analyze(const std::vector<double>& x, std::vector<double>& approx,
                  std::vector<double>& detail) {
    if (x.size() % 2 != 0 || x.empty())
        throw std::runtime_error("haar_analyze: length must be even and positive");
    const std::size_t half = x.size() / 2;
    approx.resize(half);
    detail.resize(half);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < half; ++i) {
        approx[i] = (x[2 * i] + x[2 * i + 1]) * inv_sqrt2;
        detail[i] = (x[2 * i] - x[2 * i + 1]) * inv_sqrt2;
    }
}

std::vector<double> haar_synthesize(const std::vector<double>& approx,
                                    const std::vector<double>& detail) {
    if (approx.size() != detail.size())
        throw std::runtime_error("haar_synthesize: coefficient size mismatch");
    std::vector<double> x(2 * approx.size());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < approx.size(); ++i) {
        x[2 * i] = (approx[i] + detail[i]) * inv_sqrt2;
        x[2 * i + 1] = (approx[i] - detail[i]) * inv_sqrt2;
    }
    return x;
}

Trial aug_dwt(const Trial& a, const Trial& b) {
    if (a.label != b.label) throw std::runtime_error("aug_dwt: label mismatch");
    if (a.channels() != b.channels() || a.length() != b.length())
        throw std::runtime_error("aug_dwt: shape mismatch");
    if (a.length() % 2 != 0) throw std::runtime_error("aug_dwt: length must be even");
    Trial out = a;
    std::vector<double> row_a(static_cast<std::size_t>(a.length()));
    std::vector<double> row_b(row_a.size());
    std::vector<double> approx_a, detail_a, approx_b, detail_b;
    for (int c = 0; c < a.channels(); ++c) {
        for (int t = 0; t < a.length(); ++t) {
            row_a[static_cast<std::size_t>(t)] = a.samples(c, t);
            row_b[static_cast<std::size_t>(t)] = b.samples(c, t);
        }
        haar_analyze(row_a, approx_a, detail_a);
        haar_analyze(row_b, approx_b, detail_b);
        const auto mixed = haar_synthesize(approx_a, detail_b);
        for (int t = 0; t < a.length(); ++t) out.samples(c, t) = mixed[static_cast<std::size_t>(t)];
    }
    return out;
}

Trial apply_baseline(const std::string& name, const std::vector<const Trial*>& pool,
                     const BaselineParams& params, const ChannelPairMap* pair_map, Rng& rng) {
    if (pool.empty()) throw std::runtime_error("apply_baseline: empty trial pool");
    const Trial& base = *pool[rng.uniform_int(pool.size())];
    if (name == "noise") return aug_noise(base, params.noise_sigma_rel, rng);
    if (name == "scale") return aug_scale(base, params.scale_lo, params.scale_hi, rng);
    if (name == "flip") return aug_flip(base, params.flip_sign);
    if (name == "cutresize") return aug_cut_resize(base, params.cut_lo, params.cut_hi, rng);
    if (name == "fshift") return aug_fshift(base, params.fshift_lo_hz, params.fshift_hi_hz, rng);
    if (name == "cr") {
        if (!pair_map) throw std::runtime_error("apply_baseline: 'cr' needs a channel pair map");
        return aug_channel_reflection(base, *pair_map);
    }
    if (name == "dwt") {
        // Partner with another same-class trial when one exists.
        std::vector<const Trial*> same;
        for (const Trial* t : pool)
            if (t->label == base.label && t != &base) same.push_back(t);
        const Trial& partner = same.empty() ? base : *same[rng.uniform_int(same.size())];
        return aug_dwt(base, partner);
    }
    throw std::runtime_error("apply_baseline: unknown augmentation '" + name + "'");
}

}  // namespace fusiongen
