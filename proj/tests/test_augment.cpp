#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fusiongen/analysis.hpp"
#include "fusiongen/augment.hpp"
#include "test_util.hpp"

using namespace fusiongen;

namespace {

Trial sinusoid(double freq_hz, double rate, int length) {
    Trial t;
    t.samples.resize(1, length);
    for (int i = 0; i < length; ++i)
        t.samples(0, i) = std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
    t.sample_rate_hz = rate;
    t.subject_id = "s00";
    t.session_id = "0";
    return t;
}

double peak_freq(const Trial& t, int channel = 0) {
    const PsdResult psd = welch_psd(t.samples.row(channel).transpose(), t.sample_rate_hz);
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < psd.power.size(); ++k)
        if (psd.power[k] > psd.power[argmax]) argmax = k;
    return psd.freqs[argmax];
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("noise: zero sigma is identity; scale matches the request") {
    Rng data_rng(1);
    const Trial x = testutil::random_trial(4, 5000, data_rng);
    Rng rng(2);
    const Trial same = aug_noise(x, 0.0, rng);
    CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(same.label == x.label);

    Rng rng2(3);
    const Trial noisy = aug_noise(x, 0.1, rng2);
    const double sigma = 0.1 * matrix_std(x.samples);
    const double empirical = matrix_std(noisy.samples - x.samples);
    CHECK(std::abs(empirical - sigma) < 0.1 * sigma);
    CHECK(noisy.label == x.label);
}

TEST_CASE("scale: degenerate ranges and exact variance scaling") {
    Rng data_rng(4);
    const Trial x = testutil::random_trial(2, 300, data_rng);
    Rng rng(5);
    const Trial same = aug_scale(x, 1.0, 1.0, rng);
    CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);

    Rng rng2(6);
    const Trial doubled = aug_scale(x, 2.0, 2.0, rng2);
    CHECK((doubled.samples - 2.0 * x.samples).cwiseAbs().maxCoeff() == 0.0);

    Rng rng3(7);
    const Trial scaled = aug_scale(x, 0.5, 1.5, rng3);
    const double s = scaled.samples(0, 0) / x.samples(0, 0);
    CHECK(std::abs(matrix_std(scaled.samples) - std::abs(s) * matrix_std(x.samples)) < 1e-12);
}

TEST_CASE("flip is an involution that preserves the spectrum") {
    Rng data_rng(8);
    const Trial x = testutil::random_trial(3, 500, data_rng);
    const Trial flipped = aug_flip(x);
    const Trial back = aug_flip(flipped);
    CHECK((back.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);

    Trial constant = x;
    constant.samples.setConstant(2.0);
    CHECK((aug_flip(constant).samples.array() - 2.0).abs().maxCoeff() == 0.0);

    const PsdResult orig = welch_psd(x.samples.row(0).transpose(), x.sample_rate_hz);
    const PsdResult flip = welch_psd(flipped.samples.row(0).transpose(), x.sample_rate_hz);
    for (std::size_t k = 0; k < orig.power.size(); ++k)
        CHECK(std::abs(orig.power[k] - flip.power[k]) < 1e-9 * (1.0 + orig.power[k]));

    const Trial sign = aug_flip(x, true);
    CHECK((sign.samples + x.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cut&resize: full ratio is identity, output length fixed") {
    Rng data_rng(9);
    const Trial x = testutil::random_trial(2, 400, data_rng);
    Rng rng(10);
    const Trial same = aug_cut_resize(x, 1.0, 1.0, rng);
    CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);

    Rng rng2(11);
    const Trial cut = aug_cut_resize(x, 0.7, 0.95, rng2);
    CHECK(cut.length() == 400);
    CHECK(cut.sample_rate_hz == x.sample_rate_hz);
}

TEST_CASE("cut&resize halves the period of a sinusoid at ratio 0.5") {
    const Trial x = sinusoid(10.0, 250.0, 1000);
    Rng rng(12);
    const Trial cut = aug_cut_resize(x, 0.5, 0.5, rng);
    CHECK(std::abs(peak_freq(cut) - 20.0) <= 1.0);
}

TEST_CASE("fshift: zero shift is identity, +2 Hz moves a 10 Hz peak to 12 Hz") {
    const Trial x = sinusoid(10.0, 250.0, 1000);
    Rng rng(13);
    const Trial same = aug_fshift(x, 0.0, 0.0, rng);
    CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() < 1e-9);

    Rng rng2(14);
    const Trial shifted = aug_fshift(x, 2.0, 2.0, rng2);
    CHECK(peak_freq(shifted) == doctest::Approx(12.0).epsilon(0.01));
    CHECK(shifted.samples.allFinite());

    Rng rng3(15);
    const Trial down = aug_fshift(x, -2.0, -2.0, rng3);
    CHECK(peak_freq(down) == doctest::Approx(8.0).epsilon(0.01));
}

TEST_CASE("channel reflection swaps rows and maps labels") {
    Rng data_rng(16);
    Trial x = testutil::random_trial(4, 100, data_rng);
    x.label = 0;
    x.samples.row(1).setZero();
    ChannelPairMap map;
    map.pairs = {{0, 1}};
    map.label_swap = {1, 0};

    const Trial reflected = aug_channel_reflection(x, map);
    CHECK(reflected.label == 1);
    CHECK(reflected.samples.row(1).cwiseAbs().maxCoeff() > 0.0);
    CHECK(reflected.samples.row(0).cwiseAbs().maxCoeff() == 0.0);

    const Trial back = aug_channel_reflection(reflected, map);
    CHECK(back.label == 0);
    CHECK((back.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);

    ChannelPairMap empty;
    empty.label_swap = {0, 1};
    const Trial same = aug_channel_reflection(x, empty);
    CHECK((same.samples - x.samples).cwiseAbs().maxCoeff() == 0.0);
    CHECK(same.label == x.label);
}

TEST_CASE("pair map files resolve channel names and validate") {
    Rng data_rng(17);
    Dataset ds = testutil::random_dataset(2, 4, 50, data_rng);
    ds.channel_names = {"C3", "Cz", "C4", "Pz"};
    testutil::TempDir dir;
    {
        std::ofstream f(dir.path / "pairs.json");
        f << R"({"pairs": [["C3","C4"]], "label_swap": [[0,1]]})";
    }
    const ChannelPairMap map = load_pair_map(dir.path / "pairs.json", ds);
    REQUIRE(map.pairs.size() == 1);
    CHECK(map.pairs[0].first == 0);
    CHECK(map.pairs[0].second == 2);
    CHECK(map.label_swap == std::vector<int>{1, 0});

    {
        std::ofstream f(dir.path / "bad.json");
        f << R"({"pairs": [["C3","Nope"]]})";
    }
    CHECK_THROWS_AS(load_pair_map(dir.path / "bad.json", ds), std::runtime_error);
}

TEST_CASE("haar: hand values and perfect reconstruction") {
    std::vector<double> approx, detail;
    haar_analyze({1.0, 1.0, 1.0, 1.0}, approx, detail);
    CHECK(approx[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(approx[1] == doctest::Approx(std::sqrt(2.0)));
    CHECK(detail[0] == doctest::Approx(0.0));
    CHECK(detail[1] == doctest::Approx(0.0));

    Rng rng(18);
    for (int iter = 0; iter < 5; ++iter) {
        std::vector<double> x(64);
        for (double& v : x) v = rng.normal();
        haar_analyze(x, approx, detail);
        const auto back = haar_synthesize(approx, detail);
        for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-9);
    }
}

TEST_CASE("dwt recombination takes approximation from a, detail from b") {
    Rng data_rng(19);
    Trial a = testutil::random_trial(2, 64, data_rng);
    Trial b = testutil::random_trial(2, 64, data_rng);
    b.label = a.label;

    const Trial self = aug_dwt(a, a);
    CHECK((self.samples - a.samples).cwiseAbs().maxCoeff() < 1e-9);

    const Trial mixed = aug_dwt(a, b);
    CHECK(mixed.label == a.label);
    // Brute-force oracle: per channel expected = synth(approx_a, detail_b).
    for (int c = 0; c < 2; ++c) {
        std::vector<double> ra(64), rb(64);
        for (int t = 0; t < 64; ++t) {
            ra[static_cast<std::size_t>(t)] = a.samples(c, t);
            rb[static_cast<std::size_t>(t)] = b.samples(c, t);
        }
        std::vector<double> aa, da, ab, db;
        haar_analyze(ra, aa, da);
        haar_analyze(rb, ab, db);
        const auto expected = haar_synthesize(aa, db);
        for (int t = 0; t < 64; ++t)
            CHECK(std::abs(mixed.samples(c, t) - expected[static_cast<std::size_t>(t)]) < 1e-12);
    }

    Trial odd = a;
    odd.samples = a.samples.leftCols(63).eval();
    Trial odd_b = b;
    odd_b.samples = b.samples.leftCols(63).eval();
    CHECK_THROWS_AS(aug_dwt(odd, odd_b), std::runtime_error);
    Trial other = b;
    other.label = a.label + 1;
    CHECK_THROWS_AS(aug_dwt(a, other), std::runtime_error);
}

TEST_CASE("all augmentations preserve shape, rate and determinism") {
    Rng data_rng(20);
    Dataset ds = testutil::random_dataset(6, 4, 200, data_rng);
    ds.channel_names = {"C3", "Cz", "C4", "Pz"};
    std::vector<const Trial*> pool;
    for (const Trial& t : ds.trials) pool.push_back(&t);
    ChannelPairMap map;
    map.pairs = {{0, 2}};
    map.label_swap = {1, 0};
    const BaselineParams params;
    for (const std::string name : {"noise", "scale", "flip", "cutresize", "fshift", "cr", "dwt"}) {
        Rng rng_a(31);
        Rng rng_b(31);
        const Trial a = apply_baseline(name, pool, params, &map, rng_a);
        const Trial b = apply_baseline(name, pool, params, &map, rng_b);
        CHECK(a.channels() == 4);
        CHECK(a.length() == 200);
        CHECK(a.sample_rate_hz == ds.sample_rate_hz);
        CHECK(a.samples.allFinite());
        CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.label == b.label);
    }
    Rng rng(32);
    CHECK_THROWS_AS(apply_baseline("bogus", pool, params, &map, rng), std::runtime_error);
}

}  // TEST_SUITE
