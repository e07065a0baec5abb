#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fusiongen/bench.hpp"
#include "fusiongen/csp_lda.hpp"
#include "fusiongen/synth.hpp"
#include "test_util.hpp"

using namespace fusiongen;

namespace {

/// Two-class dataset where class 0 carries variance only on channel 0 and
/// class 1 only on channel 1.
Dataset axis_separated_dataset(int n_per_class, Rng& rng) {
    Dataset ds;
    ds.sample_rate_hz = 250.0;
    ds.channel_names = {"ch0", "ch1"};
    ds.class_names = {"class0", "class1"};
    for (int i = 0; i < 2 * n_per_class; ++i) {
        Trial t;
        t.label = i % 2;
        t.subject_id = "s00";
        t.session_id = "0";
        t.sample_rate_hz = 250.0;
        t.samples = Mat::Zero(2, 60);
        for (int k = 0; k < 60; ++k) t.samples(t.label, k) = rng.normal();
        ds.trials.push_back(std::move(t));
    }
    return ds;
}

double projected_variance(const Vec& w, const Dataset& ds, int label) {
    double acc = 0.0;
    int n = 0;
    for (const Trial& t : ds.trials) {
        if (t.label != label) continue;
        const Vec z = (w.transpose() * t.samples).transpose();
        acc += z.squaredNorm() / static_cast<double>(z.size());
        ++n;
    }
    return acc / n;
}

Mat class_mean_cov(const Dataset& ds, int label) {
    const int C = ds.trials.front().channels();
    Mat acc = Mat::Zero(C, C);
    int n = 0;
    for (const Trial& t : ds.trials) {
        if (t.label != label) continue;
        const Mat cov = t.samples * t.samples.transpose();
        acc += cov / cov.trace();
        ++n;
    }
    return acc / n;
}

}  // namespace

TEST_SUITE("decoder-pipeline") {

TEST_CASE("top filter separates axis-aligned class variances") {
    Rng rng(1);
    const Dataset ds = axis_separated_dataset(20, rng);
    const CSPModel model = csp_fit(ds, 2);
    const Vec top = model.filters.row(0).transpose();
    const double ratio = projected_variance(top, ds, 0) / projected_variance(top, ds, 1);
    const double best = std::max(ratio, 1.0 / ratio);
    CHECK(best > 10.0);
}

TEST_CASE("identical class covariances give eigenvalues of one half") {
    Rng rng(2);
    Dataset ds;
    ds.sample_rate_hz = 250.0;
    ds.channel_names = {"a", "b", "c"};
    ds.class_names = {"x", "y"};
    const Trial base = testutil::random_trial(3, 50, rng);
    for (int i = 0; i < 8; ++i) {
        Trial t = base;
        t.label = i % 2;
        ds.trials.push_back(std::move(t));
    }
    const CSPModel model = csp_fit(ds, 3);
    for (double ev : model.eigenvalues) CHECK(std::abs(ev - 0.5) < 1e-9);
}

TEST_CASE("binary filters whiten the composite covariance") {
    SynthConfig cfg;
    cfg.n_subjects = 1;
    cfg.trials_per_class = 20;
    cfg.channels = 6;
    cfg.samples = 200;
    cfg.mixing_strength = 0.3;
    cfg.noise_floor = 0.4;
    cfg.seed = 3;
    const Dataset ds = synthesize_dataset(cfg);
    const CSPModel model = csp_fit(ds, 6);
    const Mat composite = class_mean_cov(ds, 0) + class_mean_cov(ds, 1);
    const Mat should_be_identity = model.filters * composite * model.filters.transpose();
    CHECK((should_be_identity - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("csp_fit input validation") {
    Rng rng(4);
    Dataset single = testutil::random_dataset(6, 3, 40, rng, 1);
    CHECK_THROWS_AS(csp_fit(single, 2), std::runtime_error);
    Dataset two = testutil::random_dataset(6, 3, 40, rng, 2);
    CHECK_THROWS_AS(csp_fit(two, 4), std::runtime_error);  // exceeds channels (binary)
}

TEST_CASE("log-variance features are scale invariant and flag zero variance") {
    Rng rng(5);
    const Dataset ds = axis_separated_dataset(10, rng);
    const CSPModel model = csp_fit(ds, 2);
    Trial t = ds.trials[0];
    t.samples = t.samples.array() + 0.01;  // keep both projections non-degenerate
    const Vec f1 = csp_features(model, t);
    Trial scaled = t;
    scaled.samples *= 7.5;
    const Vec f2 = csp_features(model, scaled);
    CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-9);
    for (int i = 0; i < f1.size(); ++i) CHECK(std::isfinite(f1(i)));

    Trial degenerate = t;
    degenerate.samples.setZero();
    CHECK_THROWS_AS(csp_features(model, degenerate), std::runtime_error);
}

TEST_CASE("lda separates one-feature classes at the midpoint") {
    std::vector<Vec> feats;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
        const double jitter = 0.3 * std::sin(i * 0.7);
        feats.push_back(Vec::Constant(1, -1.0 + jitter));
        labels.push_back(0);
        feats.push_back(Vec::Constant(1, 1.0 + jitter));
        labels.push_back(1);
    }
    const LDAModel model = lda_fit(feats, labels);
    CHECK(lda_predict(model, Vec::Constant(1, 0.5)) == 1);
    CHECK(lda_predict(model, Vec::Constant(1, -0.5)) == 0);
    const Vec boundary = lda_scores(model, Vec::Constant(1, 0.0));
    CHECK(std::abs(boundary(0) - boundary(1)) < 1e-9);
    CHECK(lda_predict(model, model.means.row(0).transpose()) == 0);
    CHECK(lda_predict(model, model.means.row(1).transpose()) == 1);
}

TEST_CASE("lda predictions survive a common affine feature map") {
    Rng rng(6);
    std::vector<Vec> feats;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
        Vec f(3);
        const int label = i % 2;
        for (int j = 0; j < 3; ++j) f(j) = rng.normal() + (label ? 1.0 : -1.0) * (j + 1) * 0.4;
        feats.push_back(f);
        labels.push_back(label);
    }
    Mat a(3, 3);
    a << 2.0, 0.3, -0.1, 0.0, 1.5, 0.2, 0.4, -0.2, 0.8;
    const Vec b = Vec::Constant(3, 0.7);
    std::vector<Vec> mapped;
    for (const Vec& f : feats) mapped.push_back(a * f + b);

    const LDAModel m1 = lda_fit(feats, labels);
    const LDAModel m2 = lda_fit(mapped, labels);
    for (std::size_t i = 0; i < feats.size(); ++i)
        CHECK(lda_predict(m1, feats[i]) == lda_predict(m2, mapped[i]));
}

TEST_CASE("pipeline reaches 0.95 on separable data when test equals train") {
    SynthConfig cfg;
    cfg.n_subjects = 1;
    cfg.trials_per_class = 20;
    cfg.samples = 250;
    cfg.mixing_strength = 0.3;
    cfg.noise_floor = 0.3;
    cfg.seed = 7;
    const Dataset ds = synthesize_dataset(cfg);
    const double acc = evaluate_accuracy(ds, ds, 4);
    CHECK(acc >= 0.95);
    CHECK(acc <= 1.0);
}

TEST_CASE("single-class training pool is an error") {
    Rng rng(8);
    Dataset train = testutil::random_dataset(6, 3, 40, rng, 1);
    Dataset test = testutil::random_dataset(2, 3, 40, rng, 1);
    CHECK_THROWS_AS(evaluate_accuracy(train, test, 2), std::runtime_error);
}

TEST_CASE("uniform rescaling of all trials keeps variance ratios") {
    SynthConfig cfg;
    cfg.n_subjects = 1;
    cfg.trials_per_class = 15;
    cfg.samples = 200;
    cfg.noise_floor = 0.4;
    cfg.seed = 9;
    const Dataset ds = synthesize_dataset(cfg);
    Dataset scaled = ds;
    for (Trial& t : scaled.trials) t.samples *= 3.7;

    const CSPModel m1 = csp_fit(ds, 4);
    const CSPModel m2 = csp_fit(scaled, 4);
    auto ratios = [&](const CSPModel& model, const Dataset& data) {
        std::vector<double> out;
        for (int i = 0; i < model.filters.rows(); ++i) {
            const Vec w = model.filters.row(i).transpose();
            out.push_back(projected_variance(w, data, 0) / projected_variance(w, data, 1));
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto r1 = ratios(m1, ds);
    const auto r2 = ratios(m2, scaled);
    for (std::size_t i = 0; i < r1.size(); ++i)
        CHECK(std::abs(r1[i] - r2[i]) < 1e-6 * (1.0 + std::abs(r1[i])));
}

TEST_CASE("multiclass one-vs-rest interleaves per-class extremes") {
    SynthConfig cfg;
    cfg.n_subjects = 1;
    cfg.n_classes = 3;
    cfg.trials_per_class = 12;
    cfg.channels = 5;
    cfg.samples = 200;
    cfg.class_freqs_hz = {10.0, 18.0, 28.0};
    cfg.noise_floor = 0.4;
    cfg.seed = 10;
    const Dataset ds = synthesize_dataset(cfg);
    const CSPModel model = csp_fit(ds, 9);
    CHECK(model.filters.rows() == 9);
    // Round-robin: first three filters come from the three sub-problems.
    CHECK(model.source_class[0] == 0);
    CHECK(model.source_class[1] == 1);
    CHECK(model.source_class[2] == 2);

    const auto [train, test] = split_temporal(ds, 8);
    const double acc = evaluate_accuracy(train, test, 9);
    CHECK(acc > 1.0 / 3.0);
}

}  // TEST_SUITE
