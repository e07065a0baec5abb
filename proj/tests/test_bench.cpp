#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fusiongen/bench.hpp"
#include "fusiongen/report.hpp"
#include "fusiongen/synth.hpp"
#include "test_util.hpp"

using namespace fusiongen;

namespace {

SynthConfig small_synth(int subjects = 2) {
    SynthConfig cfg;
    cfg.n_subjects = subjects;
    cfg.n_classes = 2;
    cfg.trials_per_class = 10;
    cfg.channels = 3;
    cfg.samples = 150;
    cfg.class_freqs_hz = {11.0, 23.0};
    cfg.mixing_strength = 0.3;
    cfg.noise_floor = 0.4;
    cfg.seed = 101;
    return cfg;
}

ExperimentConfig fast_experiment() {
    ExperimentConfig cfg;
    cfg.n_train_per_class = 4;
    cfg.repeats = 2;
    cfg.n_generated_per_class = 4;
    cfg.train.epochs = 6;
    cfg.arch.depths = {2, 4, 4};
    cfg.master_seed = 55;
    cfg.dataset_name = "synthetic";
    return cfg;
}

}  // namespace

TEST_SUITE("bench-harness") {

TEST_CASE("temporal split keeps the first n per class, in order") {
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) labels.push_back(i % 2);  // 20 per class interleaved
    const auto [train, test] = split_temporal_indices(labels, 7);
    CHECK(train.size() == 14);
    CHECK(test.size() == 26);
    for (int label = 0; label < 2; ++label) {
        int last_train = -1, first_test = labels.size();
        int n_train = 0, n_test = 0;
        for (int i : train)
            if (labels[static_cast<std::size_t>(i)] == label) {
                last_train = std::max(last_train, i);
                ++n_train;
            }
        for (int i : test)
            if (labels[static_cast<std::size_t>(i)] == label) {
                first_test = std::min(first_test, i);
                ++n_test;
            }
        CHECK(n_train == 7);
        CHECK(n_test == 13);
        CHECK(last_train < first_test);
    }

    const auto [all_train, empty_test] = split_temporal_indices(labels, 20);
    CHECK(all_train.size() == 40);
    CHECK(empty_test.empty());
    CHECK_THROWS_AS(split_temporal_indices(labels, 0), std::runtime_error);
}

TEST_CASE("welch psd locates a pure tone and vanishes on silence") {
    Vec sine(1000);
    for (int i = 0; i < 1000; ++i)
        sine(i) = std::sin(2.0 * std::numbers::pi * 10.0 * i / 250.0);
    const PsdResult psd = welch_psd(sine, 250.0);
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < psd.power.size(); ++k)
        if (psd.power[k] > psd.power[argmax]) argmax = k;
    CHECK(psd.freqs[argmax] == doctest::Approx(10.0));

    const PsdResult zero = welch_psd(Vec::Zero(500), 250.0);
    for (double p : zero.power) CHECK(p == 0.0);
}

TEST_CASE("welch psd integrates to the variance of white noise") {
    Rng rng(1);
    Vec noise(250 * 40);
    for (int i = 0; i < noise.size(); ++i) noise(i) = rng.normal();
    const PsdResult psd = welch_psd(noise, 250.0);
    const double df = psd.freqs[1] - psd.freqs[0];
    double integral = 0.0;
    for (double p : psd.power) integral += p * df;
    const double variance = (noise.array() - noise.mean()).square().mean();
    CHECK(std::abs(integral - variance) < 0.05 * variance);
}

TEST_CASE("project_2d properties") {
    const Dataset ds = synthesize_dataset(small_synth());
    const auto points = project_2d(ds);
    CHECK(points.size() == ds.trials.size());

    // Duplicated trial set projects to duplicated points.
    std::vector<const Trial*> doubled;
    for (const Trial& t : ds.trials) doubled.push_back(&t);
    for (const Trial& t : ds.trials) doubled.push_back(&t);
    const auto twice = project_2d(doubled);
    REQUIRE(twice.size() == 2 * points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        CHECK(twice[i][0] == doctest::Approx(twice[i + points.size()][0]));
        CHECK(twice[i][1] == doctest::Approx(twice[i + points.size()][1]));
    }

    // Projection cannot create variance.
    const int C = ds.trials.front().channels();
    double input_var = 0.0;
    Mat mean_cov = Mat::Zero(C, C);
    std::vector<Mat> covs;
    for (const Trial& t : ds.trials) {
        covs.push_back(t.samples * t.samples.transpose() / static_cast<double>(t.length()));
        mean_cov += covs.back();
    }
    mean_cov /= static_cast<double>(covs.size());
    for (const Mat& cov : covs) input_var += (cov - mean_cov).squaredNorm();
    input_var /= static_cast<double>(covs.size() - 1);
    double out_var = 0.0;
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
    }
    mx /= points.size();
    my /= points.size();
    for (const auto& p : points)
        out_var += (p[0] - mx) * (p[0] - mx) + (p[1] - my) * (p[1] - my);
    out_var /= static_cast<double>(points.size() - 1);
    CHECK(out_var <= input_var * (1.0 + 1e-9));
}

TEST_CASE("result emission round-trips and formats percent to two decimals") {
    ResultTable table;
    ResultRow row;
    row.dataset = "synthetic";
    row.subject = "s00";
    row.mode = "within";
    row.trials = 5;
    row.method = "none";
    row.seed_accs = {0.5777777, 0.58};
    row.mean_acc = 0.57888885;
    row.std_acc = 0.00111115;
    table.rows.push_back(row);
    row.method = "fusiongen";
    row.mean_acc = 0.6153;
    table.rows.push_back(row);

    testutil::TempDir dir;
    emit_results(table, dir.path);
    const ResultTable parsed = parse_results_csv(dir.path / "results.csv");
    REQUIRE(parsed.rows.size() == 2);
    CHECK(parsed.rows[0].mean_acc == doctest::Approx(0.578889).epsilon(1e-9));
    CHECK(parsed.rows[0].seed_accs.size() == 2);
    CHECK(parsed.rows[0].method == "none");

    // Re-emitting the parsed table reproduces the CSV byte for byte.
    testutil::TempDir dir2;
    emit_results(parsed, dir2.path);
    CHECK(testutil::read_file(dir.path / "results.csv") ==
          testutil::read_file(dir2.path / "results.csv"));

    const std::string text = testutil::read_file(dir.path / "results.txt");
    CHECK(text.find("57.89") != std::string::npos);
    CHECK(text.find("61.53") != std::string::npos);

    ResultTable empty;
    testutil::TempDir dir3;
    emit_results(empty, dir3.path);
    CHECK(testutil::read_file(dir3.path / "results.csv") ==
          "dataset,subject,mode,trials,method,mean_acc,std_acc,seed_accs\n");
}

TEST_CASE("within-subject: rows per subject, no-aug runs are constant across repeats") {
    const Dataset ds = synthesize_dataset(small_synth());
    ExperimentConfig cfg = fast_experiment();
    cfg.repeats = 3;
    const ResultTable table = run_within_subject(ds, cfg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.leakage_audit_passed);
    for (const ResultRow& row : table.rows) {
        CHECK(row.mode == "within");
        CHECK(row.seed_accs.size() == 3);
        CHECK(row.std_acc == 0.0);  // "none" uses no randomness
        double mean = 0.0;
        for (double a : row.seed_accs) mean += a;
        mean /= static_cast<double>(row.seed_accs.size());
        CHECK(std::abs(mean - row.mean_acc) < 1e-12);
        CHECK(row.mean_acc >= 0.0);
        CHECK(row.mean_acc <= 1.0);
    }
}

TEST_CASE("within-subject fusiongen runs end to end deterministically") {
    const Dataset ds = synthesize_dataset(small_synth(1));
    ExperimentConfig cfg = fast_experiment();
    cfg.augmentation = "fusiongen";
    const ResultTable a = run_within_subject(ds, cfg);
    const ResultTable b = run_within_subject(ds, cfg);
    REQUIRE(a.rows.size() == 1);
    CHECK(a.rows[0].seed_accs == b.rows[0].seed_accs);
    CHECK(a.rows[0].method == "fusiongen");
}

TEST_CASE("baseline and combined augmentations extend the pool") {
    const Dataset ds = synthesize_dataset(small_synth(1));
    for (const std::string aug : {"noise", "dwt", "noise+fusiongen"}) {
        ExperimentConfig cfg = fast_experiment();
        cfg.augmentation = aug;
        cfg.repeats = 1;
        const ResultTable table = run_within_subject(ds, cfg);
        REQUIRE(table.rows.size() == 1);
        CHECK(table.rows[0].method == aug);
        CHECK(table.rows[0].mean_acc >= 0.0);
    }
    ExperimentConfig bad = fast_experiment();
    bad.augmentation = "alien";
    CHECK_THROWS_AS(run_within_subject(ds, bad), std::runtime_error);
}

TEST_CASE("cross-subject: one fold per subject, deterministic, parallel-safe") {
    const Dataset ds = synthesize_dataset(small_synth(3));
    ExperimentConfig cfg = fast_experiment();
    cfg.mode = BenchMode::Cross;
    cfg.augmentation = "fusiongen";
    cfg.repeats = 2;
    const ResultTable serial = run_cross_subject(ds, cfg);
    REQUIRE(serial.rows.size() == 3);
    CHECK(serial.leakage_audit_passed);
    for (const ResultRow& row : serial.rows) CHECK(row.mode == "cross");

    ExperimentConfig parallel_cfg = cfg;
    parallel_cfg.jobs = 3;
    const ResultTable parallel = run_cross_subject(ds, parallel_cfg);
    REQUIRE(parallel.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(serial.rows[i].seed_accs == parallel.rows[i].seed_accs);
}

TEST_CASE("cross-subject refuses a single-subject dataset") {
    const Dataset ds = synthesize_dataset(small_synth(1));
    ExperimentConfig cfg = fast_experiment();
    cfg.mode = BenchMode::Cross;
    CHECK_THROWS_AS(run_cross_subject(ds, cfg), std::runtime_error);
}

TEST_CASE("spectrum report: single profile, deterministic ratios") {
    SynthConfig synth = small_synth(1);
    synth.trials_per_class = 8;
    const Dataset ds = synthesize_dataset(synth);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 9;
    testutil::TempDir dir;
    const SpectrumReport a =
        compression_spectrum_report(ds, {{5, 5, 2}}, cfg, dir.path);
    REQUIRE(a.profiles.size() == 1);
    CHECK(a.profiles[0].compression == 50);
    CHECK(std::filesystem::exists(dir.path / "report.txt"));
    CHECK(std::filesystem::exists(dir.path / "spectrum_50x.svg"));

    const SpectrumReport b = compression_spectrum_report(ds, {{5, 5, 2}}, cfg, "");
    CHECK(a.profiles[0].high_band_retention == b.profiles[0].high_band_retention);
    CHECK(a.profiles[0].low_band_retention == b.profiles[0].low_band_retention);
}

}  // TEST_SUITE
