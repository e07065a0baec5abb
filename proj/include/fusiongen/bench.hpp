#pragma once

#include <array>
#include <filesystem>

#include "fusiongen/alignment.hpp"
#include "fusiongen/analysis.hpp"
#include "fusiongen/augment.hpp"
#include "fusiongen/generator.hpp"
#include "fusiongen/trial.hpp"

namespace fusiongen {

enum class BenchMode { Within, Cross };

struct ExperimentConfig {
    BenchMode mode = BenchMode::Within;
    int n_train_per_class = 5;
    // "none", a baseline name (noise|scale|flip|cutresize|fshift|cr|dwt),
    // "fusiongen", or "<baseline>+fusiongen".
    std::string augmentation = "none";
    int n_generated_per_class = 20;
    int repeats = 10;
    std::uint64_t master_seed = 0;
    AlignScope scope = AlignScope::Session;
    double epsilon_rel = 1e-10;
    TrainConfig train;
    GeneratorConfig arch;
    double alpha = 0.2;
    int n_filters = 10;
    int jobs = 1;
    BaselineParams baseline_params;
    std::string pair_map_path;  // required only for the "cr" baseline
    std::string dataset_name = "dataset";
};

struct ResultRow {
    std::string dataset;
    std::string subject;
    std::string mode;
    int trials = 0;  // n_train_per_class
    std::string method;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    std::vector<double> seed_accs;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    bool leakage_audit_passed = true;
};

/// First n_train_per_class trials of each class (acquisition order) go to
/// train, the rest to test. Returns positions into `labels`.
std::pair<std::vector<int>, std::vector<int>> split_temporal_indices(
    const std::vector<int>& labels, int n_train_per_class);
std::pair<Dataset, Dataset> split_temporal(const Dataset& ds, int n_train_per_class);

/// Per-subject protocol: temporal split, alignment from the train reference,
/// optional augmentation of the train pool, CSP+LDA scoring; repeated with
/// derived seeds and averaged. One result row per subject.
ResultTable run_within_subject(const Dataset& ds, const ExperimentConfig& cfg);

/// Leave-one-subject-out: sources are all other subjects, the held-out
/// subject contributes its first n_train trials per class; the remainder is
/// the test set. One result row per held-out subject.
ResultTable run_cross_subject(const Dataset& ds, const ExperimentConfig& cfg);

struct SpectrumProfileResult {
    std::array<int, 3> strides{};
    int compression = 0;
    PsdResult original;
    PsdResult reconstruction;
    double high_band_retention = 0.0;  // recon/original power, 24-32 Hz
    double low_band_retention = 0.0;   // recon/original power, 8-16 Hz
};

struct SpectrumReport {
    std::vector<SpectrumProfileResult> profiles;
};

/// Trains one autoencoder per stride profile on the leading 80% of trials,
/// reconstructs the held-out remainder and compares band power. Writes
/// report.txt and one spectrum SVG per profile under out_dir (skipped when
/// out_dir is empty).
SpectrumReport compression_spectrum_report(const Dataset& ds,
                                           const std::vector<std::array<int, 3>>& profiles,
                                           const TrainConfig& cfg,
                                           const std::filesystem::path& out_dir);

}  // namespace fusiongen
