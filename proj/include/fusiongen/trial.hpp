#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fusiongen {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// One EEG epoch: C channels x T samples plus label and provenance metadata.
struct Trial {
    Mat samples;  // C x T
    int label = 0;
    std::string subject_id;
    std::string session_id;
    double sample_rate_hz = 0.0;

    int channels() const { return static_cast<int>(samples.rows()); }
    int length() const { return static_cast<int>(samples.cols()); }
};

/// Ordered trial collection; trial order is acquisition order.
struct Dataset {
    std::vector<Trial> trials;
    std::vector<std::string> channel_names;
    std::vector<std::string> class_names;
    double sample_rate_hz = 0.0;

    int n_channels() const { return static_cast<int>(channel_names.size()); }
    int n_classes() const { return static_cast<int>(class_names.size()); }
    int n_trials() const { return static_cast<int>(trials.size()); }
};

/// Checks shape uniformity, finite values and label ranges; throws on violation.
void validate_dataset(const Dataset& ds);

struct PreprocessConfig {
    double band_low_hz = 8.0;
    double band_high_hz = 32.0;
    double target_rate_hz = 250.0;
    double crop_seconds = 4.0;
};

/// Synthetic EEG generator settings. Each class rides a distinct carrier
/// frequency on a designated channel; subjects differ by an orthogonal
/// channel-mixing matrix blended with identity.
struct SynthConfig {
    int n_subjects = 2;
    int n_classes = 2;
    int trials_per_class = 30;
    int channels = 4;
    int samples = 500;
    double sample_rate_hz = 250.0;
    std::vector<double> class_freqs_hz;  // one per class; filled evenly in 10..30 Hz if empty
    double mixing_strength = 0.3;        // 0 = identity mixing, 1 = fully random orthogonal
    double noise_floor = 0.3;            // std of the additive 1/f noise
    std::uint64_t seed = 0;
};

/// Population standard deviation over all entries of a matrix.
double matrix_std(const Mat& m);

}  // namespace fusiongen
