#pragma once

#include <array>
#include <filesystem>

#include "fusiongen/fusion.hpp"
#include "fusiongen/layers.hpp"
#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Architecture knobs: encoder feature depths and temporal strides.
/// The decoder mirrors both in reverse.
struct GeneratorConfig {
    std::array<int, 3> depths{8, 16, 32};
    std::array<int, 3> strides{5, 5, 2};

    int cumulative_stride() const { return strides[0] * strides[1] * strides[2]; }
};

/// U-Net-shaped temporal autoencoder. Three strided convolutions encode,
/// three transposed convolutions decode with skip concatenation, and a 1-tap
/// linear layer projects back to one output per channel sample. Inputs whose
/// length is not a multiple of the cumulative stride are right-padded with
/// zeros and cropped after decoding.
struct GeneratorModel {
    int channels = 0;
    int t_input = 0;
    int t_padded = 0;
    GeneratorConfig arch;
    std::vector<ConvLayerParams> encoder;  // 3 down layers
    std::vector<ConvLayerParams> decoder;  // 3 up layers
    ConvLayerParams output_layer;          // linear depth projection

    std::vector<std::vector<double>*> params();
    std::vector<const std::vector<double>*> params() const;
    std::vector<int> layer_times() const;  // skip/bottleneck time lengths, shallow first
};

GeneratorModel make_generator(int channels, int t_input, const GeneratorConfig& arch, Rng& rng);

struct TrainConfig {
    double lr = 0.01;
    int batch_size = 64;
    int epochs = 100;
    double noise_coefficient = 5.0;  // noise std = coefficient/100 * per-trial std
    std::uint64_t seed = 0;
};

FeatureStack encode(const GeneratorModel& model, const Mat& trial_samples);
Mat decode_with_skips(const GeneratorModel& model, const FeatureStack& stack);

/// x + sigma*G with sigma = (coefficient/100) * std(x).
Mat add_training_noise(const Mat& x, double noise_coefficient, Rng& rng);

struct TrainResult {
    GeneratorModel model;
    std::vector<double> epoch_loss;  // mean reconstruction MSE per epoch
};

/// One reconstruction pass input -> encode -> decode -> MSE(target): the
/// loss, the gradients for every parameter array (ordered like params()) and
/// the gradient w.r.t. the input samples.
struct ReconGrads {
    double loss = 0.0;
    std::vector<std::vector<double>> param_grads;
    Mat input_grad;
};
ReconGrads reconstruction_gradients(const GeneratorModel& model, const Mat& input,
                                    const Mat& target);

/// Denoising-autoencoder training on an aligned dataset: reconstruct each
/// clean trial from its noise-perturbed copy, mini-batch Adam.
TrainResult train_dae(const Dataset& aligned, const TrainConfig& cfg,
                      const GeneratorConfig& arch = {});

/// Encodes target and source, fuses the bottleneck, propagates the plan
/// through the skip layers and decodes. Output keeps the target's metadata.
Trial generate_trial(const GeneratorModel& model, const Trial& target, const Trial& source,
                     const FusionConfig& cfg);
Trial generate_trial(const GeneratorModel& model, const Trial& target, const Trial& source,
                     const FusionConfig& cfg, FusionPlan* plan_out);

/// Draws n_per_class same-class (target, source) pairs per class and emits
/// one generated trial each. When targets and sources are the same pool the
/// source is drawn among the *other* trials of that class if possible.
Dataset generate_augmented_set(const GeneratorModel& model,
                               const std::vector<const Trial*>& targets,
                               const std::vector<const Trial*>& sources, int n_per_class,
                               const FusionConfig& cfg, std::uint64_t seed,
                               const Dataset& metadata_template);

// Weights container: format version + layer shape header, then float32
// little-endian weights in declaration order.
void save_model(const GeneratorModel& model, const std::filesystem::path& path);
GeneratorModel load_model(const std::filesystem::path& path);

}  // namespace fusiongen
