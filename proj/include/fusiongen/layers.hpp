#pragma once

#include <cstdint>

#include "fusiongen/rng.hpp"
#include "fusiongen/tensor.hpp"

namespace fusiongen {

// Temporal convolution layers. Kernels slide along the time axis only; the
// EEG-channel axis is untouched and shares weights, so a C x T' grid survives
// to the bottleneck with feature depth on a separate axis.

enum class ConvDirection { Down, Up };

struct ConvLayerParams {
    int d_in = 0;
    int d_out = 0;
    int kernel = 0;  // taps along time; 2*stride for the strided layers
    int stride = 1;
    ConvDirection direction = ConvDirection::Down;
    std::vector<double> kernels;  // (d_out, d_in, kernel), kernel fastest
    std::vector<double> bias;     // d_out

    std::size_t kidx(int od, int id, int m) const {
        return (static_cast<std::size_t>(od) * static_cast<std::size_t>(d_in) +
                static_cast<std::size_t>(id)) * static_cast<std::size_t>(kernel) +
               static_cast<std::size_t>(m);
    }
    int pad() const { return (kernel - stride) / 2; }
};

/// Initialized layer with kernel = 2*stride (full input coverage, exact t/r
/// output length) and uniform +-sqrt(1/(d_in*kernel)) weights.
ConvLayerParams make_conv_layer(int d_in, int d_out, int stride, ConvDirection dir, Rng& rng,
                                int kernel = -1);

struct ConvGrads {
    Tensor3 x;
    std::vector<double> kernels;
    std::vector<double> bias;
};

/// Strided temporal convolution; output time = input time / stride (exact).
Tensor3 conv_time(const Tensor3& x, const ConvLayerParams& p);
ConvGrads conv_time_backward(const Tensor3& x, const ConvLayerParams& p,
                             const Tensor3& grad_out);

/// Transposed temporal convolution; output time = input time * stride. With
/// shared weights this is the exact adjoint of conv_time's linear map.
Tensor3 tconv_time(const Tensor3& x, const ConvLayerParams& p);
ConvGrads tconv_time_backward(const Tensor3& x, const ConvLayerParams& p,
                              const Tensor3& grad_out);

Tensor3 relu(const Tensor3& x);
Tensor3 relu_backward(const Tensor3& x, const Tensor3& grad_out);

/// Stacks b under a along the feature-depth axis.
Tensor3 concat_depth(const Tensor3& a, const Tensor3& b);
std::pair<Tensor3, Tensor3> concat_depth_backward(const Tensor3& grad_out, int depth_a);

/// Mean squared error over all elements; gradient w.r.t. `a` is 2(a-b)/numel.
double mse(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> mse_grad(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m;  // first moments, one entry per parameter array
    std::vector<std::vector<double>> v;  // second moments

    static AdamState init(const std::vector<std::vector<double>*>& params, double lr);
};

/// One bias-corrected Adam update across all parameter arrays.
void adam_step(const std::vector<std::vector<double>*>& params,
               const std::vector<std::vector<double>>& grads, AdamState& state);

}  // namespace fusiongen
