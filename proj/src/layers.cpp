#include "fusiongen/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace fusiongen {

ConvLayerParams make_conv_layer(int d_in, int d_out, int stride, ConvDirection dir, Rng& rng,
                                int kernel) {
    if (d_in < 1 || d_out < 1 || stride < 1)
        throw std::runtime_error("make_conv_layer: invalid dims");
    ConvLayerParams p;
    p.d_in = d_in;
    p.d_out = d_out;
    p.stride = stride;
    p.kernel = kernel > 0 ? kernel : 2 * stride;
    p.direction = dir;
    p.kernels.resize(static_cast<std::size_t>(d_out) * static_cast<std::size_t>(d_in) *
                     static_cast<std::size_t>(p.kernel));
    p.bias.assign(static_cast<std::size_t>(d_out), 0.0);
    const double bound = std::sqrt(1.0 / (static_cast<double>(d_in) * p.kernel));
    for (double& w : p.kernels) w = rng.uniform(-bound, bound);
    return p;
}

Tensor3 conv_time(const Tensor3& x, const ConvLayerParams& p) {
    if (p.direction != ConvDirection::Down)
        throw std::runtime_error("conv_time: layer direction is not down");
    if (x.depth != p.d_in) throw std::runtime_error("conv_time: input depth mismatch");
    if (x.time % p.stride != 0)
        throw std::runtime_error("conv_time: input time not divisible by stride");
    const int t_out = x.time / p.stride;
    const int pad = p.pad();
    Tensor3 y(p.d_out, x.channels, t_out);
    for (int od = 0; od < p.d_out; ++od) {
        for (int c = 0; c < x.channels; ++c) {
            for (int j = 0; j < t_out; ++j) {
                double acc = p.bias[static_cast<std::size_t>(od)];
                const int base = j * p.stride - pad;
                for (int id = 0; id < p.d_in; ++id) {
                    for (int m = 0; m < p.kernel; ++m) {
                        const int i = base + m;
                        if (i < 0 || i >= x.time) continue;
                        acc += p.kernels[p.kidx(od, id, m)] * x.at(id, c, i);
                    }
                }
                y.at(od, c, j) = acc;
            }
        }
    }
    return y;
}

ConvGrads conv_time_backward(const Tensor3& x, const ConvLayerParams& p,
                             const Tensor3& grad_out) {
    const int t_out = x.time / p.stride;
    if (grad_out.depth != p.d_out || grad_out.channels != x.channels || grad_out.time != t_out)
        throw std::runtime_error("conv_time_backward: upstream gradient shape mismatch");
    const int pad = p.pad();
    ConvGrads g;
    g.x = Tensor3(x.depth, x.channels, x.time);
    g.kernels.assign(p.kernels.size(), 0.0);
    g.bias.assign(p.bias.size(), 0.0);
    for (int od = 0; od < p.d_out; ++od) {
        for (int c = 0; c < x.channels; ++c) {
            for (int j = 0; j < t_out; ++j) {
                const double go = grad_out.at(od, c, j);
                g.bias[static_cast<std::size_t>(od)] += go;
                const int base = j * p.stride - pad;
                for (int id = 0; id < p.d_in; ++id) {
                    for (int m = 0; m < p.kernel; ++m) {
                        const int i = base + m;
                        if (i < 0 || i >= x.time) continue;
                        g.kernels[p.kidx(od, id, m)] += go * x.at(id, c, i);
                        g.x.at(id, c, i) += go * p.kernels[p.kidx(od, id, m)];
                    }
                }
            }
        }
    }
    return g;
}

Tensor3 tconv_time(const Tensor3& x, const ConvLayerParams& p) {
    if (p.direction != ConvDirection::Up)
        throw std::runtime_error("tconv_time: layer direction is not up");
    if (x.depth != p.d_in) throw std::runtime_error("tconv_time: input depth mismatch");
    const int t_out = x.time * p.stride;
    const int pad = p.pad();
    Tensor3 y(p.d_out, x.channels, t_out);
    for (int od = 0; od < p.d_out; ++od)
        for (int c = 0; c < x.channels; ++c)
            for (int i = 0; i < t_out; ++i) y.at(od, c, i) = p.bias[static_cast<std::size_t>(od)];
    for (int od = 0; od < p.d_out; ++od) {
        for (int c = 0; c < x.channels; ++c) {
            for (int j = 0; j < x.time; ++j) {
                const int base = j * p.stride - pad;
                for (int id = 0; id < p.d_in; ++id) {
                    const double xv = x.at(id, c, j);
                    for (int m = 0; m < p.kernel; ++m) {
                        const int i = base + m;
                        if (i < 0 || i >= t_out) continue;
                        y.at(od, c, i) += p.kernels[p.kidx(od, id, m)] * xv;
                    }
                }
            }
        }
    }
    return y;
}

ConvGrads tconv_time_backward(const Tensor3& x, const ConvLayerParams& p,
                              const Tensor3& grad_out) {
    const int t_out = x.time * p.stride;
    if (grad_out.depth != p.d_out || grad_out.channels != x.channels || grad_out.time != t_out)
        throw std::runtime_error("tconv_time_backward: upstream gradient shape mismatch");
    const int pad = p.pad();
    ConvGrads g;
    g.x = Tensor3(x.depth, x.channels, x.time);
    g.kernels.assign(p.kernels.size(), 0.0);
    g.bias.assign(p.bias.size(), 0.0);
    for (int od = 0; od < p.d_out; ++od) {
        for (int c = 0; c < x.channels; ++c) {
            for (int i = 0; i < t_out; ++i) g.bias[static_cast<std::size_t>(od)] += grad_out.at(od, c, i);
            for (int j = 0; j < x.time; ++j) {
                const int base = j * p.stride - pad;
                for (int id = 0; id < p.d_in; ++id) {
                    double acc = 0.0;
                    for (int m = 0; m < p.kernel; ++m) {
                        const int i = base + m;
                        if (i < 0 || i >= t_out) continue;
                        const double go = grad_out.at(od, c, i);
                        acc += p.kernels[p.kidx(od, id, m)] * go;
                        g.kernels[p.kidx(od, id, m)] += go * x.at(id, c, j);
                    }
                    g.x.at(id, c, j) += acc;
                }
            }
        }
    }
    return g;
}

Tensor3 relu(const Tensor3& x) {
    Tensor3 y = x;
    for (double& v : y.v) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor3 relu_backward(const Tensor3& x, const Tensor3& grad_out) {
    if (!x.same_shape(grad_out))
        throw std::runtime_error("relu_backward: shape mismatch");
    Tensor3 g = grad_out;
    for (std::size_t i = 0; i < g.v.size(); ++i)
        if (x.v[i] <= 0.0) g.v[i] = 0.0;
    return g;
}

Tensor3 concat_depth(const Tensor3& a, const Tensor3& b) {
    if (a.channels != b.channels || a.time != b.time)
        throw std::runtime_error("concat_depth: channel/time shape mismatch");
    Tensor3 y(a.depth + b.depth, a.channels, a.time);
    std::copy(a.v.begin(), a.v.end(), y.v.begin());
    std::copy(b.v.begin(), b.v.end(), y.v.begin() + static_cast<std::ptrdiff_t>(a.v.size()));
    return y;
}

std::pair<Tensor3, Tensor3> concat_depth_backward(const Tensor3& grad_out, int depth_a) {
    if (depth_a < 1 || depth_a >= grad_out.depth)
        throw std::runtime_error("concat_depth_backward: invalid split depth");
    Tensor3 ga(depth_a, grad_out.channels, grad_out.time);
    Tensor3 gb(grad_out.depth - depth_a, grad_out.channels, grad_out.time);
    std::copy(grad_out.v.begin(), grad_out.v.begin() + static_cast<std::ptrdiff_t>(ga.v.size()),
              ga.v.begin());
    std::copy(grad_out.v.begin() + static_cast<std::ptrdiff_t>(ga.v.size()), grad_out.v.end(),
              gb.v.begin());
    return {std::move(ga), std::move(gb)};
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw std::runtime_error("mse: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

std::vector<double> mse_grad(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw std::runtime_error("mse_grad: size mismatch");
    std::vector<double> g(a.size());
    const double scale = 2.0 / static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) g[i] = scale * (a[i] - b[i]);
    return g;
}

AdamState AdamState::init(const std::vector<std::vector<double>*>& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto* p : params) {
        s.m.emplace_back(p->size(), 0.0);
        s.v.emplace_back(p->size(), 0.0);
    }
    return s;
}

void adam_step(const std::vector<std::vector<double>*>& params,
               const std::vector<std::vector<double>>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::runtime_error("adam_step: parameter/gradient/state count mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        std::vector<double>& p = *params[k];
        const std::vector<double>& g = grads[k];
        if (p.size() != g.size())
            throw std::runtime_error("adam_step: gradient shape mismatch");
        std::vector<double>& m = state.m[k];
        std::vector<double>& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace fusiongen
