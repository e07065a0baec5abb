#include "fusiongen/generator.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>

namespace fusiongen {

namespace {

Tensor3 matrix_to_tensor(const Mat& m, int t_padded) {
    Tensor3 x(1, static_cast<int>(m.rows()), t_padded);
    for (int c = 0; c < m.rows(); ++c)
        for (int t = 0; t < m.cols(); ++t) x.at(0, c, t) = m(c, t);
    return x;
}

Mat tensor_to_matrix(const Tensor3& x, int t_keep) {
    Mat m(x.channels, t_keep);
    for (int c = 0; c < x.channels; ++c)
        for (int t = 0; t < t_keep; ++t) m(c, t) = x.at(0, c, t);
    return m;
}

}  // namespace

std::vector<std::vector<double>*> GeneratorModel::params() {
    std::vector<std::vector<double>*> out;
    for (auto& l : encoder) {
        out.push_back(&l.kernels);
        out.push_back(&l.bias);
    }
    for (auto& l : decoder) {
        out.push_back(&l.kernels);
        out.push_back(&l.bias);
    }
    out.push_back(&output_layer.kernels);
    out.push_back(&output_layer.bias);
    return out;
}

std::vector<const std::vector<double>*> GeneratorModel::params() const {
    std::vector<const std::vector<double>*> out;
    for (const auto& l : encoder) {
        out.push_back(&l.kernels);
        out.push_back(&l.bias);
    }
    for (const auto& l : decoder) {
        out.push_back(&l.kernels);
        out.push_back(&l.bias);
    }
    out.push_back(&output_layer.kernels);
    out.push_back(&output_layer.bias);
    return out;
}

std::vector<int> GeneratorModel::layer_times() const {
    std::vector<int> times;
    int t = t_padded;
    for (int s : arch.strides) {
        t /= s;
        times.push_back(t);
    }
    return times;
}

GeneratorModel make_generator(int channels, int t_input, const GeneratorConfig& arch, Rng& rng) {
    if (channels < 1 || t_input < 1) throw std::runtime_error("make_generator: invalid shape");
    for (int s : arch.strides)
        if (s < 1) throw std::runtime_error("make_generator: strides must be >= 1");
    for (int d : arch.depths)
        if (d < 1) throw std::runtime_error("make_generator: depths must be >= 1");

    GeneratorModel m;
    m.channels = channels;
    m.t_input = t_input;
    const int cum = arch.cumulative_stride();
    m.t_padded = ((t_input + cum - 1) / cum) * cum;
    m.arch = arch;

    const auto& d = arch.depths;
    const auto& r = arch.strides;
    m.encoder.push_back(make_conv_layer(1, d[0], r[0], ConvDirection::Down, rng));
    m.encoder.push_back(make_conv_layer(d[0], d[1], r[1], ConvDirection::Down, rng));
    m.encoder.push_back(make_conv_layer(d[1], d[2], r[2], ConvDirection::Down, rng));
    // Mirrored decoder; skip concatenation doubles the input depth of the
    // second and third up layers.
    m.decoder.push_back(make_conv_layer(d[2], d[1], r[2], ConvDirection::Up, rng));
    m.decoder.push_back(make_conv_layer(2 * d[1], d[0], r[1], ConvDirection::Up, rng));
    m.decoder.push_back(make_conv_layer(2 * d[0], d[0], r[0], ConvDirection::Up, rng));
    m.output_layer = make_conv_layer(d[0], 1, 1, ConvDirection::Down, rng, /*kernel=*/1);
    return m;
}

FeatureStack encode(const GeneratorModel& model, const Mat& trial_samples) {
    if (trial_samples.rows() != model.channels ||
        static_cast<int>(trial_samples.cols()) != model.t_input)
        throw std::runtime_error("encode: trial shape does not match model");
    FeatureStack stack;
    Tensor3 x = matrix_to_tensor(trial_samples, model.t_padded);
    for (const ConvLayerParams& layer : model.encoder) {
        x = relu(conv_time(x, layer));
        stack.layers.push_back(x);
    }
    return stack;
}

Mat decode_with_skips(const GeneratorModel& model, const FeatureStack& stack) {
    if (stack.layers.size() != 3) throw std::runtime_error("decode: stack must have 3 layers");
    const std::vector<int> times = model.layer_times();
    for (int l = 0; l < 3; ++l)
        if (stack.layers[static_cast<std::size_t>(l)].time != times[static_cast<std::size_t>(l)])
            throw std::runtime_error("decode: stack layer time mismatch");

    Tensor3 d1 = relu(tconv_time(stack.layers[2], model.decoder[0]));
    Tensor3 d2 = relu(tconv_time(concat_depth(d1, stack.layers[1]), model.decoder[1]));
    Tensor3 d3 = relu(tconv_time(concat_depth(d2, stack.layers[0]), model.decoder[2]));
    Tensor3 y = conv_time(d3, model.output_layer);
    return tensor_to_matrix(y, model.t_input);
}

Mat add_training_noise(const Mat& x, double noise_coefficient, Rng& rng) {
    if (noise_coefficient < 0.0)
        throw std::runtime_error("add_training_noise: coefficient must be >= 0");
    if (noise_coefficient == 0.0) return x;
    const double sigma = noise_coefficient / 100.0 * matrix_std(x);
    Mat out = x;
    for (int c = 0; c < x.rows(); ++c)
        for (int t = 0; t < x.cols(); ++t) out(c, t) += sigma * rng.normal();
    return out;
}

namespace {

/// All intermediate activations of one training forward pass.
struct ForwardCache {
    Tensor3 x0;
    Tensor3 e1_pre, e1, e2_pre, e2, e3_pre, e3;
    Tensor3 d1_pre, d1, c1, d2_pre, d2, c2, d3_pre, d3;
    Tensor3 y;
};

ForwardCache forward_train(const GeneratorModel& m, const Mat& noisy) {
    ForwardCache f;
    f.x0 = matrix_to_tensor(noisy, m.t_padded);
    f.e1_pre = conv_time(f.x0, m.encoder[0]);
    f.e1 = relu(f.e1_pre);
    f.e2_pre = conv_time(f.e1, m.encoder[1]);
    f.e2 = relu(f.e2_pre);
    f.e3_pre = conv_time(f.e2, m.encoder[2]);
    f.e3 = relu(f.e3_pre);
    f.d1_pre = tconv_time(f.e3, m.decoder[0]);
    f.d1 = relu(f.d1_pre);
    f.c1 = concat_depth(f.d1, f.e2);
    f.d2_pre = tconv_time(f.c1, m.decoder[1]);
    f.d2 = relu(f.d2_pre);
    f.c2 = concat_depth(f.d2, f.e1);
    f.d3_pre = tconv_time(f.c2, m.decoder[2]);
    f.d3 = relu(f.d3_pre);
    f.y = conv_time(f.d3, m.output_layer);
    return f;
}

/// Loss of one trial and its gradient w.r.t. all parameters, accumulated
/// into `grads` (ordered like GeneratorModel::params()). Returns the loss.
double backward_train(const GeneratorModel& m, const ForwardCache& f, const Mat& clean,
                      std::vector<std::vector<double>>& grads, Tensor3* grad_input = nullptr) {
    // Padded columns are zero in the target, so the model also learns to
    // reconstruct the zero pad; the pad is cropped away at generation time.
    Tensor3 target = matrix_to_tensor(clean, m.t_padded);
    const double loss = mse(f.y.v, target.v);
    Tensor3 grad_y = f.y;
    grad_y.v = mse_grad(f.y.v, target.v);

    auto g_out = conv_time_backward(f.d3, m.output_layer, grad_y);
    Tensor3 grad_d3 = relu_backward(f.d3_pre, g_out.x);
    auto g_d3 = tconv_time_backward(f.c2, m.decoder[2], grad_d3);
    auto [grad_d2_part, grad_e1_skip] = concat_depth_backward(g_d3.x, f.d2.depth);
    Tensor3 grad_d2 = relu_backward(f.d2_pre, grad_d2_part);
    auto g_d2 = tconv_time_backward(f.c1, m.decoder[1], grad_d2);
    auto [grad_d1_part, grad_e2_skip] = concat_depth_backward(g_d2.x, f.d1.depth);
    Tensor3 grad_d1 = relu_backward(f.d1_pre, grad_d1_part);
    auto g_d1 = tconv_time_backward(f.e3, m.decoder[0], grad_d1);

    Tensor3 grad_e3 = relu_backward(f.e3_pre, g_d1.x);
    auto g_e3 = conv_time_backward(f.e2, m.encoder[2], grad_e3);
    Tensor3 grad_e2_total = g_e3.x;
    for (std::size_t i = 0; i < grad_e2_total.v.size(); ++i)
        grad_e2_total.v[i] += grad_e2_skip.v[i];
    Tensor3 grad_e2 = relu_backward(f.e2_pre, grad_e2_total);
    auto g_e2 = conv_time_backward(f.e1, m.encoder[1], grad_e2);
    Tensor3 grad_e1_total = g_e2.x;
    for (std::size_t i = 0; i < grad_e1_total.v.size(); ++i)
        grad_e1_total.v[i] += grad_e1_skip.v[i];
    Tensor3 grad_e1 = relu_backward(f.e1_pre, grad_e1_total);
    auto g_e1 = conv_time_backward(f.x0, m.encoder[0], grad_e1);

    const std::vector<const std::vector<double>*> layer_grads = {
        &g_e1.kernels, &g_e1.bias, &g_e2.kernels, &g_e2.bias, &g_e3.kernels, &g_e3.bias,
        &g_d1.kernels, &g_d1.bias, &g_d2.kernels, &g_d2.bias, &g_d3.kernels, &g_d3.bias,
        &g_out.kernels, &g_out.bias};
    for (std::size_t k = 0; k < layer_grads.size(); ++k)
        for (std::size_t i = 0; i < layer_grads[k]->size(); ++i)
            grads[k][i] += (*layer_grads[k])[i];
    if (grad_input) *grad_input = g_e1.x;
    return loss;
}

}  // namespace

ReconGrads reconstruction_gradients(const GeneratorModel& model, const Mat& input,
                                    const Mat& target) {
    if (input.rows() != model.channels || static_cast<int>(input.cols()) != model.t_input ||
        target.rows() != input.rows() || target.cols() != input.cols())
        throw std::runtime_error("reconstruction_gradients: shape mismatch");
    ReconGrads out;
    for (const std::vector<double>* p : model.params())
        out.param_grads.emplace_back(p->size(), 0.0);
    const ForwardCache f = forward_train(model, input);
    Tensor3 grad_input;
    out.loss = backward_train(model, f, target, out.param_grads, &grad_input);
    out.input_grad.resize(input.rows(), input.cols());
    for (int c = 0; c < input.rows(); ++c)
        for (int t = 0; t < input.cols(); ++t) out.input_grad(c, t) = grad_input.at(0, c, t);
    return out;
}

TrainResult train_dae(const Dataset& aligned, const TrainConfig& cfg,
                      const GeneratorConfig& arch) {
    if (aligned.trials.empty()) throw std::runtime_error("train_dae: empty dataset");
    if (cfg.lr <= 0.0 || cfg.batch_size < 1 || cfg.epochs < 0)
        throw std::runtime_error("train_dae: invalid training config");
    validate_dataset(aligned);

    const int C = aligned.trials.front().channels();
    const int T = aligned.trials.front().length();
    Rng init_rng(derive_seed(cfg.seed, 0x11u));
    TrainResult result{make_generator(C, T, arch, init_rng), {}};
    GeneratorModel& model = result.model;

    const auto params = model.params();
    AdamState adam = AdamState::init(params, cfg.lr);
    const int n = aligned.n_trials();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, 0x12u, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        Rng noise_rng(derive_seed(cfg.seed, 0x13u, static_cast<std::uint64_t>(epoch)));

        double epoch_loss = 0.0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            const int batch = stop - start;
            std::vector<std::vector<double>> grads;
            for (const auto* p : params) grads.emplace_back(p->size(), 0.0);
            double batch_loss = 0.0;
            for (int bi = start; bi < stop; ++bi) {
                const Mat& clean = aligned.trials[static_cast<std::size_t>(
                                                      order[static_cast<std::size_t>(bi)])]
                                       .samples;
                const Mat noisy = add_training_noise(clean, cfg.noise_coefficient, noise_rng);
                const ForwardCache f = forward_train(model, noisy);
                batch_loss += backward_train(model, f, clean, grads);
            }
            const double inv_batch = 1.0 / static_cast<double>(batch);
            for (auto& g : grads)
                for (double& v : g) v *= inv_batch;
            batch_loss *= inv_batch;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_dae: non-finite loss at epoch " +
                                         std::to_string(epoch));
            epoch_loss += batch_loss * static_cast<double>(batch);
            adam_step(params, grads, adam);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

Trial generate_trial(const GeneratorModel& model, const Trial& target, const Trial& source,
                     const FusionConfig& cfg) {
    return generate_trial(model, target, source, cfg, nullptr);
}

Trial generate_trial(const GeneratorModel& model, const Trial& target, const Trial& source,
                     const FusionConfig& cfg, FusionPlan* plan_out) {
    if (target.label != source.label)
        throw std::runtime_error("generate_trial: target/source label mismatch");
    if (target.samples.rows() != source.samples.rows() ||
        target.samples.cols() != source.samples.cols())
        throw std::runtime_error("generate_trial: target/source shape mismatch");

    const FeatureStack target_stack = encode(model, target.samples);
    const FeatureStack source_stack = encode(model, source.samples);
    auto [fused_map, plan] = fuse_bottleneck(target_stack.layers.back(),
                                             source_stack.layers.back(), cfg);
    (void)fused_map;  // propagate_plan re-applies the bottleneck substitutions
    const FeatureStack fused = propagate_plan(plan, target_stack, source_stack);
    Trial out = target;
    out.samples = decode_with_skips(model, fused);
    if (plan_out) *plan_out = std::move(plan);
    return out;
}

Dataset generate_augmented_set(const GeneratorModel& model,
                               const std::vector<const Trial*>& targets,
                               const std::vector<const Trial*>& sources, int n_per_class,
                               const FusionConfig& cfg, std::uint64_t seed,
                               const Dataset& metadata_template) {
    Dataset out;
    out.channel_names = metadata_template.channel_names;
    out.class_names = metadata_template.class_names;
    out.sample_rate_hz = metadata_template.sample_rate_hz;
    if (n_per_class < 0) throw std::runtime_error("generate_augmented_set: negative count");
    if (n_per_class == 0) return out;
    if (targets.empty()) throw std::runtime_error("generate_augmented_set: no target trials");

    std::map<int, std::vector<const Trial*>> targets_by_class, sources_by_class;
    for (const Trial* t : targets) targets_by_class[t->label].push_back(t);
    for (const Trial* s : sources) sources_by_class[s->label].push_back(s);

    for (const auto& [label, pool] : targets_by_class) {
        const auto& src_pool =
            sources_by_class.count(label) ? sources_by_class[label] : pool;
        if (src_pool.empty()) continue;
        for (int i = 0; i < n_per_class; ++i) {
            Rng rng(derive_seed(seed, 0x21u,
                                static_cast<std::uint64_t>(label) * 1000003u +
                                    static_cast<std::uint64_t>(i)));
            const Trial* tgt = pool[rng.uniform_int(pool.size())];
            const Trial* src = src_pool[rng.uniform_int(src_pool.size())];
            if (src == tgt && src_pool.size() > 1) {
                // Same pool: prefer a different source trial.
                while (src == tgt) src = src_pool[rng.uniform_int(src_pool.size())];
            }
            FusionConfig trial_cfg = cfg;
            trial_cfg.seed = derive_seed(seed, 0x22u,
                                         static_cast<std::uint64_t>(label) * 1000003u +
                                             static_cast<std::uint64_t>(i));
            out.trials.push_back(generate_trial(model, *tgt, *src, trial_cfg));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Weights container
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("model file truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ofstream& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(std::ifstream& in) {
    return static_cast<double>(std::bit_cast<float>(get_u32(in)));
}

}  // namespace

void save_model(const GeneratorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot write " + path.string());
    put_u32(out, 1u);  // format version
    put_u32(out, static_cast<std::uint32_t>(model.channels));
    put_u32(out, static_cast<std::uint32_t>(model.t_input));
    for (int d : model.arch.depths) put_u32(out, static_cast<std::uint32_t>(d));
    for (int s : model.arch.strides) put_u32(out, static_cast<std::uint32_t>(s));
    const auto params = model.params();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) put_u32(out, static_cast<std::uint32_t>(p->size()));
    for (const auto* p : params)
        for (double v : *p) put_f32(out, v);
}

GeneratorModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    if (get_u32(in) != 1u) throw std::runtime_error("load_model: unsupported format version");
    const int channels = static_cast<int>(get_u32(in));
    const int t_input = static_cast<int>(get_u32(in));
    GeneratorConfig arch;
    for (int& d : arch.depths) d = static_cast<int>(get_u32(in));
    for (int& s : arch.strides) s = static_cast<int>(get_u32(in));
    Rng rng(0);
    GeneratorModel model = make_generator(channels, t_input, arch, rng);
    const auto params = model.params();
    if (get_u32(in) != params.size())
        throw std::runtime_error("load_model: parameter block count mismatch");
    std::vector<std::uint32_t> sizes;
    for (std::size_t i = 0; i < params.size(); ++i) sizes.push_back(get_u32(in));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (sizes[i] != params[i]->size())
            throw std::runtime_error("load_model: parameter shape mismatch");
        for (double& v : *params[i]) v = get_f32(in);
    }
    return model;
}

}  // namespace fusiongen
