#include "fusiongen/fusion.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace fusiongen {

std::vector<std::vector<double>> vectorize(const Tensor3& f) {
    std::vector<std::vector<double>> out(
        static_cast<std::size_t>(f.channels) * static_cast<std::size_t>(f.time));
    for (int c = 0; c < f.channels; ++c) {
        for (int t = 0; t < f.time; ++t) {
            std::vector<double>& vec = out[static_cast<std::size_t>(c * f.time + t)];
            vec.resize(static_cast<std::size_t>(f.depth));
            for (int d = 0; d < f.depth; ++d) vec[static_cast<std::size_t>(d)] = f.at(d, c, t);
        }
    }
    return out;
}

Tensor3 reassemble(const std::vector<std::vector<double>>& vectors, int depth, int channels,
                   int t) {
    if (vectors.size() != static_cast<std::size_t>(channels) * static_cast<std::size_t>(t))
        throw std::runtime_error("reassemble: vector count != C*T'");
    Tensor3 f(depth, channels, t);
    for (int c = 0; c < channels; ++c) {
        for (int tt = 0; tt < t; ++tt) {
            const auto& vec = vectors[static_cast<std::size_t>(c * t + tt)];
            if (static_cast<int>(vec.size()) != depth)
                throw std::runtime_error("reassemble: vector depth mismatch");
            for (int d = 0; d < depth; ++d) f.at(d, c, tt) = vec[static_cast<std::size_t>(d)];
        }
    }
    return f;
}

namespace {
double norm(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}
double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}
}  // namespace

MatchResult match_features(const std::vector<std::vector<double>>& targets,
                           const std::vector<std::vector<double>>& sources,
                           const std::vector<int>& queries) {
    std::vector<double> source_norms(sources.size());
    for (std::size_t p = 0; p < sources.size(); ++p) source_norms[p] = norm(sources[p]);

    MatchResult res;
    res.match.reserve(queries.size());
    res.similarity.reserve(queries.size());
    for (int q : queries) {
        if (q < 0 || q >= static_cast<int>(targets.size()))
            throw std::runtime_error("match_features: query index out of range");
        const auto& tv = targets[static_cast<std::size_t>(q)];
        const double tn = norm(tv);
        if (tn == 0.0) {
            // Degenerate target: keep its own feature, report no match.
            res.match.push_back(-1);
            res.similarity.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        int best = -1;
        double best_sim = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < sources.size(); ++p) {
            if (source_norms[p] == 0.0) continue;  // similarity -inf
            const double sim = dot(tv, sources[p]) / (tn * source_norms[p]);
            if (sim > best_sim) {
                best_sim = sim;
                best = static_cast<int>(p);
            }
        }
        res.match.push_back(best);
        res.similarity.push_back(best >= 0 ? best_sim
                                           : std::numeric_limits<double>::quiet_NaN());
    }
    return res;
}

std::pair<Tensor3, FusionPlan> fuse_bottleneck(const Tensor3& f_target, const Tensor3& f_source,
                                               const FusionConfig& cfg) {
    if (!f_target.same_shape(f_source))
        throw std::runtime_error("fuse_bottleneck: target/source shape mismatch");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0)
        throw std::runtime_error("fuse_bottleneck: alpha must be in [0,1]");

    const int n = f_target.channels * f_target.time;
    const int k = static_cast<int>(std::llround(cfg.alpha * static_cast<double>(n)));

    FusionPlan plan;
    plan.channels = f_target.channels;
    plan.t_bottleneck = f_target.time;
    plan.depth = f_target.depth;

    Tensor3 fused = f_target;
    if (k == 0) return {std::move(fused), std::move(plan)};

    Rng rng(cfg.seed);
    const std::vector<int> queries = rng.sample_without_replacement(n, k);

    const auto targets = vectorize(f_target);
    const auto sources = vectorize(f_source);
    const MatchResult matched = match_features(targets, sources, queries);

    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        FusionSelection sel;
        sel.flat = queries[qi];
        sel.channel = sel.flat / f_target.time;
        sel.t = sel.flat % f_target.time;
        sel.match_flat = matched.match[qi];
        sel.similarity = matched.similarity[qi];
        sel.replaced = sel.match_flat >= 0;
        if (sel.replaced) {
            const auto& src = sources[static_cast<std::size_t>(sel.match_flat)];
            for (int d = 0; d < fused.depth; ++d)
                fused.at(d, sel.channel, sel.t) = src[static_cast<std::size_t>(d)];
        }
        plan.selected.push_back(sel);
    }
    return {std::move(fused), std::move(plan)};
}

void compute_layer_regions(FusionPlan& plan, const std::vector<int>& layer_times) {
    if (layer_times.empty() || layer_times.back() != plan.t_bottleneck)
        throw std::runtime_error("compute_layer_regions: bottleneck length mismatch");
    const int n_shallow = static_cast<int>(layer_times.size()) - 1;
    const double t_bottom = static_cast<double>(plan.t_bottleneck);
    plan.layer_regions.assign(static_cast<std::size_t>(n_shallow), {});
    for (int l = 0; l < n_shallow; ++l) {
        const double tl = static_cast<double>(layer_times[static_cast<std::size_t>(l)]);
        for (const FusionSelection& sel : plan.selected) {
            if (!sel.replaced) continue;
            LayerRegion r;
            r.channel = sel.channel;
            r.t_begin = static_cast<int>(std::floor(static_cast<double>(sel.t) * tl / t_bottom));
            r.t_end = static_cast<int>(std::ceil(static_cast<double>(sel.t + 1) * tl / t_bottom));
            plan.layer_regions[static_cast<std::size_t>(l)].push_back(r);
        }
    }
}

FeatureStack propagate_plan(const FusionPlan& plan, const FeatureStack& target_stack,
                            const FeatureStack& source_stack) {
    if (target_stack.layers.size() != source_stack.layers.size())
        throw std::runtime_error("propagate_plan: stack depth mismatch");
    for (std::size_t l = 0; l < target_stack.layers.size(); ++l)
        if (!target_stack.layers[l].same_shape(source_stack.layers[l]))
            throw std::runtime_error("propagate_plan: layer shape mismatch");
    if (target_stack.layers.empty()) throw std::runtime_error("propagate_plan: empty stack");

    const Tensor3& bottom = target_stack.layers.back();
    if (bottom.channels != plan.channels || bottom.time != plan.t_bottleneck)
        throw std::runtime_error("propagate_plan: plan does not fit this stack");

    FeatureStack out = target_stack;
    if (plan.selected.empty()) return out;

    // Bottleneck: substitute the matched source vectors.
    Tensor3& fused_bottom = out.layers.back();
    const Tensor3& src_bottom = source_stack.layers.back();
    for (const FusionSelection& sel : plan.selected) {
        if (!sel.replaced) continue;
        const int sc = sel.match_flat / src_bottom.time;
        const int st = sel.match_flat % src_bottom.time;
        for (int d = 0; d < fused_bottom.depth; ++d)
            fused_bottom.at(d, sel.channel, sel.t) = src_bottom.at(d, sc, st);
    }

    // Shallower layers: copy coordinate-aligned source windows.
    std::vector<int> layer_times;
    for (const Tensor3& layer : target_stack.layers) layer_times.push_back(layer.time);
    FusionPlan regions = plan;
    compute_layer_regions(regions, layer_times);
    for (std::size_t l = 0; l + 1 < out.layers.size(); ++l) {
        Tensor3& dst = out.layers[l];
        const Tensor3& src = source_stack.layers[l];
        for (const LayerRegion& r : regions.layer_regions[l]) {
            for (int d = 0; d < dst.depth; ++d)
                for (int t = r.t_begin; t < r.t_end && t < dst.time; ++t)
                    dst.at(d, r.channel, t) = src.at(d, r.channel, t);
        }
    }
    return out;
}

void write_plan(const FusionPlan& plan, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["channels"] = plan.channels;
    j["t_bottleneck"] = plan.t_bottleneck;
    j["depth"] = plan.depth;
    auto selections = nlohmann::ordered_json::array();
    for (const FusionSelection& sel : plan.selected) {
        nlohmann::ordered_json s;
        s["flat"] = sel.flat;
        s["channel"] = sel.channel;
        s["t"] = sel.t;
        s["replaced"] = sel.replaced;
        s["match_flat"] = sel.match_flat;
        s["similarity"] = sel.replaced ? sel.similarity : 0.0;
        selections.push_back(std::move(s));
    }
    j["selected"] = std::move(selections);
    auto layers = nlohmann::ordered_json::array();
    for (const auto& regions : plan.layer_regions) {
        auto layer = nlohmann::ordered_json::array();
        for (const LayerRegion& r : regions)
            layer.push_back({{"channel", r.channel}, {"t_begin", r.t_begin}, {"t_end", r.t_end}});
        layers.push_back(std::move(layer));
    }
    j["layer_regions"] = std::move(layers);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_plan: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace fusiongen
